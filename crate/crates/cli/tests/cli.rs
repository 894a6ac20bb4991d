use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn distcolor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distcolor")).args(args).output().expect("spawn distcolor")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn local_list_on_generated_regular_graph() {
    let o = distcolor(&["color", "--alg", "local-list", "--gen", "regular:n=256,d=8", "--lists", "degree+1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["schema"], "distcolor.run.v1");
    assert_eq!(r["ok"], true);
    assert_eq!(r["verification"]["monochromatic_edges"], 0);
    assert_eq!(r["verification"]["list_violations"], 0);
    assert!(r["rounds"].as_u64().unwrap() > 0);
}

#[test]
fn delta_plus_one_on_k5_file_in_congest() {
    let dir = tempfile::tempdir().unwrap();
    let k5 = dir.path().join("k5.el");
    let o = distcolor(&["gen", "--gen", "clique:n=5", "--out", k5.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let col = dir.path().join("k5.col");
    let o = distcolor(&[
        "color", "--alg", "delta+1", "--graph", k5.to_str().unwrap(), "--model", "congest", "--budget-bits", "64",
        "--assignment-out", col.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["violations"], 0);
    assert!(r["max_message_bits"].as_u64().unwrap() <= 64);
    assert_eq!(r["verification"]["distinct_colors"], 5);

    let o = distcolor(&["verify", "--graph", k5.to_str().unwrap(), "--assignment", col.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["valid"], true);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&distcolor(&["color", "--alg", "nope", "--gen", "cycle:n=5"])), 2);
    assert_eq!(code(&distcolor(&["color", "--alg", "local-list", "--gen", "cycle:k=5"])), 2);
    assert_eq!(code(&distcolor(&["color", "--alg", "local-list"])), 2);
    assert_eq!(code(&distcolor(&["color", "--no-such-flag"])), 2);
    assert_eq!(code(&distcolor(&["frobnicate"])), 2);
}

#[test]
fn identical_specs_give_identical_reports() {
    let args = ["color", "--alg", "congest-list", "--gen", "gnp:n=80,p=0.1", "--seed", "9"];
    let (a, b) = (distcolor(&args), distcolor(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "alg = \"local-list\"\ngen = \"cycle:n=12\"\nseed = 4\n");
    let o = distcolor(&["color", "--config", &cfg, "--gen", "cycle:n=30"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["graph"]["n"], 30);
    assert_eq!(r["spec"]["seed"], 4);

    let bad = write(dir.path(), "bad.toml", "colour = 3\n");
    assert_eq!(code(&distcolor(&["color", "--config", &bad])), 2);
}

#[test]
fn suite_grid_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("grid.csv");
    let o = distcolor(&["suite", "--ns", "64,128", "--degrees", "4,8", "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alg,n,delta,palette,rounds,normalized,max_bits,ok");
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines[1].starts_with("local-list,64,4,5,"));
    assert!(lines[5].starts_with("congest-list,64,4,5,"));
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("PASS round scaling [local-list]"), "{stderr}");
}

#[test]
fn empty_suite_is_an_empty_table() {
    let o = distcolor(&["suite", "--ns", "", "--degrees", "4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "alg,n,delta,palette,rounds,normalized,max_bits,ok");
}

#[test]
fn infeasible_rows_fail_the_suite_but_the_rest_still_run() {
    let o = distcolor(&["suite", "--algs", "local-list", "--ns", "32", "--degrees", "3", "--lists", "degree"]);
    assert_eq!(code(&o), 1);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().nth(1).unwrap().ends_with(",false"), "{out}");
}

#[test]
fn verify_reports_conflicts_and_list_violations() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.el", "0 1\n1 2\n0 2\n");
    let good = write(dir.path(), "good.col", "0 1\n1 2\n2 3\n");
    let o = distcolor(&["verify", "--graph", &tri, "--assignment", &good]);
    assert_eq!(code(&o), 0);

    let clash = write(dir.path(), "clash.col", "0 1\n1 1\n2 2\n");
    let o = distcolor(&["verify", "--graph", &tri, "--assignment", &clash]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["report"]["monochromatic_edges"], 1);

    let lists = write(dir.path(), "lists.txt", "0 1 2\n1 1 2\n2 1 2\n");
    let o = distcolor(&["verify", "--graph", &tri, "--assignment", &good, "--lists", &lists]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["report"]["list_violations"], 1);
}

#[test]
fn layered_generator_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("dag.el");
    let l = dir.path().join("dag.layers");
    let o = distcolor(&[
        "gen", "--gen", "layered:h=4,w=30,k=2,s=1", "--seed", "2", "--out", g.to_str().unwrap(), "--layering-out",
        l.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let o = distcolor(&["color", "--alg", "layered", "--graph", g.to_str().unwrap(), "--layering", l.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["details"]["h"], 4);
    assert_eq!(r["verification"]["list_violations"], 0);
}

#[test]
fn other_algorithms_report_their_guarantees() {
    for args in [
        &["color", "--alg", "arboricity", "--gen", "grid:8x8", "--a", "2"][..],
        &["color", "--alg", "linial", "--gen", "cycle:n=500"][..],
        &["color", "--alg", "defective", "--gen", "regular:n=60,d=6", "--c", "3", "--delta", "1/2"][..],
        &["color", "--alg", "weighted-is", "--gen", "regular:n=60,d=3"][..],
    ] {
        let o = distcolor(args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let r = json(&o);
        assert_eq!(r["ok"], true, "{args:?}");
        assert!(r["checks"].as_array().unwrap().iter().all(|c| c["ok"] == true));
    }
}
