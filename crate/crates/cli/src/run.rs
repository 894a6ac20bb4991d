//! Runs one algorithm and recomputes its guarantees from the raw output.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use distcolor::coloring::{
    congest_list_coloring, delta_plus_one, helper_coloring, local_list_coloring, weighted_is, ColoringRun,
    ListInstance, PartitionTree, Pipeline,
};
use distcolor::defective::{avg_defective, defect_report};
use distcolor::layered::{arboricity_coloring, h_partition, layered_list_coloring, Layering, LayeredRun};
use distcolor::setfamily::linial_color;
use distcolor::simcore::engine::SpanStats;
use distcolor::simcore::io::{load_graph, load_layering, load_node_weights, parse_lists, EdgeListFormat};
use distcolor::simcore::{generate_with_layering, verify_coloring, EdgeWeights, GenSpec, NodeIdx, Topology, VerifyReport};
use distcolor::{ColorAssignment, EngineConfig, Model, Rational, SimGraph, Simulator};

use crate::spec::ColorSpec;
use crate::CliError;

pub const RUN_SCHEMA: &str = "distcolor.run.v1";

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        CheckLine { name: name.into(), ok, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphSummary {
    pub source: String,
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub spec: ColorSpec,
    pub graph: GraphSummary,
    pub alg: String,
    pub model: Model,
    /// Palette size 𝒞 of the instance (colors `1..=𝒞`).
    pub palette: u64,
    pub verification: Option<VerifyReport>,
    pub rounds: u64,
    pub max_message_bits: u64,
    pub total_bits: u64,
    pub messages: u64,
    pub violations: u64,
    pub spans: BTreeMap<String, SpanStats>,
    pub checks: Vec<CheckLine>,
    /// Algorithm-specific raw statistics.
    pub details: Value,
    pub ok: bool,
    #[serde(skip)]
    pub assignment: Option<ColorAssignment>,
}

impl RunReport {
    /// rounds / (log₂²Δ · log₂ n), with 𝒞 in place of Δ for CONGEST list
    /// coloring. Logarithms are clamped to at least 1.
    pub fn normalized_rounds(&self) -> f64 {
        let lg = |x: f64| x.log2().max(1.0);
        let base = if self.alg == "congest-list" { self.palette as f64 } else { self.graph.max_degree as f64 };
        self.rounds as f64 / (lg(base).powi(2) * lg(self.graph.n as f64))
    }
}

pub const CSV_HEADER: [&str; 8] = ["alg", "n", "delta", "palette", "rounds", "normalized", "max_bits", "ok"];

pub fn csv_row(r: &RunReport) -> Vec<String> {
    vec![
        r.alg.clone(),
        r.graph.n.to_string(),
        r.graph.max_degree.to_string(),
        r.palette.to_string(),
        r.rounds.to_string(),
        format!("{:.4}", r.normalized_rounds()),
        r.max_message_bits.to_string(),
        r.ok.to_string(),
    ]
}

fn ceil_log2(x: u64) -> u64 {
    64 - x.saturating_sub(1).leading_zeros() as u64
}

pub fn default_budget(n: usize, palette: u64) -> u64 {
    8 * (ceil_log2(n as u64 + 1) + ceil_log2(palette + 1))
}

fn parse_rational(what: &str, text: Option<&str>, default: Rational) -> Result<Rational, CliError> {
    match text {
        None => Ok(default),
        Some(t) => {
            let x: Rational = t.parse().map_err(|_| CliError::Input(format!("--{what}: cannot parse {t:?}")))?;
            if x <= Rational::zero() {
                return Err(CliError::Input(format!("--{what} must be positive")));
            }
            Ok(x)
        }
    }
}

pub fn degeneracy(topo: &Topology) -> u64 {
    let mut deg: Vec<usize> = (0..topo.len()).map(|v| topo.degree(v as NodeIdx)).collect();
    let mut buckets: Vec<Vec<NodeIdx>> = vec![Vec::new(); topo.max_degree() + 1];
    for &v in topo.members() {
        buckets[deg[v as usize]].push(v);
    }
    let mut gone = vec![false; topo.len()];
    let (mut best, mut d) = (0, 0);
    for _ in 0..topo.members().len() {
        d = d.min(buckets.len() - 1);
        let v = loop {
            match buckets[d].pop() {
                Some(v) if !gone[v as usize] && deg[v as usize] == d => break v,
                Some(_) => {}
                None => d += 1,
            }
        };
        best = best.max(d);
        gone[v as usize] = true;
        for &u in topo.neighbors(v) {
            if !gone[u as usize] {
                deg[u as usize] -= 1;
                buckets[deg[u as usize]].push(u);
                d = d.min(deg[u as usize]);
            }
        }
    }
    best as u64
}

/// Random lists: node `v` gets `size(v)` distinct colors of `1..=palette`.
pub fn random_lists(topo: &Topology, size: impl Fn(NodeIdx) -> usize, palette: u32, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<u32> = (1..=palette).collect();
    (0..topo.len() as NodeIdx)
        .map(|v| {
            let mut l: Vec<u32> = all.choose_multiple(&mut rng, size(v).min(all.len())).copied().collect();
            l.sort_unstable();
            l
        })
        .collect()
}

fn load(spec: &ColorSpec) -> Result<(SimGraph, Option<Vec<u32>>, String), CliError> {
    match (&spec.gen, &spec.graph) {
        (Some(g), None) => {
            let gs: GenSpec = g.parse()?;
            let (graph, layers) = generate_with_layering(&gs, spec.seed.unwrap_or(0))?;
            Ok((graph, layers, gs.to_string()))
        }
        (None, Some(path)) => {
            let g = load_graph(path, EdgeListFormat { weighted: spec.weighted.unwrap_or(false) })?;
            Ok((g, None, path.display().to_string()))
        }
        _ => Err(CliError::Input("exactly one of --gen and --graph is required".into())),
    }
}

struct Instance {
    lists: Vec<Vec<u32>>,
    palette: u32,
}

fn make_lists(spec: &ColorSpec, g: &SimGraph, up: Option<&Layering>) -> Result<Instance, CliError> {
    let topo = g.topology();
    let seed = spec.seed.unwrap_or(0);
    let kind = spec.lists.as_deref().unwrap_or(if up.is_some() { "up+1" } else { "degree+1" });
    let max_size = match (kind, up) {
        ("up+1", Some(l)) => l.max_up_degree(topo) + 1,
        _ => g.max_degree() + 1,
    };
    let palette = spec.palette.unwrap_or(2 * max_size as u32);
    let lists = match kind {
        "degree+1" => random_lists(topo, |v| topo.degree(v) + 1, palette, seed),
        "degree" => random_lists(topo, |v| topo.degree(v), palette, seed),
        "delta+1" => {
            let p = g.max_degree() as u32 + 1;
            return Ok(Instance { lists: vec![(1..=p).collect(); g.n()], palette: spec.palette.unwrap_or(p).max(p) });
        }
        "up+1" => {
            let l = up.ok_or_else(|| CliError::Input("--lists up+1 needs a layered run".into()))?;
            random_lists(topo, |v| l.up_degree(topo, v) + 1, palette, seed)
        }
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
            let lists = parse_lists(&text, g)?;
            let top = lists.iter().flatten().copied().max().unwrap_or(1);
            return Ok(Instance { lists, palette: spec.palette.unwrap_or(top).max(top) });
        }
    };
    Ok(Instance { lists, palette })
}

fn list_checks(run: &ColoringRun, palette: u32, checks: &mut Vec<CheckLine>) {
    let active0 = run.iterations.first().map_or(0, |it| it.active);
    for (i, it) in run.iterations.iter().enumerate() {
        let n = it.active as i64;
        checks.push(CheckLine::new(
            format!("iteration {i}: committed fraction"),
            10 * it.committed >= it.active,
            format!("{} of {}", it.committed, it.active),
        ));
        match run.pipeline {
            Pipeline::Local => {
                checks.push(CheckLine::new(
                    format!("iteration {i}: initial cost"),
                    it.initial_cost <= Rational::integer(n),
                    format!("{} ≤ {n}", it.initial_cost),
                ));
                checks.push(CheckLine::new(
                    format!("iteration {i}: monochromatic edges"),
                    it.mono_edges as i64 <= 2 * n,
                    format!("{} ≤ {}", it.mono_edges, 2 * n),
                ));
            }
            Pipeline::Congest => {
                let h = PartitionTree::new(palette).depth().max(1) as i64;
                checks.push(CheckLine::new(
                    format!("iteration {i}: potential"),
                    it.rounded_cost <= Rational::integer(3 * n),
                    format!("{} ≤ {}", it.rounded_cost, 3 * n),
                ));
                let growth = Rational::one() + Rational::new(1, h);
                let bad = it.levels.iter().filter(|l| l.after > growth.clone() * l.before.clone()).count();
                checks.push(CheckLine::new(
                    format!("iteration {i}: level growth"),
                    bad == 0,
                    format!("{bad} of {} levels above 1+1/{h}", it.levels.len()),
                ));
            }
        }
    }
    if run.pipeline == Pipeline::Local && active0 > 0 {
        let mut bound = 0u32;
        let mut acc = 1f64;
        while acc < active0 as f64 {
            acc *= 10.0 / 9.0;
            bound += 1;
        }
        checks.push(CheckLine::new(
            "iterations",
            run.iterations.len() as u32 <= bound + 1,
            format!("{} ≤ {}", run.iterations.len(), bound + 1),
        ));
    }
}

fn layered_checks(run: &LayeredRun, checks: &mut Vec<CheckLine>) {
    for (i, it) in run.iterations.iter().enumerate() {
        checks.push(CheckLine::new(
            format!("iteration {i}: sink fraction"),
            Rational::integer(2) * it.free_weight.clone() >= it.active_weight,
            format!("{} of {}", it.free_weight, it.active_weight),
        ));
        let left = it.active_weight.clone() - it.committed_weight.clone();
        checks.push(CheckLine::new(
            format!("iteration {i}: weight shrink"),
            Rational::integer(4) * left.clone() <= Rational::integer(3) * it.active_weight.clone(),
            format!("{left} left of {}", it.active_weight),
        ));
    }
}

fn library_checks<'a>(checks: impl Iterator<Item = &'a distcolor::coloring::Check>, out: &mut Vec<CheckLine>) {
    out.extend(checks.map(|c| CheckLine::new(format!("internal: {}", c.name), c.ok, c.detail.clone())));
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Runs `spec`, which must already be merged with its config file.
pub fn run_color(spec: &ColorSpec) -> Result<RunReport, CliError> {
    let alg = spec.alg.clone().ok_or_else(|| CliError::Input("--alg is required".into()))?;
    let (g, gen_layers, source) = load(spec)?;
    let topo = g.topology();
    let model_name = spec.model.as_deref().unwrap_or(if alg == "congest-list" { "congest" } else { "local" });
    let pipeline = match model_name {
        "local" => Pipeline::Local,
        "congest" => Pipeline::Congest,
        m => return Err(CliError::Input(format!("--model must be local or congest, got {m:?}"))),
    };
    let layering = match (&spec.layering, gen_layers) {
        (Some(path), _) => Some(Layering::new(topo, load_layering(path, &g)?)?),
        (None, Some(l)) => Some(Layering::new(topo, l)?),
        _ => None,
    };

    let mut checks = Vec::new();
    let mut verification = None;
    let assignment;
    let details;
    let palette: u64;
    let make_sim = |palette: u64| {
        let cfg = match pipeline {
            Pipeline::Local => EngineConfig::local(),
            Pipeline::Congest => EngineConfig::congest(spec.budget_bits.unwrap_or_else(|| default_budget(g.n(), palette))),
        };
        Simulator::new(cfg.sequential())
    };
    let mut sim;

    match alg.as_str() {
        "local-list" | "congest-list" => {
            let inst = make_lists(spec, &g, None)?;
            palette = inst.palette as u64;
            let li = ListInstance::of_graph(&g, inst.lists.clone(), inst.palette)?;
            sim = make_sim(palette);
            let run = if alg == "local-list" {
                local_list_coloring(&mut sim, &li)?
            } else {
                congest_list_coloring(&mut sim, &li)?
            };
            verification = Some(verify_coloring(topo, &run.assignment, Some(&inst.lists)));
            list_checks(&run, inst.palette, &mut checks);
            library_checks(run.checks.iter(), &mut checks);
            details = json!({ "helper_palette": run.helper_palette, "helper_steps": run.helper_steps, "iterations": to_value(&run.iterations) });
            assignment = Some(run.assignment);
        }
        "delta+1" => {
            palette = g.max_degree() as u64 + 1;
            sim = make_sim(palette);
            let run = delta_plus_one(&mut sim, topo, pipeline)?;
            let lists = vec![(1..=palette as u32).collect::<Vec<_>>(); g.n()];
            verification = Some(verify_coloring(topo, &run.assignment, Some(&lists)));
            list_checks(&run, palette as u32, &mut checks);
            library_checks(run.checks.iter(), &mut checks);
            details = json!({ "iterations": to_value(&run.iterations) });
            assignment = Some(run.assignment);
        }
        "layered" => {
            let layering = match layering {
                Some(l) => l,
                None => {
                    let a = spec.a.unwrap_or_else(|| degeneracy(topo).max(1));
                    let eps = parse_rational("eps", spec.eps.as_deref(), Rational::one())?;
                    h_partition(&mut Simulator::new(EngineConfig::local()), topo, a, &eps)?.layering
                }
            };
            let inst = make_lists(spec, &g, Some(&layering))?;
            palette = inst.palette as u64;
            sim = make_sim(palette);
            let run = layered_list_coloring(&mut sim, topo, &layering, inst.lists.clone(), inst.palette, pipeline)?;
            verification = Some(verify_coloring(topo, &run.assignment, Some(&inst.lists)));
            layered_checks(&run, &mut checks);
            library_checks(run.checks.iter(), &mut checks);
            details = json!({ "h": run.h, "max_up_degree": run.max_up_degree, "iterations": to_value(&run.iterations) });
            assignment = Some(run.assignment);
        }
        "arboricity" => {
            let a = spec.a.unwrap_or_else(|| degeneracy(topo).max(1));
            let eps = parse_rational("eps", spec.eps.as_deref(), Rational::one())?;
            let bound = (Rational::integer(2) + eps.clone()) * Rational::integer(a as i64);
            let bound = bound.floor().to_string().parse::<u64>().unwrap_or(u64::MAX).saturating_add(1);
            palette = bound;
            sim = make_sim(palette);
            let run = arboricity_coloring(&mut sim, topo, a, &eps, pipeline)?;
            verification = Some(verify_coloring(topo, run.assignment(), None));
            let used = run.assignment().max_color() as u64;
            checks.push(CheckLine::new("palette", used <= bound, format!("{used} ≤ ⌊(2+ε)a⌋+1 = {bound}")));
            layered_checks(&run.coloring, &mut checks);
            library_checks(run.all_checks(), &mut checks);
            details = json!({ "layers": run.partition.layering.h(topo), "threshold": run.partition.threshold, "iterations": to_value(&run.coloring.iterations) });
            assignment = Some(run.assignment().clone());
        }
        "linial" => {
            let q = g.id_palette();
            sim = make_sim(q);
            let red = linial_color(&mut sim, topo, &g.id_coloring(), q)?;
            palette = red.palette;
            let colors = ColorAssignment::from_colors(red.colors.iter().map(|&c| Some(c as u32 + 1)).collect());
            verification = Some(verify_coloring(topo, &colors, None));
            details = json!({ "initial_palette": red.initial_palette, "steps": red.steps });
            assignment = Some(colors);
        }
        "defective" => {
            let c = spec.c.ok_or_else(|| CliError::Input("--c is required for defective".into()))?;
            let delta = parse_rational("delta", spec.delta.as_deref(), Rational::one())?;
            let q = g.id_palette();
            palette = c;
            sim = make_sim(c);
            let w: EdgeWeights<Rational> = EdgeWeights::of_graph(&g);
            let out = avg_defective(&mut sim, topo, &w, &g.id_coloring(), q, c, &delta)?;
            let report = defect_report(topo, &w, &out.colors);
            let cap = (Rational::one() + delta.clone()) * report.total_weight.clone() / Rational::integer(c as i64);
            checks.push(CheckLine::new(
                "defect",
                report.total_mono <= cap,
                format!("{} ≤ (1+δ)W/C = {cap}", report.total_mono),
            ));
            let in_range = out.colors.iter().zip(0..).all(|(&x, v)| !topo.is_member(v) || x < c);
            checks.push(CheckLine::new("palette", in_range, format!("colors in 0..{c}")));
            details = json!({ "total_mono": to_value(&report.total_mono), "total_weight": to_value(&report.total_weight), "mono_edges": report.mono_edges });
            assignment = Some(ColorAssignment::from_colors(out.colors.iter().map(|&x| Some(x as u32 + 1)).collect()));
        }
        "weighted-is" => {
            let weights = match &spec.node_weights {
                Some(p) => load_node_weights(p, &g)?,
                None => g.node_weights().map(<[Rational]>::to_vec).unwrap_or_else(|| vec![Rational::one(); g.n()]),
            };
            palette = 2;
            sim = make_sim(palette);
            let helper = helper_coloring(&mut sim, topo)?;
            let set = weighted_is(&mut sim, topo, &weights, &helper.colors, helper.palette)?;
            let mut member = vec![false; g.n()];
            for &v in &set.members {
                member[v as usize] = true;
            }
            let independent = !topo.edges().any(|(u, v)| member[u as usize] && member[v as usize]);
            checks.push(CheckLine::new("independent", independent, format!("{} members", set.members.len())));
            let picked = set.members.iter().fold(Rational::zero(), |a, &v| a + weights[v as usize].clone());
            let total = topo.members().iter().fold(Rational::zero(), |a, &v| a + weights[v as usize].clone());
            let mut factor = Rational::one();
            for _ in 0..=set.classes {
                factor = factor * Rational::integer(g.max_degree() as i64 + 1);
            }
            checks.push(CheckLine::new(
                "weight",
                picked.clone() * factor >= total,
                format!("{picked} of {total}, c₀ = {}", set.classes),
            ));
            details = json!({ "members": set.members.len(), "weight": to_value(&picked), "total": to_value(&total), "classes": set.classes });
            assignment = Some(ColorAssignment::from_colors(member.iter().map(|&m| m.then_some(1)).collect()));
        }
        other => return Err(CliError::Input(format!("unknown algorithm {other:?}"))),
    }

    if let Some(v) = &verification {
        checks.insert(0, CheckLine::new("valid coloring", v.is_valid(), format!("{} uncolored, {} monochromatic edges, {} list violations", v.uncolored, v.monochromatic_edges, v.list_violations)));
    }
    if let Model::Congest { budget_bits } = sim.model() {
        checks.push(CheckLine::new(
            "congest budget",
            sim.trace.violations == 0,
            format!("{} violations, max {} of {budget_bits} bits", sim.trace.violations, sim.trace.max_message_bits),
        ));
    }
    let ok = checks.iter().all(|c| c.ok);
    let t = &sim.trace;
    Ok(RunReport {
        schema: RUN_SCHEMA,
        spec: spec.clone(),
        graph: GraphSummary { source, n: g.n(), m: g.m(), max_degree: g.max_degree() },
        alg,
        model: sim.model(),
        palette,
        verification,
        rounds: t.rounds_elapsed,
        max_message_bits: t.max_message_bits,
        total_bits: t.total_bits,
        messages: t.total_messages,
        violations: t.violations,
        spans: t.spans.clone(),
        checks,
        details,
        ok,
        assignment,
    })
}
