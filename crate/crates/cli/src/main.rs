//! `distcolor`: run, verify and benchmark the distributed coloring algorithms.
//!
//! Exit status: 0 when every check passes, 1 on a guarantee violation, 2 on
//! a usage or input error.

mod run;
mod spec;
mod suite;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use distcolor::simcore::io::{
    load_graph, parse_assignment, parse_lists, write_assignment, write_edge_list, write_node_map, EdgeListFormat,
};
use distcolor::simcore::{generate_with_layering, verify_coloring, GenSpec};

use crate::run::{csv_row, run_color, CSV_HEADER};
use crate::spec::{ColorSpec, SuiteSpec};
use crate::suite::{run_suite, write_csv};

pub const VERIFY_SCHEMA: &str = "distcolor.verify.v1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Lib(#[from] distcolor::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Errors raised while an algorithm runs are guarantee failures; bad
    /// inputs and parameters are usage errors.
    fn exit_code(&self) -> u8 {
        use distcolor::Error as E;
        match self {
            CliError::Lib(E::IterationCap(_) | E::Sim(_) | E::Internal(_)) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "distcolor", version, about = "Simulated deterministic distributed graph coloring")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one algorithm and write a JSON report.
    Color(ColorSpec),
    /// Run a grid of list colorings and write a CSV scaling table.
    Suite(SuiteSpec),
    /// Check a coloring against a graph and optional lists.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        weighted: bool,
        /// Assignment file (`u color`).
        #[arg(long)]
        assignment: PathBuf,
        /// List file (`u c1 c2 ...`).
        #[arg(long)]
        lists: Option<PathBuf>,
    },
    /// Generate a graph as an edge list.
    Gen {
        /// Generator spec such as `regular:n=256,d=8`.
        #[arg(long)]
        gen: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the generator's layering (`u layer`) here.
        #[arg(long)]
        layering_out: Option<PathBuf>,
    },
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(x: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(x)? + "\n")
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_color(spec: ColorSpec) -> Result<bool, CliError> {
    let spec = spec.resolve()?;
    let report = run_color(&spec)?;
    emit(spec.report.as_ref(), &to_json(&report)?)?;
    if let Some(p) = &spec.csv {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(CSV_HEADER)?;
        w.write_record(csv_row(&report))?;
        w.flush()?;
    }
    if let (Some(p), Some(a)) = (&spec.assignment_out, &report.assignment) {
        let (g, _) = match (&spec.gen, &spec.graph) {
            (Some(gs), _) => generate_with_layering(&gs.parse::<GenSpec>()?, spec.seed.unwrap_or(0))?,
            (_, Some(path)) => (load_graph(path, EdgeListFormat { weighted: spec.weighted.unwrap_or(false) })?, None),
            _ => unreachable!("run_color checked the graph source"),
        };
        fs::write(p, write_assignment(&g, a))?;
    }
    for c in report.checks.iter().filter(|c| !c.ok) {
        eprintln!("check failed: {}: {}", c.name, c.detail);
    }
    Ok(report.ok)
}

fn cmd_suite(spec: SuiteSpec) -> Result<bool, CliError> {
    let spec = spec.resolve()?;
    let report = run_suite(&spec)?;
    match &spec.csv {
        Some(p) => write_csv(&report.rows, fs::File::create(p)?)?,
        None => write_csv(&report.rows, io::stdout().lock())?,
    }
    if let Some(p) = &spec.report {
        fs::write(p, to_json(&report)?)?;
    }
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("row {} n={} Δ={}: {}", row.alg, row.n, row.degree, row.error.as_deref().unwrap_or(""));
    }
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.ok { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(report.ok)
}

#[derive(Serialize)]
struct VerifyOutput {
    schema: &'static str,
    valid: bool,
    report: distcolor::simcore::VerifyReport,
}

fn cmd_verify(graph: PathBuf, weighted: bool, assignment: PathBuf, lists: Option<PathBuf>) -> Result<bool, CliError> {
    let g = load_graph(&graph, EdgeListFormat { weighted })?;
    let a = parse_assignment(&read(&assignment)?, &g)?;
    let lists = match &lists {
        Some(p) => Some(parse_lists(&read(p)?, &g)?),
        None => None,
    };
    let report = verify_coloring(g.topology(), &a, lists.as_deref());
    let out = VerifyOutput { schema: VERIFY_SCHEMA, valid: report.is_valid(), report };
    emit(None, &to_json(&out)?)?;
    Ok(out.valid)
}

fn cmd_gen(gen: String, seed: u64, out: Option<PathBuf>, layering_out: Option<PathBuf>) -> Result<bool, CliError> {
    let spec: GenSpec = gen.parse()?;
    let (g, layers) = generate_with_layering(&spec, seed)?;
    emit(out.as_ref(), &format!("# {spec} seed={seed}\n{}", write_edge_list(&g)))?;
    if let Some(p) = layering_out {
        let layers = layers.ok_or_else(|| CliError::Input(format!("{spec} has no layering")))?;
        fs::write(p, write_node_map(&g, &layers))?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.cmd {
        Cmd::Color(spec) => cmd_color(spec),
        Cmd::Suite(spec) => cmd_suite(spec),
        Cmd::Verify { graph, weighted, assignment, lists } => cmd_verify(graph, weighted, assignment, lists),
        Cmd::Gen { gen, seed, out, layering_out } => cmd_gen(gen, seed, out, layering_out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
