//! Scaling grid over random regular graphs.

use rayon::prelude::*;
use serde::Serialize;

use crate::run::{csv_row, run_color, CheckLine, RunReport, CSV_HEADER};
use crate::spec::{parse_list, ColorSpec, SuiteSpec};
use crate::CliError;

pub const SUITE_SCHEMA: &str = "distcolor.suite.v1";

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub alg: String,
    pub n: usize,
    pub degree: usize,
    pub palette: Option<u32>,
    pub error: Option<String>,
    pub report: Option<RunReport>,
}

impl SuiteRow {
    pub fn ok(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.ok)
    }

    pub fn csv(&self) -> Vec<String> {
        match &self.report {
            Some(r) => csv_row(r),
            None => vec![
                self.alg.clone(),
                self.n.to_string(),
                self.degree.to_string(),
                self.palette.map_or_else(|| (self.degree + 1).to_string(), |p| p.to_string()),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
            ],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema: &'static str,
    pub spec: SuiteSpec,
    pub rows: Vec<SuiteRow>,
    pub checks: Vec<CheckLine>,
    pub ok: bool,
}

fn band(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::MIN, f64::max);
    let min = xs.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

pub fn run_suite(spec: &SuiteSpec) -> Result<SuiteReport, CliError> {
    let algs: Vec<String> = parse_list("algs", Some(spec.algs.as_deref().unwrap_or("local-list,congest-list")))?;
    if let Some(a) = algs.iter().find(|a| !matches!(a.as_str(), "local-list" | "congest-list")) {
        return Err(CliError::Input(format!("--algs: unsupported algorithm {a:?}")));
    }
    let ns: Vec<usize> = parse_list("ns", spec.ns.as_deref())?;
    let degrees: Vec<usize> = parse_list("degrees", spec.degrees.as_deref())?;
    let palettes: Vec<u32> = parse_list("palettes", spec.palettes.as_deref())?;
    let lists = spec.lists.clone().unwrap_or_else(|| "degree+1".into());
    if !matches!(lists.as_str(), "degree+1" | "degree") {
        return Err(CliError::Input(format!("--lists must be degree+1 or degree, got {lists:?}")));
    }
    let limit = spec.band.unwrap_or(4.0);

    let mut grid = Vec::new();
    for alg in &algs {
        for &n in &ns {
            for &d in &degrees {
                if palettes.is_empty() {
                    grid.push((alg.clone(), n, d, None));
                } else {
                    grid.extend(palettes.iter().map(|&p| (alg.clone(), n, d, Some(p))));
                }
            }
        }
    }

    let rows: Vec<SuiteRow> = grid
        .into_par_iter()
        .map(|(alg, n, d, palette)| {
            let list_kind = match (palette, lists.as_str()) {
                (None, "degree+1") => "delta+1",
                (_, kind) => kind,
            };
            let cs = ColorSpec {
                alg: Some(alg.clone()),
                gen: Some(format!("regular:n={n},d={d}")),
                seed: Some(spec.seed.unwrap_or(0) ^ (n as u64) << 16 ^ d as u64),
                lists: Some(list_kind.into()),
                palette: palette.or(Some(d as u32 + 1)),
                budget_bits: spec.budget_bits,
                ..ColorSpec::default()
            };
            match run_color(&cs) {
                Ok(report) => SuiteRow { alg, n, degree: d, palette, error: None, report: Some(report) },
                Err(e) => SuiteRow { alg, n, degree: d, palette, error: Some(e.to_string()), report: None },
            }
        })
        .collect();

    let mut checks = Vec::new();
    let failed = rows.iter().filter(|r| !r.ok()).count();
    checks.push(CheckLine::new("all rows valid", failed == 0, format!("{failed} of {} rows failed", rows.len())));
    for alg in &algs {
        let norm: Vec<f64> =
            rows.iter().filter(|r| &r.alg == alg).filter_map(|r| r.report.as_ref()).map(RunReport::normalized_rounds).collect();
        if norm.len() >= 2 {
            let b = band(&norm);
            checks.push(CheckLine::new(format!("round scaling [{alg}]"), b <= limit, format!("max/min {b:.2} ≤ {limit}")));
        }
    }
    if palettes.len() >= 2 && algs.iter().any(|a| a == "congest-list") {
        let ratios: Vec<f64> = rows
            .iter()
            .filter(|r| r.alg == "congest-list")
            .filter_map(|r| r.report.as_ref())
            .map(|r| r.max_message_bits as f64 / (r.palette as f64).log2().max(1.0))
            .collect();
        if ratios.len() >= 2 {
            let b = band(&ratios);
            checks.push(CheckLine::new("message size [congest-list]", b <= limit, format!("max/min of bits/log₂𝒞 {b:.2} ≤ {limit}")));
        }
    }
    let ok = checks.iter().all(|c| c.ok);
    Ok(SuiteReport { schema: SUITE_SCHEMA, spec: spec.clone(), rows, checks, ok })
}

pub fn write_csv(rows: &[SuiteRow], out: impl std::io::Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.csv())?;
    }
    w.flush()?;
    Ok(())
}
