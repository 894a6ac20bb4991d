//! Experiment specs: command-line flags merged over an optional TOML file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Takes every field from `flags` when set, else from `file`.
macro_rules! merge_fields {
    ($flags:expr, $file:expr, $($f:ident),* $(,)?) => {{
        let (flags, file) = ($flags, $file);
        Self { $($f: flags.$f.or(file.$f),)* config: None }
    }};
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// One algorithm run on one graph.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColorSpec {
    /// local-list, congest-list, delta+1, layered, arboricity, linial,
    /// defective or weighted-is.
    #[arg(long)]
    pub alg: Option<String>,
    /// local or congest. Defaults to congest for congest-list, else local.
    #[arg(long)]
    pub model: Option<String>,
    /// CONGEST message budget; defaults to 8(⌈log₂(n+1)⌉ + ⌈log₂(𝒞+1)⌉).
    #[arg(long)]
    pub budget_bits: Option<u64>,
    /// Generator spec such as `regular:n=256,d=8` or `grid:10x10`.
    #[arg(long)]
    pub gen: Option<String>,
    /// Edge-list file (`u v [weight]` per line).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Every edge line of `--graph` carries a weight.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub weighted: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// degree+1, degree, delta+1, up+1 or a list file (`u c1 c2 ...`).
    /// Generated lists are random subsets of the palette.
    #[arg(long)]
    pub lists: Option<String>,
    /// Palette for generated lists; defaults to 2(Δ+1).
    #[arg(long)]
    pub palette: Option<u32>,
    /// Layering file (`u layer`); layered graphs from `--gen` carry their own.
    #[arg(long)]
    pub layering: Option<PathBuf>,
    /// Node-weight sidecar (`u w`) for weighted-is.
    #[arg(long)]
    pub node_weights: Option<PathBuf>,
    /// Arboricity bound; defaults to the degeneracy.
    #[arg(long)]
    pub a: Option<u64>,
    /// ε for arboricity peeling and the layered fallback, as `p/q`.
    #[arg(long)]
    pub eps: Option<String>,
    /// Number of defective colors.
    #[arg(long)]
    pub c: Option<u64>,
    /// Slack δ of the defective coloring, as `p/q`.
    #[arg(long)]
    pub delta: Option<String>,
    /// JSON report path (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the one-row CSV summary here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the final coloring here (`u color`).
    #[arg(long)]
    pub assignment_out: Option<PathBuf>,
    /// TOML file with any of the above keys; flags win on conflict.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl ColorSpec {
    pub fn resolve(self) -> Result<Self, CliError> {
        let file: ColorSpec = read_config(self.config.as_deref())?;
        Ok(merge_fields!(
            self, file, alg, model, budget_bits, gen, graph, weighted, seed, lists, palette, layering,
            node_weights, a, eps, c, delta, report, csv, assignment_out,
        ))
    }
}

/// A grid of list-coloring runs on random regular graphs.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSpec {
    /// Comma-separated algorithms: local-list, congest-list.
    #[arg(long)]
    pub algs: Option<String>,
    /// Comma-separated node counts.
    #[arg(long)]
    pub ns: Option<String>,
    /// Comma-separated degrees.
    #[arg(long)]
    pub degrees: Option<String>,
    /// Comma-separated palettes 𝒞; lists are then random subsets of 𝒞 colors.
    /// Without it every node gets {1..Δ+1}.
    #[arg(long)]
    pub palettes: Option<String>,
    /// degree+1 (default) or degree, which makes every row infeasible.
    #[arg(long)]
    pub lists: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget_bits: Option<u64>,
    /// Allowed max/min ratio of the normalized columns.
    #[arg(long)]
    pub band: Option<f64>,
    /// CSV path (default: stdout).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON report with one run report per row.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl SuiteSpec {
    pub fn resolve(self) -> Result<Self, CliError> {
        let file: SuiteSpec = read_config(self.config.as_deref())?;
        Ok(merge_fields!(self, file, algs, ns, degrees, palettes, lists, seed, budget_bits, band, csv, report))
    }
}

/// Parses a comma-separated list; empty entries are skipped.
pub fn parse_list<T: std::str::FromStr>(what: &str, text: Option<&str>) -> Result<Vec<T>, CliError> {
    text.unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Input(format!("--{what}: cannot parse {s:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_skip_blanks() {
        let xs: Vec<u32> = parse_list("ns", Some(" 1, ,2,")).unwrap();
        assert_eq!(xs, vec![1, 2]);
        assert!(parse_list::<u32>("ns", None).unwrap().is_empty());
        assert!(parse_list::<u32>("ns", Some("x")).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = std::env::temp_dir().join(format!("distcolor-spec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "alg = \"linial\"\nseed = 7\n").unwrap();
        let flags = ColorSpec { alg: Some("delta+1".into()), config: Some(path), ..Default::default() };
        let spec = flags.resolve().unwrap();
        assert_eq!(spec.alg.as_deref(), Some("delta+1"));
        assert_eq!(spec.seed, Some(7));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
