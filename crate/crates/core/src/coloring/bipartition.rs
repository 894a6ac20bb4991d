//! `O(Δ log n)`-coloring by repeatedly splitting the graph in two with a
//! 2-color average defective coloring.

use serde::Serialize;

use crate::defective::avg_defective;
use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::simcore::engine::{announce, Simulator, Word};
use crate::simcore::graph::{EdgeWeights, Topology};
use crate::simcore::verify::ColorAssignment;

use super::{class_greedy_mis, helper_coloring, Check};

/// Nodes with at most this many neighbors in their own part may commit.
pub const LOW_DEGREE: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct SplitStats {
    pub active: usize,
    pub edges: usize,
    /// Edges inside parts after every split.
    pub intra_edges: Vec<usize>,
    pub low_degree: usize,
    pub committed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BipartitionRun {
    pub assignment: ColorAssignment,
    /// Number of splits per repetition.
    pub splits: u32,
    /// Colors available per repetition, `2^splits`.
    pub parts: u64,
    pub repetitions: Vec<SplitStats>,
    pub checks: Vec<Check>,
    pub rounds: u64,
}

/// Splits the uncolored graph `k = ⌈log₂ Δ⌉` times with `C = 2` and
/// `δ = 1/k`, then colors an MIS of the low-degree nodes of every part with
/// the part's color in the current repetition's block of `2^k` colors.
pub fn bipartition_demo(sim: &mut Simulator, topo: &Topology) -> Result<BipartitionRun> {
    let start = sim.rounds();
    let delta = topo.max_degree() as u64;
    let k = (64 - delta.saturating_sub(1).leading_zeros()).max(1);
    let d = Rational::new(1, k as i64);
    let parts = 1u64 << k;
    sim.span("bipartition", |sim| {
        let helper = helper_coloring(sim, topo)?;
        let mut assignment = ColorAssignment::new(topo.len());
        let mut active = vec![false; topo.len()];
        for &v in topo.members() {
            active[v as usize] = true;
        }
        let mut repetitions = Vec::new();
        let mut checks = Vec::new();
        let shrink = (Rational::one() + d.clone()) / Rational::integer(2);
        loop {
            let cur = topo.induced(|v| active[v as usize]);
            let n = cur.members().len();
            if n == 0 {
                break;
            }
            if repetitions.len() >= 64 + 4 * n.ilog2() as usize {
                return Err(Error::IterationCap(format!("{n} nodes left after {} repetitions", repetitions.len())));
            }
            let t = repetitions.len() as u64;
            let mut part = vec![0u64; topo.len()];
            let mut intra = cur.clone();
            let mut intra_edges = Vec::with_capacity(k as usize);
            let mut bound = Rational::integer(cur.edge_count() as i64);
            for _ in 0..k {
                let w: EdgeWeights<Rational> = EdgeWeights::unit(&intra);
                let split = avg_defective(sim, &intra, &w, &helper.colors, helper.palette, 2, &d)?;
                for &v in cur.members() {
                    part[v as usize] = 2 * part[v as usize] + split.colors[v as usize];
                }
                intra = intra.filter_edges(|u, v| part[u as usize] == part[v as usize]);
                intra_edges.push(intra.edge_count());
                bound = bound * shrink.clone();
                checks.push(Check::new(
                    "split-edges",
                    Rational::integer(intra.edge_count() as i64) <= bound,
                    format!("repetition {t}: {} intra-part edges vs {bound}", intra.edge_count()),
                ));
            }
            let low = intra.induced(|v| intra.degree(v) <= LOW_DEGREE);
            let mis = class_greedy_mis(sim, &low, &helper.colors, helper.palette)?;
            let mut msgs: Vec<Option<Word>> = vec![None; topo.len()];
            for &v in &mis {
                msgs[v as usize] = Some(Word::new(1, 1));
            }
            announce(sim, &cur, &msgs)?;
            for &v in &mis {
                assignment.set(v, (t * parts + part[v as usize] + 1) as u32);
                active[v as usize] = false;
            }
            repetitions.push(SplitStats {
                active: n,
                edges: cur.edge_count(),
                intra_edges,
                low_degree: low.members().len(),
                committed: mis.len(),
            });
        }
        let used = repetitions.len() as u64 * parts;
        let n = topo.members().len().max(2) as u64;
        checks.push(Check::new(
            "palette",
            used <= 8 * parts * (n.ilog2() as u64 + 1),
            format!("{used} colors for Δ = {delta}, n = {n}"),
        ));
        Ok(BipartitionRun { assignment, splits: k, parts, repetitions, checks, rounds: sim.rounds() - start })
    })
}
