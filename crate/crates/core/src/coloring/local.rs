//! (degree+1)-list coloring by rounding a uniform fractional assignment.

use crate::error::{Error, Result};
use crate::rounding::{fractional_cost, full_round, EdgeCost, FractionalLabeling, MonoCost};
use crate::scalar::Rational;
use crate::setfamily::ColorReduction;
use crate::simcore::engine::Simulator;
use crate::simcore::graph::Topology;

use super::{
    ceil_log, commit_candidates, helper_coloring, Check, ColoringRun, IterationStats, ListInstance, Pipeline, Residual,
    Tentative,
};

/// Largest power of two `≤ x`, for `x ≥ 1`.
pub(crate) fn floor_pow2(x: u64) -> u64 {
    1 << (63 - x.leading_zeros())
}

/// Granularity shared by all iterations: `2^⌊log₂(Δ+1)⌋`.
pub(crate) fn granularity(topo: &Topology) -> u64 {
    floor_pow2(topo.max_degree() as u64 + 1)
}

/// Every node spreads its mass evenly over the first `2^⌊log₂(d+1)⌋` colors of
/// its list, rounds with `cost`, and takes the resulting color tentatively.
pub(crate) fn local_tentative<C: EdgeCost<Rational>>(
    sim: &mut Simulator,
    topo: &Topology,
    res: &Residual,
    helper: &ColorReduction,
    q: u64,
    cost: &C,
    eps: &Rational,
) -> Result<Tentative> {
    let rows = (0..topo.len())
        .map(|v| {
            if !topo.is_member(v as u32) {
                return Vec::new();
            }
            let hd = floor_pow2(topo.degree(v as u32) as u64 + 1);
            res.lists[v][..hd as usize].iter().map(|&c| (c, q / hd)).collect()
        })
        .collect();
    let lab = FractionalLabeling::new(res.palette, q, rows)?;
    let initial_cost = fractional_cost(topo, &lab, cost);
    let (out, _) = full_round(sim, topo, &lab, cost, &helper.colors, helper.palette, eps, false)?;
    let rounded_cost = fractional_cost(topo, &out, cost);
    let colors = (0..topo.len() as u32).map(|v| out.label_of(v).unwrap_or(0)).collect();
    Ok(Tentative { colors, conflict_base: topo.clone(), initial_cost, rounded_cost, levels: Vec::new() })
}

/// Deterministic (degree+1)-list coloring: round the uniform assignment with
/// the monochromatic-edge cost at `eps = 1`, then commit an MIS of the
/// conflicts among nodes with at most 4 monochromatic edges. Each iteration
/// colors at least a tenth of the remaining nodes.
pub fn local_list_coloring(sim: &mut Simulator, inst: &ListInstance) -> Result<ColoringRun> {
    let start = sim.rounds();
    sim.span("local-list", |sim| {
        let helper = helper_coloring(sim, inst.topology())?;
        let q = granularity(inst.topology());
        let mut res = Residual::new(inst);
        let n0 = res.remaining();
        let bound = ceil_log(n0, &Rational::new(10, 9)) + 1;
        let mut iterations = Vec::new();
        let mut checks = Vec::new();
        while res.remaining() > 0 {
            if iterations.len() as u32 >= 4 * bound + 16 {
                return Err(Error::IterationCap(format!("{} nodes left after {} iterations", res.remaining(), iterations.len())));
            }
            let it_start = sim.rounds();
            let topo = res.current();
            let n = topo.members().len();
            let t = local_tentative(sim, &topo, &res, &helper, q, &MonoCost, &Rational::one())?;
            let (mono_edges, candidates, committed) = commit_candidates(sim, &mut res, &topo, &t, &helper, 4)?;
            let i = iterations.len();
            let nr = Rational::integer(n as i64);
            checks.push(Check::new("initial-cost", t.initial_cost <= nr, format!("iteration {i}: {} vs n = {n}", t.initial_cost)));
            checks.push(Check::new("mono-edges", mono_edges <= 2 * n, format!("iteration {i}: {mono_edges} vs 2n = {}", 2 * n)));
            checks.push(Check::new("candidates", 2 * candidates >= n, format!("iteration {i}: {candidates} of {n}")));
            checks.push(Check::new("committed", 10 * committed >= n, format!("iteration {i}: {committed} of {n}")));
            iterations.push(IterationStats {
                active: n,
                active_weight: nr,
                initial_cost: t.initial_cost,
                rounded_cost: t.rounded_cost,
                mono_edges,
                candidates,
                candidate_weight: Rational::integer(candidates as i64),
                committed,
                committed_weight: Rational::integer(committed as i64),
                levels: Vec::new(),
                rounds: sim.rounds() - it_start,
            });
        }
        checks.push(Check::new(
            "iterations",
            iterations.len() as u32 <= bound,
            format!("{} iterations, bound {bound}", iterations.len()),
        ));
        Ok(ColoringRun {
            assignment: res.assignment,
            pipeline: Pipeline::Local,
            helper_palette: helper.palette,
            helper_steps: helper.steps,
            iterations,
            checks,
            rounds: sim.rounds() - start,
        })
    })
}
