//! Partial list colorings that color at least half of the total node weight.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rounding::{EdgeCost, Label};
use crate::scalar::Rational;
use crate::setfamily::ColorReduction;
use crate::simcore::engine::Simulator;
use crate::simcore::graph::NodeIdx;
use crate::simcore::verify::ColorAssignment;

use super::congest::{level_checks, partition_tentative, PartitionTree};
use super::local::{granularity, local_tentative};
use super::{mono_degrees, share_colors, weighted_is, Check, IterationStats, ListInstance, Pipeline, Residual};

/// Repetitions of the constant-fraction step before giving up.
pub const MAX_REPETITIONS: usize = 8;

/// `(w_u + w_v)` on monochromatic pairs.
pub struct WeightedMono<'a> {
    pub weights: &'a [Rational],
}

impl EdgeCost<Rational> for WeightedMono<'_> {
    fn cost(&self, u: NodeIdx, lu: Label, v: NodeIdx, lv: Label) -> Rational {
        if lu == lv {
            self.weights[u as usize].clone() + self.weights[v as usize].clone()
        } else {
            Rational::zero()
        }
    }

    fn diagonal(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartialColoring {
    pub assignment: ColorAssignment,
    pub total_weight: Rational,
    pub colored_weight: Rational,
    pub repetitions: Vec<IterationStats>,
    pub checks: Vec<Check>,
    pub rounds: u64,
}

fn sum_weight(nodes: impl Iterator<Item = NodeIdx>, w: &[Rational]) -> Rational {
    nodes.fold(Rational::zero(), |a, v| a + w[v as usize].clone())
}

/// Colors nodes of total weight at least half of `W` with colors from their
/// lists, properly. Each repetition rounds a tentative coloring, keeps the
/// nodes with fewer than 4 monochromatic edges and commits a weighted
/// independent set of every color class among them.
pub fn weighted_partial(
    sim: &mut Simulator,
    inst: &ListInstance,
    weights: &[Rational],
    helper: &ColorReduction,
    pipeline: Pipeline,
) -> Result<PartialColoring> {
    if weights.len() != inst.topology().len() || weights.iter().any(|w| w < &Rational::zero()) {
        return Err(Error::InvalidInstance("need one non-negative weight per node".into()));
    }
    let start = sim.rounds();
    let name = match pipeline {
        Pipeline::Local => "weighted-partial-local",
        Pipeline::Congest => "weighted-partial-congest",
    };
    sim.span(name, |sim| {
        let mut res = Residual::new(inst);
        let total = sum_weight(inst.topology().members().iter().copied(), weights);
        let half = total.clone() / Rational::integer(2);
        let mut colored = Rational::zero();
        let mut repetitions = Vec::new();
        let mut checks = Vec::new();
        let q = granularity(inst.topology());
        let h = PartitionTree::new(inst.palette()).depth();
        while colored < half {
            if repetitions.len() == MAX_REPETITIONS {
                return Err(Error::IterationCap(format!(
                    "colored weight {colored} of {total} after {MAX_REPETITIONS} repetitions"
                )));
            }
            let it_start = sim.rounds();
            let topo = res.current();
            let n = topo.members().len();
            let w_cur = sum_weight(topo.members().iter().copied(), weights);
            let t = match pipeline {
                Pipeline::Local => {
                    local_tentative(sim, &topo, &res, helper, q, &WeightedMono { weights }, &Rational::new(1, 3))?
                }
                Pipeline::Congest => partition_tentative(sim, &topo, &res, helper, Some(weights))?,
            };
            share_colors(sim, &t.conflict_base, &t.colors, res.palette)?;
            let mono = mono_degrees(&t.conflict_base, &t.colors);
            let mono_edges = mono.iter().sum::<usize>() / 2;
            let light: Vec<bool> = (0..topo.len()).map(|v| topo.is_member(v as NodeIdx) && mono[v] < 4).collect();
            let light_weight = sum_weight((0..topo.len() as NodeIdx).filter(|&v| light[v as usize]), weights);
            let conflict = t
                .conflict_base
                .induced(|v| light[v as usize])
                .filter_edges(|u, v| t.colors[u as usize] == t.colors[v as usize]);
            let set = weighted_is(sim, &conflict, weights, &helper.colors, helper.palette)?;
            let chosen: Vec<(NodeIdx, u32)> = set.members.iter().map(|&v| (v, t.colors[v as usize])).collect();
            res.commit(sim, &topo, &chosen)?;
            colored += set.weight.clone();
            let i = repetitions.len();
            match pipeline {
                Pipeline::Local => {
                    checks.push(Check::new(
                        "initial-weighted-cost",
                        t.initial_cost <= Rational::integer(2) * w_cur.clone(),
                        format!("repetition {i}: {} vs 2W = {}", t.initial_cost, Rational::integer(2) * w_cur.clone()),
                    ));
                    checks.push(Check::new(
                        "rounded-weighted-cost",
                        t.rounded_cost <= Rational::new(8, 3) * w_cur.clone(),
                        format!("repetition {i}: {} vs 8W/3", t.rounded_cost),
                    ));
                    checks.push(Check::new(
                        "light-weight",
                        Rational::integer(3) * light_weight.clone() >= w_cur,
                        format!("repetition {i}: {light_weight} of {w_cur}"),
                    ));
                }
                Pipeline::Congest => {
                    checks.push(Check::new(
                        "final-potential",
                        t.rounded_cost <= Rational::integer(3) * w_cur.clone(),
                        format!("repetition {i}: {} vs 3W", t.rounded_cost),
                    ));
                    level_checks(&t.levels, h, i, &mut checks);
                    checks.push(Check::new(
                        "light-weight",
                        Rational::integer(4) * light_weight.clone() >= w_cur,
                        format!("repetition {i}: {light_weight} of {w_cur}"),
                    ));
                }
            }
            repetitions.push(IterationStats {
                active: n,
                active_weight: w_cur,
                initial_cost: t.initial_cost,
                rounded_cost: t.rounded_cost,
                mono_edges,
                candidates: light.iter().filter(|&&l| l).count(),
                candidate_weight: light_weight,
                committed: chosen.len(),
                committed_weight: set.weight,
                levels: t.levels,
                rounds: sim.rounds() - it_start,
            });
        }
        Ok(PartialColoring {
            assignment: res.assignment,
            total_weight: total,
            colored_weight: colored,
            repetitions,
            checks,
            rounds: sim.rounds() - start,
        })
    })
}

pub fn weighted_partial_local(
    sim: &mut Simulator,
    inst: &ListInstance,
    weights: &[Rational],
    helper: &ColorReduction,
) -> Result<PartialColoring> {
    weighted_partial(sim, inst, weights, helper, Pipeline::Local)
}

pub fn weighted_partial_congest(
    sim: &mut Simulator,
    inst: &ListInstance,
    weights: &[Rational],
    helper: &ColorReduction,
) -> Result<PartialColoring> {
    weighted_partial(sim, inst, weights, helper, Pipeline::Congest)
}
