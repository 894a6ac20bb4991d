//! End-to-end list coloring algorithms.
//!
//! Every algorithm works on a [`ListInstance`] and repeats a "color a
//! constant fraction" procedure on the residual instance of uncolored nodes
//! until everyone is colored. Committed colors are removed from the lists of
//! uncolored neighbors, which keeps the (degree+1) condition intact.

mod bipartition;
mod congest;
mod local;
mod mis;
mod weighted;

use serde::Serialize;

pub use bipartition::{bipartition_demo, BipartitionRun};
pub use congest::{congest_list_coloring, PartitionTree, PartCost};
pub use local::local_list_coloring;
pub use mis::{class_greedy_mis, weighted_is, IndependentSet};
pub use weighted::{weighted_partial, weighted_partial_congest, weighted_partial_local, PartialColoring};

use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::setfamily::{linial_color, ColorReduction};
use crate::simcore::engine::{announce, width_for, Simulator, Word};
use crate::simcore::graph::{NodeIdx, SimGraph, Topology};
use crate::simcore::verify::ColorAssignment;

/// Which rounding pipeline picks tentative colors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Fractional assignment over the whole list, rounded in one go.
    Local,
    /// Color-space partitioning with small messages.
    Congest,
}

/// A (degree+1)-list coloring instance on the members of a topology. Colors
/// are `1..=palette`; lists are sorted and duplicate-free.
#[derive(Clone, Debug)]
pub struct ListInstance {
    topo: Topology,
    lists: Vec<Vec<u32>>,
    palette: u32,
}

impl ListInstance {
    /// Lists of non-members are ignored.
    pub fn new(topo: Topology, mut lists: Vec<Vec<u32>>, palette: u32) -> Result<Self> {
        if lists.len() != topo.len() {
            return Err(Error::InvalidInstance(format!("{} lists for {} nodes", lists.len(), topo.len())));
        }
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        for &v in topo.members() {
            let l = &lists[v as usize];
            if let Some(c) = l.iter().find(|&&c| c == 0 || c > palette) {
                return Err(Error::InvalidInstance(format!(
                    "node {}: color {c} outside the color space 1..={palette}",
                    topo.id(v)
                )));
            }
            if l.len() < topo.degree(v) + 1 {
                return Err(Error::InvalidInstance(format!(
                    "node {}: list of {} colors for degree {}",
                    topo.id(v),
                    l.len(),
                    topo.degree(v)
                )));
            }
        }
        Ok(ListInstance { topo, lists, palette })
    }

    /// Every node gets `{1, ..., Δ+1}`.
    pub fn delta_plus_one(topo: Topology) -> Self {
        let palette = topo.max_degree() as u32 + 1;
        let lists = vec![(1..=palette).collect(); topo.len()];
        ListInstance { topo, lists, palette }
    }

    pub fn of_graph(g: &SimGraph, lists: Vec<Vec<u32>>, palette: u32) -> Result<Self> {
        Self::new(g.topology().clone(), lists, palette)
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn lists(&self) -> &[Vec<u32>] {
        &self.lists
    }

    pub fn list(&self, v: NodeIdx) -> &[u32] {
        &self.lists[v as usize]
    }

    pub fn palette(&self) -> u32 {
        self.palette
    }
}

/// The `O(Δ²)` helper coloring every algorithm computes once: Linial's
/// reduction started from the identifiers.
pub fn helper_coloring(sim: &mut Simulator, topo: &Topology) -> Result<ColorReduction> {
    let ids: Vec<u64> = topo.ids().to_vec();
    let q = ids.iter().max().map_or(1, |m| m + 1);
    linial_color(sim, topo, &ids, q)
}

/// Runs the list coloring of the chosen pipeline.
pub fn list_coloring(sim: &mut Simulator, inst: &ListInstance, pipeline: Pipeline) -> Result<ColoringRun> {
    match pipeline {
        Pipeline::Local => local_list_coloring(sim, inst),
        Pipeline::Congest => congest_list_coloring(sim, inst),
    }
}

/// Proper `(Δ+1)`-coloring: list coloring with every list `{1, ..., Δ+1}`.
pub fn delta_plus_one(sim: &mut Simulator, topo: &Topology, pipeline: Pipeline) -> Result<ColoringRun> {
    list_coloring(sim, &ListInstance::delta_plus_one(topo.clone()), pipeline)
}

/// One outcome of a guarantee check, recomputed from raw outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, ok: bool, detail: String) -> Self {
        Check { name: name.to_string(), ok, detail }
    }
}

/// Potential of one partitioning level of the color-space pipeline.
#[derive(Clone, Debug, Serialize)]
pub struct LevelStats {
    pub level: u32,
    /// `Σ d(v)/|L_v|` (weighted: `Σ w_v·d(v)/|L_v|`) before the level.
    pub before: Rational,
    /// Fractional cost of the perturbed assignment.
    pub perturbed: Rational,
    /// Potential after choosing parts.
    pub after: Rational,
}

/// Measurements of one "color a constant fraction" iteration.
#[derive(Clone, Debug, Serialize)]
pub struct IterationStats {
    /// Uncolored nodes at the start of the iteration.
    pub active: usize,
    pub active_weight: Rational,
    /// Cost of the initial fractional assignment (LOCAL pipeline) or the
    /// initial potential (color-space pipeline).
    pub initial_cost: Rational,
    /// Cost of the tentative integral coloring.
    pub rounded_cost: Rational,
    /// Monochromatic edges of the tentative coloring.
    pub mono_edges: usize,
    /// Nodes eligible for committing (few monochromatic edges).
    pub candidates: usize,
    pub candidate_weight: Rational,
    pub committed: usize,
    pub committed_weight: Rational,
    pub levels: Vec<LevelStats>,
    pub rounds: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ColoringRun {
    pub assignment: ColorAssignment,
    pub pipeline: Pipeline,
    pub helper_palette: u64,
    pub helper_steps: u32,
    pub iterations: Vec<IterationStats>,
    pub checks: Vec<Check>,
    pub rounds: u64,
}

impl ColoringRun {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Tentative colors plus the statistics of how they were obtained.
pub(crate) struct Tentative {
    pub colors: Vec<u32>,
    /// Edges of the residual graph that still matter for conflicts. Edges
    /// between nodes that chose disjoint color ranges are already gone.
    pub conflict_base: Topology,
    pub initial_cost: Rational,
    pub rounded_cost: Rational,
    pub levels: Vec<LevelStats>,
}

/// Uncolored part of an instance, shrinking as colors are committed.
pub(crate) struct Residual {
    pub base: Topology,
    pub lists: Vec<Vec<u32>>,
    pub palette: u32,
    pub assignment: ColorAssignment,
    pub active: Vec<bool>,
}

impl Residual {
    pub fn new(inst: &ListInstance) -> Self {
        let mut active = vec![false; inst.topo.len()];
        for &v in inst.topo.members() {
            active[v as usize] = true;
        }
        Residual {
            base: inst.topo.clone(),
            lists: inst.lists.clone(),
            palette: inst.palette,
            assignment: ColorAssignment::new(inst.topo.len()),
            active,
        }
    }

    pub fn current(&self) -> Topology {
        self.base.induced(|v| self.active[v as usize])
    }

    pub fn remaining(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Commits `chosen` (node, color) pairs: they announce their color and
    /// every uncolored neighbor drops it from its list.
    pub fn commit(&mut self, sim: &mut Simulator, topo: &Topology, chosen: &[(NodeIdx, u32)]) -> Result<()> {
        let width = width_for(self.palette as u64 + 1);
        let mut msgs: Vec<Option<Word>> = vec![None; topo.len()];
        for &(v, c) in chosen {
            msgs[v as usize] = Some(Word::new(c as u64, width));
        }
        let heard = announce(sim, topo, &msgs)?;
        for &(v, c) in chosen {
            self.assignment.set(v, c);
            self.active[v as usize] = false;
        }
        for (v, inbox) in heard.into_iter().enumerate() {
            if self.active[v] {
                let list = &mut self.lists[v];
                for (_, w) in inbox {
                    if let Ok(i) = list.binary_search(&(w.value as u32)) {
                        list.remove(i);
                    }
                }
            }
        }
        let residual = self.current();
        for &v in residual.members() {
            if self.lists[v as usize].len() < residual.degree(v) + 1 {
                return Err(Error::Internal(format!(
                    "node {} lost the degree+1 condition after committing",
                    residual.id(v)
                )));
            }
        }
        Ok(())
    }
}

/// `⌈log_{b} n⌉` for a rational base `b > 1`, via repeated multiplication.
pub(crate) fn ceil_log(n: usize, base: &Rational) -> u32 {
    let target = Rational::integer(n as i64);
    let mut acc = Rational::one();
    let mut k = 0;
    while acc < target {
        acc = acc * base.clone();
        k += 1;
    }
    k
}

/// Number of incident monochromatic edges per node.
pub(crate) fn mono_degrees(topo: &Topology, colors: &[u32]) -> Vec<usize> {
    let mut d = vec![0; topo.len()];
    for (u, v) in topo.edges() {
        if colors[u as usize] == colors[v as usize] {
            d[u as usize] += 1;
            d[v as usize] += 1;
        }
    }
    d
}

/// One round in which every member learns its neighbors' tentative colors.
pub(crate) fn share_colors(sim: &mut Simulator, topo: &Topology, colors: &[u32], palette: u32) -> Result<()> {
    let width = width_for(palette as u64 + 1);
    let msgs: Vec<Option<Word>> = (0..topo.len())
        .map(|v| topo.is_member(v as NodeIdx).then(|| Word::new(colors[v] as u64, width)))
        .collect();
    announce(sim, topo, &msgs)?;
    Ok(())
}

/// Commits an MIS of the conflict graph among candidates with at most
/// `max_mono` monochromatic edges; shared by both unweighted pipelines.
pub(crate) fn commit_candidates(
    sim: &mut Simulator,
    res: &mut Residual,
    topo: &Topology,
    t: &Tentative,
    helper: &ColorReduction,
    max_mono: usize,
) -> Result<(usize, usize, usize)> {
    share_colors(sim, &t.conflict_base, &t.colors, res.palette)?;
    let mono = mono_degrees(&t.conflict_base, &t.colors);
    let mono_edges = mono.iter().sum::<usize>() / 2;
    let cand: Vec<bool> = (0..topo.len()).map(|v| topo.is_member(v as NodeIdx) && mono[v] <= max_mono).collect();
    let candidates = cand.iter().filter(|&&c| c).count();
    // neighbors learn who is a candidate before building the conflict graph
    let flags: Vec<Option<bool>> = (0..topo.len()).map(|v| topo.is_member(v as NodeIdx).then_some(cand[v])).collect();
    announce(sim, &t.conflict_base, &flags)?;
    let conflict = t
        .conflict_base
        .induced(|v| cand[v as usize])
        .filter_edges(|u, v| t.colors[u as usize] == t.colors[v as usize]);
    let mis = class_greedy_mis(sim, &conflict, &helper.colors, helper.palette)?;
    let chosen: Vec<(NodeIdx, u32)> = mis.iter().map(|&v| (v, t.colors[v as usize])).collect();
    res.commit(sim, topo, &chosen)?;
    Ok((mono_edges, candidates, chosen.len()))
}
