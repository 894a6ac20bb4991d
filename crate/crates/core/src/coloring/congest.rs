//! (degree+1)-list coloring with small messages by descending a hierarchy of
//! color-space partitions.
//!
//! At every level a node picks one of `K` child ranges of its current range.
//! The choice is a rounded fractional assignment whose cost equals the
//! potential `Σ w_v·d(v)/|L_v|` (unit weights in the unweighted case), so the
//! potential barely grows while neighbors in different ranges stop
//! conflicting. After `H` levels every list is a single color.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rounding::{fractional_cost, full_round, EdgeCost, FractionalLabeling, Label};
use crate::scalar::Rational;
use crate::setfamily::ColorReduction;
use crate::simcore::engine::{announce, exchange, width_for, BitWriter, Message, Simulator, Word};
use crate::simcore::graph::{NodeIdx, Topology};

use super::{
    ceil_log, commit_candidates, helper_coloring, Check, ColoringRun, IterationStats, LevelStats, ListInstance,
    Pipeline, Residual, Tentative,
};

/// Hierarchy of contiguous near-equal partitions of `1..=palette`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionTree {
    palette: u32,
    k: u32,
    h: u32,
}

impl PartitionTree {
    /// `K = max(2, ⌊√log₂ palette⌋)` and `H = ⌈log_K palette⌉`.
    pub fn new(palette: u32) -> Self {
        let mut k = 1u32;
        while (k + 1) * (k + 1) < 32 && (1u64 << ((k + 1) * (k + 1))) <= palette as u64 {
            k += 1;
        }
        let k = k.max(2);
        let mut h = 0;
        let mut reach = 1u64;
        while reach < palette as u64 {
            reach *= k as u64;
            h += 1;
        }
        PartitionTree { palette, k, h }
    }

    pub fn branching(&self) -> u32 {
        self.k
    }

    pub fn depth(&self) -> u32 {
        self.h
    }

    pub fn root(&self) -> (u32, u32) {
        (1, self.palette + 1)
    }

    /// Child `j ∈ 1..=K` of the half-open range `[lo, hi)`; the first
    /// `len mod K` children are one larger.
    pub fn child(&self, (lo, hi): (u32, u32), j: u32) -> (u32, u32) {
        let (len, k) = (hi - lo, self.k);
        let small = len / k;
        let big = len % k;
        let start = lo + (j - 1) * small + (j - 1).min(big);
        let size = small + u32::from(j <= big);
        (start, start + size)
    }

    /// `log₂ 1/ρ` with `ρ` the largest power of two `≤ 1/(10KH)`.
    pub fn rho_exponent(&self) -> u32 {
        let x = 10 * self.k as u64 * self.h.max(1) as u64;
        64 - (x - 1).leading_zeros()
    }
}

/// Rounds `a_j/m` to multiples of `1/units` summing to one, none growing by
/// more than a `1+1/(4H)` factor: round down, then hand out the residue in
/// label order within per-label capacities `⌊x'_j/(4H)⌋`.
pub fn perturb(counts: &[u32], units: u64, h: u32) -> Result<Vec<u64>> {
    let m: u64 = counts.iter().map(|&a| a as u64).sum();
    let mut x: Vec<u64> = counts.iter().map(|&a| a as u64 * units / m).collect();
    let mut residue = units - x.iter().sum::<u64>();
    for xj in x.iter_mut() {
        let add = (*xj / (4 * h.max(1) as u64)).min(residue);
        *xj += add;
        residue -= add;
    }
    if residue > 0 {
        return Err(Error::Internal(format!("perturbation capacity exhausted for counts {counts:?}")));
    }
    Ok(x)
}

/// `c((u,j),(v,j)) = w_u/|L_u∩P_j| + w_v/|L_v∩P_j|`, zero across parts.
pub struct PartCost<'a> {
    counts: &'a [Arc<[u32]>],
    weights: Option<&'a [Rational]>,
}

impl PartCost<'_> {
    fn term(&self, v: NodeIdx, j: Label) -> Rational {
        match self.counts[v as usize].get(j as usize - 1) {
            Some(&a) if a > 0 => {
                let w = self.weights.map_or(Rational::one(), |w| w[v as usize].clone());
                w / Rational::integer(a as i64)
            }
            _ => Rational::zero(),
        }
    }
}

impl EdgeCost<Rational> for PartCost<'_> {
    fn cost(&self, u: NodeIdx, lu: Label, v: NodeIdx, lv: Label) -> Rational {
        if lu != lv {
            return Rational::zero();
        }
        self.term(u, lu) + self.term(v, lv)
    }

    fn diagonal(&self) -> bool {
        true
    }
}

/// A node's per-part list counts at the current level.
#[derive(Clone, Debug)]
struct CountMsg {
    counts: Arc<[u32]>,
    width: u32,
}

impl Message for CountMsg {
    fn bits(&self) -> u64 {
        self.counts.len() as u64 * self.width as u64
    }
    fn encode(&self, w: &mut BitWriter) {
        for &a in self.counts.iter() {
            w.write(a as u64, self.width);
        }
    }
}

pub(crate) fn potential(topo: &Topology, lists: &[Vec<u32>], weights: Option<&[Rational]>) -> Rational {
    let mut total = Rational::zero();
    for &v in topo.members() {
        let d = topo.degree(v);
        if d > 0 {
            let w = weights.map_or(Rational::one(), |w| w[v as usize].clone());
            total += w * Rational::new(d as i64, lists[v as usize].len() as i64);
        }
    }
    total
}

/// Descends the partition tree once and returns the single remaining color of
/// every node; the conflict base keeps only edges whose endpoints stayed in
/// the same part throughout, i.e. the monochromatic ones.
pub(crate) fn partition_tentative(
    sim: &mut Simulator,
    topo: &Topology,
    res: &Residual,
    helper: &ColorReduction,
    weights: Option<&[Rational]>,
) -> Result<Tentative> {
    let tree = PartitionTree::new(res.palette);
    let (k, h) = (tree.branching(), tree.depth());
    let units = 1u64 << tree.rho_exponent();
    let eps = Rational::new(1, 2 * h.max(1) as i64);
    let mut lists: Vec<Vec<u32>> = res.lists.clone();
    let mut ranges = vec![tree.root(); topo.len()];
    let mut level_topo = topo.clone();
    let mut levels = Vec::with_capacity(h as usize);
    let initial_cost = potential(topo, &lists, weights);
    let width = width_for(res.palette as u64 + 1);
    for level in 1..=h {
        let before = potential(&level_topo, &lists, weights);
        let counts: Vec<Arc<[u32]>> = (0..topo.len())
            .map(|v| {
                (1..=k)
                    .map(|j| {
                        let (lo, hi) = tree.child(ranges[v], j);
                        lists[v].iter().filter(|&&c| lo <= c && c < hi).count() as u32
                    })
                    .collect()
            })
            .collect();
        let msgs: Vec<CountMsg> = counts.iter().map(|c| CountMsg { counts: Arc::clone(c), width }).collect();
        exchange(sim, &level_topo, &msgs)?;
        let mut rows = vec![Vec::new(); topo.len()];
        for &v in level_topo.members() {
            let x = perturb(&counts[v as usize], units, h)?;
            rows[v as usize] = x.into_iter().enumerate().filter(|e| e.1 > 0).map(|(j, x)| (j as Label + 1, x)).collect();
        }
        let lab = FractionalLabeling::new(k, units, rows)?;
        let cost = PartCost { counts: &counts, weights };
        let perturbed = fractional_cost(&level_topo, &lab, &cost);
        let (out, _) = full_round(sim, &level_topo, &lab, &cost, &helper.colors, helper.palette, &eps, false)?;
        let choice: Vec<u32> = (0..topo.len() as NodeIdx).map(|v| out.label_of(v).unwrap_or(0)).collect();
        let kw = width_for(k as u64 + 1);
        let words: Vec<Option<Word>> = (0..topo.len())
            .map(|v| level_topo.is_member(v as NodeIdx).then(|| Word::new(choice[v] as u64, kw)))
            .collect();
        announce(sim, &level_topo, &words)?;
        for &v in level_topo.members() {
            let r = tree.child(ranges[v as usize], choice[v as usize]);
            ranges[v as usize] = r;
            lists[v as usize].retain(|&c| r.0 <= c && c < r.1);
        }
        level_topo = level_topo.filter_edges(|u, v| choice[u as usize] == choice[v as usize]);
        let after = potential(&level_topo, &lists, weights);
        levels.push(LevelStats { level, before, perturbed, after });
    }
    let colors: Vec<u32> = (0..topo.len())
        .map(|v| if topo.is_member(v as NodeIdx) { lists[v][0] } else { 0 })
        .collect();
    if topo.members().iter().any(|&v| lists[v as usize].len() != 1) {
        return Err(Error::Internal("partition descent did not end in single colors".into()));
    }
    let rounded_cost = potential(&level_topo, &lists, weights);
    Ok(Tentative { colors, conflict_base: level_topo, initial_cost, rounded_cost, levels })
}

/// Per-level and end-of-descent potential checks shared with the weighted
/// variant.
pub(crate) fn level_checks(levels: &[LevelStats], h: u32, i: usize, checks: &mut Vec<Check>) {
    let growth = Rational::one() + Rational::new(1, h.max(1) as i64);
    for l in levels {
        checks.push(Check::new(
            "level-growth",
            l.after <= growth.clone() * l.before.clone(),
            format!("iteration {i} level {}: {} -> {}", l.level, l.before, l.after),
        ));
    }
}

/// Deterministic (degree+1)-list coloring with messages of `O(log 𝒞)` bits:
/// descend the partition tree, then commit an MIS of the conflicts among nodes
/// with potential at most 4. Each iteration colors at least a twentieth of
/// the remaining nodes.
pub fn congest_list_coloring(sim: &mut Simulator, inst: &ListInstance) -> Result<ColoringRun> {
    let start = sim.rounds();
    sim.span("congest-list", |sim| {
        let helper = helper_coloring(sim, inst.topology())?;
        let h = PartitionTree::new(inst.palette()).depth();
        let mut res = Residual::new(inst);
        let bound = ceil_log(res.remaining(), &Rational::new(20, 19)) + 1;
        let mut iterations = Vec::new();
        let mut checks = Vec::new();
        while res.remaining() > 0 {
            if iterations.len() as u32 >= 4 * bound + 16 {
                return Err(Error::IterationCap(format!("{} nodes left after {} iterations", res.remaining(), iterations.len())));
            }
            let it_start = sim.rounds();
            let topo = res.current();
            let n = topo.members().len();
            let t = partition_tentative(sim, &topo, &res, &helper, None)?;
            let (mono_edges, candidates, committed) = commit_candidates(sim, &mut res, &topo, &t, &helper, 4)?;
            let i = iterations.len();
            let nr = Rational::integer(n as i64);
            checks.push(Check::new("initial-potential", t.initial_cost < nr || n == 0, format!("iteration {i}: {} vs n = {n}", t.initial_cost)));
            checks.push(Check::new(
                "final-potential",
                t.rounded_cost <= Rational::integer(3) * nr.clone(),
                format!("iteration {i}: {} vs 3n = {}", t.rounded_cost, 3 * n),
            ));
            level_checks(&t.levels, h, i, &mut checks);
            checks.push(Check::new("committed", 20 * committed >= n, format!("iteration {i}: {committed} of {n}")));
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
                levels: t.levels,
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
            pipeline: Pipeline::Congest,
            helper_palette: helper.palette,
            helper_steps: helper.steps,
            iterations,
            checks,
            rounds: sim.rounds() - start,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tree_parameters() {
        let t = PartitionTree::new(2);
        assert_eq!((t.branching(), t.depth()), (2, 1));
        assert_eq!(PartitionTree::new(1).depth(), 0);
        // 2^16 colors: ⌊√16⌋ = 4, 4^8 = 2^16
        let t = PartitionTree::new(1 << 16);
        assert_eq!((t.branching(), t.depth()), (4, 8));
        let t = PartitionTree::new(513);
        assert_eq!((t.branching(), t.depth()), (3, 6));
        assert_eq!(PartitionTree { palette: 0, k: 6, h: 10 }.rho_exponent(), 10);
    }

    #[test]
    fn children_partition_ranges() {
        let t = PartitionTree::new(100);
        let mut level = vec![t.root()];
        for _ in 0..t.depth() {
            let next: Vec<(u32, u32)> =
                level.iter().flat_map(|&r| (1..=t.branching()).map(move |j| t.child(r, j))).collect();
            let covered: Vec<u32> = next.iter().flat_map(|&(a, b)| a..b).collect();
            assert_eq!(covered, (1..=100).collect::<Vec<_>>());
            let sizes: Vec<u32> = next.iter().map(|r| r.1 - r.0).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            level = next;
        }
        assert!(level.iter().all(|r| r.1 - r.0 <= 1));
    }

    proptest! {
        #[test]
        fn perturbation_properties(counts in prop::collection::vec(0u32..40, 2..6), h in 1u32..12) {
            prop_assume!(counts.iter().any(|&a| a > 0));
            let k = counts.len() as u64;
            let bits = 64 - (10 * k * h as u64 - 1).leading_zeros();
            let units = 1u64 << bits;
            let x = perturb(&counts, units, h).unwrap();
            let m: u64 = counts.iter().map(|&a| a as u64).sum();
            prop_assert_eq!(x.iter().sum::<u64>(), units);
            for (j, &xj) in x.iter().enumerate() {
                // x'' ≤ (1 + 1/(4H))·a/m
                prop_assert!((xj as u128) * (m as u128) * (4 * h as u128) <= (counts[j] as u128) * (units as u128) * (4 * h as u128 + 1));
            }
        }
    }
}
