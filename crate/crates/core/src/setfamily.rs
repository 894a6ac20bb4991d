//! Polynomial set families over prime fields, Linial color reduction, and
//! the per-node weighted defective pass built on the same families.
//!
//! For a prime `p` and degree bound `d`, index `i < p^(d+1)` names the
//! polynomial over GF(p) whose coefficients are the base-`p` digits of `i`.
//! Its member set is the graph `{a·p + poly_i(a) : a ∈ GF(p)} ⊆ [p²]`. Two
//! distinct polynomials of degree at most `d` agree on at most `d` points, so
//! two member sets share at most `d` elements.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::simcore::engine::{exchange, exchange_map, member_words, width_for, Simulator};
use crate::simcore::graph::{EdgeWeights, NodeIdx, Topology};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PolySetFamily {
    p: u64,
    d: u32,
}

impl PolySetFamily {
    pub fn new(p: u64, d: u32) -> Self {
        assert!(is_prime(p), "{p} is not prime");
        PolySetFamily { p, d }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Number of indices, `p^(d+1)`, saturating at `u64::MAX`.
    pub fn index_space(&self) -> u64 {
        self.p.checked_pow(self.d + 1).unwrap_or(u64::MAX)
    }

    /// Size of the ground set `[p²]`, the palette after a reduction.
    pub fn palette(&self) -> u64 {
        self.p * self.p
    }

    /// Base-`p` digits of `i`, lowest coefficient first.
    pub fn coefficients(&self, mut i: u64) -> Vec<u64> {
        (0..=self.d)
            .map(|_| {
                let c = i % self.p;
                i /= self.p;
                c
            })
            .collect()
    }

    /// `poly_i(a)` by Horner's rule on precomputed coefficients.
    pub fn eval_coeffs(&self, coeffs: &[u64], a: u64) -> u64 {
        coeffs.iter().rev().fold(0, |acc, &c| (acc * a + c) % self.p)
    }

    pub fn eval(&self, i: u64, a: u64) -> u64 {
        self.eval_coeffs(&self.coefficients(i), a)
    }

    /// The member set `F_i`, sorted.
    pub fn member(&self, i: u64) -> Vec<u64> {
        let c = self.coefficients(i);
        (0..self.p).map(|a| a * self.p + self.eval_coeffs(&c, a)).collect()
    }

    pub fn contains(&self, i: u64, element: u64) -> bool {
        self.eval(i, element / self.p) == element % self.p
    }

    pub fn intersection_size(&self, i: u64, j: u64) -> usize {
        let (ci, cj) = (self.coefficients(i), self.coefficients(j));
        (0..self.p).filter(|&a| self.eval_coeffs(&ci, a) == self.eval_coeffs(&cj, a)).count()
    }
}

/// Which guarantee a reduction step has to provide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Proper reduction on graphs of maximum degree `delta`: `p > delta·d`.
    Proper { delta: u64 },
    /// Defective reduction with relative defect `eps`: `p ≥ d/eps`.
    Defective { eps: Rational },
}

impl Constraint {
    fn admits(&self, p: u64, d: u32) -> bool {
        match self {
            Constraint::Proper { delta } => (p as u128) > (*delta as u128) * d as u128,
            Constraint::Defective { eps } => Rational::integer(d as i64) <= Rational::integer(p as i64) * eps.clone(),
        }
    }
}

/// Smallest `(p, d)`, ordered by `p` then `d`, with `p` prime, `d ≥ 1`,
/// `p^(d+1) ≥ q` and the constraint satisfied.
pub fn choose_params(q: u64, constraint: &Constraint) -> (u64, u32) {
    // any admissible p admits d = 1, which bounds p from below
    let mut p = match constraint {
        Constraint::Proper { delta } => delta.saturating_add(1),
        Constraint::Defective { eps } => u64::try_from(eps.recip().ceil()).unwrap_or(u64::MAX),
    }
    .max(2);
    loop {
        if is_prime(p) {
            let mut d = 1u32;
            while constraint.admits(p, d) {
                if (PolySetFamily { p, d }).index_space() >= q {
                    return (p, d);
                }
                d += 1;
            }
        }
        p += 1;
    }
}

/// Palette sizes visited by repeatedly applying [`choose_params`] while the
/// palette shrinks, starting from `q` (inclusive).
pub fn reduction_chain(q: u64, constraint: &Constraint) -> Vec<u64> {
    let mut chain = vec![q];
    loop {
        let cur = *chain.last().unwrap();
        let (p, _) = choose_params(cur, constraint);
        if p * p >= cur {
            return chain;
        }
        chain.push(p * p);
    }
}

/// The palette at which Linial reduction stops for maximum degree `delta`.
pub fn fixed_point(q: u64, delta: u64) -> u64 {
    *reduction_chain(q, &Constraint::Proper { delta: delta.max(1) }).last().unwrap()
}

/// Iterated logarithm base 2: how often `log2` must be applied to get `≤ 1`.
pub fn log_star(q: u64) -> u32 {
    let mut x = q as f64;
    let mut k = 0;
    while x > 1.0 {
        x = x.log2();
        k += 1;
    }
    k
}

fn check_proper(topo: &Topology, colors: &[u64]) -> Result<()> {
    match topo.edges().find(|&(u, v)| colors[u as usize] == colors[v as usize]) {
        Some((u, v)) => Err(Error::ImproperColoring(topo.id(u), topo.id(v))),
        None => Ok(()),
    }
}

/// One Linial round: every node sends its color, then picks the smallest
/// element of its member set not covered by any neighbor's member set.
/// Returns the new coloring of the members of `topo` (other entries keep
/// their value) with palette `p²`.
pub fn linial_reduce_step(
    sim: &mut Simulator,
    topo: &Topology,
    colors: &[u64],
    q: u64,
    delta: u64,
) -> Result<(Vec<u64>, u64)> {
    check_proper(topo, colors)?;
    let (p, d) = choose_params(q, &Constraint::Proper { delta: delta.max(1) });
    let fam = PolySetFamily::new(p, d);
    let width = width_for(q);
    let msgs = member_words(topo, colors, width);
    let picked = exchange_map(sim, topo, &msgs, |v, inbox| {
        let own = fam.coefficients(colors[v as usize]);
        let theirs: Vec<Vec<u64>> = inbox.iter().map(|(_, w)| fam.coefficients(w.value)).collect();
        (0..p)
            .find_map(|a| {
                let y = fam.eval_coeffs(&own, a);
                theirs.iter().all(|c| fam.eval_coeffs(c, a) != y).then_some(a * p + y)
            })
            .expect("member set is not covered when p > Δ·d")
    })?;
    let mut out = colors.to_vec();
    for (v, c) in picked.into_iter().enumerate() {
        if let Some(c) = c {
            out[v] = c;
        }
    }
    Ok((out, p * p))
}

#[derive(Clone, Debug, Serialize)]
pub struct ColorReduction {
    pub colors: Vec<u64>,
    pub initial_palette: u64,
    pub palette: u64,
    /// Reduction rounds executed.
    pub steps: u32,
}

/// Repeats [`linial_reduce_step`] from a proper `q`-coloring until the
/// palette stops shrinking. The degree bound is the maximum degree of `topo`.
pub fn linial_color(sim: &mut Simulator, topo: &Topology, colors: &[u64], q: u64) -> Result<ColorReduction> {
    check_proper(topo, colors)?;
    let delta = topo.max_degree().max(1) as u64;
    let mut cur = colors.to_vec();
    let mut palette = q;
    let mut steps = 0;
    sim.span("linial", |sim| {
        loop {
            let (p, _) = choose_params(palette, &Constraint::Proper { delta });
            if p * p >= palette {
                break;
            }
            let (next, pal) = linial_reduce_step(sim, topo, &cur, palette, delta)?;
            cur = next;
            palette = pal;
            steps += 1;
        }
        Ok(ColorReduction { colors: cur, initial_palette: q, palette, steps })
    })
}

/// One defective step and what it removed at every node.
#[derive(Clone, Debug, Serialize)]
pub struct DefectiveStep<S> {
    pub eps: Rational,
    pub p: u64,
    pub d: u32,
    pub palette: u64,
    /// Per node: weight of kept edges before the step.
    pub kept_before: Vec<S>,
    /// Per node: weight of edges that became monochromatic in the step.
    pub removed: Vec<S>,
}

impl<S: Scalar> DefectiveStep<S> {
    /// Nodes violating `removed(v) ≤ eps·kept_before(v)`.
    pub fn violations(&self) -> Vec<NodeIdx> {
        let eps = S::from_rational(&self.eps);
        (0..self.removed.len())
            .filter(|&v| !self.removed[v].le_with_slack(&(eps.clone() * self.kept_before[v].clone())))
            .map(|v| v as NodeIdx)
            .collect()
    }
}

/// Result of the per-node weighted defective pass.
#[derive(Clone, Debug)]
pub struct DefectivePass<S> {
    pub colors: Vec<u64>,
    pub palette: u64,
    pub eps: Rational,
    pub steps: Vec<DefectiveStep<S>>,
    /// The input topology without the removed (monochromatic) edges; the
    /// output coloring is proper on it.
    pub kept: Topology,
}

const MAX_DEFECTIVE_STEPS: u32 = 6;

/// Plans the defective pass: the number of steps `S` and the per-step
/// parameters, each step using budget `eps/S`. Among `S ≤ 6` the plan with the
/// smallest final palette wins (ties to fewer steps). An empty plan means no
/// step would shrink the palette.
pub fn plan_defective(q: u64, eps: &Rational) -> (Rational, Vec<(u64, u32)>) {
    let mut best: Option<(u64, Rational, Vec<(u64, u32)>)> = None;
    for s in 1..=MAX_DEFECTIVE_STEPS {
        let step_eps = eps.clone() / Rational::integer(s as i64);
        let constraint = Constraint::Defective { eps: step_eps.clone() };
        let mut palette = q;
        let mut plan = Vec::new();
        for _ in 0..s {
            let (p, d) = choose_params(palette, &constraint);
            if p * p >= palette {
                break;
            }
            plan.push((p, d));
            palette = p * p;
        }
        if best.as_ref().is_none_or(|b| palette < b.0) {
            best = Some((palette, step_eps, plan));
        }
    }
    let (palette, step_eps, plan) = best.unwrap();
    if palette >= q {
        (eps.clone(), Vec::new())
    } else {
        (step_eps, plan)
    }
}

/// One defective refinement round. Every node of color `i` picks the element
/// `c ∈ F_i` minimizing `Σ w(u,v)·[c ∈ F_color(u)]` over its kept neighbors,
/// ties to the smallest element.
pub fn defective_reduce_step<S: Scalar>(
    sim: &mut Simulator,
    topo: &Topology,
    w: &EdgeWeights<S>,
    colors: &[u64],
    q: u64,
    fam: PolySetFamily,
) -> Result<Vec<u64>> {
    check_proper(topo, colors)?;
    let p = fam.p();
    let msgs = member_words(topo, colors, width_for(q));
    let picked = exchange_map(sim, topo, &msgs, |v, inbox| {
        let own = fam.coefficients(colors[v as usize]);
        let theirs: Vec<(Vec<u64>, &S)> = inbox.iter().map(|(u, m)| (fam.coefficients(m.value), w.get(v, *u))).collect();
        let mut best: Option<(S, u64)> = None;
        for a in 0..p {
            let y = fam.eval_coeffs(&own, a);
            let mut conflict = S::zero();
            for (c, wu) in &theirs {
                if fam.eval_coeffs(c, a) == y {
                    conflict += (*wu).clone();
                }
            }
            if best.as_ref().is_none_or(|(b, _)| conflict.total_cmp(b) == Ordering::Less) {
                best = Some((conflict, a * p + y));
            }
        }
        best.unwrap().1
    })?;
    let mut out = colors.to_vec();
    for (v, c) in picked.into_iter().enumerate() {
        if let Some(c) = c {
            out[v] = c;
        }
    }
    Ok(out)
}

/// Weighted defective coloring with per-node guarantee: every node `v` ends
/// with monochromatic weight at most `eps·W(v)`. Runs the planned steps, each
/// followed by dropping the edges it made monochromatic, plus one closing
/// round in which nodes learn their neighbors' final colors.
pub fn defective_pass<S: Scalar>(
    sim: &mut Simulator,
    topo: &Topology,
    w: &EdgeWeights<S>,
    colors: &[u64],
    q: u64,
    eps: &Rational,
) -> Result<DefectivePass<S>> {
    check_proper(topo, colors)?;
    let (step_eps, plan) = plan_defective(q, eps);
    sim.span("defective-pass", |sim| {
        let mut kept = topo.clone();
        let mut cur = colors.to_vec();
        let mut palette = q;
        let mut steps = Vec::with_capacity(plan.len());
        for &(p, d) in &plan {
            let fam = PolySetFamily::new(p, d);
            let next = defective_reduce_step(sim, &kept, w, &cur, palette, fam)?;
            let n = topo.len();
            let mut kept_before = vec![S::zero(); n];
            let mut removed = vec![S::zero(); n];
            for &v in kept.members() {
                for &u in kept.neighbors(v) {
                    let wu = w.get(v, u).clone();
                    kept_before[v as usize] += wu.clone();
                    if next[v as usize] == next[u as usize] {
                        removed[v as usize] += wu;
                    }
                }
            }
            kept = kept.filter_edges(|a, b| next[a as usize] != next[b as usize]);
            steps.push(DefectiveStep { eps: step_eps.clone(), p, d, palette: p * p, kept_before, removed });
            cur = next;
            palette = p * p;
        }
        if !plan.is_empty() {
            // nodes learn which of their edges the last step made monochromatic
            let msgs = member_words(topo, &cur, width_for(palette));
            exchange(sim, topo, &msgs)?;
        }
        Ok(DefectivePass { colors: cur, palette, eps: eps.clone(), steps, kept })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{verify, EngineConfig, SimGraph};

    /// Independent oracle: brute force over all primes and degrees in range,
    /// minimizing `(p², d)`.
    fn oracle(q: u64, admits: impl Fn(u64, u32) -> bool) -> (u64, u32) {
        let mut best = None;
        for p in (2..=256u64).filter(|&p| (2..p).all(|k| p % k != 0)) {
            for d in 1..=16u32 {
                let space = (p as u128).checked_pow(d + 1).unwrap_or(u128::MAX);
                if space >= q as u128 && admits(p, d) {
                    let key = (p * p, d);
                    if best.is_none_or(|b: (u64, u32)| key < (b.0 * b.0, b.1)) {
                        best = Some((p, d));
                    }
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn params_match_exhaustive_search() {
        assert_eq!(choose_params(1 << 16, &Constraint::Proper { delta: 4 }), (17, 3));
        assert_eq!(choose_params(2, &Constraint::Proper { delta: 1 }), (2, 1));
        for q in [2u64, 5, 100, 289, 1000, 1 << 16, 1_000_000] {
            for delta in [1u64, 2, 4, 8, 16] {
                let got = choose_params(q, &Constraint::Proper { delta });
                assert_eq!(got, oracle(q, |p, d| p > delta * d as u64), "q={q} Δ={delta}");
            }
            for (n, den) in [(1i64, 4i64), (1, 2), (1, 1), (1, 10)] {
                let eps = Rational::new(n, den);
                let got = choose_params(q, &Constraint::Defective { eps });
                assert_eq!(got, oracle(q, |p, d| (d as i64) * den <= p as i64 * n), "q={q} ε={n}/{den}");
            }
        }
    }

    #[test]
    fn member_sets_intersect_in_at_most_d_points() {
        for (p, d) in [(2u64, 1u32), (3, 1), (5, 2), (7, 1), (11, 3)] {
            let fam = PolySetFamily::new(p, d);
            let space = fam.index_space().min(400);
            for i in 0..space {
                let fi = fam.member(i);
                assert_eq!(fi.len() as u64, p);
                assert!(fi.iter().all(|&e| e < p * p && fam.contains(i, e)));
                for j in 0..i {
                    assert!(fam.intersection_size(i, j) <= d as usize);
                }
            }
        }
    }

    #[test]
    fn fixed_points() {
        assert_eq!(fixed_point(1 << 16, 4), 121);
        assert_eq!(fixed_point(1000, 8), 289);
        assert_eq!(fixed_point(10_000, 64), 10_000);
        assert_eq!(log_star(1), 0);
        assert_eq!(log_star(2), 1);
        assert_eq!(log_star(16), 3);
        assert_eq!(log_star(65536), 4);
        assert_eq!(log_star(65537), 5);
    }

    #[test]
    fn isolated_node_takes_min_element() {
        let g = SimGraph::from_index_edges(1, &[]).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        let (c, pal) = linial_reduce_step(&mut sim, g.topology(), &[7], 30, 1).unwrap();
        let (p, d) = choose_params(30, &Constraint::Proper { delta: 1 });
        assert_eq!(pal, p * p);
        assert_eq!(c[0], PolySetFamily::new(p, d).member(7)[0]);
    }

    #[test]
    fn path_step_is_proper() {
        let g = SimGraph::from_index_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        let (c, pal) = linial_reduce_step(&mut sim, g.topology(), &[1, 2, 3], 30, 2).unwrap();
        assert!(pal <= 25 || c.iter().all(|&x| x < pal));
        assert!(verify::is_proper(g.topology(), &c));
        assert_eq!(sim.trace.rounds_elapsed, 1);
        assert_eq!(sim.trace.max_message_bits, 5);
        assert!(linial_reduce_step(&mut sim, g.topology(), &[1, 1, 3], 30, 2).is_err());
    }

    #[test]
    fn linial_on_clique_and_singleton() {
        let k5 = crate::simcore::generate(&crate::simcore::GenSpec::Clique { n: 5 }, 0).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        let r = linial_color(&mut sim, k5.topology(), &k5.id_coloring(), k5.id_palette()).unwrap();
        assert!(verify::is_proper(k5.topology(), &r.colors));
        assert!(r.steps <= log_star(5) + 3);
        let one = SimGraph::from_index_edges(1, &[]).unwrap();
        let r = linial_color(&mut sim, one.topology(), &[0], 1).unwrap();
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn defective_star_respects_per_node_bound() {
        // center 0, leaves all share input color 1
        let g = SimGraph::from_index_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        let w = EdgeWeights::<Rational>::unit(g.topology());
        let mut sim = Simulator::new(EngineConfig::local());
        let colors = [0u64, 1, 1, 1, 1, 1];
        let fam = PolySetFamily::new(2, 1);
        let out = defective_reduce_step(&mut sim, g.topology(), &w, &colors, 2, fam).unwrap();
        let mono = (1..6).filter(|&u| out[u] == out[0]).count();
        assert!(2 * mono <= 5);
    }

    #[test]
    fn defective_pass_zero_weights_and_isolated() {
        let g = crate::simcore::generate(&crate::simcore::GenSpec::RandomRegular { n: 60, d: 5 }, 3).unwrap();
        let w = EdgeWeights::<Rational>::from_fn(g.topology(), |_, _| Rational::zero());
        let mut sim = Simulator::new(EngineConfig::local());
        let r = defective_pass(&mut sim, g.topology(), &w, &g.id_coloring(), 10_000, &Rational::new(1, 2)).unwrap();
        assert!(!r.steps.is_empty());
        assert!(r.steps.iter().all(|s| s.removed.iter().all(|x| x.is_zero())));
        assert!(verify::is_proper(&r.kept, &r.colors));
        let one = SimGraph::from_index_edges(1, &[]).unwrap();
        let w1 = EdgeWeights::<Rational>::unit(one.topology());
        let r = defective_pass(&mut sim, one.topology(), &w1, &[5000], 10_000, &Rational::new(1, 2)).unwrap();
        assert_eq!(r.kept.edge_count(), 0);
        assert!(r.colors[0] < r.palette);
    }

    #[test]
    fn defective_pass_per_step_bound() {
        let g = crate::simcore::generate(&crate::simcore::GenSpec::Gnp { n: 120, p: 0.08 }, 5).unwrap();
        let w = EdgeWeights::<Rational>::from_fn(g.topology(), |u, v| Rational::new(1 + ((u + v) % 7) as i64, 3));
        for eps in [Rational::new(1, 2), Rational::new(1, 4), Rational::new(1, 16)] {
            let mut sim = Simulator::new(EngineConfig::local());
            let r = defective_pass(&mut sim, g.topology(), &w, &g.id_coloring(), g.id_palette(), &eps).unwrap();
            for s in &r.steps {
                assert!(s.violations().is_empty());
            }
            assert!(verify::is_proper(&r.kept, &r.colors));
            // total per-node defect against the original weighted degree
            for v in 0..g.n() as NodeIdx {
                let mono: Rational = g
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| r.colors[u as usize] == r.colors[v as usize])
                    .map(|&u| w.get(v, u).clone())
                    .sum();
                assert!(mono <= eps.clone() * w.node_total(g.topology(), v));
            }
        }
    }

    #[test]
    fn empty_plan_when_palette_cannot_shrink() {
        let (_, plan) = plan_defective(121, &Rational::new(1, 128));
        assert!(plan.is_empty());
        let (e, plan) = plan_defective(1 << 20, &Rational::new(1, 4));
        assert!(!plan.is_empty());
        assert!(e <= Rational::new(1, 4));
    }
}
