//! Weighted average defective colorings.
//!
//! All colorings here use 0-based colors below their palette size. Inputs are
//! proper colorings that double as schedules: nodes of schedule color `i`
//! act in round `i`.

use std::cmp::Ordering;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::setfamily::{defective_pass, plan_defective};
use crate::simcore::engine::{width_for, BitWriter, Envelope, Message, NodeCtx, Outbox, Program, Simulator, Status, Word};
use crate::simcore::graph::{EdgeWeights, NodeIdx, Topology};

/// Monochromatic weight of a coloring, recomputed from scratch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport<S> {
    /// Per node: weight of incident monochromatic edges.
    pub per_node: Vec<S>,
    pub total_mono: S,
    pub total_weight: S,
    pub mono_edges: usize,
}

pub fn defect_report<S: Scalar>(topo: &Topology, w: &EdgeWeights<S>, colors: &[u64]) -> DefectReport<S> {
    let mut per_node = vec![S::zero(); topo.len()];
    let mut total_mono = S::zero();
    let mut total_weight = S::zero();
    let mut mono_edges = 0;
    for (u, v) in topo.edges() {
        let x = w.get(u, v).clone();
        total_weight += x.clone();
        if colors[u as usize] == colors[v as usize] {
            mono_edges += 1;
            per_node[u as usize] += x.clone();
            per_node[v as usize] += x.clone();
            total_mono += x;
        }
    }
    DefectReport { per_node, total_mono, total_weight, mono_edges }
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectiveColoring<S> {
    pub colors: Vec<u64>,
    pub palette: u64,
    pub report: DefectReport<S>,
    /// Rounds charged to the simulator by this call.
    pub rounds: u64,
    /// Palette sizes of the 1/4-relative passes, one per recursion level.
    pub class_counts: Vec<u64>,
}

fn check_proper(topo: &Topology, colors: &[u64]) -> Result<()> {
    match topo.edges().find(|&(u, v)| colors[u as usize] == colors[v as usize]) {
        Some((u, v)) => Err(Error::ImproperColoring(topo.id(u), topo.id(v))),
        None => Ok(()),
    }
}

fn ceil_u64(r: &Rational) -> u64 {
    r.ceil().to_u64().expect("palette fits in u64")
}

struct Greedy<'a, S> {
    schedule: &'a [u64],
    w: &'a EdgeWeights<S>,
    c: u64,
    width: u32,
    class_width: u32,
}

/// Schedule class first, the chosen color once decided.
#[derive(Clone, Copy, Debug)]
enum GreedyMsg {
    Class(Word),
    Color(Word),
}

impl Message for GreedyMsg {
    fn bits(&self) -> u64 {
        match self {
            GreedyMsg::Class(w) | GreedyMsg::Color(w) => w.bits(),
        }
    }

    fn encode(&self, w: &mut BitWriter) {
        match self {
            GreedyMsg::Class(x) | GreedyMsg::Color(x) => x.encode(w),
        }
    }
}

#[derive(Default)]
struct GreedyState {
    pending: usize,
    cost: Vec<(NodeIdx, u64)>,
    color: u64,
}

impl<S: Scalar> Greedy<'_, S> {
    fn decide(&self, ctx: &NodeCtx<'_>, s: &mut GreedyState, out: &mut Outbox<GreedyMsg>) -> Status {
        let mut cost = vec![S::zero(); self.c as usize];
        for &(u, c) in &s.cost {
            cost[c as usize] += self.w.get(ctx.index, u).clone();
        }
        let mut best = 0;
        for c in 1..cost.len() {
            if cost[c].total_cmp(&cost[best]) == Ordering::Less {
                best = c;
            }
        }
        s.color = best as u64;
        out.broadcast(ctx, GreedyMsg::Color(Word::new(s.color, self.width)));
        Status::Halt
    }
}

impl<S: Scalar> Program for Greedy<'_, S> {
    type State = GreedyState;
    type Msg = GreedyMsg;

    fn start(&self, ctx: &NodeCtx<'_>, s: &mut GreedyState, out: &mut Outbox<GreedyMsg>) -> Status {
        if ctx.neighbors.is_empty() {
            return self.decide(ctx, s, out);
        }
        out.broadcast(ctx, GreedyMsg::Class(Word::new(self.schedule[ctx.index as usize], self.class_width)));
        Status::Listen
    }

    fn step(
        &self,
        ctx: &NodeCtx<'_>,
        s: &mut GreedyState,
        inbox: Vec<Envelope<GreedyMsg>>,
        out: &mut Outbox<GreedyMsg>,
    ) -> Status {
        let own = self.schedule[ctx.index as usize];
        for e in inbox {
            match e.msg {
                GreedyMsg::Class(c) if c.value < own => s.pending += 1,
                GreedyMsg::Class(_) => {}
                GreedyMsg::Color(c) => {
                    s.pending -= 1;
                    s.cost.push((e.from, c.value));
                }
            }
        }
        if s.pending == 0 {
            self.decide(ctx, s, out)
        } else {
            Status::Listen
        }
    }
}

/// Greedy weighted average `1/C`-relative defective `C`-coloring. Nodes act
/// in the order of the proper schedule coloring and pick the color with the
/// least weight towards already decided neighbors, ties to the smaller color.
/// After one round of class exchange a node decides as soon as all neighbors
/// of smaller class have, so at most `q` rounds follow.
pub fn greedy_avg_defective<S: Scalar>(
    sim: &mut Simulator,
    topo: &Topology,
    w: &EdgeWeights<S>,
    schedule: &[u64],
    q: u64,
    c: u64,
) -> Result<DefectiveColoring<S>> {
    check_proper(topo, schedule)?;
    if c == 0 {
        return Err(Error::InvalidParam("greedy defective coloring needs C ≥ 1".into()));
    }
    debug_assert!(topo.members().iter().all(|&v| schedule[v as usize] < q.max(1)));
    let start = sim.rounds();
    let colors = if c == 1 {
        vec![0; topo.len()]
    } else {
        let prog = Greedy { schedule, w, c, width: width_for(c), class_width: width_for(q) };
        let out = sim.span("greedy-defective", |sim| sim.run(topo, &prog, |_| GreedyState::default()))?;
        out.into_iter().map(|x| x.map_or(0, |s| s.color)).collect()
    };
    Ok(DefectiveColoring {
        report: defect_report(topo, w, &colors),
        colors,
        palette: c,
        rounds: sim.rounds() - start,
        class_counts: Vec::new(),
    })
}

/// Weighted average `eps`-relative defective `⌈2/eps⌉`-coloring by recursion
/// on the relative defect.
///
/// With `eps ≥ 1/2`, a per-node pass at `eps/2` yields a proper coloring of the
/// graph minus its monochromatic edges, which schedules a greedy
/// `⌈2/eps⌉`-coloring. Below `1/2`, a pass at `1/4` splits the nodes into `s`
/// classes; the monochromatic edges (those inside classes) are colored
/// recursively at `2·eps` with `⌈1/eps⌉` colors, giving a coloring with
/// `s·⌈1/eps⌉` colors that is proper outside the recursion's monochromatic
/// edges and schedules the final greedy step.
pub fn recursive_avg_defective<S: Scalar>(
    sim: &mut Simulator,
    topo: &Topology,
    w: &EdgeWeights<S>,
    colors: &[u64],
    q: u64,
    eps: &Rational,
) -> Result<DefectiveColoring<S>> {
    if *eps <= Rational::zero() {
        return Err(Error::InvalidParam(format!("relative defect must be positive, got {eps}")));
    }
    check_proper(topo, colors)?;
    let start = sim.rounds();
    let out_palette = ceil_u64(&(Rational::integer(2) / eps.clone()));
    if q <= out_palette {
        return Ok(DefectiveColoring {
            report: defect_report(topo, w, colors),
            colors: colors.to_vec(),
            palette: out_palette,
            rounds: 0,
            class_counts: Vec::new(),
        });
    }
    sim.span("recursive-defective", |sim| {
        // The recursion ends in a greedy pass over at least s·⌈1/eps⌉ classes.
        // When the input palette is not larger, greedy directly on it is
        // cheaper and already leaves at most W/⌈2/eps⌉ monochromatic.
        let (_, plan) = plan_defective(q, &Rational::new(1, 4));
        let s = plan.last().map_or(q, |&(p, _)| p * p);
        if *eps < Rational::new(1, 2) && q <= s.saturating_mul(ceil_u64(&eps.recip())) {
            return greedy_avg_defective(sim, topo, w, colors, q, out_palette);
        }
        if *eps >= Rational::new(1, 2) {
            let pass = defective_pass(sim, topo, w, colors, q, &(eps.clone() / Rational::integer(2)))?;
            let mut g = greedy_avg_defective(sim, &pass.kept, w, &pass.colors, pass.palette, out_palette)?;
            g.report = defect_report(topo, w, &g.colors);
            g.rounds = sim.rounds() - start;
            return Ok(g);
        }
        let pass = defective_pass(sim, topo, w, colors, q, &Rational::new(1, 4))?;
        let psi = &pass.colors;
        let inner = topo.filter_edges(|u, v| psi[u as usize] == psi[v as usize]);
        let sub = recursive_avg_defective(sim, &inner, w, colors, q, &(eps.clone() * Rational::integer(2)))?;
        let width = ceil_u64(&eps.recip());
        debug_assert!(sub.palette <= width);
        let combined: Vec<u64> = (0..topo.len()).map(|v| psi[v] * width + sub.colors[v]).collect();
        let rest = topo.filter_edges(|u, v| combined[u as usize] != combined[v as usize]);
        let mut g = greedy_avg_defective(sim, &rest, w, &combined, pass.palette * width, out_palette)?;
        g.report = defect_report(topo, w, &g.colors);
        g.rounds = sim.rounds() - start;
        g.class_counts = std::iter::once(pass.palette).chain(sub.class_counts).collect();
        Ok(g)
    })
}

/// Weighted average `(1+delta)/C`-relative defective `C`-coloring.
pub fn avg_defective<S: Scalar>(
    sim: &mut Simulator,
    topo: &Topology,
    w: &EdgeWeights<S>,
    colors: &[u64],
    q: u64,
    c: u64,
    delta: &Rational,
) -> Result<DefectiveColoring<S>> {
    if *delta <= Rational::zero() {
        return Err(Error::InvalidParam(format!("delta must be positive, got {delta}")));
    }
    check_proper(topo, colors)?;
    let start = sim.rounds();
    let cr = Rational::integer(c as i64);
    if c <= 1 || Rational::integer(q as i64) <= cr.clone() / delta.clone() {
        return greedy_avg_defective(sim, topo, w, colors, q, c);
    }
    sim.span("avg-defective", |sim| {
        let pass = defective_pass(sim, topo, w, colors, q, &(delta.clone() / (Rational::integer(2) * cr.clone())))?;
        let half = delta.clone() / Rational::integer(2);
        let rec = recursive_avg_defective(sim, &pass.kept, w, &pass.colors, pass.palette, &(half / cr))?;
        let inner = pass.kept.filter_edges(|u, v| rec.colors[u as usize] != rec.colors[v as usize]);
        let mut g = greedy_avg_defective(sim, &inner, w, &rec.colors, rec.palette, c)?;
        g.report = defect_report(topo, w, &g.colors);
        g.rounds = sim.rounds() - start;
        g.class_counts = rec.class_counts;
        Ok(g)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{generate, EngineConfig, GenSpec, SimGraph};

    fn sim() -> Simulator {
        Simulator::new(EngineConfig::local())
    }

    fn unit(g: &SimGraph) -> EdgeWeights<Rational> {
        EdgeWeights::unit(g.topology())
    }

    #[test]
    fn greedy_single_color() {
        let g = generate(&GenSpec::Cycle { n: 5 }, 0).unwrap();
        let r = greedy_avg_defective(&mut sim(), g.topology(), &unit(&g), &[0, 1, 0, 1, 2], 3, 1).unwrap();
        assert!(r.colors.iter().all(|&c| c == 0));
        assert_eq!(r.report.total_mono, Rational::integer(5));
    }

    /// Oracle: replays the greedy rule sequentially in schedule order.
    fn greedy_oracle(g: &SimGraph, schedule: &[u64], c: u64) -> Vec<u64> {
        let mut order: Vec<NodeIdx> = (0..g.n() as NodeIdx).collect();
        order.sort_by_key(|&v| (schedule[v as usize], v));
        let mut col: Vec<Option<u64>> = vec![None; g.n()];
        for v in order {
            let mut cost = vec![0i64; c as usize];
            for &u in g.neighbors(v) {
                if let Some(cu) = col[u as usize] {
                    if schedule[u as usize] < schedule[v as usize] {
                        cost[cu as usize] += 1;
                    }
                }
            }
            let best = (0..c as usize).min_by_key(|&x| (cost[x], x)).unwrap();
            col[v as usize] = Some(best as u64);
        }
        col.into_iter().map(Option::unwrap).collect()
    }

    #[test]
    fn greedy_triangle_matches_oracle() {
        let g = generate(&GenSpec::Clique { n: 3 }, 0).unwrap();
        let mut s = sim();
        let r = greedy_avg_defective(&mut s, g.topology(), &unit(&g), &[0, 1, 2], 3, 2).unwrap();
        assert_eq!(r.colors, greedy_oracle(&g, &[0, 1, 2], 2));
        assert_eq!(r.report.mono_edges, 1);
        assert!(r.report.total_mono <= Rational::new(3, 2));
        assert!(s.rounds() <= 3);
    }

    #[test]
    fn greedy_matches_oracle_on_random_graphs() {
        for seed in 0..5 {
            let g = generate(&GenSpec::Gnp { n: 40, p: 0.15 }, seed).unwrap();
            let r = greedy_avg_defective(&mut sim(), g.topology(), &unit(&g), &g.id_coloring(), 40, 3).unwrap();
            assert_eq!(r.colors, greedy_oracle(&g, &g.id_coloring(), 3));
            assert!(r.report.total_mono * Rational::integer(3) <= r.report.total_weight);
        }
    }

    #[test]
    fn greedy_edgeless_and_improper_input() {
        let g = SimGraph::from_index_edges(3, &[]).unwrap();
        let r = greedy_avg_defective(&mut sim(), g.topology(), &unit(&g), &[0, 0, 0], 1, 4).unwrap();
        assert!(r.report.total_mono.is_zero());
        let e = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            greedy_avg_defective(&mut sim(), e.topology(), &unit(&e), &[1, 1], 2, 2),
            Err(Error::ImproperColoring(0, 1))
        ));
    }

    #[test]
    fn recursive_four_cycle_and_path() {
        let c4 = generate(&GenSpec::Cycle { n: 4 }, 0).unwrap();
        let r = recursive_avg_defective(&mut sim(), c4.topology(), &unit(&c4), &c4.id_coloring(), 4, &Rational::new(1, 2))
            .unwrap();
        assert!(r.report.total_mono <= Rational::integer(2));
        let p = generate(&GenSpec::Path { n: 100 }, 0).unwrap();
        let ids: Vec<u64> = (0..100).map(|v| v * 37 % 1000).collect();
        let r = recursive_avg_defective(&mut sim(), p.topology(), &unit(&p), &ids, 1000, &Rational::new(1, 8)).unwrap();
        assert_eq!(r.palette, 16);
        assert!(r.colors.iter().all(|&c| c < 16));
        assert!(r.report.total_mono <= Rational::new(99, 8));
    }

    #[test]
    fn avg_defective_examples() {
        let k6 = generate(&GenSpec::Clique { n: 6 }, 0).unwrap();
        let r = avg_defective(&mut sim(), k6.topology(), &unit(&k6), &k6.id_coloring(), 6, 3, &Rational::one()).unwrap();
        assert!(r.report.total_mono <= Rational::integer(10));
        assert!(r.colors.iter().all(|&c| c < 3));

        let star = generate(&GenSpec::Star { leaves: 30 }, 0).unwrap();
        let w = EdgeWeights::from_fn(star.topology(), |u, v| Rational::integer(1 + (u.max(v) % 5) as i64));
        let ids: Vec<u64> = (0..31).map(|v| 500 + v).collect();
        let r = avg_defective(&mut sim(), star.topology(), &w, &ids, 531, 4, &Rational::new(1, 2)).unwrap();
        assert!(r.report.total_mono <= Rational::new(3, 8) * r.report.total_weight);
    }

    #[test]
    fn bounds_hold_on_weighted_random_graphs() {
        for seed in 0..4u64 {
            let g = generate(&GenSpec::Gnp { n: 150, p: 0.06 }, seed).unwrap();
            let w = EdgeWeights::from_fn(g.topology(), |u, v| Rational::new(((u * 7 + v * 7) % 11) as i64, 4));
            for (eps_n, eps_d) in [(1, 1), (1, 2), (1, 5), (1, 12)] {
                let eps = Rational::new(eps_n, eps_d);
                let r = recursive_avg_defective(&mut sim(), g.topology(), &w, &g.id_coloring(), 150, &eps).unwrap();
                assert!(r.report.total_mono <= eps.clone() * r.report.total_weight.clone());
                assert!(r.colors.iter().all(|&c| c < r.palette));
            }
            let r = avg_defective(&mut sim(), g.topology(), &w, &g.id_coloring(), 150, 2, &Rational::new(1, 3)).unwrap();
            assert!(r.report.total_mono <= Rational::new(2, 3) * r.report.total_weight.clone());
        }
    }

    #[test]
    fn float_mode_runs() {
        let g = generate(&GenSpec::RandomRegular { n: 80, d: 4 }, 1).unwrap();
        let w = EdgeWeights::<f64>::from_fn(g.topology(), |u, v| 0.5 + ((u + v) % 3) as f64);
        let r = recursive_avg_defective(&mut sim(), g.topology(), &w, &g.id_coloring(), 80, &Rational::new(1, 4)).unwrap();
        assert!(r.report.total_mono.le_with_slack(&(0.25 * r.report.total_weight)));
    }
}
