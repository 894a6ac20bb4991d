//! Independent sets on bounded-degree graphs, driven by a constant-size
//! proper coloring.
//!
//! Both procedures emulate processing the color classes one after another.
//! A node decides as soon as all neighbors of smaller class have decided, so
//! the outcome equals the class-by-class sweep while the round count follows
//! the longest chain of decreasing classes instead of the palette size.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::setfamily::linial_color;
use crate::simcore::engine::{exchange, member_words, width_for, Envelope, NodeCtx, Outbox, Program, Simulator, Status};
use crate::simcore::graph::{NodeIdx, Topology};

struct ClassSweep<'a> {
    classes: &'a [u64],
    /// Per node, classes of its neighbors aligned with the adjacency.
    seen: &'a [Vec<u64>],
    weights: Option<&'a [Rational]>,
    ids: &'a [u64],
}

#[derive(Default)]
struct SweepState {
    pending: usize,
    blocked: bool,
    joined: bool,
}

impl ClassSweep<'_> {
    fn lower(&self, v: NodeIdx) -> usize {
        let c = self.classes[v as usize];
        self.seen[v as usize].iter().filter(|&&x| x < c).count()
    }

    /// Joins iff no earlier neighbor joined and, with weights, no later (still
    /// undecided) neighbor is heavier; equal weights favor the smaller ID.
    fn decide(&self, ctx: &NodeCtx<'_>, s: &mut SweepState, out: &mut Outbox<bool>) -> Status {
        let v = ctx.index;
        let c = self.classes[v as usize];
        s.joined = !s.blocked
            && self.weights.is_none_or(|w| {
                ctx.neighbors.iter().zip(&self.seen[v as usize]).filter(|(_, &cu)| cu > c).all(|(&u, _)| {
                    let (wv, wu) = (&w[v as usize], &w[u as usize]);
                    wv > wu || (wv == wu && ctx.id < self.ids[u as usize])
                })
            });
        out.broadcast(ctx, s.joined);
        Status::Halt
    }
}

impl Program for ClassSweep<'_> {
    type State = SweepState;
    type Msg = bool;

    fn start(&self, ctx: &NodeCtx<'_>, s: &mut SweepState, out: &mut Outbox<bool>) -> Status {
        s.pending = self.lower(ctx.index);
        if s.pending == 0 {
            self.decide(ctx, s, out)
        } else {
            Status::Listen
        }
    }

    fn step(&self, ctx: &NodeCtx<'_>, s: &mut SweepState, inbox: Vec<Envelope<bool>>, out: &mut Outbox<bool>) -> Status {
        let c = self.classes[ctx.index as usize];
        for e in inbox {
            if self.classes[e.from as usize] < c {
                s.pending -= 1;
                s.blocked |= e.msg;
            }
        }
        if s.pending == 0 {
            self.decide(ctx, s, out)
        } else {
            Status::Listen
        }
    }
}

fn sweep(
    sim: &mut Simulator,
    topo: &Topology,
    classes: &[u64],
    palette: u64,
    weights: Option<&[Rational]>,
) -> Result<Vec<NodeIdx>> {
    let width = width_for(palette);
    let words = member_words(topo, classes, width);
    let seen: Vec<Vec<u64>> =
        exchange(sim, topo, &words)?.into_iter().map(|row| row.into_iter().map(|(_, w)| w.value).collect()).collect();
    let prog = ClassSweep { classes, seen: &seen, weights, ids: topo.ids() };
    let states = sim.run(topo, &prog, |_| SweepState::default())?;
    Ok((0..topo.len() as NodeIdx).filter(|&v| states[v as usize].as_ref().is_some_and(|s| s.joined)).collect())
}

/// Maximal independent set of the members of `topo`: Linial's reduction from
/// the helper coloring down to its fixed point, then a class-ordered sweep.
pub fn class_greedy_mis(sim: &mut Simulator, topo: &Topology, helper: &[u64], helper_palette: u64) -> Result<Vec<NodeIdx>> {
    if topo.members().is_empty() {
        return Ok(Vec::new());
    }
    sim.span("mis", |sim| {
        let red = linial_color(sim, topo, helper, helper_palette)?;
        sweep(sim, topo, &red.colors, red.palette, None)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependentSet {
    pub members: Vec<NodeIdx>,
    pub weight: Rational,
    pub total: Rational,
    /// Size of the constant palette the sweep ran on.
    pub classes: u64,
}

impl IndependentSet {
    /// Selected share of the total weight (1 for an empty graph).
    pub fn fraction(&self) -> Rational {
        if self.total == Rational::zero() {
            Rational::one()
        } else {
            self.weight.clone() / self.total.clone()
        }
    }
}

/// Constant-fraction weighted independent set on a graph of maximum degree at
/// most 4. Neighbor weights are treated as known; only classes and decisions
/// are sent.
pub fn weighted_is(
    sim: &mut Simulator,
    topo: &Topology,
    weights: &[Rational],
    helper: &[u64],
    helper_palette: u64,
) -> Result<IndependentSet> {
    if let Some(&v) = topo.members().iter().find(|&&v| topo.degree(v) > 4) {
        return Err(Error::DegreeBound { node: topo.id(v), degree: topo.degree(v), bound: 4 });
    }
    let total = topo.members().iter().fold(Rational::zero(), |a, &v| a + weights[v as usize].clone());
    if topo.members().is_empty() {
        return Ok(IndependentSet { members: Vec::new(), weight: total.clone(), total, classes: 0 });
    }
    sim.span("weighted-is", |sim| {
        let red = linial_color(sim, topo, helper, helper_palette)?;
        let members = sweep(sim, topo, &red.colors, red.palette, Some(weights))?;
        let weight = members.iter().fold(Rational::zero(), |a, &v| a + weights[v as usize].clone());
        Ok(IndependentSet { members, weight, total, classes: red.palette })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{generate, EngineConfig, GenSpec, SimGraph};
    use proptest::prelude::*;

    fn sim() -> Simulator {
        Simulator::new(EngineConfig::local())
    }

    fn is_independent(topo: &Topology, set: &[NodeIdx]) -> bool {
        set.iter().all(|&v| set.iter().all(|&u| !topo.has_edge(u, v)))
    }

    fn is_maximal(topo: &Topology, set: &[NodeIdx]) -> bool {
        topo.members().iter().all(|&v| set.contains(&v) || topo.neighbors(v).iter().any(|u| set.contains(u)))
    }

    /// Oracle: exact maximum-weight independent set by branch and bound.
    fn max_weight_is(topo: &Topology, w: &[Rational]) -> Rational {
        fn go(topo: &Topology, w: &[Rational], order: &[NodeIdx], i: usize, banned: &mut Vec<u32>, acc: Rational, rest: Rational, best: &mut Rational) {
            if acc.clone() + rest.clone() <= *best {
                return;
            }
            if i == order.len() {
                *best = acc;
                return;
            }
            let v = order[i];
            let rest2 = rest - w[v as usize].clone();
            if banned[v as usize] == 0 {
                for &u in topo.neighbors(v) {
                    banned[u as usize] += 1;
                }
                go(topo, w, order, i + 1, banned, acc.clone() + w[v as usize].clone(), rest2.clone(), best);
                for &u in topo.neighbors(v) {
                    banned[u as usize] -= 1;
                }
            }
            go(topo, w, order, i + 1, banned, acc, rest2, best);
        }
        let mut order = topo.members().to_vec();
        order.sort_by(|a, b| w[*b as usize].cmp(&w[*a as usize]));
        let rest = order.iter().fold(Rational::zero(), |a, &v| a + w[v as usize].clone());
        let mut best = Rational::zero();
        go(topo, w, &order, 0, &mut vec![0; topo.len()], Rational::zero(), rest, &mut best);
        best
    }

    #[test]
    fn mis_examples() {
        for spec in [GenSpec::Cycle { n: 9 }, GenSpec::Grid { rows: 5, cols: 6 }, GenSpec::Clique { n: 5 }] {
            let g = generate(&spec, 1).unwrap();
            let mis = class_greedy_mis(&mut sim(), g.topology(), &g.id_coloring(), g.id_palette()).unwrap();
            assert!(is_independent(g.topology(), &mis) && is_maximal(g.topology(), &mis), "{spec}");
        }
        let empty = SimGraph::from_index_edges(0, &[]).unwrap();
        assert!(class_greedy_mis(&mut sim(), empty.topology(), &[], 1).unwrap().is_empty());
    }

    #[test]
    fn weighted_is_examples() {
        let edgeless = SimGraph::from_index_edges(4, &[]).unwrap();
        let w = vec![Rational::integer(3); 4];
        let s = weighted_is(&mut sim(), edgeless.topology(), &w, &edgeless.id_coloring(), 4).unwrap();
        assert_eq!(s.members.len(), 4);
        assert_eq!(s.fraction(), Rational::one());

        let e = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        let w = vec![Rational::one(), Rational::integer(100)];
        let s = weighted_is(&mut sim(), e.topology(), &w, &e.id_coloring(), 2).unwrap();
        assert_eq!(s.members, vec![1]);

        let star = generate(&GenSpec::Star { leaves: 5 }, 0).unwrap();
        let w = vec![Rational::one(); 6];
        assert!(matches!(
            weighted_is(&mut sim(), star.topology(), &w, &star.id_coloring(), 6),
            Err(Error::DegreeBound { degree: 5, .. })
        ));
    }

    #[test]
    fn weighted_is_against_exact_optimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut worst = Rational::one();
        for seed in 0..60 {
            let n = rng.gen_range(2..=20);
            let g = generate(&GenSpec::Gnp { n, p: 0.25 }, seed).unwrap();
            let topo = g.topology().filter_edges(|u, v| g.degree(u) <= 4 && g.degree(v) <= 4);
            let w: Vec<Rational> = (0..n).map(|_| Rational::new(rng.gen_range(0..100), rng.gen_range(1..5))).collect();
            let s = weighted_is(&mut sim(), &topo, &w, &g.id_coloring(), g.id_palette()).unwrap();
            assert!(is_independent(&topo, &s.members));
            let opt = max_weight_is(&topo, &w);
            if opt > Rational::zero() {
                let r = s.weight.clone() / opt;
                worst = worst.min(r);
            }
        }
        assert!(worst >= Rational::new(1, 5), "worst ratio {worst}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn mis_is_maximal_independent(n in 1usize..60, p in 0.0f64..0.3, seed in any::<u64>()) {
            let g = generate(&GenSpec::Gnp { n, p }, seed).unwrap();
            let mis = class_greedy_mis(&mut sim(), g.topology(), &g.id_coloring(), g.id_palette()).unwrap();
            prop_assert!(is_independent(g.topology(), &mis));
            prop_assert!(is_maximal(g.topology(), &mis));
        }
    }
}
