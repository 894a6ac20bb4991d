//! Fractional vertex labelings with edge costs and their deterministic
//! rounding.
//!
//! A labeling stores per-node numerators over one common denominator `D`.
//! A labeling is `1/Q`-integral when every value is a multiple of `1/Q`.
//! Rounding halves the granularity one step at a time: the basic step turns
//! a `1/(2Q)`-integral labeling into a `1/Q`-integral one without increasing
//! the cost, node by node along a proper coloring; the approximate step
//! first computes a defective coloring with few colors and gives up a
//! `(1+eps)` factor; the full rounding chains `k` approximate steps.

use std::marker::PhantomData;
use std::sync::Arc;

use serde::Serialize;

use crate::defective::recursive_avg_defective;
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::setfamily::defective_pass;
use crate::simcore::engine::{
    announce, exchange_map, member_words, width_for, BitWriter, Envelope, Message, NodeCtx, Outbox, Program, Simulator, Status,
    Word,
};
use crate::simcore::graph::{EdgeWeights, NodeIdx, Topology};

/// Labels are `1..=labels` of the labeling they belong to.
pub type Label = u32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FractionalLabeling {
    labels: u32,
    denom: u64,
    /// Per node: `(label, numerator)` sorted by label, numerators positive.
    /// An empty entry marks a node that does not take part.
    values: Vec<Vec<(Label, u64)>>,
}

impl FractionalLabeling {
    pub fn new(labels: u32, denom: u64, values: Vec<Vec<(Label, u64)>>) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidLabeling("denominator must be positive".into()));
        }
        for (v, row) in values.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            if !row.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(Error::InvalidLabeling(format!("node {v}: labels must be sorted and distinct")));
            }
            if let Some(&(l, _)) = row.iter().find(|(l, x)| *l == 0 || *l > labels || *x == 0) {
                return Err(Error::InvalidLabeling(format!("node {v}: bad entry for label {l}")));
            }
            if row.iter().map(|e| e.1 as u128).sum::<u128>() != denom as u128 {
                return Err(Error::InvalidLabeling(format!("node {v}: values do not sum to 1")));
            }
        }
        Ok(FractionalLabeling { labels, denom, values })
    }

    /// Every participating node spreads its mass evenly over its set; set
    /// sizes must divide `denom`.
    pub fn uniform(labels: u32, denom: u64, sets: &[Vec<Label>]) -> Result<Self> {
        let mut values = Vec::with_capacity(sets.len());
        for (v, s) in sets.iter().enumerate() {
            if s.is_empty() {
                values.push(Vec::new());
                continue;
            }
            if denom % s.len() as u64 != 0 {
                return Err(Error::InvalidLabeling(format!("node {v}: {} labels do not divide {denom}", s.len())));
            }
            let mut row: Vec<(Label, u64)> = s.iter().map(|&l| (l, denom / s.len() as u64)).collect();
            row.sort_unstable();
            values.push(row);
        }
        Self::new(labels, denom, values)
    }

    pub fn labels(&self) -> u32 {
        self.labels
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, v: NodeIdx) -> &[(Label, u64)] {
        &self.values[v as usize]
    }

    pub fn x(&self, v: NodeIdx, l: Label) -> Rational {
        let row = self.row(v);
        match row.binary_search_by_key(&l, |e| e.0) {
            Ok(i) => Rational::new(row[i].1 as i64, self.denom as i64),
            Err(_) => Rational::zero(),
        }
    }

    /// Whether every value is a multiple of `1/q`.
    pub fn is_integral_at(&self, q: u64) -> bool {
        self.values.iter().flatten().all(|&(_, x)| (x as u128 * q as u128) % self.denom as u128 == 0)
    }

    /// Smallest `k` such that the labeling is `1/2^k`-integral, if any.
    pub fn dyadic_level(&self) -> Option<u32> {
        (0..63).find(|&k| self.is_integral_at(1 << k))
    }

    /// The single label of an integral node.
    pub fn label_of(&self, v: NodeIdx) -> Option<Label> {
        match self.row(v) {
            [(l, _)] => Some(*l),
            _ => None,
        }
    }
}

/// Cost oracle `c((u,lu),(v,lv)) ≥ 0`, symmetric in its two endpoints.
pub trait EdgeCost<S: Scalar>: Sync {
    fn cost(&self, u: NodeIdx, lu: Label, v: NodeIdx, lv: Label) -> S;

    /// True if the cost vanishes whenever the two labels differ.
    fn diagonal(&self) -> bool {
        false
    }
}

/// Unit cost on monochromatic pairs.
#[derive(Clone, Copy, Debug, Default)]
pub struct MonoCost;

impl<S: Scalar> EdgeCost<S> for MonoCost {
    fn cost(&self, _: NodeIdx, lu: Label, _: NodeIdx, lv: Label) -> S {
        if lu == lv {
            S::one()
        } else {
            S::zero()
        }
    }
    fn diagonal(&self) -> bool {
        true
    }
}

/// Dense per-edge cost tables, for tests and arbitrary cost functions.
#[derive(Clone, Debug)]
pub struct TableCost<S> {
    labels: u32,
    base: Topology,
    /// Per node, aligned with `base` adjacency; only `u < v` rows are used.
    tables: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> TableCost<S> {
    /// `f(u, v, lu, lv)` is queried for `u < v` only.
    pub fn from_fn(base: &Topology, labels: u32, f: impl Fn(NodeIdx, NodeIdx, Label, Label) -> S) -> Self {
        let tables = (0..base.len() as NodeIdx)
            .map(|u| {
                base.neighbors(u)
                    .iter()
                    .map(|&v| {
                        if u < v {
                            (1..=labels).flat_map(|a| (1..=labels).map(move |b| (a, b))).map(|(a, b)| f(u, v, a, b)).collect()
                        } else {
                            Vec::new()
                        }
                    })
                    .collect()
            })
            .collect();
        TableCost { labels, base: base.clone(), tables }
    }
}

impl<S: Scalar> EdgeCost<S> for TableCost<S> {
    fn cost(&self, u: NodeIdx, lu: Label, v: NodeIdx, lv: Label) -> S {
        let (u, lu, v, lv) = if u < v { (u, lu, v, lv) } else { (v, lv, u, lu) };
        let slot = self.base.slot(u, v).expect("edge of the cost table");
        self.tables[u as usize][slot][((lu - 1) * self.labels + (lv - 1)) as usize].clone()
    }
}

fn num<S: Scalar>(x: u64) -> S {
    S::from_int(x as i64)
}

/// `Σ x_u·x_v·c` for one edge, scaled by `D²` (exact numerators only).
fn scaled_edge_cost<S: Scalar, C: EdgeCost<S>>(
    cost: &C,
    u: NodeIdx,
    ru: &[(Label, u64)],
    v: NodeIdx,
    rv: &[(Label, u64)],
) -> S {
    let mut t = S::zero();
    if cost.diagonal() {
        let (mut i, mut j) = (0, 0);
        while i < ru.len() && j < rv.len() {
            match ru[i].0.cmp(&rv[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let c = cost.cost(u, ru[i].0, v, rv[j].0);
                    if !c.is_zero() {
                        t += num::<S>(ru[i].1 * rv[j].1) * c;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    } else {
        for &(a, xa) in ru {
            for &(b, xb) in rv {
                let c = cost.cost(u, a, v, b);
                if !c.is_zero() {
                    t += num::<S>(xa * xb) * c;
                }
            }
        }
    }
    t
}

/// Expected cost of one edge when both endpoints sample independently.
pub fn edge_cost<S: Scalar, C: EdgeCost<S>>(lab: &FractionalLabeling, cost: &C, u: NodeIdx, v: NodeIdx) -> S {
    let d = num::<S>(lab.denom);
    scaled_edge_cost(cost, u, lab.row(u), v, lab.row(v)) / (d.clone() * d)
}

/// Total expected cost `Σ_edges Σ_(lu,lv) x_u,lu·x_v,lv·c((u,lu),(v,lv))`.
pub fn fractional_cost<S: Scalar, C: EdgeCost<S>>(topo: &Topology, lab: &FractionalLabeling, cost: &C) -> S {
    let mut t = S::zero();
    for (u, v) in topo.edges() {
        t += scaled_edge_cost(cost, u, lab.row(u), v, lab.row(v));
    }
    let d = num::<S>(lab.denom);
    t / (d.clone() * d)
}

/// A node's fractional assignment on the wire. Values are sent in units of
/// `1/units`; the encoding is the shorter of a label multiset (`units` labels)
/// and a dense vector of unit counts, behind a one-bit tag.
#[derive(Clone, Debug)]
pub struct LabelMsg {
    entries: Arc<[(Label, u64)]>,
    labels: u32,
    units: u64,
    scale: u64,
}

impl LabelMsg {
    fn new(row: &[(Label, u64)], labels: u32, units: u64, denom: u64) -> Self {
        debug_assert!(denom % units == 0);
        LabelMsg { entries: row.into(), labels, units, scale: denom / units }
    }

    fn sparse_bits(&self) -> u64 {
        self.units * width_for(self.labels as u64) as u64
    }

    fn dense_bits(&self) -> u64 {
        self.labels as u64 * width_for(self.units + 1) as u64
    }
}

impl Message for LabelMsg {
    fn bits(&self) -> u64 {
        1 + self.sparse_bits().min(self.dense_bits())
    }

    fn encode(&self, w: &mut BitWriter) {
        if self.sparse_bits() <= self.dense_bits() {
            w.push_bit(false);
            for &(l, x) in self.entries.iter() {
                for _ in 0..x / self.scale {
                    w.write((l - 1) as u64, width_for(self.labels as u64));
                }
            }
        } else {
            w.push_bit(true);
            let mut it = self.entries.iter().peekable();
            for l in 1..=self.labels {
                let x = match it.peek() {
                    Some(&&(el, x)) if el == l => {
                        it.next();
                        x / self.scale
                    }
                    _ => 0,
                };
                w.write(x, width_for(self.units + 1));
            }
        }
    }
}

fn check_proper(topo: &Topology, colors: &[u64]) -> Result<()> {
    match topo.edges().find(|&(u, v)| colors[u as usize] == colors[v as usize]) {
        Some((u, v)) => Err(Error::ImproperColoring(topo.id(u), topo.id(v))),
        None => Ok(()),
    }
}

fn check_granularity(topo: &Topology, lab: &FractionalLabeling, units: u64) -> Result<()> {
    if lab.denom % units != 0 {
        return Err(Error::InvalidLabeling(format!("denominator {} is not a multiple of {units}", lab.denom)));
    }
    for &v in topo.members() {
        if lab.row(v).is_empty() {
            return Err(Error::InvalidLabeling(format!("node {} has no fractional assignment", topo.id(v))));
        }
    }
    let scale = lab.denom / units;
    if topo.members().iter().flat_map(|&v| lab.row(v)).any(|&(_, x)| x % scale != 0) {
        return Err(Error::InvalidLabeling(format!("labeling is not 1/{units}-integral")));
    }
    Ok(())
}

struct Basic<'a, S, C> {
    lab: &'a FractionalLabeling,
    cost: &'a C,
    schedule: &'a [u64],
    /// Target granularity `Q`; inputs are `1/(2Q)`-integral.
    q: u64,
    class_width: u32,
    _s: PhantomData<S>,
}

#[derive(Default)]
struct BasicState {
    pending: usize,
    view: Vec<(NodeIdx, Arc<[(Label, u64)]>)>,
    out: Option<Vec<(Label, u64)>>,
}

/// Assignment and schedule class first; after deciding, the new assignment
/// or a one-bit "unchanged".
#[derive(Clone, Debug)]
enum BasicMsg {
    Initial(Word, LabelMsg),
    Decided(Option<LabelMsg>),
}

impl Message for BasicMsg {
    fn bits(&self) -> u64 {
        match self {
            BasicMsg::Initial(c, m) => c.bits() + m.bits(),
            BasicMsg::Decided(m) => 1 + m.as_ref().map_or(0, |m| m.bits()),
        }
    }

    fn encode(&self, w: &mut BitWriter) {
        match self {
            BasicMsg::Initial(c, m) => {
                c.encode(w);
                m.encode(w);
            }
            BasicMsg::Decided(m) => {
                w.push_bit(m.is_some());
                if let Some(m) = m {
                    m.encode(w);
                }
            }
        }
    }
}

impl<S: Scalar, C: EdgeCost<S>> Basic<'_, S, C> {
    fn msg(&self, row: &[(Label, u64)], units: u64) -> LabelMsg {
        LabelMsg::new(row, self.lab.labels, units, self.lab.denom)
    }

    /// Rounds the odd entries of `v`: the half with the largest `W` goes
    /// down; among equal `W` the larger label goes down first, so zero-cost
    /// nodes end on their smallest label.
    fn decide(&self, v: NodeIdx, view: &[(NodeIdx, Arc<[(Label, u64)]>)]) -> Vec<(Label, u64)> {
        let half = self.lab.denom / (2 * self.q);
        let own = self.lab.row(v);
        let odd: Vec<Label> = own.iter().filter(|e| (e.1 / half) % 2 == 1).map(|e| e.0).collect();
        assert!(odd.len() % 2 == 0, "odd number of non-integral labels at node {v}: input is not 1/(2Q)-integral");
        if odd.is_empty() {
            return own.to_vec();
        }
        let mut weighted: Vec<(S, Label)> = odd
            .iter()
            .map(|&l| {
                let mut w = S::zero();
                for (u, row) in view {
                    if self.cost.diagonal() {
                        if let Ok(i) = row.binary_search_by_key(&l, |e| e.0) {
                            w += num::<S>(row[i].1) * self.cost.cost(v, l, *u, l);
                        }
                    } else {
                        for &(b, y) in row.iter() {
                            w += num::<S>(y) * self.cost.cost(v, l, *u, b);
                        }
                    }
                }
                (w, l)
            })
            .collect();
        weighted.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
        let down: Vec<Label> = weighted[..odd.len() / 2].iter().map(|e| e.1).collect();
        own.iter()
            .filter_map(|&(l, x)| {
                if (x / half) % 2 == 0 {
                    Some((l, x))
                } else if down.contains(&l) {
                    (x > half).then_some((l, x - half))
                } else {
                    Some((l, x + half))
                }
            })
            .collect()
    }

    fn absorb(view: &mut Vec<(NodeIdx, Arc<[(Label, u64)]>)>, from: NodeIdx, entries: Arc<[(Label, u64)]>) {
        match view.binary_search_by_key(&from, |x| x.0) {
            Ok(i) => view[i].1 = entries,
            Err(i) => view.insert(i, (from, entries)),
        }
    }

    fn finish(&self, ctx: &NodeCtx<'_>, s: &mut BasicState, out: &mut Outbox<BasicMsg>) -> Status {
        let row = self.decide(ctx.index, &s.view);
        let changed = row.as_slice() != self.lab.row(ctx.index);
        out.broadcast(ctx, BasicMsg::Decided(changed.then(|| self.msg(&row, 2 * self.q))));
        s.out = Some(row);
        Status::Halt
    }
}

impl<S: Scalar, C: EdgeCost<S>> Program for Basic<'_, S, C> {
    type State = BasicState;
    type Msg = BasicMsg;

    fn start(&self, ctx: &NodeCtx<'_>, s: &mut BasicState, out: &mut Outbox<BasicMsg>) -> Status {
        if ctx.neighbors.is_empty() {
            return self.finish(ctx, s, out);
        }
        let class = Word::new(self.schedule[ctx.index as usize], self.class_width);
        out.broadcast(ctx, BasicMsg::Initial(class, self.msg(self.lab.row(ctx.index), 2 * self.q)));
        Status::Listen
    }

    fn step(&self, ctx: &NodeCtx<'_>, s: &mut BasicState, inbox: Vec<Envelope<BasicMsg>>, out: &mut Outbox<BasicMsg>) -> Status {
        let own = self.schedule[ctx.index as usize];
        for e in inbox {
            match e.msg {
                BasicMsg::Initial(c, m) => {
                    s.pending += usize::from(c.value < own);
                    Self::absorb(&mut s.view, e.from, m.entries);
                }
                BasicMsg::Decided(m) => {
                    s.pending -= 1;
                    if let Some(m) = m {
                        Self::absorb(&mut s.view, e.from, m.entries);
                    }
                }
            }
        }
        if s.pending == 0 {
            self.finish(ctx, s, out)
        } else {
            Status::Listen
        }
    }
}

fn check_q(q: u64) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidParam("Q must be at least 1".into()));
    }
    Ok(())
}

/// Exact rounding from `1/(2q)`- to `1/q`-integral along the proper schedule
/// coloring: one initial round to learn the neighbors' assignments and
/// classes, then every node rounds as soon as all neighbors of smaller class
/// have. Cost never increases and `x' ≤ 2x` pointwise.
pub fn basic_round<S: Scalar, C: EdgeCost<S>>(
    sim: &mut Simulator,
    topo: &Topology,
    lab: &FractionalLabeling,
    cost: &C,
    schedule: &[u64],
    q: u64,
) -> Result<FractionalLabeling> {
    check_q(q)?;
    check_proper(topo, schedule)?;
    check_granularity(topo, lab, 2 * q)?;
    if lab.is_integral_at(q) {
        return Ok(lab.clone());
    }
    let palette = topo.members().iter().map(|&v| schedule[v as usize] + 1).max().unwrap_or(1);
    let prog: Basic<'_, S, C> = Basic { lab, cost, schedule, q, class_width: width_for(palette), _s: PhantomData };
    let states = sim.span("basic-round", |sim| sim.run(topo, &prog, |_| BasicState::default()))?;
    let mut values = lab.values.clone();
    for (v, st) in states.into_iter().enumerate() {
        if let Some(row) = st.and_then(|s| s.out) {
            values[v] = row;
        }
    }
    Ok(FractionalLabeling { labels: lab.labels, denom: lab.denom, values })
}

/// One round in which every node learns its neighbors' assignments and
/// evaluates the current cost of each incident edge.
pub fn edge_cost_weights<S: Scalar, C: EdgeCost<S>>(
    sim: &mut Simulator,
    topo: &Topology,
    lab: &FractionalLabeling,
    cost: &C,
    units: u64,
) -> Result<EdgeWeights<S>> {
    let msgs: Vec<LabelMsg> = lab.values.iter().map(|r| LabelMsg::new(r, lab.labels, units, lab.denom)).collect();
    let d = num::<S>(lab.denom);
    let dd = d.clone() * d;
    let rows = exchange_map(sim, topo, &msgs, |v, inbox| {
        inbox.iter().map(|(u, m)| scaled_edge_cost(cost, v, lab.row(v), *u, &m.entries) / dd.clone()).collect::<Vec<S>>()
    })?;
    Ok(EdgeWeights::from_rows(topo, rows.into_iter().map(Option::unwrap_or_default).collect()))
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxStats<S> {
    /// Palette of the defective coloring scheduling the basic rounding.
    pub palette: u64,
    /// Total edge cost before the step.
    pub weight: S,
    /// Cost on the edges left monochromatic by the defective coloring.
    pub dropped: S,
}

/// Rounding from `1/(2q)`- to `1/q`-integral losing at most a `(1+eps)`
/// factor. Edges weighted by their current cost get an `(eps/3)`-relative
/// average defective coloring; its monochromatic edges are ignored and the
/// rest is rounded exactly along it.
pub fn approx_round<S: Scalar, C: EdgeCost<S>>(
    sim: &mut Simulator,
    topo: &Topology,
    lab: &FractionalLabeling,
    cost: &C,
    schedule: &[u64],
    gamma: u64,
    q: u64,
    eps: &Rational,
) -> Result<(FractionalLabeling, ApproxStats<S>)> {
    check_q(q)?;
    check_proper(topo, schedule)?;
    check_granularity(topo, lab, 2 * q)?;
    if *eps <= Rational::zero() {
        return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
    }
    sim.span("approx-round", |sim| {
        let w = edge_cost_weights(sim, topo, lab, cost, 2 * q)?;
        let def = recursive_avg_defective(sim, topo, &w, schedule, gamma, &(eps.clone() / Rational::integer(3)))?;
        // neighbors learn each other's defective color to drop monochromatic edges
        let msgs: Vec<Option<Word>> =
            member_words(topo, &def.colors, width_for(def.palette)).into_iter().map(Some).collect();
        announce(sim, topo, &msgs)?;
        let g1 = topo.filter_edges(|u, v| def.colors[u as usize] != def.colors[v as usize]);
        let out = basic_round(sim, &g1, lab, cost, &def.colors, q)?;
        let stats = ApproxStats { palette: def.palette, weight: def.report.total_weight, dropped: def.report.total_mono };
        Ok((out, stats))
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FullRoundReport<S> {
    /// Number of halving steps, `log2 Q`.
    pub k: u32,
    /// Palette of the coloring that schedules the halving steps.
    pub palette: u64,
    /// Cost of the edges dropped by the initial per-node defective pass,
    /// measured on the input labeling.
    pub dropped_weight: S,
    pub approx: Vec<ApproxStats<S>>,
    /// Cost after every halving step (only when auditing).
    pub stage_costs: Vec<S>,
    pub rounds: u64,
}

/// Rounds a `1/2^k`-integral labeling to an integral one with cost at most
/// `(1+eps)` times the input cost, `eps ≤ 1`.
///
/// A per-node defective pass with budget `eps/(2Q²)` on the edge costs shrinks
/// the schedule palette; its monochromatic edges can grow by at most `Q²` and
/// are ignored. The rest is rounded by `k` approximate steps at `eps/(4k)`.
/// With `audit` the cost after every step is recorded.
pub fn full_round<S: Scalar, C: EdgeCost<S>>(
    sim: &mut Simulator,
    topo: &Topology,
    lab: &FractionalLabeling,
    cost: &C,
    schedule: &[u64],
    gamma: u64,
    eps: &Rational,
    audit: bool,
) -> Result<(FractionalLabeling, FullRoundReport<S>)> {
    if *eps <= Rational::zero() || *eps > Rational::one() {
        return Err(Error::InvalidParam(format!("eps must lie in (0, 1], got {eps}")));
    }
    check_proper(topo, schedule)?;
    let k = topo
        .members()
        .iter()
        .flat_map(|&v| lab.row(v))
        .map(|&(_, x)| {
            let g = num_integer::gcd(x, lab.denom);
            (lab.denom / g).trailing_zeros()
        })
        .max()
        .unwrap_or(0);
    check_granularity(topo, lab, 1 << k)?;
    let start = sim.rounds();
    let mut report = FullRoundReport {
        k,
        palette: gamma,
        dropped_weight: S::zero(),
        approx: Vec::new(),
        stage_costs: Vec::new(),
        rounds: 0,
    };
    if k == 0 {
        return Ok((lab.clone(), report));
    }
    let q = 1u64 << k;
    sim.span("full-round", |sim| {
        let w = edge_cost_weights(sim, topo, lab, cost, q)?;
        let delta = eps.clone() / Rational::integer((2 * q * q) as i64);
        let pass = defective_pass(sim, topo, &w, schedule, gamma, &delta)?;
        report.palette = pass.palette;
        for (u, v) in topo.edges() {
            if !pass.kept.has_edge(u, v) {
                report.dropped_weight += w.get(u, v).clone();
            }
        }
        let step_eps = eps.clone() / Rational::integer(4 * k as i64);
        let mut cur = lab.clone();
        for level in (0..k).rev() {
            let (next, stats) = approx_round(sim, &pass.kept, &cur, cost, &pass.colors, pass.palette, 1 << level, &step_eps)?;
            cur = next;
            report.approx.push(stats);
            if audit {
                report.stage_costs.push(fractional_cost(topo, &cur, cost));
            }
        }
        report.rounds = sim.rounds() - start;
        Ok((cur, report))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{generate, EngineConfig, GenSpec, SimGraph};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sim() -> Simulator {
        Simulator::new(EngineConfig::local())
    }

    /// Oracle: expectation over all joint outcomes, by enumeration.
    fn brute_force(g: &SimGraph, lab: &FractionalLabeling, cost: &impl EdgeCost<Rational>) -> Rational {
        let n = g.n();
        let mut total = Rational::zero();
        let mut choice = vec![0usize; n];
        loop {
            let mut p = Rational::one();
            for v in 0..n {
                let (_, x) = lab.row(v as NodeIdx)[choice[v]];
                p = p * Rational::new(x as i64, lab.denom() as i64);
            }
            let mut c = Rational::zero();
            for (u, v) in g.edges() {
                let lu = lab.row(u)[choice[u as usize]].0;
                let lv = lab.row(v)[choice[v as usize]].0;
                c += cost.cost(u, lu, v, lv);
            }
            total += p * c;
            let mut i = 0;
            loop {
                if i == n {
                    return total;
                }
                choice[i] += 1;
                if choice[i] < lab.row(i as NodeIdx).len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn cost_examples() {
        let e = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        let lab = FractionalLabeling::uniform(2, 2, &[vec![1, 2], vec![1, 2]]).unwrap();
        assert_eq!(fractional_cost::<Rational, _>(e.topology(), &lab, &MonoCost), Rational::new(1, 2));
        let zero = TableCost::from_fn(e.topology(), 2, |_, _, _, _| Rational::zero());
        assert!(fractional_cost(e.topology(), &lab, &zero).is_zero());

        let t = generate(&GenSpec::Clique { n: 3 }, 0).unwrap();
        let lab = FractionalLabeling::uniform(3, 3, &[vec![1, 2, 3], vec![1, 2, 3], vec![1, 2, 3]]).unwrap();
        let c: Rational = fractional_cost(t.topology(), &lab, &MonoCost);
        assert_eq!(c, Rational::one());
        assert_eq!(c, brute_force(&t, &lab, &MonoCost));
    }

    #[test]
    fn labeling_validation() {
        assert!(FractionalLabeling::new(3, 4, vec![vec![(1, 2), (2, 1)]]).is_err());
        assert!(FractionalLabeling::new(3, 4, vec![vec![(2, 2), (1, 2)]]).is_err());
        assert!(FractionalLabeling::new(3, 4, vec![vec![(4, 4)]]).is_err());
        assert!(FractionalLabeling::uniform(4, 4, &[vec![1, 2, 3]]).is_err());
        let l = FractionalLabeling::new(3, 8, vec![vec![(1, 2), (3, 6)], vec![(2, 8)]]).unwrap();
        assert_eq!(l.dyadic_level(), Some(2));
        assert_eq!(l.label_of(1), Some(2));
        assert_eq!(l.x(0, 3), Rational::new(3, 4));
    }

    #[test]
    fn basic_round_forced_choice() {
        let e = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        let lab = FractionalLabeling::new(2, 2, vec![vec![(1, 1), (2, 1)], vec![(1, 2)]]).unwrap();
        let out = basic_round::<Rational, _>(&mut sim(), e.topology(), &lab, &MonoCost, &[1, 0], 1).unwrap();
        assert_eq!(out.label_of(0), Some(2));
        assert!(fractional_cost::<Rational, _>(e.topology(), &out, &MonoCost).is_zero());
    }

    #[test]
    fn basic_round_keeps_integral_input() {
        let e = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        let lab = FractionalLabeling::new(3, 4, vec![vec![(1, 2), (2, 2)], vec![(3, 4)]]).unwrap();
        let mut s = sim();
        let out = basic_round::<Rational, _>(&mut s, e.topology(), &lab, &MonoCost, &[0, 1], 2).unwrap();
        assert_eq!(out, lab);
        assert_eq!(s.rounds(), 0);
        assert!(basic_round::<Rational, _>(&mut s, e.topology(), &lab, &MonoCost, &[0, 1], 4).is_err());
        let one = basic_round::<Rational, _>(&mut s, e.topology(), &lab, &MonoCost, &[0, 1], 1).unwrap();
        assert!(one.is_integral_at(1));
        let odd = FractionalLabeling::new(3, 4, vec![vec![(1, 1), (2, 3)], vec![(3, 4)]]).unwrap();
        assert!(matches!(
            basic_round::<Rational, _>(&mut s, e.topology(), &odd, &MonoCost, &[0, 1], 1),
            Err(Error::InvalidLabeling(_))
        ));
        assert!(basic_round::<Rational, _>(&mut s, e.topology(), &lab, &MonoCost, &[0, 0], 2).is_err());
    }

    fn random_labeling(rng: &mut ChaCha8Rng, n: usize, labels: u32, denom: u64) -> FractionalLabeling {
        let values = (0..n)
            .map(|_| {
                let mut counts = vec![0u64; labels as usize];
                for _ in 0..denom {
                    counts[rng.gen_range(0..labels as usize)] += 1;
                }
                counts.iter().enumerate().filter(|e| *e.1 > 0).map(|(l, &x)| (l as Label + 1, x)).collect()
            })
            .collect();
        FractionalLabeling::new(labels, denom, values).unwrap()
    }

    fn random_costs(rng: &mut ChaCha8Rng, g: &SimGraph, labels: u32) -> TableCost<Rational> {
        let seeds: Vec<u64> = (0..(labels * labels) as usize * g.n().max(1)).map(|_| rng.gen()).collect();
        TableCost::from_fn(g.topology(), labels, |u, v, a, b| {
            let i = (u as usize * 31 + v as usize * 17 + (a * labels + b) as usize) % seeds.len();
            Rational::new((seeds[i] % 5) as i64, 1 + (seeds[i] >> 8) as i64 % 4)
        })
    }

    #[test]
    fn basic_round_random_ten_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..20 {
            let g = generate(&GenSpec::Gnp { n: 10, p: 0.4 }, seed).unwrap();
            let lab = random_labeling(&mut rng, 10, 4, 8);
            let cost = random_costs(&mut rng, &g, 4);
            let out = basic_round(&mut sim(), g.topology(), &lab, &cost, &g.id_coloring(), 4).unwrap();
            assert!(out.is_integral_at(4));
            assert!(fractional_cost(g.topology(), &out, &cost) <= fractional_cost(g.topology(), &lab, &cost));
            for v in 0..10 {
                for l in 1..=4 {
                    assert!(out.x(v, l) <= Rational::integer(2) * lab.x(v, l));
                }
            }
        }
    }

    #[test]
    fn approx_round_disjoint_lists_stay_free() {
        let e = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        let lab = FractionalLabeling::uniform(4, 2, &[vec![1, 2], vec![3, 4]]).unwrap();
        let (out, _) =
            approx_round::<Rational, _>(&mut sim(), e.topology(), &lab, &MonoCost, &[0, 1], 2, 1, &Rational::new(1, 2))
                .unwrap();
        assert!(out.is_integral_at(1));
        assert!(fractional_cost::<Rational, _>(e.topology(), &out, &MonoCost).is_zero());
        // a huge eps still respects the (weaker) bound
        let g = generate(&GenSpec::Cycle { n: 7 }, 0).unwrap();
        let lab = FractionalLabeling::uniform(2, 2, &vec![vec![1, 2]; 7]).unwrap();
        let (out, _) =
            approx_round::<Rational, _>(&mut sim(), g.topology(), &lab, &MonoCost, &g.id_coloring(), 7, 1, &Rational::integer(5))
                .unwrap();
        let before: Rational = fractional_cost(g.topology(), &lab, &MonoCost);
        assert!(fractional_cost::<Rational, _>(g.topology(), &out, &MonoCost) <= Rational::integer(6) * before);
    }

    #[test]
    fn approx_round_fifty_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = generate(&GenSpec::Gnp { n: 50, p: 0.12 }, 2).unwrap();
        for _ in 0..5 {
            let lab = random_labeling(&mut rng, 50, 6, 16);
            let cost = random_costs(&mut rng, &g, 6);
            let eps = Rational::new(1, 2);
            let (out, _) = approx_round(&mut sim(), g.topology(), &lab, &cost, &g.id_coloring(), 50, 8, &eps).unwrap();
            assert!(out.is_integral_at(8));
            let (a, b) = (fractional_cost(g.topology(), &out, &cost), fractional_cost(g.topology(), &lab, &cost));
            assert!(a <= Rational::new(3, 2) * b);
        }
    }

    #[test]
    fn full_round_trivial_cases() {
        let g = SimGraph::from_index_edges(1, &[]).unwrap();
        let lab = FractionalLabeling::uniform(4, 4, &[vec![1, 2, 3, 4]]).unwrap();
        let (out, rep) = full_round::<Rational, _>(&mut sim(), g.topology(), &lab, &MonoCost, &[0], 1, &Rational::one(), true)
            .unwrap();
        assert_eq!(rep.k, 2);
        assert!(out.label_of(0).is_some());
        let (again, _) =
            full_round::<Rational, _>(&mut sim(), g.topology(), &lab, &MonoCost, &[0], 1, &Rational::one(), false).unwrap();
        assert_eq!(out, again);
        let (same, rep) =
            full_round::<Rational, _>(&mut sim(), g.topology(), &out, &MonoCost, &[0], 1, &Rational::one(), false).unwrap();
        assert_eq!((same, rep.k), (out, 0));
    }

    #[test]
    fn full_round_regular_graph() {
        let g = generate(&GenSpec::RandomRegular { n: 100, d: 6 }, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lab = random_labeling(&mut rng, 100, 5, 8);
        let mut s = sim();
        let (out, rep) =
            full_round::<Rational, _>(&mut s, g.topology(), &lab, &MonoCost, &g.id_coloring(), 100, &Rational::one(), true)
                .unwrap();
        assert!((0..100).all(|v| out.label_of(v).is_some()));
        let (a, b): (Rational, Rational) =
            (fractional_cost(g.topology(), &out, &MonoCost), fractional_cost(g.topology(), &lab, &MonoCost));
        assert!(a <= Rational::integer(2) * b);
        assert_eq!(rep.stage_costs.len(), 3);
        assert_eq!(rep.stage_costs.last().unwrap(), &a);
    }

    #[test]
    fn message_encoding_matches_declared_bits() {
        let g = generate(&GenSpec::Gnp { n: 30, p: 0.2 }, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = Simulator::new(EngineConfig { verify_encoding: true, ..EngineConfig::local() });
        for (labels, denom) in [(3u32, 64u64), (16, 4)] {
            let lab = random_labeling(&mut rng, 30, labels, denom);
            basic_round::<Rational, _>(&mut s, g.topology(), &lab, &MonoCost, &g.id_coloring(), denom / 2).unwrap();
        }
        let m = LabelMsg::new(&[(1, 32), (3, 32)], 3, 64, 64);
        assert_eq!(m.bits(), 1 + (64 * 2u64).min(3 * 7));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fractional_cost_matches_enumeration(n in 1usize..6, labels in 1u32..4, seed in any::<u64>(), p in 0.2f64..0.9) {
            let g = generate(&GenSpec::Gnp { n, p }, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lab = random_labeling(&mut rng, n, labels, 4);
            let cost = random_costs(&mut rng, &g, labels);
            prop_assert_eq!(fractional_cost(g.topology(), &lab, &cost), brute_force(&g, &lab, &cost));
            prop_assert_eq!(
                fractional_cost::<Rational, _>(g.topology(), &lab, &MonoCost),
                brute_force(&g, &lab, &MonoCost)
            );
        }
    }
}
