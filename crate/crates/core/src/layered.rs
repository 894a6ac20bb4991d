//! Layered graphs: up-degrees, the forward path weighting, list coloring
//! against up-degrees, and arboricity coloring through peeling.
//!
//! Inter-layer edges point from the lower to the higher layer. A node is free
//! once all of its strictly-higher-layer neighbors are colored; same-layer
//! edges never affect freeness.

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::coloring::{helper_coloring, weighted_partial, Check, ListInstance, Pipeline};
use crate::error::{Error, Result};
use crate::scalar::Rational;
use crate::simcore::engine::{
    announce, exchange, member_words, width_for, BitWriter, Envelope, Message, NodeCtx, Outbox, Program, Simulator,
    Status, Word,
};
use crate::simcore::graph::{NodeIdx, Topology};
use crate::simcore::verify::ColorAssignment;

/// Layer index (`1..=h`) of every node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Layering {
    layers: Vec<u32>,
}

impl Layering {
    /// Layers of non-members are ignored but must still be at least 1.
    pub fn new(topo: &Topology, layers: Vec<u32>) -> Result<Self> {
        if layers.len() != topo.len() {
            return Err(Error::InvalidInstance(format!("{} layers for {} nodes", layers.len(), topo.len())));
        }
        if let Some(v) = topo.members().iter().find(|&&v| layers[v as usize] == 0) {
            return Err(Error::InvalidInstance(format!("node {}: layers start at 1", topo.id(*v))));
        }
        Ok(Layering { layers })
    }

    /// Everyone in layer 1.
    pub fn flat(n: usize) -> Self {
        Layering { layers: vec![1; n] }
    }

    pub fn layers(&self) -> &[u32] {
        &self.layers
    }

    pub fn layer(&self, v: NodeIdx) -> u32 {
        self.layers[v as usize]
    }

    /// Largest layer used by a member.
    pub fn h(&self, topo: &Topology) -> u32 {
        topo.members().iter().map(|&v| self.layer(v)).max().unwrap_or(0)
    }

    /// Neighbors in the node's own or a higher layer.
    pub fn up_degree(&self, topo: &Topology, v: NodeIdx) -> usize {
        let l = self.layer(v);
        topo.neighbors(v).iter().filter(|&&u| self.layer(u) >= l).count()
    }

    pub fn max_up_degree(&self, topo: &Topology) -> usize {
        topo.members().iter().map(|&v| self.up_degree(topo, v)).max().unwrap_or(0)
    }

    /// Members with no member neighbor in a strictly higher layer.
    pub fn free(&self, topo: &Topology) -> Vec<bool> {
        let mut free = vec![false; topo.len()];
        for &v in topo.members() {
            let l = self.layer(v);
            free[v as usize] = topo.neighbors(v).iter().all(|&u| self.layer(u) <= l);
        }
        free
    }
}

/// Weight sent up the layers during the forward pass.
#[derive(Clone, Debug)]
enum WeightMsg {
    Exact(BigInt),
    /// `log₂` of a power-of-two weight.
    Exponent(Word),
}

impl Message for WeightMsg {
    fn bits(&self) -> u64 {
        match self {
            WeightMsg::Exact(w) => w.bits().max(1),
            WeightMsg::Exponent(e) => e.width as u64,
        }
    }

    fn encode(&self, w: &mut BitWriter) {
        match self {
            WeightMsg::Exact(x) => w.write_bytes(&x.to_bytes_be().1, self.bits()),
            WeightMsg::Exponent(e) => e.encode(w),
        }
    }
}

struct ForwardPass<'a> {
    layers: &'a [u32],
    /// Exponent width, or `None` to send exact weights.
    exponent_width: Option<u32>,
}

struct PassState {
    pending: usize,
    sum: BigInt,
    weight: BigInt,
}

impl ForwardPass<'_> {
    fn finish(&self, ctx: &NodeCtx<'_>, s: &mut PassState, out: &mut Outbox<WeightMsg>) -> Status {
        let mut w = BigInt::one() + &s.sum * 2u32;
        let msg = match self.exponent_width {
            None => WeightMsg::Exact(w.clone()),
            Some(width) => {
                let e = (&w - 1u32).bits();
                w = BigInt::one() << e;
                WeightMsg::Exponent(Word::new(e, width))
            }
        };
        let l = self.layers[ctx.index as usize];
        for &u in ctx.neighbors {
            if self.layers[u as usize] > l {
                out.send(u, msg.clone());
            }
        }
        s.weight = w;
        Status::Halt
    }
}

impl Program for ForwardPass<'_> {
    type State = PassState;
    type Msg = WeightMsg;

    fn start(&self, ctx: &NodeCtx<'_>, s: &mut PassState, out: &mut Outbox<WeightMsg>) -> Status {
        let l = self.layers[ctx.index as usize];
        s.pending = ctx.neighbors.iter().filter(|&&u| self.layers[u as usize] < l).count();
        if s.pending == 0 {
            self.finish(ctx, s, out)
        } else {
            Status::Listen
        }
    }

    fn step(
        &self,
        ctx: &NodeCtx<'_>,
        s: &mut PassState,
        inbox: Vec<Envelope<WeightMsg>>,
        out: &mut Outbox<WeightMsg>,
    ) -> Status {
        for e in inbox {
            s.pending -= 1;
            match e.msg {
                WeightMsg::Exact(w) => s.sum += w,
                WeightMsg::Exponent(x) => s.sum += BigInt::one() << x.value,
            }
        }
        if s.pending == 0 {
            self.finish(ctx, s, out)
        } else {
            Status::Listen
        }
    }
}

/// Node weights of the forward pass.
#[derive(Clone, Debug, Serialize)]
pub struct PathWeights {
    pub weights: Vec<Rational>,
    /// Weights were rounded up to powers of two.
    pub rounded: bool,
    pub rounds: u64,
}

impl PathWeights {
    pub fn weight(&self, v: NodeIdx) -> &Rational {
        &self.weights[v as usize]
    }

    pub fn total(&self, topo: &Topology) -> Rational {
        topo.members().iter().fold(Rational::zero(), |a, &v| a + self.weights[v as usize].clone())
    }

    /// Weight of the free members of `topo` divided by the weight of all of
    /// them (1 when `topo` is empty).
    pub fn sink_fraction(&self, topo: &Topology, layering: &Layering) -> Rational {
        let total = self.total(topo);
        if total == Rational::zero() {
            return Rational::one();
        }
        let free = layering.free(topo);
        let fw = topo
            .members()
            .iter()
            .filter(|&&v| free[v as usize])
            .fold(Rational::zero(), |a, &v| a + self.weights[v as usize].clone());
        fw / total
    }
}

/// Sequential evaluation of `w(v) = 1 + 2·Σ w(u)` over lower-layer neighbors,
/// optionally rounding every weight up to a power of two.
pub fn reference_weights(topo: &Topology, layering: &Layering, rounded: bool) -> Vec<BigInt> {
    let mut order: Vec<NodeIdx> = topo.members().to_vec();
    order.sort_by_key(|&v| layering.layer(v));
    let mut w = vec![BigInt::from(0); topo.len()];
    for v in order {
        let l = layering.layer(v);
        let sum: BigInt = topo.neighbors(v).iter().filter(|&&u| layering.layer(u) < l).map(|&u| w[u as usize].clone()).sum();
        let mut x = BigInt::one() + sum * 2u32;
        if rounded {
            x = BigInt::one() << (&x - 1u32).bits();
        }
        w[v as usize] = x;
    }
    w
}

/// Forward pass in at most `h` rounds after one round of layer exchange.
/// Every node waits for the weights of all lower-layer neighbors. In CONGEST
/// the weight is rounded up to a power of two and only the exponent is sent.
pub fn compute_layer_weights(
    sim: &mut Simulator,
    topo: &Topology,
    layering: &Layering,
    pipeline: Pipeline,
) -> Result<PathWeights> {
    let start = sim.rounds();
    sim.span("layer-weights", |sim| {
        let h = layering.h(topo) as u64;
        let layer_values: Vec<u64> = layering.layers().iter().map(|&l| l as u64).collect();
        exchange(sim, topo, &member_words(topo, &layer_values, width_for(h + 1)))?;
        let exponent_width = match pipeline {
            Pipeline::Local => None,
            Pipeline::Congest => {
                // w' ≤ (4Δ̂+2)^h bounds the largest exponent.
                let up = layering.max_up_degree(topo).max(topo.max_degree()) as u64;
                let per_layer = width_for(4 * up + 3) as u64;
                Some(width_for(h * per_layer + 1))
            }
        };
        let prog = ForwardPass { layers: layering.layers(), exponent_width };
        let states =
            sim.run(topo, &prog, |_| PassState { pending: 0, sum: BigInt::from(0), weight: BigInt::from(0) })?;
        let weights = states.into_iter().map(|s| s.map_or(Rational::zero(), |s| Rational::from(s.weight))).collect();
        Ok(PathWeights { weights, rounded: exponent_width.is_some(), rounds: sim.rounds() - start })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LayeredIteration {
    pub active: usize,
    pub active_weight: Rational,
    pub free: usize,
    pub free_weight: Rational,
    pub committed: usize,
    pub committed_weight: Rational,
    pub rounds: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayeredRun {
    pub assignment: ColorAssignment,
    pub pipeline: Pipeline,
    pub h: u32,
    pub max_up_degree: usize,
    pub weights: PathWeights,
    pub iterations: Vec<LayeredIteration>,
    pub checks: Vec<Check>,
    pub rounds: u64,
}

impl LayeredRun {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Smallest `k` with `(4/3)^k ≥ x`.
fn log_four_thirds(x: &Rational) -> u32 {
    let base = Rational::new(4, 3);
    let mut acc = Rational::one();
    let mut k = 0;
    while &acc < x {
        acc = acc * base.clone();
        k += 1;
    }
    k
}

fn sum_weight(nodes: impl Iterator<Item = NodeIdx>, w: &[Rational]) -> Rational {
    nodes.fold(Rational::zero(), |a, v| a + w[v as usize].clone())
}

/// List coloring with `|L_v| ≥ û(v)+1`. Each iteration hands the free nodes,
/// with their residual lists and path weights, to the weighted partial
/// coloring, then announces the new colors so that neighbors drop them.
pub fn layered_list_coloring(
    sim: &mut Simulator,
    topo: &Topology,
    layering: &Layering,
    mut lists: Vec<Vec<u32>>,
    palette: u32,
    pipeline: Pipeline,
) -> Result<LayeredRun> {
    if lists.len() != topo.len() || layering.layers().len() != topo.len() {
        return Err(Error::InvalidInstance(format!("lists or layers do not match {} nodes", topo.len())));
    }
    for l in lists.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    for &v in topo.members() {
        let l = &lists[v as usize];
        if let Some(c) = l.iter().find(|&&c| c == 0 || c > palette) {
            return Err(Error::InvalidInstance(format!("node {}: color {c} outside 1..={palette}", topo.id(v))));
        }
        let up = layering.up_degree(topo, v);
        if l.len() < up + 1 {
            return Err(Error::InvalidInstance(format!(
                "node {}: list of {} colors for up-degree {up}",
                topo.id(v),
                l.len()
            )));
        }
    }
    let start = sim.rounds();
    sim.span("layered-list", |sim| {
        let h = layering.h(topo);
        let max_up = layering.max_up_degree(topo);
        let weights = compute_layer_weights(sim, topo, layering, pipeline)?;
        let helper = helper_coloring(sim, topo)?;
        let mut checks = Vec::new();

        let exact = reference_weights(topo, layering, false);
        let exact_total: BigInt = topo.members().iter().map(|&v| exact[v as usize].clone()).sum();
        let total = weights.total(topo);
        let expected = if weights.rounded { reference_weights(topo, layering, true) } else { exact.clone() };
        let matches =
            topo.members().iter().all(|&v| weights.weights[v as usize] == Rational::from(expected[v as usize].clone()));
        checks.push(Check::new("weight-recurrence", matches, format!("total weight {total}")));
        let n = topo.members().len() as i64;
        let bound = Rational::integer(n) * Rational::from(BigInt::from(2 * max_up + 1).pow(h));
        checks.push(Check::new(
            "weight-bound",
            Rational::from(exact_total.clone()) <= bound,
            format!("exact total {exact_total} vs n·(2Δ̂+1)^h = {bound}"),
        ));
        if weights.rounded {
            let inflation = Rational::from(exact_total.clone() << h as usize);
            checks.push(Check::new(
                "rounding-inflation",
                total <= inflation,
                format!("rounded total {total} vs 2^h·{exact_total}"),
            ));
        }

        let w = &weights.weights;
        let mut assignment = ColorAssignment::new(topo.len());
        let mut active = vec![false; topo.len()];
        for &v in topo.members() {
            active[v as usize] = true;
        }
        let iteration_bound = log_four_thirds(&total) + 1;
        let mut iterations = Vec::new();
        loop {
            let cur = topo.induced(|v| active[v as usize]);
            if cur.members().is_empty() {
                break;
            }
            let i = iterations.len();
            if i as u32 >= 4 * iteration_bound + 16 {
                return Err(Error::IterationCap(format!(
                    "{} nodes left after {i} layered iterations",
                    cur.members().len()
                )));
            }
            let it_start = sim.rounds();
            let active_weight = sum_weight(cur.members().iter().copied(), w);
            let free = layering.free(&cur);
            let free_topo = cur.induced(|v| free[v as usize]);
            let free_weight = sum_weight(free_topo.members().iter().copied(), w);
            checks.push(Check::new(
                "sink-fraction",
                Rational::integer(2) * free_weight.clone() >= active_weight,
                format!("iteration {i}: free weight {free_weight} of {active_weight}"),
            ));
            let inst = ListInstance::new(free_topo, lists.clone(), palette)
                .map_err(|e| Error::Internal(format!("free nodes lost the list condition: {e}")))?;
            let part = weighted_partial(sim, &inst, w, &helper, pipeline)?;
            checks.extend(part.checks.iter().map(|c| Check::new(&c.name, c.ok, format!("iteration {i}: {}", c.detail))));

            let width = width_for(palette as u64 + 1);
            let mut msgs: Vec<Option<Word>> = vec![None; topo.len()];
            let mut committed = 0;
            for (v, c) in part.assignment.colors().iter().enumerate() {
                if let Some(c) = c {
                    msgs[v] = Some(Word::new(*c as u64, width));
                    assignment.set(v as NodeIdx, *c);
                    active[v] = false;
                    committed += 1;
                }
            }
            let heard = announce(sim, &cur, &msgs)?;
            for (v, inbox) in heard.into_iter().enumerate() {
                if active[v] {
                    let list = &mut lists[v];
                    for (_, m) in inbox {
                        if let Ok(k) = list.binary_search(&(m.value as u32)) {
                            list.remove(k);
                        }
                    }
                }
            }
            let rest = topo.induced(|v| active[v as usize]);
            let list_ok = rest.members().iter().all(|&v| lists[v as usize].len() > layering.up_degree(&rest, v));
            checks.push(Check::new("residual-lists", list_ok, format!("iteration {i}")));
            let rest_weight = sum_weight(rest.members().iter().copied(), w);
            checks.push(Check::new(
                "weight-shrink",
                Rational::integer(4) * rest_weight.clone() <= Rational::integer(3) * active_weight.clone(),
                format!("iteration {i}: {rest_weight} left of {active_weight}"),
            ));
            iterations.push(LayeredIteration {
                active: cur.members().len(),
                active_weight,
                free: inst.topology().members().len(),
                free_weight,
                committed,
                committed_weight: part.colored_weight,
                rounds: sim.rounds() - it_start,
            });
        }
        checks.push(Check::new(
            "iterations",
            iterations.len() as u32 <= iteration_bound,
            format!("{} iterations vs ⌈log_(4/3) W⌉+1 = {iteration_bound}", iterations.len()),
        ));
        Ok(LayeredRun {
            assignment,
            pipeline,
            h,
            max_up_degree: max_up,
            weights,
            iterations,
            checks,
            rounds: sim.rounds() - start,
        })
    })
}

/// Output of the peeling decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct HPartition {
    pub layering: Layering,
    /// Peeling threshold `⌊(2+ε)a⌋`.
    pub threshold: usize,
    /// Nodes peeled into each layer.
    pub peeled: Vec<usize>,
    pub checks: Vec<Check>,
    pub rounds: u64,
}

/// `⌊(2+ε)a⌋`.
pub fn peel_threshold(a: u64, eps: &Rational) -> usize {
    let t = (Rational::integer(2) + eps.clone()) * Rational::integer(a as i64);
    usize::try_from(t.floor()).unwrap_or(usize::MAX)
}

/// Repeatedly moves every residual node of residual degree at most
/// `⌊(2+ε)a⌋` into the next layer; peeled nodes notify their neighbors in
/// one round per layer.
pub fn h_partition(sim: &mut Simulator, topo: &Topology, a: u64, eps: &Rational) -> Result<HPartition> {
    if eps <= &Rational::zero() {
        return Err(Error::InvalidParam(format!("ε must be positive, got {eps}")));
    }
    let threshold = peel_threshold(a, eps);
    let start = sim.rounds();
    sim.span("h-partition", |sim| {
        let mut layers = vec![1u32; topo.len()];
        let mut residual = vec![false; topo.len()];
        let mut degree = vec![0usize; topo.len()];
        for &v in topo.members() {
            residual[v as usize] = true;
            degree[v as usize] = topo.degree(v);
        }
        let mut left = topo.members().len();
        let mut peeled = Vec::new();
        let mut checks = Vec::new();
        while left > 0 {
            let layer = peeled.len() + 1;
            let cur = topo.induced(|v| residual[v as usize]);
            let go: Vec<NodeIdx> = cur.members().iter().copied().filter(|&v| degree[v as usize] <= threshold).collect();
            if go.is_empty() {
                return Err(Error::PeelingStalled { layer, residual: cur.members().iter().map(|&v| cur.id(v)).collect() });
            }
            let mut msgs: Vec<Option<bool>> = vec![None; topo.len()];
            for &v in &go {
                msgs[v as usize] = Some(true);
                layers[v as usize] = layer as u32;
            }
            let heard = announce(sim, &cur, &msgs)?;
            for &v in &go {
                residual[v as usize] = false;
            }
            for (v, inbox) in heard.into_iter().enumerate() {
                degree[v] -= inbox.len();
            }
            let progress = Rational::integer(go.len() as i64) * (Rational::integer(2) + eps.clone())
                >= eps.clone() * Rational::integer(left as i64);
            checks.push(Check::new(
                "peel-progress",
                progress,
                format!("layer {layer}: peeled {} of {left}", go.len()),
            ));
            left -= go.len();
            peeled.push(go.len());
        }
        let layering = Layering { layers };
        let up = layering.max_up_degree(topo);
        checks.push(Check::new("up-degree", up <= threshold, format!("max up-degree {up} vs {threshold}")));
        Ok(HPartition { layering, threshold, peeled, checks, rounds: sim.rounds() - start })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ArboricityRun {
    pub partition: HPartition,
    pub coloring: LayeredRun,
    /// Colors allowed, `⌊(2+ε)a⌋+1`.
    pub palette: u32,
    pub checks: Vec<Check>,
    pub rounds: u64,
}

impl ArboricityRun {
    pub fn assignment(&self) -> &ColorAssignment {
        &self.coloring.assignment
    }

    pub fn all_checks(&self) -> impl Iterator<Item = &Check> {
        self.partition.checks.iter().chain(&self.coloring.checks).chain(&self.checks)
    }
}

/// Colors a graph of arboricity at most `a` with `⌊(2+ε)a⌋+1` colors: peel an
/// H-partition, then run the layered list coloring with the full palette.
pub fn arboricity_coloring(
    sim: &mut Simulator,
    topo: &Topology,
    a: u64,
    eps: &Rational,
    pipeline: Pipeline,
) -> Result<ArboricityRun> {
    let start = sim.rounds();
    sim.span("arboricity", |sim| {
        let partition = h_partition(sim, topo, a, eps)?;
        let palette = u32::try_from(partition.threshold + 1)
            .map_err(|_| Error::InvalidParam(format!("palette {} too large", partition.threshold + 1)))?;
        let lists = vec![(1..=palette).collect(); topo.len()];
        let coloring = layered_list_coloring(sim, topo, &partition.layering, lists, palette, pipeline)?;
        let used = coloring.assignment.max_color();
        let checks = vec![Check::new("palette", used <= palette, format!("max color {used} vs ⌊(2+ε)a⌋+1 = {palette}"))];
        Ok(ArboricityRun { partition, coloring, palette, checks, rounds: sim.rounds() - start })
    })
}
