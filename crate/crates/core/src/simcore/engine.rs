//! Synchronous round engine.
//!
//! A run starts with every participating node executing [`Program::start`],
//! which may emit the first messages. Each subsequent round delivers all
//! messages sent in the previous round and then steps the nodes that are due:
//! nodes that asked for the next round, nodes whose sleep deadline is this
//! round, and listening nodes that received mail. A node only ever reads its
//! own state and inbox, so the order in which nodes are stepped within a round
//! cannot influence the outcome; inboxes are ordered by sender index.
//! Messages addressed to halted nodes are charged to the sender but dropped,
//! and a run ends as soon as nothing is in flight and no node is due or asleep.
//!
//! Rounds in which nothing is in flight and nobody is due are skipped in one
//! jump but still counted, so phase-scheduled algorithms (one color class per
//! round) cost simulation time proportional to their activity only.

use std::collections::BTreeMap;

use serde::Serialize;

use super::graph::{NodeIdx, Topology};

/// Communication model for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Model {
    Local,
    /// Messages longer than `budget_bits` are violations.
    Congest { budget_bits: u64 },
}

/// Node evaluation strategy within a round. `Parallel` falls back to
/// sequential evaluation when the `parallel` feature is disabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Exec {
    Sequential,
    Parallel,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub model: Model,
    /// Abort a run on the first CONGEST violation instead of recording it.
    pub strict: bool,
    /// Encode every message and check that the declared length covers it.
    pub verify_encoding: bool,
    /// Per-run round limit.
    pub max_rounds: u64,
    pub exec: Exec,
    /// Minimum number of due nodes before a round is evaluated in parallel.
    pub par_threshold: usize,
    /// Keep a per-round log of message activity in the trace.
    pub record_rounds: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            model: Model::Local,
            strict: false,
            verify_encoding: false,
            max_rounds: u64::MAX / 4,
            exec: Exec::Parallel,
            par_threshold: 512,
            record_rounds: false,
        }
    }
}

impl EngineConfig {
    pub fn local() -> Self {
        Self::default()
    }

    pub fn congest(budget_bits: u64) -> Self {
        EngineConfig { model: Model::Congest { budget_bits }, ..Self::default() }
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn sequential(mut self) -> Self {
        self.exec = Exec::Sequential;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("CONGEST violation in round {round}: {bits}-bit message from node {from} to node {to} exceeds the {budget}-bit budget")]
    CongestViolation { round: u64, from: u64, to: u64, bits: u64, budget: u64 },

    #[error("run did not terminate within {rounds} rounds")]
    NonTermination { rounds: u64 },

    #[error("message declares {declared} bits but encodes to {actual} bits")]
    EncodingMismatch { declared: u64, actual: u64 },
}

/// Growable bit string used to check declared message lengths.
#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    pub fn push_bit(&mut self, bit: bool) {
        let pos = self.len as usize;
        if pos / 8 == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[pos / 8] |= 0x80 >> (pos % 8);
        }
        self.len += 1;
    }

    /// Appends an arbitrary byte string bit by bit (big-endian).
    pub fn write_bytes(&mut self, bytes: &[u8], bits: u64) {
        let skip = (bytes.len() as u64 * 8).saturating_sub(bits);
        for i in skip..bytes.len() as u64 * 8 {
            self.push_bit(bytes[(i / 8) as usize] & (0x80 >> (i % 8)) != 0);
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Number of bits needed to write any value in `0..count` (at least one).
pub fn width_for(count: u64) -> u32 {
    if count <= 2 {
        1
    } else {
        64 - (count - 1).leading_zeros()
    }
}

/// Fixed-width words carrying `values[v]` for members of `topo`; other
/// entries are zero words and never sent.
pub fn member_words(topo: &Topology, values: &[u64], width: u32) -> Vec<Word> {
    let mut words = vec![Word::new(0, width); values.len()];
    for &v in topo.members() {
        words[v as usize] = Word::new(values[v as usize], width);
    }
    words
}

/// A message payload with a declared length.
pub trait Message: Clone + Send + Sync {
    /// Declared encoded length, the quantity charged to the trace.
    fn bits(&self) -> u64;
    /// Writes the actual encoding; must not exceed [`Message::bits`].
    fn encode(&self, w: &mut BitWriter);
}

/// A fixed-width unsigned word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Word {
    pub value: u64,
    pub width: u32,
}

impl Word {
    pub fn new(value: u64, width: u32) -> Self {
        debug_assert!(width == 64 || value < (1u64 << width), "{value} does not fit in {width} bits");
        Word { value, width }
    }
}

impl Message for Word {
    fn bits(&self) -> u64 {
        self.width as u64
    }
    fn encode(&self, w: &mut BitWriter) {
        w.write(self.value, self.width);
    }
}

impl Message for bool {
    fn bits(&self) -> u64 {
        1
    }
    fn encode(&self, w: &mut BitWriter) {
        w.push_bit(*self);
    }
}

impl Message for () {
    fn bits(&self) -> u64 {
        0
    }
    fn encode(&self, _: &mut BitWriter) {}
}

impl<A: Message, B: Message> Message for (A, B) {
    fn bits(&self) -> u64 {
        self.0.bits() + self.1.bits()
    }
    fn encode(&self, w: &mut BitWriter) {
        self.0.encode(w);
        self.1.encode(w);
    }
}

#[derive(Clone, Debug)]
pub struct Envelope<M> {
    pub from: NodeIdx,
    pub msg: M,
}

/// What a node wants after a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Done; later messages to this node are dropped.
    Halt,
    /// Step again in the next round.
    Next,
    /// Sleep, buffering mail, until the given absolute round.
    SleepUntil(u64),
    /// Sleep until a round in which mail arrives.
    Listen,
}

/// Read-only view a node has of itself during a step.
#[derive(Clone, Copy, Debug)]
pub struct NodeCtx<'a> {
    pub index: NodeIdx,
    pub id: u64,
    pub neighbors: &'a [NodeIdx],
    pub round: u64,
}

#[derive(Debug)]
pub struct Outbox<M> {
    msgs: Vec<(NodeIdx, M)>,
}

impl<M: Clone> Outbox<M> {
    fn new() -> Self {
        Outbox { msgs: Vec::new() }
    }

    pub fn send(&mut self, to: NodeIdx, msg: M) {
        self.msgs.push((to, msg));
    }

    pub fn broadcast(&mut self, ctx: &NodeCtx<'_>, msg: M) {
        self.msgs.extend(ctx.neighbors.iter().map(|&u| (u, msg.clone())));
    }
}

/// A node program: a pure step function over local state and inbox.
pub trait Program: Sync {
    type State: Send;
    type Msg: Message;

    fn start(&self, ctx: &NodeCtx<'_>, state: &mut Self::State, out: &mut Outbox<Self::Msg>) -> Status;

    fn step(
        &self,
        ctx: &NodeCtx<'_>,
        state: &mut Self::State,
        inbox: Vec<Envelope<Self::Msg>>,
        out: &mut Outbox<Self::Msg>,
    ) -> Status;
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct SpanStats {
    pub rounds: u64,
    pub runs: u64,
    pub messages: u64,
    pub max_message_bits: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Violation {
    pub round: u64,
    pub from: u64,
    pub to: u64,
    pub bits: u64,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct RoundStat {
    pub round: u64,
    pub messages: u64,
    pub max_bits: u64,
}

/// Accumulated metrics over all engine runs of a simulation.
///
/// Span statistics are inclusive: a run inside span `a/b` counts towards both
/// `a` and `a/b`.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct MetricsTrace {
    pub rounds_elapsed: u64,
    pub runs: u64,
    pub max_message_bits: u64,
    pub total_messages: u64,
    pub total_bits: u64,
    pub violations: u64,
    pub violation_samples: Vec<Violation>,
    pub spans: BTreeMap<String, SpanStats>,
    pub round_log: Vec<RoundStat>,
}

const MAX_VIOLATION_SAMPLES: usize = 16;

/// Owns the engine configuration and the trace; every distributed algorithm
/// in this crate runs its node programs through a simulator.
#[derive(Debug)]
pub struct Simulator {
    pub cfg: EngineConfig,
    pub trace: MetricsTrace,
    stack: Vec<String>,
}

impl Simulator {
    pub fn new(cfg: EngineConfig) -> Self {
        Simulator { cfg, trace: MetricsTrace::default(), stack: Vec::new() }
    }

    pub fn model(&self) -> Model {
        self.cfg.model
    }

    pub fn rounds(&self) -> u64 {
        self.trace.rounds_elapsed
    }

    /// Runs `f` inside a named span.
    pub fn span<R>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> R) -> R {
        let path = match self.stack.last() {
            Some(parent) => format!("{parent}/{name}"),
            None => name.to_string(),
        };
        self.stack.push(path);
        let out = f(self);
        self.stack.pop();
        out
    }

    /// Executes `prog` on the members of `topo` until every node halted, the
    /// system is quiescent, or `max_rounds` is hit. Returns the final state of
    /// every member (`None` for non-members).
    pub fn run<P: Program>(
        &mut self,
        topo: &Topology,
        prog: &P,
        mut init: impl FnMut(NodeIdx) -> P::State,
    ) -> Result<Vec<Option<P::State>>, SimError> {
        let n = topo.len();
        let mut states: Vec<Option<P::State>> = (0..n).map(|_| None).collect();
        for &v in topo.members() {
            states[v as usize] = Some(init(v));
        }
        let mut status = vec![Status::Halt; n];
        let mut inbox: Vec<Vec<Envelope<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
        let mut stats = RunStats::default();

        let due: Vec<NodeIdx> = topo.members().to_vec();
        let results = self.evaluate(topo, prog, &mut states, &mut inbox, &due, 0, true);
        let mut in_flight: Vec<(NodeIdx, Envelope<P::Msg>)> = Vec::new();
        let mut next: Vec<NodeIdx> = Vec::new();
        let mut sleepers: BTreeMap<u64, Vec<NodeIdx>> = BTreeMap::new();
        self.absorb(topo, 0, results, &mut status, &mut in_flight, &mut next, &mut sleepers, &mut stats)?;

        let mut round = 0u64;
        loop {
            if in_flight.is_empty() && next.is_empty() {
                match sleepers.keys().next() {
                    Some(&r) => round = r - 1,
                    None => break,
                }
            }
            round += 1;
            if round > self.cfg.max_rounds {
                self.finish(round - 1, &stats);
                return Err(SimError::NonTermination { rounds: round - 1 });
            }
            let mut due = std::mem::take(&mut next);
            if let Some(woken) = sleepers.remove(&round) {
                due.extend(woken.into_iter().filter(|&v| status[v as usize] == Status::SleepUntil(round)));
            }
            for (to, env) in in_flight.drain(..) {
                let slot = to as usize;
                if status[slot] == Status::Halt {
                    continue;
                }
                if status[slot] == Status::Listen && inbox[slot].is_empty() {
                    due.push(to);
                }
                inbox[slot].push(env);
            }
            due.sort_unstable();
            due.dedup();
            let results = self.evaluate(topo, prog, &mut states, &mut inbox, &due, round, false);
            self.absorb(topo, round, results, &mut status, &mut in_flight, &mut next, &mut sleepers, &mut stats)?;
        }
        self.finish(round, &stats);
        Ok(states)
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate<P: Program>(
        &self,
        topo: &Topology,
        prog: &P,
        states: &mut [Option<P::State>],
        inbox: &mut [Vec<Envelope<P::Msg>>],
        due: &[NodeIdx],
        round: u64,
        starting: bool,
    ) -> Vec<(NodeIdx, Status, Vec<(NodeIdx, P::Msg)>)> {
        let mut work: Vec<(NodeIdx, P::State, Vec<Envelope<P::Msg>>)> = due
            .iter()
            .map(|&v| {
                let s = states[v as usize].take().expect("due node has state");
                (v, s, std::mem::take(&mut inbox[v as usize]))
            })
            .collect();
        let step = |(v, state, mail): &mut (NodeIdx, P::State, Vec<Envelope<P::Msg>>)| {
            let ctx = NodeCtx { index: *v, id: topo.id(*v), neighbors: topo.neighbors(*v), round };
            let mut out = Outbox::new();
            let st = if starting {
                prog.start(&ctx, state, &mut out)
            } else {
                prog.step(&ctx, state, std::mem::take(mail), &mut out)
            };
            (st, out.msgs)
        };
        let outputs: Vec<(Status, Vec<(NodeIdx, P::Msg)>)> = if self.parallel(work.len()) {
            par_map(&mut work, step)
        } else {
            work.iter_mut().map(step).collect()
        };
        let mut results = Vec::with_capacity(work.len());
        for ((v, state, _), (st, msgs)) in work.into_iter().zip(outputs) {
            states[v as usize] = Some(state);
            results.push((v, st, msgs));
        }
        results
    }

    fn parallel(&self, due: usize) -> bool {
        cfg!(feature = "parallel") && self.cfg.exec == Exec::Parallel && due >= self.cfg.par_threshold
    }

    #[allow(clippy::too_many_arguments)]
    fn absorb<M: Message>(
        &mut self,
        topo: &Topology,
        round: u64,
        results: Vec<(NodeIdx, Status, Vec<(NodeIdx, M)>)>,
        status: &mut [Status],
        in_flight: &mut Vec<(NodeIdx, Envelope<M>)>,
        next: &mut Vec<NodeIdx>,
        sleepers: &mut BTreeMap<u64, Vec<NodeIdx>>,
        stats: &mut RunStats,
    ) -> Result<(), SimError> {
        let mut round_msgs = 0u64;
        let mut round_max = 0u64;
        for (v, st, msgs) in results {
            let st = match st {
                Status::SleepUntil(r) if r <= round + 1 => Status::Next,
                other => other,
            };
            status[v as usize] = st;
            match st {
                Status::Next => next.push(v),
                Status::SleepUntil(r) => sleepers.entry(r).or_default().push(v),
                Status::Halt | Status::Listen => {}
            }
            for (to, msg) in msgs {
                debug_assert!(topo.has_edge(v, to), "message along a non-edge");
                let bits = msg.bits();
                if self.cfg.verify_encoding {
                    let mut w = BitWriter::new();
                    msg.encode(&mut w);
                    if w.len() > bits {
                        return Err(SimError::EncodingMismatch { declared: bits, actual: w.len() });
                    }
                }
                // a message sent in this step is delivered in round + 1
                let delivery = round + 1;
                if let Model::Congest { budget_bits } = self.cfg.model {
                    if bits > budget_bits {
                        let (from, to_id) = (topo.id(v), topo.id(to));
                        if self.cfg.strict {
                            return Err(SimError::CongestViolation {
                                round: delivery,
                                from,
                                to: to_id,
                                bits,
                                budget: budget_bits,
                            });
                        }
                        self.trace.violations += 1;
                        if self.trace.violation_samples.len() < MAX_VIOLATION_SAMPLES {
                            self.trace.violation_samples.push(Violation { round: delivery, from, to: to_id, bits });
                        }
                    }
                }
                round_msgs += 1;
                round_max = round_max.max(bits);
                stats.bits += bits;
                in_flight.push((to, Envelope { from: v, msg }));
            }
        }
        stats.messages += round_msgs;
        stats.max_bits = stats.max_bits.max(round_max);
        if self.cfg.record_rounds && round_msgs > 0 {
            self.trace.round_log.push(RoundStat {
                round: self.trace.rounds_elapsed + round + 1,
                messages: round_msgs,
                max_bits: round_max,
            });
        }
        // mail for halted nodes is dropped now so it cannot extend the run
        in_flight.retain(|(to, _)| status[*to as usize] != Status::Halt);
        // deliveries must reach receivers in sender order
        in_flight.sort_by_key(|(_, env)| env.from);
        Ok(())
    }

    fn finish(&mut self, rounds: u64, stats: &RunStats) {
        let t = &mut self.trace;
        t.rounds_elapsed += rounds;
        t.runs += 1;
        t.total_messages += stats.messages;
        t.total_bits += stats.bits;
        t.max_message_bits = t.max_message_bits.max(stats.max_bits);
        for path in &self.stack {
            let s = t.spans.entry(path.clone()).or_default();
            s.rounds += rounds;
            s.runs += 1;
            s.messages += stats.messages;
            s.max_message_bits = s.max_message_bits.max(stats.max_bits);
        }
    }

    /// Charges rounds for a step that involves no messages.
    pub fn charge_idle(&mut self, rounds: u64) {
        self.finish(rounds, &RunStats::default());
    }
}

#[derive(Default)]
struct RunStats {
    messages: u64,
    bits: u64,
    max_bits: u64,
}

#[cfg(feature = "parallel")]
fn par_map<T: Send, R: Send>(items: &mut [T], f: impl Fn(&mut T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter_mut().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Send, R: Send>(items: &mut [T], f: impl Fn(&mut T) -> R + Sync + Send) -> Vec<R> {
    items.iter_mut().map(f).collect()
}

/// One-round exchange: every member sends `values[v]` to all neighbors and
/// learns the values of its neighbors, sorted by neighbor index.
pub fn exchange<M: Message>(
    sim: &mut Simulator,
    topo: &Topology,
    values: &[M],
) -> Result<Vec<Vec<(NodeIdx, M)>>, SimError> {
    let out = exchange_map(sim, topo, values, |_, inbox| inbox)?;
    Ok(out.into_iter().map(Option::unwrap_or_default).collect())
}

/// One-round exchange followed by a local computation: every member sends
/// `values[v]` to its neighbors and then evaluates `f(v, neighbor values)`.
/// Non-members yield `None`.
pub fn exchange_map<M, R, F>(
    sim: &mut Simulator,
    topo: &Topology,
    values: &[M],
    f: F,
) -> Result<Vec<Option<R>>, SimError>
where
    M: Message,
    R: Send,
    F: Fn(NodeIdx, Vec<(NodeIdx, M)>) -> R + Sync,
{
    struct Exchange<'a, M, F> {
        values: &'a [M],
        f: F,
    }
    impl<M, R, F> Program for Exchange<'_, M, F>
    where
        M: Message,
        R: Send,
        F: Fn(NodeIdx, Vec<(NodeIdx, M)>) -> R + Sync,
    {
        type State = Option<R>;
        type Msg = M;
        fn start(&self, ctx: &NodeCtx<'_>, state: &mut Option<R>, out: &mut Outbox<M>) -> Status {
            if ctx.neighbors.is_empty() {
                *state = Some((self.f)(ctx.index, Vec::new()));
                return Status::Halt;
            }
            out.broadcast(ctx, self.values[ctx.index as usize].clone());
            Status::Listen
        }
        fn step(&self, ctx: &NodeCtx<'_>, state: &mut Option<R>, inbox: Vec<Envelope<M>>, _: &mut Outbox<M>) -> Status {
            *state = Some((self.f)(ctx.index, inbox.into_iter().map(|e| (e.from, e.msg)).collect()));
            Status::Halt
        }
    }
    let states = sim.run(topo, &Exchange { values, f }, |_| None)?;
    Ok(states.into_iter().map(Option::flatten).collect())
}

/// One round in which only members with `Some` value broadcast; every member
/// learns the values its neighbors sent. Costs a round only if anyone sends.
pub fn announce<M: Message>(
    sim: &mut Simulator,
    topo: &Topology,
    values: &[Option<M>],
) -> Result<Vec<Vec<(NodeIdx, M)>>, SimError> {
    struct Announce<'a, M> {
        values: &'a [Option<M>],
    }
    impl<M: Message> Program for Announce<'_, M> {
        type State = Vec<(NodeIdx, M)>;
        type Msg = M;
        fn start(&self, ctx: &NodeCtx<'_>, _: &mut Self::State, out: &mut Outbox<M>) -> Status {
            if let Some(m) = &self.values[ctx.index as usize] {
                out.broadcast(ctx, m.clone());
            }
            Status::Listen
        }
        fn step(&self, _: &NodeCtx<'_>, state: &mut Self::State, inbox: Vec<Envelope<M>>, _: &mut Outbox<M>) -> Status {
            state.extend(inbox.into_iter().map(|e| (e.from, e.msg)));
            Status::Halt
        }
    }
    let states = sim.run(topo, &Announce { values }, |_| Vec::new())?;
    Ok(states.into_iter().map(Option::unwrap_or_default).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::graph::SimGraph;

    struct SendIdThenHalt;
    impl Program for SendIdThenHalt {
        type State = Vec<u64>;
        type Msg = Word;
        fn start(&self, ctx: &NodeCtx<'_>, _: &mut Vec<u64>, out: &mut Outbox<Word>) -> Status {
            out.broadcast(ctx, Word::new(ctx.id, 8));
            Status::Listen
        }
        fn step(&self, _: &NodeCtx<'_>, s: &mut Vec<u64>, inbox: Vec<Envelope<Word>>, _: &mut Outbox<Word>) -> Status {
            s.extend(inbox.iter().map(|e| e.msg.value));
            Status::Halt
        }
    }

    struct Flood;
    impl Program for Flood {
        type State = Option<u64>;
        type Msg = ();
        fn start(&self, ctx: &NodeCtx<'_>, s: &mut Option<u64>, out: &mut Outbox<()>) -> Status {
            if ctx.id == 0 {
                *s = Some(0);
                out.broadcast(ctx, ());
                Status::Halt
            } else {
                Status::Listen
            }
        }
        fn step(&self, ctx: &NodeCtx<'_>, s: &mut Option<u64>, _: Vec<Envelope<()>>, out: &mut Outbox<()>) -> Status {
            *s = Some(ctx.round);
            out.broadcast(ctx, ());
            Status::Halt
        }
    }

    #[test]
    fn single_round_echo() {
        let g = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        sim.run(g.topology(), &SendIdThenHalt, |_| Vec::new()).unwrap();
        assert_eq!(sim.trace.rounds_elapsed, 1);
        assert_eq!(sim.trace.max_message_bits, 8);
        assert_eq!(sim.trace.total_messages, 2);
    }

    #[test]
    fn empty_graph_terminates_immediately() {
        let g = SimGraph::from_index_edges(0, &[]).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        sim.run(g.topology(), &Flood, |_| None).unwrap();
        assert_eq!(sim.trace.rounds_elapsed, 0);
        assert_eq!(sim.trace.total_messages, 0);
    }

    #[test]
    fn flood_takes_diameter_rounds() {
        let g = SimGraph::from_index_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        let out = sim.run(g.topology(), &Flood, |_| None).unwrap();
        assert_eq!(sim.trace.rounds_elapsed, 4);
        let reached: Vec<u64> = out.into_iter().map(|s| s.unwrap().unwrap()).collect();
        assert_eq!(reached, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn congest_violations_are_recorded_or_fatal() {
        let g = SimGraph::from_index_edges(2, &[(0, 1)]).unwrap();
        let mut sim = Simulator::new(EngineConfig::congest(4));
        sim.run(g.topology(), &SendIdThenHalt, |_| Vec::new()).unwrap();
        assert_eq!(sim.trace.violations, 2);
        let mut strict = Simulator::new(EngineConfig::congest(4).strict());
        let err = strict.run(g.topology(), &SendIdThenHalt, |_| Vec::new()).unwrap_err();
        assert!(matches!(err, SimError::CongestViolation { bits: 8, budget: 4, .. }));
    }

    #[test]
    fn round_limit_reports_non_termination() {
        struct Forever;
        impl Program for Forever {
            type State = ();
            type Msg = ();
            fn start(&self, _: &NodeCtx<'_>, _: &mut (), _: &mut Outbox<()>) -> Status {
                Status::Next
            }
            fn step(&self, _: &NodeCtx<'_>, _: &mut (), _: Vec<Envelope<()>>, _: &mut Outbox<()>) -> Status {
                Status::Next
            }
        }
        let g = SimGraph::from_index_edges(1, &[]).unwrap();
        let mut sim = Simulator::new(EngineConfig { max_rounds: 10, ..EngineConfig::local() });
        assert_eq!(sim.run(g.topology(), &Forever, |_| ()), Err(SimError::NonTermination { rounds: 10 }));
    }

    #[test]
    fn sleeping_nodes_skip_idle_rounds_but_count_them() {
        struct Sleeper;
        impl Program for Sleeper {
            type State = u64;
            type Msg = ();
            fn start(&self, _: &NodeCtx<'_>, _: &mut u64, _: &mut Outbox<()>) -> Status {
                Status::SleepUntil(1_000_000)
            }
            fn step(&self, ctx: &NodeCtx<'_>, s: &mut u64, _: Vec<Envelope<()>>, _: &mut Outbox<()>) -> Status {
                *s = ctx.round;
                Status::Halt
            }
        }
        let g = SimGraph::from_index_edges(3, &[]).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        let out = sim.run(g.topology(), &Sleeper, |_| 0).unwrap();
        assert_eq!(sim.trace.rounds_elapsed, 1_000_000);
        assert!(out.iter().all(|s| s == &Some(1_000_000)));
    }

    #[test]
    fn exchange_delivers_sorted_neighbor_values() {
        let g = SimGraph::from_index_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let mut sim = Simulator::new(EngineConfig { verify_encoding: true, ..EngineConfig::local() });
        let vals: Vec<Word> = (0..3).map(|v| Word::new(10 + v, 5)).collect();
        let got = exchange(&mut sim, g.topology(), &vals).unwrap();
        assert_eq!(got[0].iter().map(|(u, w)| (*u, w.value)).collect::<Vec<_>>(), vec![(1, 11), (2, 12)]);
        assert_eq!(got[1].len(), 1);
        assert_eq!(sim.trace.rounds_elapsed, 1);
    }

    #[test]
    fn announce_only_charges_senders() {
        let g = SimGraph::from_index_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut sim = Simulator::new(EngineConfig::local());
        let got = announce(&mut sim, g.topology(), &[Some(true), None, None]).unwrap();
        assert_eq!(got[1].len(), 1);
        assert!(got[2].is_empty());
        assert_eq!((sim.trace.rounds_elapsed, sim.trace.total_messages), (1, 1));
        announce::<bool>(&mut sim, g.topology(), &[None, None, None]).unwrap();
        assert_eq!(sim.trace.rounds_elapsed, 1);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let g = crate::simcore::generate(&crate::simcore::GenSpec::RandomRegular { n: 2000, d: 6 }, 1).unwrap();
        let vals: Vec<Word> = (0..2000).map(|v| Word::new(v, 11)).collect();
        let f = |v: NodeIdx, inbox: Vec<(NodeIdx, Word)>| inbox.iter().map(|(_, w)| w.value * v as u64).sum::<u64>();
        let mut a = Simulator::new(EngineConfig { par_threshold: 1, ..EngineConfig::local() });
        let mut b = Simulator::new(EngineConfig::local().sequential());
        let ra = exchange_map(&mut a, g.topology(), &vals, f).unwrap();
        let rb = exchange_map(&mut b, g.topology(), &vals, f).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn bit_writer_and_widths() {
        let mut w = BitWriter::new();
        w.write(0b101, 3);
        w.write_bytes(&[0xff, 0x01], 9);
        assert_eq!(w.len(), 12);
        assert_eq!(width_for(1), 1);
        assert_eq!(width_for(2), 1);
        assert_eq!(width_for(3), 2);
        assert_eq!(width_for(256), 8);
        assert_eq!(width_for(257), 9);
    }
}
