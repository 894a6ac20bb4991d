//! Simulation substrate: graphs, the synchronous round engine, graph I/O,
//! generators and coloring verifiers.

pub mod engine;
pub mod generate;
pub mod graph;
pub mod io;
pub mod verify;

pub use engine::{
    announce, exchange, exchange_map, member_words, width_for, BitWriter, EngineConfig, Envelope, Exec, Message, MetricsTrace, Model, NodeCtx, Outbox,
    Program, SimError, Simulator, SpanStats, Status, Word,
};
pub use generate::{generate, generate_with_layering, GenSpec};
pub use graph::{EdgeWeights, NodeIdx, SimGraph, Topology};
pub use io::{
    load_graph, load_layering, load_node_weights, parse_assignment, parse_edge_list, parse_layering, parse_lists,
    parse_node_weights, write_assignment, write_edge_list, write_node_map, EdgeListFormat,
};
pub use verify::{verify_coloring, ColorAssignment, VerifyReport};
