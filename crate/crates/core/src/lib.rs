//! Deterministic distributed graph coloring, simulated round by round.
//!
//! Every algorithm runs as node programs on a synchronous [`simcore::Simulator`]
//! in either the LOCAL or the CONGEST model. Nodes only learn about their
//! neighborhood through messages, and the simulator charges every round and
//! every message bit to a [`simcore::MetricsTrace`].
//!
//! Layout:
//! - [`simcore`]: graphs, the round engine, I/O, generators, verifiers.
//! - [`setfamily`]: polynomial set families, Linial color reduction and the
//!   per-node weighted defective pass.
//! - [`defective`]: average defective colorings.
//! - [`rounding`]: fractional labelings and their deterministic rounding.
//! - [`coloring`]: list coloring in LOCAL and CONGEST, weighted partial
//!   coloring, weighted independent sets, the bipartition demo.
//! - [`layered`]: layered graphs, H-partitions, arboricity coloring.

pub mod coloring;
pub mod defective;
pub mod error;
pub mod layered;
pub mod rounding;
pub mod scalar;
pub mod setfamily;
pub mod simcore;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
pub use simcore::{ColorAssignment, EngineConfig, MetricsTrace, Model, SimGraph, Simulator};
