use crate::simcore::engine::SimError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("input coloring is not proper: edge {{{0}, {1}}} is monochromatic")]
    ImproperColoring(u64, u64),

    #[error("invalid fractional labeling: {0}")]
    InvalidLabeling(String),

    #[error("invalid list coloring instance: {0}")]
    InvalidInstance(String),

    #[error("degree bound violated: node {node} has degree {degree} > {bound}")]
    DegreeBound { node: u64, degree: usize, bound: usize },

    #[error("peeling stalled at layer {layer} with {} residual nodes (arboricity bound too small)", residual.len())]
    PeelingStalled { layer: usize, residual: Vec<u64> },

    #[error("iteration cap exceeded: {0}")]
    IterationCap(String),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
