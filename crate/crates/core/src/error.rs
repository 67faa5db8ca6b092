use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("exact computation limited to {max} nodes, graph has {n}")]
    TooLarge { n: usize, max: usize },

    #[error("seed set overlaps the blue set at node {0}")]
    BlueOverlap(NodeId),

    #[error("node {node} cannot pick {pick}: not an out-neighbor")]
    NotOutNeighbor { node: NodeId, pick: NodeId },

    #[error("node {node} has out-neighbors but no pick recorded for round {round}")]
    MissingPick { node: NodeId, round: usize },

    #[error("horizon {requested} exceeds recorded horizon {available}")]
    HorizonExceeded { requested: usize, available: usize },

    #[error("chain edge ({from}, {to}) is missing")]
    ChainEdgeMissing { from: NodeId, to: NodeId },

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
