use crate::graph::NodeId;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by graph construction, measurement, and simulation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge endpoint {0} is neither labeled nor declared")]
    DanglingEndpoint(NodeId),
    #[error("node {0} labeled twice with different classes")]
    ContradictoryLabel(NodeId),
    #[error("feature dimension mismatch: expected {expected}, node {node} has {found}")]
    FeatureDim {
        node: NodeId,
        expected: usize,
        found: usize,
    },
    #[error("node {node} has no label at timestep {t}")]
    MissingLabel { node: NodeId, t: usize },
    #[error("snapshot has no features")]
    MissingFeatures,
    #[error("no representation for node {0}")]
    MissingRepresentation(NodeId),
    #[error("timestep {t} out of range for horizon {horizon}")]
    TimestepOutOfRange { t: usize, horizon: usize },
    #[error("operation requires a nonempty snapshot")]
    EmptySnapshot,
    #[error("class {0} has no members")]
    EmptyClass(i32),
    #[error("no epidemic parameters for node {0}")]
    MissingEpiParams(NodeId),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
