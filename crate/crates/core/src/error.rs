use thiserror::Error;

/// Everything that can go wrong across the toolkit.
///
/// Each variant belongs to one pipeline stage; [`Error::module`] names it so the
/// CLI can render provenance next to the message.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("outgoing probabilities of node `{node}` sum to {sum}, expected 1")]
    RowSumViolation { node: String, sum: f64 },
    #[error("duplicate edge ({from}, {to}, label {label})")]
    DuplicateEdge { from: String, to: String, label: u32 },
    #[error("edge ({from}, {to}) has label {label} outside 1..={alphabet}")]
    BadLabel {
        from: String,
        to: String,
        label: u32,
        alphabet: u32,
    },
    #[error("edge ({from}, {to}, label {label}) has probability {prob} outside (0, 1]")]
    NonPositiveProbability {
        from: String,
        to: String,
        label: u32,
        prob: f64,
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("{what} would produce {count} items, above the limit of {limit}")]
    ExplosionLimit {
        what: &'static str,
        count: f64,
        limit: f64,
    },
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative entries: {0}")]
    NegativeEntries(String),
    #[error("template parameter for node {0} is not positive definite")]
    NotPositiveDefinite(usize),
    #[error("certificate does not fit the rebuilt lift: {0}")]
    LiftMismatch(String),
    #[error("schema error at {pointer}: {message}")]
    SchemaError { pointer: String, message: String },
    #[error("matrix labels do not cover the alphabet: {0}")]
    MatrixLabelMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Pipeline stage the error originates from.
    pub fn module(&self) -> &'static str {
        match self {
            Error::RowSumViolation { .. }
            | Error::DuplicateEdge { .. }
            | Error::BadLabel { .. }
            | Error::NonPositiveProbability { .. }
            | Error::UnknownNode(_)
            | Error::NotStronglyConnected => "graph_core",
            Error::ExplosionLimit { .. } => "lift_engine",
            Error::NoConvergence(_) | Error::DimensionMismatch(_) => "jump_system",
            Error::NegativeEntries(_) | Error::NotPositiveDefinite(_) | Error::LiftMismatch(_) => {
                "certifier"
            }
            Error::SchemaError { .. }
            | Error::MatrixLabelMismatch(_)
            | Error::InvalidArgument(_)
            | Error::Io(_) => "cli_reporting",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
