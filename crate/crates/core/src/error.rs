use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("non-finite gradient in parameter block {block}")]
    NonFiniteGradient { block: usize },
    #[error("conv span {span} exceeds input length {len}")]
    ConvSpan { span: usize, len: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("edge {edge} has no probability mass outside `none`")]
    DegenerateEdge { edge: usize },
    #[error("space size overflows 128-bit arithmetic")]
    Overflow,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("all training latencies are equal ({0} ms); cannot fit a min-max scaler")]
    DegenerateScaler(f64),
    #[error("model file: {0}")]
    Model(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("search diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Violations of the bit-level encoding invariants. Each class is its own variant so
/// callers (and the CLI) can report exactly which rule was broken.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("expected {expected} bits, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("invalid character {found:?} at position {position}; expected '0' or '1'")]
    BadCharacter { position: usize, found: char },
    #[error("expected {expected} set bits, found {found}")]
    SetBitCount { expected: usize, found: usize },
    #[error("edge {edge} has {found} operations selected; at most one is allowed")]
    MultipleOpsOnEdge { edge: usize, found: usize },
    #[error("node {node} has {found} incoming edges selected; expected 2")]
    EdgesPerNode { node: usize, found: usize },
    #[error("edge {edge} selects the `none` operation")]
    NoneSelected { edge: usize },
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("adapter timed out after {0:.1} s")]
    Timeout(f64),
    #[error("adapter exited with status {code:?}: {stderr}")]
    NonZeroExit { code: Option<i32>, stderr: String },
    #[error("malformed adapter response: {0}")]
    Malformed(String),
    #[error("failed to run adapter: {0}")]
    Spawn(std::io::Error),
    #[error("measured latency {0} ms is not positive")]
    NonPositive(f64),
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
}
