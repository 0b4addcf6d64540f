use thiserror::Error;

/// Errors produced by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate contrast: p0 = p1 = {0} makes every log-likelihood ratio zero")]
    DegenerateContrast(f64),

    #[error("invalid subgraph: {0}")]
    InvalidSubgraph(String),

    #[error("invalid window: start {start} is after end {end}")]
    InvalidWindow { start: u64, end: u64 },

    #[error("window [{start}, {end}] is outside the retained history [{first}, {last}]")]
    WindowOutOfRange {
        start: u64,
        end: u64,
        first: u64,
        last: u64,
    },

    #[error("C({num_nodes},{size}) = {count} candidate subgraphs exceeds the enumeration cap {cap}")]
    EnumerationCap {
        num_nodes: usize,
        size: usize,
        count: u128,
        cap: u64,
    },

    #[error("empty stream")]
    EmptyStream,

    #[error("calibration bracket failure: {0}")]
    BracketFailure(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration value rejected during validation; `origin` names the
    /// config line or flag that supplied it.
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
