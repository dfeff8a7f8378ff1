use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {what} = {value}, expected {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },

    #[error("empty sample")]
    EmptySample,

    /// Every one of the top `k` observations is censored, so p̂ₖ = 0.
    #[error("all top {k} observations are censored")]
    AllCensoredTail { k: usize },

    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("no admissible k in the requested range")]
    NoAdmissibleK,

    #[error("invalid data at line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures that come from the numbers rather than the input
    /// format (used by the CLI to pick an exit code).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::AllCensoredTail { .. } | Error::Degenerate(_) | Error::NoAdmissibleK
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
