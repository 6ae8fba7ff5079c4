use alloc::string::String;
use core::fmt;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not conform.
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A precondition of the operation was violated by the caller.
    Contract(String),
    /// A computation produced or received a non-finite value.
    Numeric(String),
    /// A contrastive batch had no usable positive/negative structure.
    DegenerateBatch(String),
    /// An evaluation set could not be scored (e.g. no label with both classes).
    DegenerateEvaluation(String),
    /// A configuration value was rejected.
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Shape { op, left, right }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, left, right } => write!(
                f,
                "shape error in {op}: {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::Contract(m) => write!(f, "contract violation: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::DegenerateBatch(m) => write!(f, "degenerate batch: {m}"),
            Error::DegenerateEvaluation(m) => write!(f, "degenerate evaluation: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
