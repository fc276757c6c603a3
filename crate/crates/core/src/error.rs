use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape error in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("data error at step {step}: {msg}")]
    Data { step: usize, msg: String },
    #[error("arity error: scheme trained with {expected} instruction(s), got {got}")]
    Arity { expected: usize, got: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    /// Short machine-readable tag, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Domain(_) => "domain",
            Error::Contract(_) => "contract",
            Error::Lookup(_) => "lookup",
            Error::Config(_) => "config",
            Error::Sampling(_) => "sampling",
            Error::Data { .. } => "data",
            Error::Arity { .. } => "arity",
            Error::Format(_) => "format",
            Error::Divergence { .. } => "divergence",
        }
    }
}
