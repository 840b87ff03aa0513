use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value at parameter index {index}: {value}")]
    NonFiniteGradient { index: usize, value: f64 },

    #[error("non-finite loss in trajectory {trajectory} at step {step}: {value}")]
    NonFiniteLoss {
        trajectory: usize,
        step: usize,
        value: f64,
    },

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last iterate {last})")]
    Convergence { iterations: usize, last: f64 },

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint parse error: {0}")]
    Checkpoint(String),

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn with_context(self, context: impl Into<String>) -> Error {
        Error::Run {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
