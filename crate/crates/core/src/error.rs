use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: step {step}, n_steps {n_steps}")]
    InvalidGrid { step: f64, n_steps: usize },

    #[error("grid horizon {horizon} does not match the requested length {expected}")]
    HorizonMismatch { horizon: f64, expected: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("non-finite coefficient at step {step} (x = {x})")]
    NonFinite { step: usize, x: f64 },

    #[error("sample too small: {got} < {min}")]
    SampleTooSmall { got: usize, min: usize },

    #[error("unknown law `{0}`")]
    UnknownLaw(String),

    #[error("integral diverges near x = {at}")]
    Divergent { at: f64 },

    #[error("excursion is incomplete")]
    IncompleteExcursion,

    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("horizon exhausted after {steps} steps")]
    HorizonExhausted { steps: u64 },

    #[error("solution does not decay within the domain (x_max = {x_max}); enlarge it")]
    NonDecaying { x_max: f64 },

    #[error("invalid target measure: {0}")]
    InvalidTarget(String),

    #[error("{x} lies above the top of the support ({top})")]
    AboveSupport { x: f64, top: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter { name, value, reason }
    }
}
