use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("budget exceeded for `{name}`: {work:.3e} steps > limit {limit:.3e}")]
    BudgetExceeded { name: String, work: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] loctime::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
