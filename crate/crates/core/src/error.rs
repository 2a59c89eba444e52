use thiserror::Error;

#[derive(Debug, Error)]
pub enum SptError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("simulation error at t={time} (asset {asset}): {what}")]
    Simulation { time: f64, asset: usize, what: String },

    /// The generating function does not produce a long-only rule at this point.
    #[error("negative portfolio weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("unsupported portfolio: {0}")]
    Unsupported(String),

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SptError {
    /// True for errors caused by bad inputs rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SptError::Config(_)
                | SptError::Domain(_)
                | SptError::Dimension { .. }
                | SptError::Unsupported(_)
                | SptError::Parse { .. }
                | SptError::Data(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SptError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(SptError::Dimension { expected, found });
    }
    Ok(())
}
