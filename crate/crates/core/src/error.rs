use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, empty sample, bad parameters).
    #[error("invalid input: {0}")]
    Input(String),

    /// A computation produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The requested operation is not supported by the model or configuration.
    #[error("unsupported: {0}")]
    Capability(String),

    /// Score-matching training diverged; the loss curve up to the failure is attached.
    #[error("training diverged at epoch {epoch}: objective {objective}")]
    Training {
        epoch: usize,
        objective: f64,
        curve: Vec<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Input(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}
