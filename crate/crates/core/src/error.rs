use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation error: {message}; retry with dim >= {suggested_dim}")]
    Truncation { message: String, suggested_dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("spectral window [{lo}, {hi}] exceeds the reliable range [{min}, {max}]")]
    Range { lo: f64, hi: f64, min: f64, max: f64 },

    #[error("numerical consistency failure: {0}")]
    NumericalConsistency(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("size guard exceeded: {0}")]
    Guard(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}
