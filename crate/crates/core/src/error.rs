use thiserror::Error;

/// Errors raised by operator construction and application.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid grid side {0}: must be 2^p + 1 with p >= 1")]
    GridSide(usize),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("negative radicand {radicand:e} while computing innovation weight")]
    NegativeRadicand { radicand: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("operator is not positive definite at iteration {iteration}: p'Ap = {curvature:e}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}
