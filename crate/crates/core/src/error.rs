use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate weight: moment c_{n} is numerically zero")]
    DegenerateWeight { n: usize },
    #[error("no radial limit: {0}")]
    NoRadialLimit(String),
    #[error("symbol is not bounded: {0}")]
    Unbounded(String),
    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("residual check failed: {residual:.3e} exceeds {bound:.3e}")]
    Residual { residual: f64, bound: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Internal numerical failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Quadrature(_)
                | Error::Residual { .. }
                | Error::NotHermitian { .. }
        )
    }
}
