use crate::field::{Field, Representation};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a field in {expected:?} representation, got {found:?}")]
    Representation {
        expected: Representation,
        found: Representation,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("length mismatch: expected {expected}, got {found}")]
    Length { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("density has a negative value {value:e} below the clamp threshold")]
    NegativeDensity { value: f64 },

    /// The integrator produced a non-finite field. `last_good` is the last
    /// field that passed the finiteness check.
    #[error("evolution broke down at t = {time}")]
    Breakdown { time: f64, last_good: Box<Field> },

    #[error("truncation risk: {0}")]
    TruncationRisk(String),

    #[error("quadrature did not converge: residual {residual:e} with {nodes} nodes")]
    Quadrature { residual: f64, nodes: usize },
}
