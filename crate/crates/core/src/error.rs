//! Error types shared across the crate.

use thiserror::Error;

/// Errors surfaced by the numerical kernels and geometry operations.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// A symmetric matrix failed the positive-definiteness check during
    /// factorization. Carries the offending pivot so callers can tell a
    /// genuinely indefinite matrix from a near-singular one.
    #[error("matrix is not positive definite: pivot {index} = {pivot:e} below tolerance {tolerance:e}")]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },

    /// Positive-definiteness failure at a specific quadrature node, so a
    /// singular Fisher matrix inside the prior's support can be located.
    #[error("matrix not positive definite at quadrature node {index} = ({x}, {y})")]
    NotPositiveDefiniteAtNode { index: usize, x: f64, y: f64 },

    /// Matrix dimension outside the supported 1..=16 range.
    #[error("unsupported matrix dimension {0} (supported: 1..=16)")]
    Dimension(usize),

    /// A matrix operation produced non-finite entries.
    #[error("overflow: matrix entries became non-finite")]
    Overflow,

    /// A bearing was requested from a sensor sitting on the evaluation point.
    #[error("sensor coincides with evaluation point ({x}, {y}); bearing undefined")]
    Coincident { x: f64, y: f64 },

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A field evaluated to a non-finite value at a quadrature node.
    #[error("field is non-finite at quadrature node {index} = ({x}, {y})")]
    NonFiniteField { index: usize, x: f64, y: f64 },

    /// The sensor-geometry map is not locally injective at this configuration.
    #[error("degenerate sensor geometry: {0}")]
    DegenerateGeometry(String),

    /// A finite-difference probe left the positive-definite cone.
    #[error("perturbation step {step:e} leaves the positive-definite cone")]
    StepTooLarge { step: f64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
