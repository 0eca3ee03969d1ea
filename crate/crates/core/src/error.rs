//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation at the API boundary.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Geometry that cannot describe a cell (e.g. pico disk radius larger
    /// than twice the macro-pico distance, or pico outside the cell).
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    /// A user partition for which the first-stage beamformer cannot be built
    /// (not enough spatial dimensions to null the other groups).
    #[error("infeasible partition: {0}")]
    InfeasiblePartition(String),

    /// An adaptive quadrature routine hit its subdivision cap before reaching
    /// the requested tolerance. Carries the best estimate achieved so the
    /// caller can decide whether to use it.
    #[error("quadrature did not converge (achieved {achieved:.3e} on estimate {estimate:.6e}): {context}")]
    Convergence {
        estimate: f64,
        achieved: f64,
        context: String,
    },

    /// A matrix spectrum violated the structure the analysis relies on
    /// (exactly one strictly positive eigenvalue, the rest non-positive).
    #[error("unexpected spectrum structure: {0}")]
    SpectrumStructure(String),

    /// A special-function evaluation left its supported domain or failed to
    /// converge.
    #[error("special function: {0}")]
    SpecialFunction(String),
}
