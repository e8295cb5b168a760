use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {re}{im:+}i is not in the upper half-plane (Im must be >= 1e-8)")]
    NotInUpperHalfPlane { re: f64, im: f64 },

    #[error("square-root argument {0} lies on the branch cut [0, inf)")]
    OnBranchCut(Complex64),

    #[error(
        "subordination did not converge at z = {z} after {iterations} iterations \
         (sum residual {residual_sum:.3e}, match residual {residual_match:.3e})"
    )]
    NonConvergence {
        z: Complex64,
        iterations: usize,
        residual_sum: f64,
        residual_match: f64,
    },

    #[error("components are not normalized: total second moment {0}")]
    NotNormalized(f64),

    #[error("component index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("recovered mass {0:.6} is below 0.99; the support window is too small")]
    MassDeficit(f64),

    #[error("distribution functions have disjoint ranges")]
    DisjointSupport,

    #[error("smoothing parameters out of range: {0}")]
    ParamsOutOfRange(String),

    #[error("n = {n}: {source}")]
    AtEntry { n: usize, source: Box<Error> },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::MassDeficit(_) => true,
            Error::AtEntry { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
