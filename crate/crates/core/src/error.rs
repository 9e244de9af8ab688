use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("geodesic exceeded the maximum flow length {max_length} without exiting")]
    StepCapExceeded { max_length: f64 },
    #[error("unit speed drifted by {drift:e} (tolerance {tolerance:e})")]
    NotUnitSpeed { drift: f64, tolerance: f64 },
    #[error("start point lies outside the closed disc (|x| = {radius})")]
    OutsideDomain { radius: f64 },
    #[error("field has energy {energy:e} in modes of the wrong parity for rank {rank}")]
    ParityViolation { rank: usize, energy: f64 },
    #[error("field has degree {degree} which exceeds the requested rank {rank}")]
    DegreeViolation { rank: usize, degree: usize },
    #[error("tensor does not vanish on the boundary (max |p| = {max_abs:e})")]
    BoundaryNonvanishing { max_abs: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix of {rows}x{cols} entries exceeds the size cap {cap}")]
    SizeGuard { rows: usize, cols: usize, cap: usize },
    #[error("singular spectrum has no decisive gap below the ceiling (best ratio {best_ratio:.3})")]
    NoGapFound { best_ratio: f64 },
    #[error("tensor field of rank {0} has no spatial derivatives available")]
    MissingDerivative(usize),
    #[error("invalid registry entry `{0}`")]
    Registry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

/// Non-fatal diagnostics. Operations return these alongside their result;
/// callers decide whether to escalate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Energy in the top quarter of angular modes exceeds `1e-6` of the total.
    AliasRisk { relative_energy: f64 },
    /// Halving the quadrature step changed a ray value by more than the threshold.
    QuadratureUnderresolved { ray: usize, relative_change: f64 },
    /// A flow difference near `∂SM` fell back to a one-sided stencil.
    BoundaryProximity { count: usize },
}
