//! The simple surface `(M, g)` as the closed unit disc with a conformal metric.

pub(crate) mod geodesic;
mod metric;
mod simplicity;
pub(crate) mod surface;

pub use geodesic::{
    exit_time, trace_geodesic, trace_geodesic_with, GeodesicPath, PathSample, Termination,
    TraceOptions, DEFAULT_STEP,
};
pub use metric::{parse_registry_call, ConformalFactor, LambdaJet};
pub use simplicity::{
    jacobi_along, simplicity_check, ConjugatePoint, JacobiScan, SimplicityReport,
    SimplicitySampling,
};
pub use surface::{ConformalSurface, PhaseVector};
