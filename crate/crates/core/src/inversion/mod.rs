//! Discrete forward operators in a Zernike basis, their adjoint, CGLS
//! reconstruction, null-space analysis and degree experiments.

mod degree;
mod forward;
mod kernel_analysis;
mod solve;
mod zernike;

pub use degree::{
    degree_test, one_sided_solution, one_sided_test, sample_transport, DegreeOptions, DegreeReport, OneSidedReport, Side,
    TransportSource,
};
pub use forward::{
    adjoint_apply, assemble_forward, BasisElement, ForwardMatrix, ForwardMode, ForwardSpec, DEFAULT_SIZE_CAP,
};
pub use kernel_analysis::{
    boundary_vanishing_basis, find_gap, kernel_analysis, potential_degree, Gap, GapRule, KernelReport,
};
pub use solve::{cgls, cgls_weighted, CglsResult, CglsStep};
pub use zernike::{Azimuth, ZernikeBasis, ZernikeIndex};
