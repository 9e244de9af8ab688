//! Attenuated and weighted geodesic X-ray transforms over fan-beam ray
//! lattices, transport solutions and integrating factors.

mod kernel;
mod ray;
mod transport;
mod xray;

pub use kernel::{degree_zero_solution, kernel_element, KernelElement, KernelIntegrand, BOUNDARY_TOLERANCE};
pub use ray::{FanBeamData, FanBeamMeta, FanBeamRay, RayGrid, FAN_BEAM_FORMAT_VERSION};
pub use transport::{transport_solve, IntegratingFactor, IntegratingWeight, TransportSolution};
pub use xray::{
    attenuated_integral, attenuated_xray, attenuated_xray_checked, attenuated_xray_from, attenuation_primitive,
    full_transform, weighted_xray, RayPaths, XrayOptions,
};
