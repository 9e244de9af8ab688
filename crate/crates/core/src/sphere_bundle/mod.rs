//! Functions on the unit circle bundle `SM`: sampled angular fields, their
//! Fourier modes, and the dictionary with symmetric tensor fields.

mod attenuation;
mod field;
mod flow;
mod grid;
pub mod io;
mod phase_fn;
mod scalar;
mod tensor;

pub use attenuation::{Attenuation, AttenuationOn};
pub use field::{AngularField, AngularPart};
pub use flow::{flow_derivative, flow_derivative_at, FlowDifference, DEFAULT_FLOW_DELTA};
pub use grid::{GridSpec, SampledScalar, SpatialGrid};
pub use phase_fn::{FnPhase, ModeSum, PhaseFunction, Pullback, SumPhase};
pub use scalar::{
    constant_scalar, parse_scalar, zero_scalar, Combination, ConformalPower, FnScalar, Gaussian, Polynomial,
    Scalar, ScalarField,
};
pub use tensor::{
    binomial, constant_tensor, contract_symmetric, lift_to_tensor, lift_to_tensor_with, FullTensor, SymTensor,
    SymmetricTensorField, LIFT_TOLERANCE,
};
