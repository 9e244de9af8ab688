//! Attenuated geodesic X-ray transforms on simple Riemannian surfaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] models the closed unit disc with a conformal metric
//!   `e^{2λ}(dx¹² + dx²²)`, traces geodesics and checks simplicity.
//! * [`sphere_bundle`] holds functions on the unit sphere bundle `SM`, their
//!   angular Fourier analysis and the dictionary between symmetric tensors
//!   and functions on `SM`.
//! * [`transforms`] evaluates attenuated and weighted ray transforms, transport
//!   solutions, integrating factors and elements of the transform's kernel.
//! * [`inversion`] discretizes the forward transform as a dense matrix and
//!   analyses it (CGLS reconstruction, SVD null-space analysis, degree tests).

pub mod error;
pub mod geometry;
pub mod inversion;
pub mod random;
pub mod sphere_bundle;
pub mod transforms;

pub use error::{Error, Result, Warning};

/// Version of this crate, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex scalar used throughout; all field arithmetic is complex.
pub type C64 = num_complex::Complex64;

/// A point of the plane in isothermal coordinates `(x¹, x²)`.
pub type Point = [f64; 2];
