use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::metric::ConformalFactor;
use crate::{Point, Result};

/// The closed unit disc with metric `e^{2λ}((dx¹)² + (dx²)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalSurface {
    pub factor: ConformalFactor,
}

impl ConformalSurface {
    /// Radius of the coordinate disc; fixed.
    pub const DOMAIN_RADIUS: f64 = 1.0;

    pub fn new(factor: ConformalFactor) -> Result<Self> {
        factor.validate()?;
        Ok(ConformalSurface { factor })
    }

    pub fn euclidean() -> Self {
        ConformalSurface { factor: ConformalFactor::Euclidean }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        Ok(ConformalSurface { factor: ConformalFactor::parse(spec)? })
    }

    #[inline]
    pub fn lambda(&self, x: Point) -> f64 {
        self.factor.value(x)
    }

    /// `g_x(u, v) = e^{2λ(x)} ⟨u, v⟩`.
    pub fn inner(&self, x: Point, u: [f64; 2], v: [f64; 2]) -> f64 {
        (2.0 * self.lambda(x)).exp() * (u[0] * v[0] + u[1] * v[1])
    }

    /// Gaussian curvature `K = -e^{-2λ} Δλ`.
    pub fn gaussian_curvature(&self, x: Point) -> f64 {
        let jet = self.factor.jet(x);
        -(-2.0 * jet.value).exp() * jet.laplacian()
    }

    /// Geodesic curvature of `∂M` at boundary angle `beta`, signed so that
    /// positive values mean the boundary bends towards the interior.
    ///
    /// For a conformal metric and the unit circle this is `e^{-λ}(1 + ∂_r λ)`.
    pub fn boundary_geodesic_curvature(&self, beta: f64) -> f64 {
        let x = [beta.cos(), beta.sin()];
        let (lambda, grad) = self.factor.value_gradient(x);
        (-lambda).exp() * (1.0 + grad[0] * x[0] + grad[1] * x[1])
    }

    /// The `g`-unit inner normal `ν` at a boundary point.
    pub fn inner_normal(&self, x: Point) -> [f64; 2] {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let s = (-self.lambda(x)).exp() / r;
        [-x[0] * s, -x[1] * s]
    }

    pub fn contains(&self, x: Point) -> bool {
        x[0] * x[0] + x[1] * x[1] <= 1.0 + BOUNDARY_SLACK
    }
}

/// Slack on `|x|² ≤ 1` absorbing rounding of boundary points.
pub(crate) const BOUNDARY_SLACK: f64 = 1e-12;

/// A point `(x, ξ)` of the unit sphere bundle, stored as position and the
/// isothermal fibre angle `φ`; the tangent is `ξ = e^{-λ(x)}(cos φ, sin φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    pub position: Point,
    pub angle: f64,
}

impl PhaseVector {
    /// Builds a phase vector, wrapping the angle into `[0, 2π)`.
    pub fn new(position: Point, angle: f64) -> Self {
        PhaseVector { position, angle: angle.rem_euclid(TAU) }
    }

    /// The unit tangent `ξ` in coordinate components.
    pub fn tangent(&self, surface: &ConformalSurface) -> [f64; 2] {
        let s = (-surface.lambda(self.position)).exp();
        [s * self.angle.cos(), s * self.angle.sin()]
    }

    /// `ξ⊥`, the rotation of `ξ` by `+π/2`.
    pub fn perp(&self, surface: &ConformalSurface) -> [f64; 2] {
        let t = self.tangent(surface);
        [-t[1], t[0]]
    }

    /// The same base point with the direction reversed.
    pub fn reversed(&self) -> Self {
        PhaseVector::new(self.position, self.angle + std::f64::consts::PI)
    }

    pub fn is_on_boundary(&self) -> bool {
        let r2 = self.position[0] * self.position[0] + self.position[1] * self.position[1];
        (r2 - 1.0).abs() <= 1e-10
    }

    /// `⟨ξ, ν⟩_g` at a boundary point: positive on `∂₊SM`, negative on `∂₋SM`.
    pub fn normal_component(&self, surface: &ConformalSurface) -> f64 {
        let x = self.position;
        surface.inner(x, self.tangent(surface), surface.inner_normal(x))
    }
}
