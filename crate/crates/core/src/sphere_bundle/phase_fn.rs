use std::sync::Arc;

use crate::{Point, C64};

/// A complex function on `SM` in isothermal coordinates `(x, φ)`.
pub trait PhaseFunction: Send + Sync {
    fn eval(&self, x: Point, phi: f64) -> C64;
}

impl<T: PhaseFunction + ?Sized> PhaseFunction for &T {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        (**self).eval(x, phi)
    }
}

impl<T: PhaseFunction + ?Sized> PhaseFunction for Arc<T> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        (**self).eval(x, phi)
    }
}

impl<T: PhaseFunction + ?Sized> PhaseFunction for Box<T> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        (**self).eval(x, phi)
    }
}

/// Adapts a closure `(x, φ) -> value`.
#[derive(Clone, Copy)]
pub struct FnPhase<F>(pub F);

impl<F> PhaseFunction for FnPhase<F>
where
    F: Fn(Point, f64) -> C64 + Send + Sync,
{
    fn eval(&self, x: Point, phi: f64) -> C64 {
        (self.0)(x, phi)
    }
}

/// Pointwise sum of two functions on `SM`.
pub struct SumPhase<A, B>(pub A, pub B);

impl<A: PhaseFunction, B: PhaseFunction> PhaseFunction for SumPhase<A, B> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        self.0.eval(x, phi) + self.1.eval(x, phi)
    }
}

/// Pullback of a scalar field on `M` to `SM`.
pub struct Pullback<S>(pub S);

impl<S: super::ScalarField> PhaseFunction for Pullback<S> {
    fn eval(&self, x: Point, _phi: f64) -> C64 {
        self.0.value(x)
    }
}

/// Finite Fourier sum `Σ_k c_k(x) e^{ikφ}` with smooth spatial
/// coefficients.
#[derive(Debug, Clone, Default)]
pub struct ModeSum {
    pub modes: Vec<(i64, super::Scalar)>,
}

impl ModeSum {
    pub fn new(modes: Vec<(i64, super::Scalar)>) -> Self {
        ModeSum { modes }
    }

    pub fn mode_range(&self) -> Option<(i64, i64)> {
        let lo = self.modes.iter().map(|m| m.0).min()?;
        let hi = self.modes.iter().map(|m| m.0).max()?;
        Some((lo, hi))
    }

    /// `Gu` in closed form:
    /// `e^{-λ}[cos φ ∂₁ + sin φ ∂₂ + (−∂₁λ sin φ + ∂₂λ cos φ) ∂_φ] u`.
    pub fn flow_derivative(&self, surface: &crate::geometry::ConformalSurface, x: Point, phi: f64) -> C64 {
        let (lambda, dl) = surface.factor.value_gradient(x);
        let (s, c) = phi.sin_cos();
        let turn = -dl[0] * s + dl[1] * c;
        let sum: C64 = self
            .modes
            .iter()
            .map(|(k, f)| {
                let g = f.gradient(x);
                let e = C64::from_polar(1.0, *k as f64 * phi);
                (g[0] * c + g[1] * s + f.value(x) * C64::new(0.0, *k as f64 * turn)) * e
            })
            .sum();
        sum * (-lambda).exp()
    }
}

impl PhaseFunction for ModeSum {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        self.modes.iter().map(|(k, f)| f.value(x) * C64::from_polar(1.0, *k as f64 * phi)).sum()
    }
}
