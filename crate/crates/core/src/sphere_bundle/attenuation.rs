use std::sync::Arc;

use rand::Rng;

use super::field::AngularField;
use super::grid::SpatialGrid;
use super::phase_fn::PhaseFunction;
use super::scalar::{parse_scalar, zero_scalar, Polynomial, Scalar};
use super::tensor::SymmetricTensorField;
use crate::geometry::ConformalSurface;
use crate::{Point, Result, C64};

/// Attenuation `𝔞(x, ξ) = h(x) + α_x(ξ)`.
#[derive(Debug, Clone)]
pub struct Attenuation {
    pub h: Scalar,
    pub alpha: [Scalar; 2],
    /// Registry ids of `h`, `α₁`, `α₂`, kept for output metadata.
    pub ids: [String; 3],
}

impl Attenuation {
    pub fn zero() -> Self {
        Attenuation {
            h: zero_scalar(),
            alpha: [zero_scalar(), zero_scalar()],
            ids: ["zero".into(), "zero".into(), "zero".into()],
        }
    }

    pub fn new(h: Scalar, alpha: [Scalar; 2]) -> Self {
        Attenuation { h, alpha, ids: ["custom".into(), "custom".into(), "custom".into()] }
    }

    pub fn from_polynomials(h: Polynomial, a1: Polynomial, a2: Polynomial) -> Self {
        Attenuation::new(Arc::new(h), [Arc::new(a1), Arc::new(a2)])
    }

    /// Builds from registry entries; see [`parse_scalar`].
    pub fn parse<R: Rng + ?Sized>(h: &str, a1: &str, a2: &str, rng: &mut R) -> Result<Self> {
        Ok(Attenuation {
            h: parse_scalar(h, rng)?,
            alpha: [parse_scalar(a1, rng)?, parse_scalar(a2, rng)?],
            ids: [h.to_string(), a1.to_string(), a2.to_string()],
        })
    }

    pub fn is_zero(&self) -> bool {
        self.h.is_zero() && self.alpha.iter().all(|a| a.is_zero())
    }

    /// Largest polynomial degree among `h, α₁, α₂` that are nonzero.
    pub fn polynomial_degree(&self) -> Option<usize> {
        [&self.h, &self.alpha[0], &self.alpha[1]]
            .iter()
            .filter(|s| !s.is_zero())
            .try_fold(0, |d, s| Some(d.max(s.polynomial_degree()?)))
    }

    /// `h(x) + e^{-λ}(α₁ cos φ + α₂ sin φ)`.
    #[inline]
    pub fn eval(&self, surface: &ConformalSurface, x: Point, phi: f64) -> C64 {
        let e = (-surface.lambda(x)).exp();
        let (s, c) = phi.sin_cos();
        self.h.value(x) + (self.alpha[0].value(x) * c + self.alpha[1].value(x) * s) * e
    }

    pub fn h_tensor(&self) -> SymmetricTensorField {
        SymmetricTensorField::scalar(self.h.clone())
    }

    pub fn alpha_tensor(&self) -> SymmetricTensorField {
        SymmetricTensorField::one_form(self.alpha[0].clone(), self.alpha[1].clone())
    }

    pub fn on(&self, surface: ConformalSurface) -> AttenuationOn<'_> {
        AttenuationOn { atten: self, surface }
    }

    pub fn sample(&self, surface: &ConformalSurface, grid: Arc<SpatialGrid>, n_angles: usize) -> Result<AngularField> {
        AngularField::from_fn(grid, n_angles, |x, phi| self.eval(surface, x, phi))
    }
}

/// An attenuation paired with a surface, usable as a function on `SM`.
#[derive(Debug, Clone, Copy)]
pub struct AttenuationOn<'a> {
    pub atten: &'a Attenuation,
    pub surface: ConformalSurface,
}

impl PhaseFunction for AttenuationOn<'_> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        self.atten.eval(&self.surface, x, phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn restriction_identity_and_band_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let atten = Attenuation::parse("random_poly(2, 1)", "gaussian(0.5, 0.1, 0.2, 0.3)", "affine(1, 0, 2)", &mut rng).unwrap();
        let surface = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let g = Arc::new(SpatialGrid::new(8).unwrap());
        let field = atten.sample(&surface, g, 16).unwrap();
        assert!(field.energy_where(|k| k.abs() >= 2) < 1e-24 * field.total_energy().max(1.0));
        let tensor = atten.h_tensor().restrict_at(&surface, [0.3, 0.1], 0.7)
            + atten.alpha_tensor().restrict_at(&surface, [0.3, 0.1], 0.7);
        assert!((tensor - atten.eval(&surface, [0.3, 0.1], 0.7)).norm() < 1e-14);
        assert_eq!(atten.ids[2], "affine(1, 0, 2)");
    }

    #[test]
    fn zero_attenuation() {
        let a = Attenuation::zero();
        assert!(a.is_zero());
        assert_eq!(a.polynomial_degree(), Some(0));
        assert_eq!(a.eval(&ConformalSurface::euclidean(), [0.1, 0.1], 1.0), C64::new(0.0, 0.0));
    }
}
