use std::sync::Arc;

use super::xray::{attenuated_integral, attenuation_primitive};
use crate::geometry::{trace_geodesic_with, ConformalSurface, GeodesicPath, PhaseVector, TraceOptions};
use crate::sphere_bundle::{AngularField, Attenuation, PhaseFunction, SpatialGrid};
use crate::{Point, Result, C64};

/// `u(v) = ∫₀^{τ₊(v)} ψ(φ_t v) exp(∫₀^t 𝔞(φ_s v) ds) dt`, the solution of
/// `Gu + 𝔞u = −ψ` vanishing on `∂₋SM`. On `∂₊SM` this is the transform.
pub fn transport_solve<P: PhaseFunction + ?Sized>(
    psi: &P,
    atten: &Attenuation,
    surface: &ConformalSurface,
    v: PhaseVector,
    trace: &TraceOptions,
) -> Result<C64> {
    let path = trace_geodesic_with(surface, v, trace)?;
    Ok(attenuated_integral(&path, psi, atten, surface))
}

/// The transport solution as a function on `SM`, evaluated pointwise by
/// tracing from each query point. Evaluation errors yield NaN.
pub struct TransportSolution<P> {
    pub psi: P,
    pub atten: Attenuation,
    pub surface: ConformalSurface,
    pub trace: TraceOptions,
}

impl<P: PhaseFunction> TransportSolution<P> {
    pub fn new(psi: P, atten: Attenuation, surface: ConformalSurface, trace: TraceOptions) -> Self {
        TransportSolution { psi, atten, surface, trace }
    }

    pub fn solve(&self, v: PhaseVector) -> Result<C64> {
        transport_solve(&self.psi, &self.atten, &self.surface, v, &self.trace)
    }

    pub fn sample(&self, grid: Arc<SpatialGrid>, n_angles: usize) -> Result<AngularField> {
        AngularField::from_fn(grid, n_angles, |x, phi| self.eval(x, phi))
    }
}

impl<P: PhaseFunction> PhaseFunction for TransportSolution<P> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        self.solve(PhaseVector::new(x, phi)).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }
}

/// The flow primitive `W(v) = ∫₀^{τ₊(v)} 𝔞(φ_s v) ds`, which solves
/// `GW = −𝔞` and vanishes on `∂₋SM`. The weight `ρ = e^{−W}` turns the
/// attenuated transform into a weighted one.
#[derive(Debug, Clone)]
pub struct IntegratingFactor {
    pub atten: Attenuation,
    pub surface: ConformalSurface,
    pub trace: TraceOptions,
}

impl IntegratingFactor {
    pub fn new(atten: Attenuation, surface: ConformalSurface, trace: TraceOptions) -> Self {
        IntegratingFactor { atten, surface, trace }
    }

    pub fn value(&self, v: PhaseVector) -> Result<C64> {
        let path = trace_geodesic_with(&self.surface, v, &self.trace)?;
        Ok(self.total(&path))
    }

    /// `W` at the start of an already traced path.
    pub fn total(&self, path: &GeodesicPath) -> C64 {
        *attenuation_primitive(path, &self.atten, &self.surface).last().expect("nonempty path")
    }

    /// `W` sampled on `grid × n_angles`.
    pub fn sample(&self, grid: Arc<SpatialGrid>, n_angles: usize) -> Result<AngularField> {
        AngularField::from_fn(grid, n_angles, |x, phi| self.eval(x, phi))
    }

    pub fn weight(&self) -> IntegratingWeight<'_> {
        IntegratingWeight { factor: self }
    }
}

impl PhaseFunction for IntegratingFactor {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        self.value(PhaseVector::new(x, phi)).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }
}

/// `ρ = e^{−W}`.
#[derive(Debug, Clone, Copy)]
pub struct IntegratingWeight<'a> {
    pub factor: &'a IntegratingFactor,
}

impl PhaseFunction for IntegratingWeight<'_> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        (-self.factor.eval(x, phi)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_attenuation, rng};
    use crate::sphere_bundle::{constant_scalar, flow_derivative_at, FnPhase, ModeSum, Polynomial, Scalar, ScalarField};
    use crate::transforms::{attenuated_xray, weighted_xray, FanBeamRay, XrayOptions};
    use rand::Rng;
    use std::f64::consts::{PI, TAU};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bump() -> ConformalSurface {
        ConformalSurface::parse("bump(0.2, 0.5)").unwrap()
    }

    fn random_interior<R: Rng>(r: &mut R, radius: f64) -> PhaseVector {
        let rad = radius * r.gen_range(0.0..1.0_f64).sqrt();
        let t = r.gen_range(0.0..TAU);
        PhaseVector::new([rad * t.cos(), rad * t.sin()], r.gen_range(0.0..TAU))
    }

    fn random_band<R: Rng>(r: &mut R, lo: i64, hi: i64) -> ModeSum {
        ModeSum::new((lo..=hi).map(|k| (k, Arc::new(Polynomial::random(r, 2, 0.5)) as Scalar)).collect())
    }

    #[test]
    fn outgoing_boundary_point_gives_zero() {
        let psi = FnPhase(|_, _| c(1.0));
        let v = PhaseVector::new([1.0, 0.0], 0.2);
        let u = transport_solve(&psi, &Attenuation::zero(), &bump(), v, &TraceOptions::default()).unwrap();
        assert_eq!(u, c(0.0));
    }

    #[test]
    fn boundary_values_are_the_transform() {
        let mut r = rng(2);
        let atten = random_attenuation(&mut r, 1, 0.5);
        let psi = random_band(&mut r, -2, 2);
        let ray = FanBeamRay::new(1.0, 0.5).unwrap();
        let surface = bump();
        let u = transport_solve(&psi, &atten, &surface, ray.start(), &TraceOptions::default()).unwrap();
        let i = attenuated_xray(&psi, &atten, &surface, &ray, &XrayOptions::default()).unwrap();
        assert_eq!(u, i);
    }

    #[test]
    fn transport_residual() {
        let mut r = rng(4);
        let surface = ConformalSurface::euclidean();
        let atten = random_attenuation(&mut r, 1, 0.5);
        let psi = random_band(&mut r, -3, 3);
        let sol = TransportSolution::new(&psi, atten.clone(), surface, TraceOptions::default());
        let mut worst: f64 = 0.0;
        for _ in 0..40 {
            let v = random_interior(&mut r, 0.9);
            let gu = flow_derivative_at(&sol, &surface, v, 1e-4).value;
            let res = gu + atten.eval(&surface, v.position, v.angle) * sol.eval(v.position, v.angle) + psi.eval(v.position, v.angle);
            worst = worst.max(res.norm());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn integrating_factor_examples() {
        let surface = ConformalSurface::euclidean();
        let zero = IntegratingFactor::new(Attenuation::zero(), surface, TraceOptions::default());
        assert_eq!(zero.eval([0.1, 0.2], 1.0), c(0.0));

        let cst = Attenuation::new(constant_scalar(c(0.4)), [constant_scalar(c(0.0)), constant_scalar(c(0.0))]);
        let w = IntegratingFactor::new(cst, surface, TraceOptions::default());
        let mut r = rng(1);
        for _ in 0..10 {
            let v = random_interior(&mut r, 0.95);
            // Euclidean exit time of the ray x + tξ.
            let (x, d) = (v.position, [v.angle.cos(), v.angle.sin()]);
            let b = x[0] * d[0] + x[1] * d[1];
            let tau = -b + (b * b + 1.0 - x[0] * x[0] - x[1] * x[1]).sqrt();
            assert!((w.eval(x, v.angle) - c(0.4 * tau)).norm() < 1e-12);
        }
        // W vanishes at exit points.
        assert_eq!(w.eval([0.0, 1.0], PI / 2.0), c(0.0));
    }

    #[test]
    fn flow_primitive_and_conjugation() {
        let surface = bump();
        let mut r = rng(6);
        let atten = random_attenuation(&mut r, 1, 0.5);
        let w = IntegratingFactor::new(atten.clone(), surface, TraceOptions::default());
        let rfun = random_band(&mut r, -2, 2);
        let conj = FnPhase(|x: Point, phi: f64| (-w.eval(x, phi)).exp() * rfun.eval(x, phi));
        let mut worst_gw: f64 = 0.0;
        let mut worst_conj: f64 = 0.0;
        for _ in 0..20 {
            let v = random_interior(&mut r, 0.9);
            let (x, phi) = (v.position, v.angle);
            let a = atten.eval(&surface, x, phi);
            let gw = flow_derivative_at(&w, &surface, v, 1e-4).value;
            worst_gw = worst_gw.max((gw + a).norm());
            let lhs = w.eval(x, phi).exp() * flow_derivative_at(&conj, &surface, v, 1e-4).value;
            let rhs = rfun.flow_derivative(&surface, x, phi) + a * rfun.eval(x, phi);
            worst_conj = worst_conj.max((lhs - rhs).norm());
        }
        assert!(worst_gw < 1e-3 && worst_conj < 1e-3, "{worst_gw} {worst_conj}");
    }

    #[test]
    fn weighted_transform_with_integrating_weight() {
        let surface = bump();
        let mut r = rng(12);
        let atten = random_attenuation(&mut r, 1, 0.5);
        let f = Polynomial::random(&mut r, 2, 1.0);
        let opts = XrayOptions::with_step(5e-4);
        let w = IntegratingFactor::new(atten.clone(), surface, opts.trace);
        let pf = Arc::new(f.clone());
        let psi = FnPhase(move |x: Point, _| pf.value(x));
        for _ in 0..2 {
            let ray = FanBeamRay::new(r.gen_range(0.0..TAU), r.gen_range(-1.2..1.2)).unwrap();
            let lhs = weighted_xray(&f, &w.weight(), &surface, &ray, &opts).unwrap();
            let start = ray.start();
            let rhs = (-w.value(start).unwrap()).exp()
                * attenuated_xray(&psi, &atten, &surface, &ray, &opts).unwrap();
            assert!((lhs - rhs).norm() < 1e-6, "{}", (lhs - rhs).norm());
        }
    }
}
