use rayon::prelude::*;

use super::ray::{FanBeamData, FanBeamMeta, FanBeamRay, RayGrid};
use crate::geometry::{trace_geodesic_with, ConformalSurface, GeodesicPath, PhaseVector, TraceOptions};
use crate::sphere_bundle::{Attenuation, PhaseFunction, ScalarField};
use crate::{Result, Warning, C64};

/// Quadrature settings for ray integrals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XrayOptions {
    pub trace: TraceOptions,
    /// When set, every ray is recomputed at half the step and a
    /// `QuadratureUnderresolved` warning is raised if the relative change
    /// exceeds this value.
    pub underresolved_threshold: Option<f64>,
}

impl XrayOptions {
    pub fn with_step(step: f64) -> Self {
        XrayOptions { trace: TraceOptions::with_step(step), ..Default::default() }
    }

    fn halved(&self) -> TraceOptions {
        TraceOptions { step: 0.5 * self.trace.step, ..self.trace }
    }
}

/// Cumulative trapezoid primitive `A(t_k) = ∫₀^{t_k} 𝔞` on the samples.
pub fn attenuation_primitive(path: &GeodesicPath, atten: &Attenuation, surface: &ConformalSurface) -> Vec<C64> {
    let mut out = Vec::with_capacity(path.len());
    let mut acc = C64::new(0.0, 0.0);
    let mut prev: Option<(f64, C64)> = None;
    for s in &path.samples {
        let a = atten.eval(surface, s.position, s.angle);
        if let Some((t0, a0)) = prev {
            acc += (a0 + a) * (0.5 * (s.t - t0));
        }
        out.push(acc);
        prev = Some((s.t, a));
    }
    out
}

/// `∫₀^τ ψ(φ_t) exp(∫₀^t 𝔞(φ_s) ds) dt` by trapezoid rules on the path's
/// own samples (shared by the inner and outer integral).
pub fn attenuated_integral<P: PhaseFunction + ?Sized>(
    path: &GeodesicPath,
    psi: &P,
    atten: &Attenuation,
    surface: &ConformalSurface,
) -> C64 {
    let weights = path.trapezoid_weights();
    if atten.is_zero() {
        return path.samples.iter().zip(&weights).map(|(s, w)| psi.eval(s.position, s.angle) * *w).sum();
    }
    let primitive = attenuation_primitive(path, atten, surface);
    path.samples
        .iter()
        .zip(&weights)
        .zip(&primitive)
        .map(|((s, w), a)| psi.eval(s.position, s.angle) * a.exp() * *w)
        .sum()
}

/// `I^𝔞ψ` for one fan-beam ray.
pub fn attenuated_xray<P: PhaseFunction + ?Sized>(
    psi: &P,
    atten: &Attenuation,
    surface: &ConformalSurface,
    ray: &FanBeamRay,
    opts: &XrayOptions,
) -> Result<C64> {
    attenuated_xray_from(psi, atten, surface, ray.start(), &opts.trace)
}

/// The same integral started from an arbitrary phase vector.
pub fn attenuated_xray_from<P: PhaseFunction + ?Sized>(
    psi: &P,
    atten: &Attenuation,
    surface: &ConformalSurface,
    start: PhaseVector,
    trace: &TraceOptions,
) -> Result<C64> {
    let path = trace_geodesic_with(surface, start, trace)?;
    Ok(attenuated_integral(&path, psi, atten, surface))
}

/// [`attenuated_xray`] plus the step-halving check.
pub fn attenuated_xray_checked<P: PhaseFunction + ?Sized>(
    psi: &P,
    atten: &Attenuation,
    surface: &ConformalSurface,
    ray: &FanBeamRay,
    opts: &XrayOptions,
    ray_index: usize,
) -> Result<(C64, Option<Warning>)> {
    let value = attenuated_xray(psi, atten, surface, ray, opts)?;
    let Some(threshold) = opts.underresolved_threshold else {
        return Ok((value, None));
    };
    let fine = attenuated_xray_from(psi, atten, surface, ray.start(), &opts.halved())?;
    let change = (fine - value).norm() / fine.norm().max(f64::MIN_POSITIVE);
    let warning = (change > threshold && (fine - value).norm() > f64::EPSILON)
        .then_some(Warning::QuadratureUnderresolved { ray: ray_index, relative_change: change });
    Ok((value, warning))
}

/// `I^𝔞ψ` on every ray of the lattice. Rays are independent, so the values
/// do not depend on how the work is scheduled.
pub fn full_transform<P: PhaseFunction + ?Sized>(
    psi: &P,
    atten: &Attenuation,
    surface: &ConformalSurface,
    grid: &RayGrid,
    opts: &XrayOptions,
) -> Result<FanBeamData> {
    grid.validate()?;
    let results: Vec<(C64, Option<Warning>)> = (0..grid.len())
        .into_par_iter()
        .map(|k| attenuated_xray_checked(psi, atten, surface, &grid.ray(k), opts, k))
        .collect::<Result<_>>()?;
    let meta = FanBeamMeta {
        surface: surface.factor.registry_id(),
        attenuation: atten.ids.clone(),
        integrand: String::new(),
        step: opts.trace.step,
        config_hash: None,
    };
    let (values, warnings): (Vec<C64>, Vec<Option<Warning>>) = results.into_iter().unzip();
    let mut data = FanBeamData::new(*grid, values, meta)?;
    data.warnings = warnings.into_iter().flatten().collect();
    Ok(data)
}

/// Traced geodesics of a ray lattice, reusable across integrands.
#[derive(Debug, Clone)]
pub struct RayPaths {
    pub surface: ConformalSurface,
    pub grid: RayGrid,
    pub paths: Vec<GeodesicPath>,
}

impl RayPaths {
    pub fn trace(surface: &ConformalSurface, grid: &RayGrid, trace: &TraceOptions) -> Result<Self> {
        grid.validate()?;
        let paths = (0..grid.len())
            .into_par_iter()
            .map(|k| trace_geodesic_with(surface, grid.ray(k).start(), trace))
            .collect::<Result<_>>()?;
        Ok(RayPaths { surface: *surface, grid: *grid, paths })
    }

    pub fn transform<P: PhaseFunction + ?Sized>(&self, psi: &P, atten: &Attenuation) -> Vec<C64> {
        self.paths.par_iter().map(|p| attenuated_integral(p, psi, atten, &self.surface)).collect()
    }

    /// Per-ray attenuation factors `exp(∫₀^t 𝔞)` times trapezoid weights,
    /// so that `I^𝔞ψ = Σ_k w_k ψ(sample_k)`.
    pub fn quadrature_weights(&self, atten: &Attenuation) -> Vec<Vec<C64>> {
        self.paths
            .par_iter()
            .map(|p| {
                let w = p.trapezoid_weights();
                let a = attenuation_primitive(p, atten, &self.surface);
                w.iter().zip(&a).map(|(w, a)| a.exp() * *w).collect()
            })
            .collect()
    }
}

/// `I_ρ f = ∫₀^{τ₊} ρ(φ_t) f(γ(t)) dt` for one ray.
pub fn weighted_xray<F, R>(
    f: &F,
    rho: &R,
    surface: &ConformalSurface,
    ray: &FanBeamRay,
    opts: &XrayOptions,
) -> Result<C64>
where
    F: ScalarField + ?Sized,
    R: PhaseFunction + ?Sized,
{
    let path = trace_geodesic_with(surface, ray.start(), &opts.trace)?;
    let weights = path.trapezoid_weights();
    Ok(path
        .samples
        .iter()
        .zip(&weights)
        .map(|(s, w)| {
            let value = f.value(s.position);
            if value == C64::new(0.0, 0.0) {
                value
            } else {
                rho.eval(s.position, s.angle) * value * *w
            }
        })
        .sum())
}
