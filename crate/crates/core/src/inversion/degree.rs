use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{ConformalSurface, PhaseVector, TraceOptions};
use crate::sphere_bundle::{AngularField, Attenuation, ModeSum, PhaseFunction, Polynomial, Scalar, SpatialGrid, SymmetricTensorField};
use crate::transforms::{kernel_element, transport_solve};
use crate::{Point, Result, C64};

/// Sample set and quadrature for degree experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeOptions {
    pub grid_resolution: usize,
    pub n_angles: usize,
    pub trace: TraceOptions,
    /// Tolerance used to report the numerical degree.
    pub degree_tolerance: f64,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        DegreeOptions { grid_resolution: 8, n_angles: 16, trace: TraceOptions::default(), degree_tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeReport {
    pub m: usize,
    /// Relative energy of `u` in modes `|k| ≥ m`.
    pub high_mode_energy: f64,
    pub degree: usize,
    /// `max |u + restrict p|` over the sample set.
    pub sup_error: f64,
    pub samples: usize,
}

/// Transport solution sampled on `grid × n_angles` (parallel over samples).
pub fn sample_transport<P: PhaseFunction + ?Sized>(
    psi: &P,
    atten: &Attenuation,
    surface: &ConformalSurface,
    opts: &DegreeOptions,
) -> Result<AngularField> {
    let grid = Arc::new(SpatialGrid::new(opts.grid_resolution)?);
    let n = opts.n_angles;
    let values = (0..grid.len() * n)
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i / n);
            let phi = std::f64::consts::TAU * (i % n) as f64 / n as f64;
            transport_solve(psi, atten, surface, PhaseVector::new(x, phi), &opts.trace)
        })
        .collect::<Result<Vec<_>>>()?;
    AngularField::from_values(grid, n, values)
}

/// For a boundary-vanishing potential `p` of rank `m − 1`, solves the
/// transport equation with `ψ = (G + 𝔞)(restrict p)`, whose exact solution
/// with zero boundary data is `u = −restrict p`, and reports how far the
/// numerical `u` is from having degree `m − 1`.
pub fn degree_test(
    p: &SymmetricTensorField,
    atten: &Attenuation,
    surface: &ConformalSurface,
    opts: &DegreeOptions,
) -> Result<DegreeReport> {
    let m = p.rank() + 1;
    let element = kernel_element(p, atten, surface)?;
    let psi = element.integrand(surface);
    let u = sample_transport(&psi, atten, surface, opts)?;
    let expected = p.restrict(surface, u.grid().clone(), u.n_angles())?.scale(C64::new(-1.0, 0.0));
    Ok(DegreeReport {
        m,
        high_mode_energy: u.relative_energy(|k| k.unsigned_abs() as usize >= m),
        degree: u.degree(opts.degree_tolerance),
        sup_error: u.max_abs_diff(&expected)?,
        samples: u.values().len(),
    })
}

/// Which half of the spectrum the one-sided data avoids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `ψ_k = 0` for `k ≤ −m − 1`; expect `u_k = 0` for `k ≤ −m`.
    Negative,
    /// `ψ_k = 0` for `k ≥ m + 1`; expect `u_k = 0` for `k ≥ m`.
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneSidedReport {
    pub m: usize,
    pub side: Side,
    /// Relative energy of the source in its forbidden modes (construction check).
    pub source_forbidden_energy: f64,
    /// Relative energy of `u` in the modes that must vanish.
    pub forbidden_energy: f64,
    /// `max |u − u_exact|`.
    pub sup_error: f64,
}

/// `u_exact = Σ_k c_k(x) e^{ikφ}` with boundary-vanishing coefficients and
/// modes `k ∈ [−m + 1, m − 1 + extra]` (or the mirror image), so that the
/// source `ψ = −(G + 𝔞) u_exact` is one-sided.
pub fn one_sided_solution<R: Rng + ?Sized>(rng: &mut R, m: usize, side: Side, extra: usize) -> ModeSum {
    let lo = -(m as i64) + 1;
    let hi = m as i64 - 1 + extra as i64;
    let b = Polynomial::boundary_defining();
    let modes = (lo..=hi)
        .map(|k| {
            let k = if side == Side::Negative { k } else { -k };
            (k, Arc::new(b.mul(&Polynomial::random(rng, 2, 0.5))) as Scalar)
        })
        .collect();
    ModeSum::new(modes)
}

/// `ψ = −(G + 𝔞) u` in closed form.
pub struct TransportSource<'a> {
    pub u: &'a ModeSum,
    pub atten: &'a Attenuation,
    pub surface: ConformalSurface,
}

impl PhaseFunction for TransportSource<'_> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        -(self.u.flow_derivative(&self.surface, x, phi) + self.atten.eval(&self.surface, x, phi) * self.u.eval(x, phi))
    }
}

pub fn one_sided_test(
    u_exact: &ModeSum,
    m: usize,
    side: Side,
    atten: &Attenuation,
    surface: &ConformalSurface,
    opts: &DegreeOptions,
) -> Result<OneSidedReport> {
    let mi = m as i64;
    let (src_forbidden, u_forbidden): (Box<dyn Fn(i64) -> bool>, Box<dyn Fn(i64) -> bool>) = match side {
        Side::Negative => (Box::new(move |k| k < -mi), Box::new(move |k| k <= -mi)),
        Side::Positive => (Box::new(move |k| k > mi), Box::new(move |k| k >= mi)),
    };
    let psi = TransportSource { u: u_exact, atten, surface: *surface };
    let grid = Arc::new(SpatialGrid::new(opts.grid_resolution)?);
    let source = AngularField::sample(grid.clone(), opts.n_angles, &psi)?;
    let u = sample_transport(&psi, atten, surface, opts)?;
    let exact = AngularField::sample(grid, opts.n_angles, u_exact)?;
    Ok(OneSidedReport {
        m,
        side,
        source_forbidden_energy: source.relative_energy(src_forbidden),
        forbidden_energy: u.relative_energy(u_forbidden),
        sup_error: u.max_abs_diff(&exact)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_attenuation, random_boundary_vanishing_tensor, rng};

    #[test]
    fn scalar_potential_without_attenuation() {
        let b = Polynomial::boundary_defining();
        let p = SymmetricTensorField::scalar(Arc::new(b.mul(&b)));
        let report = degree_test(&p, &Attenuation::zero(), &ConformalSurface::euclidean(), &DegreeOptions::default()).unwrap();
        assert!(report.high_mode_energy <= 1e-3 && report.sup_error <= 1e-3, "{report:?}");
        assert_eq!(report.degree, 0);
    }

    #[test]
    fn rank_one_potential_gives_degree_one() {
        let mut r = rng(3);
        let atten = random_attenuation(&mut r, 1, 0.5);
        let p = random_boundary_vanishing_tensor(&mut r, 1, 2, 1.0);
        let surface = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let report = degree_test(&p, &atten, &surface, &DegreeOptions::default()).unwrap();
        assert_eq!(report.degree, 1, "{report:?}");
        assert!(report.high_mode_energy <= 1e-3);
    }

    #[test]
    fn one_sided_data() {
        let mut r = rng(5);
        let atten = random_attenuation(&mut r, 1, 0.5);
        let surface = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        for side in [Side::Negative, Side::Positive] {
            let u = one_sided_solution(&mut r, 2, side, 2);
            let report = one_sided_test(&u, 2, side, &atten, &surface, &DegreeOptions::default()).unwrap();
            assert!(report.source_forbidden_energy < 1e-20, "{report:?}");
            assert!(report.forbidden_energy <= 1e-3 && report.sup_error < 1e-3, "{report:?}");
        }
    }
}
