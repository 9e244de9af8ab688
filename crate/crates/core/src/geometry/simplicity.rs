//! Sampled simplicity check: strict convexity of `∂M`, conjugate points via
//! the scalar Jacobi equation, and nontrapping.
//!
//! The scan covers a finite fan of geodesics, so it can falsify simplicity
//! but never certify it.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geodesic::{boundary_crossing, flow_rhs};
use super::surface::{ConformalSurface, PhaseVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimplicitySampling {
    pub n_boundary: usize,
    pub n_beta: usize,
    pub n_incidence: usize,
    /// Largest `|a|` of the sampled incidence angles.
    pub max_incidence: f64,
    pub step: f64,
    pub max_length: f64,
}

impl Default for SimplicitySampling {
    fn default() -> Self {
        SimplicitySampling {
            n_boundary: 256,
            n_beta: 32,
            n_incidence: 33,
            max_incidence: FRAC_PI_2 - 0.01,
            step: 1e-3,
            max_length: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugatePoint {
    pub beta: f64,
    pub incidence: f64,
    /// Flow time of the first interior zero of the Jacobi field.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplicityReport {
    pub metric: String,
    pub min_boundary_curvature: f64,
    pub strictly_convex: bool,
    pub geodesics_sampled: usize,
    pub conjugate_points: Vec<ConjugatePoint>,
    pub no_conjugate_points: bool,
    pub trapped: usize,
    pub nontrapping: bool,
    pub passed: bool,
}

/// Result of integrating `J'' + K(γ(t)) J = 0`, `J(0) = 0`, `J'(0) = 1`
/// along one geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiScan {
    /// `None` when the geodesic did not exit before the length cap.
    pub exit_time: Option<f64>,
    pub first_zero: Option<f64>,
}

fn augmented_rhs(surface: &ConformalSurface, y: [f64; 5]) -> [f64; 5] {
    let g = flow_rhs(surface, [y[0], y[1], y[2]]);
    let k = surface.gaussian_curvature([y[0], y[1]]);
    [g[0], g[1], g[2], y[4], -k * y[3]]
}

fn augmented_step(surface: &ConformalSurface, y: [f64; 5], h: f64) -> [f64; 5] {
    let add = |a: [f64; 5], s: f64, b: [f64; 5]| {
        let mut o = a;
        for i in 0..5 {
            o[i] += s * b[i];
        }
        o
    };
    let k1 = augmented_rhs(surface, y);
    let k2 = augmented_rhs(surface, add(y, 0.5 * h, k1));
    let k3 = augmented_rhs(surface, add(y, 0.5 * h, k2));
    let k4 = augmented_rhs(surface, add(y, h, k3));
    let mut out = y;
    for i in 0..5 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates the Jacobi scalar along the geodesic from `start` until it
/// exits (or hits `max_length`), reporting the first sign change of `J`.
pub fn jacobi_along(
    surface: &ConformalSurface,
    start: PhaseVector,
    step: f64,
    max_length: f64,
) -> JacobiScan {
    let mut y = [start.position[0], start.position[1], start.angle, 0.0, 1.0];
    let mut t = 0.0;
    let mut first_zero = None;
    loop {
        let next = augmented_step(surface, y, step);
        let r2 = next[0] * next[0] + next[1] * next[1];
        let (h, exited) = if r2 > 1.0 {
            let h = boundary_crossing(
                |h| {
                    let s = augmented_step(surface, y, h);
                    s[0] * s[0] + s[1] * s[1]
                },
                step,
                t,
                1e-12,
            );
            (h, true)
        } else {
            (step, false)
        };
        let next = if exited { augmented_step(surface, y, h) } else { next };
        // J(0) = 0 is not a conjugate point; only sign changes after it count.
        if first_zero.is_none() && t > 0.0 && y[3] * next[3] <= 0.0 && next[3] != y[3] {
            first_zero = Some(t + h * y[3] / (y[3] - next[3]));
        }
        t += h;
        if exited {
            return JacobiScan { exit_time: Some(t), first_zero };
        }
        y = next;
        if t > max_length {
            return JacobiScan { exit_time: None, first_zero };
        }
    }
}

pub fn simplicity_check(surface: &ConformalSurface, sampling: &SimplicitySampling) -> SimplicityReport {
    let min_boundary_curvature = (0..sampling.n_boundary)
        .map(|i| surface.boundary_geodesic_curvature(TAU * i as f64 / sampling.n_boundary as f64))
        .fold(f64::INFINITY, f64::min);

    let rays: Vec<(f64, f64)> = (0..sampling.n_beta)
        .flat_map(|i| {
            let beta = TAU * i as f64 / sampling.n_beta as f64;
            (0..sampling.n_incidence).map(move |j| {
                let a = if sampling.n_incidence == 1 {
                    0.0
                } else {
                    -sampling.max_incidence
                        + 2.0 * sampling.max_incidence * j as f64 / (sampling.n_incidence - 1) as f64
                };
                (beta, a)
            })
        })
        .collect();

    let scans: Vec<(f64, f64, JacobiScan)> = rays
        .par_iter()
        .map(|&(beta, a)| {
            let start = PhaseVector::new([beta.cos(), beta.sin()], beta + PI + a);
            (beta, a, jacobi_along(surface, start, sampling.step, sampling.max_length))
        })
        .collect();

    let conjugate_points: Vec<ConjugatePoint> = scans
        .iter()
        .filter_map(|&(beta, incidence, s)| s.first_zero.map(|t| ConjugatePoint { beta, incidence, t }))
        .collect();
    let trapped = scans.iter().filter(|(_, _, s)| s.exit_time.is_none()).count();

    let strictly_convex = min_boundary_curvature > 0.0;
    let no_conjugate_points = conjugate_points.is_empty();
    let nontrapping = trapped == 0;
    SimplicityReport {
        metric: surface.factor.registry_id(),
        min_boundary_curvature,
        strictly_convex,
        geodesics_sampled: scans.len(),
        conjugate_points,
        no_conjugate_points,
        trapped,
        nontrapping,
        passed: strictly_convex && no_conjugate_points && nontrapping,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> SimplicitySampling {
        SimplicitySampling { n_beta: 8, n_incidence: 9, step: 2e-3, ..Default::default() }
    }

    #[test]
    fn flat_disc_is_simple() {
        let r = simplicity_check(&ConformalSurface::euclidean(), &coarse());
        assert!(r.passed);
        assert_eq!(r.min_boundary_curvature, 1.0);
    }

    #[test]
    fn jacobi_zero_for_constant_curvature_at_pi_over_sqrt_c() {
        let c: f64 = 4.0;
        let s = ConformalSurface::parse("near_constant_curvature(4)").unwrap();
        // Diameter through the centre: length 4 atan(√c)/√c > π/√c.
        let scan = jacobi_along(&s, PhaseVector::new([1.0, 0.0], PI), 1e-3, 20.0);
        let zero = scan.first_zero.expect("conjugate point");
        assert!((zero - PI / c.sqrt()).abs() < 1e-6, "zero at {zero}");
        let len = scan.exit_time.unwrap();
        assert!((len - 4.0 * c.sqrt().atan() / c.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn large_constant_curvature_fails() {
        let s = ConformalSurface::parse("near_constant_curvature(4)").unwrap();
        let r = simplicity_check(&s, &coarse());
        assert!(!r.passed);
        assert!(!r.no_conjugate_points);
        assert!(!r.strictly_convex);
    }

    #[test]
    fn bump_verdict_stable_under_refinement() {
        let s = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let r1 = simplicity_check(&s, &coarse());
        let dense = SimplicitySampling { n_beta: 16, n_incidence: 17, step: 1e-3, ..coarse() };
        let r2 = simplicity_check(&s, &dense);
        assert!(r1.passed && r2.passed);
    }

    #[test]
    fn report_serializes() {
        let r = simplicity_check(&ConformalSurface::euclidean(), &coarse());
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["passed"], true);
        assert_eq!(json["metric"], "euclidean");
    }
}
