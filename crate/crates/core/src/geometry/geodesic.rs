use serde::Serialize;

use super::surface::{ConformalSurface, PhaseVector, BOUNDARY_SLACK};
use crate::{Error, Result};

/// Default flow-time step of the geodesic integrator.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    /// Fixed RK4 step in flow time.
    pub step: f64,
    /// Flow length after which the geodesic is declared trapped.
    pub max_length: f64,
    /// Allowed drift of `g(γ̇, γ̇)` away from 1.
    pub speed_tolerance: f64,
    /// Relative tolerance of the boundary-crossing bisection.
    pub root_tolerance: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            step: DEFAULT_STEP,
            max_length: 50.0,
            speed_tolerance: 1e-9,
            root_tolerance: 1e-12,
        }
    }
}

impl TraceOptions {
    pub fn with_step(step: f64) -> Self {
        TraceOptions { step, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub position: [f64; 2],
    pub angle: f64,
}

impl PathSample {
    pub fn phase(&self) -> PhaseVector {
        PhaseVector::new(self.position, self.angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// The geodesic crossed `∂M` transversally at `exit_time`.
    Exited,
    /// The start point was already on `∂M` pointing outwards (`τ₊ = 0`).
    Outgoing,
}

/// A forward geodesic sampled at uniform flow-time steps; the final sample
/// sits on the boundary crossing, so its spacing is a partial step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub samples: Vec<PathSample>,
    pub step: f64,
    pub exit_time: f64,
    pub termination: Termination,
    /// `max_t |g(γ̇, γ̇) - 1|` over the samples.
    pub max_speed_drift: f64,
}

impl GeodesicPath {
    pub fn start(&self) -> PathSample {
        self.samples[0]
    }

    pub fn end(&self) -> PathSample {
        *self.samples.last().expect("paths always hold the start sample")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Trapezoid weights on the (non-uniform at the end) sample times.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.samples.len();
        let mut w = vec![0.0; n];
        for k in 0..n.saturating_sub(1) {
            let dt = self.samples[k + 1].t - self.samples[k].t;
            w[k] += 0.5 * dt;
            w[k + 1] += 0.5 * dt;
        }
        w
    }
}

/// Right-hand side of the geodesic flow in `(x¹, x², φ)`:
/// `ẋ = e^{-λ}(cos φ, sin φ)`, `φ̇ = e^{-λ}(-∂₁λ sin φ + ∂₂λ cos φ)`.
#[inline]
pub(crate) fn flow_rhs(surface: &ConformalSurface, s: [f64; 3]) -> [f64; 3] {
    let (lambda, grad) = surface.factor.value_gradient([s[0], s[1]]);
    let e = (-lambda).exp();
    let (sin, cos) = s[2].sin_cos();
    [e * cos, e * sin, e * (-grad[0] * sin + grad[1] * cos)]
}

#[inline]
pub(crate) fn rk4_step(surface: &ConformalSurface, s: [f64; 3], h: f64) -> [f64; 3] {
    let k1 = flow_rhs(surface, s);
    let k2 = flow_rhs(surface, axpy(s, 0.5 * h, k1));
    let k3 = flow_rhs(surface, axpy(s, 0.5 * h, k2));
    let k4 = flow_rhs(surface, axpy(s, h, k3));
    let mut out = s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(s: [f64; N], a: f64, k: [f64; N]) -> [f64; N] {
    let mut out = s;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

#[inline]
fn radius_sq(s: &[f64]) -> f64 {
    s[0] * s[0] + s[1] * s[1]
}

/// Moves a phase vector along the flow by time `t` (either sign) with a
/// single RK4 step; only meant for short displacements.
pub(crate) fn flow_shift(surface: &ConformalSurface, v: PhaseVector, t: f64) -> PhaseVector {
    let s = rk4_step(surface, [v.position[0], v.position[1], v.angle], t);
    PhaseVector::new([s[0], s[1]], s[2])
}

/// Bisection for the flow time `h ∈ (0, dt]` at which one RK4 step from `s`
/// reaches `|x|² = 1`. `s` is inside (or on) the disc and a full step is
/// outside.
pub(crate) fn boundary_crossing<F>(step: F, dt: f64, t0: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (0.0_f64, dt);
    let tol = rel_tol * (t0 + dt).max(1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if step(mid) > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Traces the forward geodesic from `start` until it leaves the disc.
pub fn trace_geodesic(
    surface: &ConformalSurface,
    start: PhaseVector,
    step: f64,
) -> Result<GeodesicPath> {
    trace_geodesic_with(surface, start, &TraceOptions::with_step(step))
}

pub fn trace_geodesic_with(
    surface: &ConformalSurface,
    start: PhaseVector,
    opts: &TraceOptions,
) -> Result<GeodesicPath> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {}", opts.step)));
    }
    let r2 = radius_sq(&start.position);
    if r2 > 1.0 + BOUNDARY_SLACK {
        return Err(Error::OutsideDomain { radius: r2.sqrt() });
    }
    let speed_drift = |s: &[f64; 3]| {
        let x = [s[0], s[1]];
        let v = flow_rhs(surface, *s);
        (surface.inner(x, [v[0], v[1]], [v[0], v[1]]) - 1.0).abs()
    };

    let mut state = [start.position[0], start.position[1], start.angle];
    let mut samples = vec![PathSample { t: 0.0, position: start.position, angle: start.angle }];
    let mut max_drift = speed_drift(&state);

    // On the boundary and not pointing strictly inwards: nothing to trace.
    let outward = start.position[0] * start.angle.cos() + start.position[1] * start.angle.sin();
    if r2 >= 1.0 - BOUNDARY_SLACK && outward >= 0.0 {
        return Ok(GeodesicPath {
            samples,
            step: opts.step,
            exit_time: 0.0,
            termination: Termination::Outgoing,
            max_speed_drift: max_drift,
        });
    }

    let dt = opts.step;
    let mut t = 0.0;
    loop {
        let next = rk4_step(surface, state, dt);
        if radius_sq(&next) > 1.0 {
            let h = boundary_crossing(
                |h| radius_sq(&rk4_step(surface, state, h)),
                dt,
                t,
                opts.root_tolerance,
            );
            let last = rk4_step(surface, state, h);
            max_drift = max_drift.max(speed_drift(&last));
            samples.push(PathSample { t: t + h, position: [last[0], last[1]], angle: last[2] });
            if max_drift > opts.speed_tolerance {
                return Err(Error::NotUnitSpeed { drift: max_drift, tolerance: opts.speed_tolerance });
            }
            return Ok(GeodesicPath {
                samples,
                step: dt,
                exit_time: t + h,
                termination: Termination::Exited,
                max_speed_drift: max_drift,
            });
        }
        state = next;
        t += dt;
        max_drift = max_drift.max(speed_drift(&state));
        samples.push(PathSample { t, position: [state[0], state[1]], angle: state[2] });
        if t > opts.max_length {
            return Err(Error::StepCapExceeded { max_length: opts.max_length });
        }
    }
}

/// `τ₊(x, ξ)`, the forward exit time.
pub fn exit_time(surface: &ConformalSurface, v: PhaseVector, opts: &TraceOptions) -> Result<f64> {
    Ok(trace_geodesic_with(surface, v, opts)?.exit_time)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chord_exit(x: [f64; 2], phi: f64) -> f64 {
        let xi = [phi.cos(), phi.sin()];
        let b = x[0] * xi[0] + x[1] * xi[1];
        -b + (b * b + 1.0 - (x[0] * x[0] + x[1] * x[1])).sqrt()
    }

    #[test]
    fn euclidean_chords() {
        let s = ConformalSurface::euclidean();
        let p = trace_geodesic(&s, PhaseVector::new([0.0, 0.0], 0.0), 1e-3).unwrap();
        assert!((p.exit_time - 1.0).abs() < 1e-12);
        let end = p.end().position;
        assert!((end[0] - 1.0).abs() < 1e-12 && end[1].abs() < 1e-12);
        let p = trace_geodesic(&s, PhaseVector::new([0.5, 0.0], PI), 1e-3).unwrap();
        assert!((p.exit_time - 1.5).abs() < 1e-12);
        let t = exit_time(&s, PhaseVector::new([0.6, 0.0], PI / 2.0), &TraceOptions::default()).unwrap();
        assert!((t - 0.8).abs() < 1e-12);
        for phi in [0.0, 1.0, 2.0, 5.5] {
            let t = exit_time(&s, PhaseVector::new([0.0, 0.0], phi), &TraceOptions::default()).unwrap();
            assert!((t - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_exit_time_matches_chord_formula() {
        let s = ConformalSurface::euclidean();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let r = rng.gen::<f64>().sqrt() * 0.999;
            let a = rng.gen::<f64>() * 2.0 * PI;
            let phi = rng.gen::<f64>() * 2.0 * PI;
            let x = [r * a.cos(), r * a.sin()];
            let t = exit_time(&s, PhaseVector::new(x, phi), &TraceOptions::with_step(1e-2)).unwrap();
            assert!((t - chord_exit(x, phi)).abs() < 1e-10, "{t} vs {}", chord_exit(x, phi));
        }
    }

    #[test]
    fn outgoing_boundary_point_has_zero_exit_time() {
        let s = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let p = trace_geodesic(&s, PhaseVector::new([0.0, 1.0], 1.0), 1e-3).unwrap();
        assert_eq!(p.exit_time, 0.0);
        assert_eq!(p.termination, Termination::Outgoing);
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn rejects_points_outside_the_disc() {
        let s = ConformalSurface::euclidean();
        assert!(matches!(
            trace_geodesic(&s, PhaseVector::new([1.1, 0.0], PI), 1e-3),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn trapped_geodesic_hits_step_cap() {
        // c = 4 is larger than a hemisphere: great circles near the equator stay inside.
        let s = ConformalSurface::parse("near_constant_curvature(4)").unwrap();
        let opts = TraceOptions { max_length: 20.0, ..TraceOptions::with_step(1e-2) };
        // Tangent start point on the circle |x| = r0 where the great circle lies inside.
        let r = trace_geodesic_with(&s, PhaseVector::new([0.0, -0.5], 0.0), &opts);
        assert!(matches!(r, Err(Error::StepCapExceeded { .. })));
    }

    #[test]
    fn bump_geodesic_unit_speed_and_reversible() {
        let s = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let start = PhaseVector::new([0.3, -0.2], 1.0);
        let p = trace_geodesic(&s, start, 1e-3).unwrap();
        assert!(p.max_speed_drift <= 1e-9);
        let end = p.end().phase().reversed();
        let back = trace_geodesic(&s, end, 1e-3).unwrap();
        // The return trip passes through the start at time τ₊; compare there.
        let k = back
            .samples
            .iter()
            .min_by(|a, b| (a.t - p.exit_time).abs().total_cmp(&(b.t - p.exit_time).abs()))
            .unwrap();
        let remaining = p.exit_time - k.t;
        let closest = flow_shift(&s, k.phase(), remaining);
        assert!((closest.position[0] - start.position[0]).abs() < 1e-7);
        assert!((closest.position[1] - start.position[1]).abs() < 1e-7);
    }

    #[test]
    fn bump_exit_time_richardson() {
        let s = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let v = PhaseVector::new([0.3, -0.2], 1.0);
        let t = |h: f64| exit_time(&s, v, &TraceOptions::with_step(h)).unwrap();
        let (t1, t2, t4, t8) = (t(1e-3), t(5e-4), t(2.5e-4), t(1.25e-4));
        assert!((t1 - t2).abs() < 1e-8);
        assert!((t2 - t4).abs() < 1e-8);
        // 4th order: errors against the finest run shrink by at least 8x per halving.
        let e_coarse = (t(4e-2) - t8).abs();
        let e_fine = (t(2e-2) - t8).abs();
        assert!(e_coarse / e_fine >= 8.0, "ratio {}", e_coarse / e_fine);
    }

    /// Integrates `ẍᵏ + Γᵏᵢⱼ ẋⁱ ẋʲ = 0` with the Christoffel symbols of
    /// `e^{2λ}δ` as a second-order system; independent of the `(x, φ)` form.
    fn christoffel_exit(s: &ConformalSurface, v: PhaseVector, h: f64) -> f64 {
        let rhs = |y: [f64; 4]| {
            let (_, g) = s.factor.value_gradient([y[0], y[1]]);
            let (u0, u1) = (y[2], y[3]);
            let gu = g[0] * u0 + g[1] * u1;
            let uu = u0 * u0 + u1 * u1;
            [u0, u1, -2.0 * gu * u0 + uu * g[0], -2.0 * gu * u1 + uu * g[1]]
        };
        let t0 = v.tangent(s);
        let mut y = [v.position[0], v.position[1], t0[0], t0[1]];
        let mut t = 0.0;
        loop {
            let k1 = rhs(y);
            let k2 = rhs(axpy(y, 0.5 * h, k1));
            let k3 = rhs(axpy(y, 0.5 * h, k2));
            let k4 = rhs(axpy(y, h, k3));
            let mut n = y;
            for i in 0..4 {
                n[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let (r0, r1) = (radius_sq(&y), radius_sq(&n));
            if r1 > 1.0 {
                // Linear interpolation of |x|² in the last interval; O(h²) accurate.
                return t + h * (1.0 - r0) / (r1 - r0);
            }
            y = n;
            t += h;
        }
    }

    #[test]
    fn angle_form_agrees_with_christoffel_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in ["bump(0.2, 0.5)", "near_constant_curvature(0.5)", "bump(-0.3, 0.3)"] {
            let s = ConformalSurface::parse(spec).unwrap();
            for _ in 0..10 {
                let r = rng.gen::<f64>().sqrt() * 0.9;
                let a = rng.gen::<f64>() * 2.0 * PI;
                let v = PhaseVector::new([r * a.cos(), r * a.sin()], rng.gen::<f64>() * 2.0 * PI);
                let ours = exit_time(&s, v, &TraceOptions::default()).unwrap();
                let oracle = christoffel_exit(&s, v, 1e-4);
                assert!((ours - oracle).abs() < 1e-6, "{spec}: {ours} vs {oracle}");
            }
        }
    }

    #[test]
    fn bump_exit_time_matches_independent_root_finding() {
        let s = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let r = rng.gen::<f64>().sqrt() * 0.98;
            let a = rng.gen::<f64>() * 2.0 * PI;
            let v = PhaseVector::new([r * a.cos(), r * a.sin()], rng.gen::<f64>() * 2.0 * PI);
            let path = trace_geodesic(&s, v, 1e-3).unwrap();
            // Oracle: walk from the last interior sample with 64 sub-steps, then
            // solve the crossing by the secant method on |x|² - 1.
            let n = path.len();
            let base = if n >= 2 { path.samples[n - 2] } else { path.samples[0] };
            let state = [base.position[0], base.position[1], base.angle];
            let f = |h: f64| {
                let sub = 64;
                let mut st = state;
                for _ in 0..sub {
                    st = rk4_step(&s, st, h / sub as f64);
                }
                radius_sq(&st) - 1.0
            };
            let (mut a0, mut a1) = (0.0, path.step);
            let (mut f0, mut f1) = (f(a0), f(a1));
            for _ in 0..60 {
                if (a1 - a0).abs() < 1e-15 || f1 == f0 {
                    break;
                }
                let a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
                a0 = a1;
                f0 = f1;
                a1 = a2;
                f1 = f(a1);
            }
            let oracle = base.t + a1;
            assert!((path.exit_time - oracle).abs() < 1e-10, "{} vs {oracle}", path.exit_time);
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_exit_time() {
        let s = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let p = trace_geodesic(&s, PhaseVector::new([0.1, 0.2], 2.0), 1e-3).unwrap();
        let total: f64 = p.trapezoid_weights().iter().sum();
        assert!((total - p.exit_time).abs() < 1e-12);
    }
}
