use super::field::AngularField;
use super::phase_fn::PhaseFunction;
use crate::geometry::geodesic::flow_shift;
use crate::geometry::surface::BOUNDARY_SLACK;
use crate::geometry::{ConformalSurface, PhaseVector};
use crate::{Result, Warning, C64};

/// Default flow-difference step.
pub const DEFAULT_FLOW_DELTA: f64 = 1e-4;

/// One flow-difference evaluation of `Gu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowDifference {
    pub value: C64,
    /// A second-order one-sided stencil was used because a shifted point
    /// left the disc.
    pub one_sided: bool,
}

fn outside(v: &PhaseVector) -> bool {
    let p = v.position;
    p[0] * p[0] + p[1] * p[1] > 1.0 + BOUNDARY_SLACK
}

/// `(Gu)(v) ≈ [u(φ_Δ v) − u(φ_{−Δ} v)] / 2Δ`, switching to
/// `±(−3u₀ + 4u(φ_{±Δ}) − u(φ_{±2Δ})) / 2Δ` near the boundary.
pub fn flow_derivative_at<P: PhaseFunction + ?Sized>(
    u: &P,
    surface: &ConformalSurface,
    v: PhaseVector,
    delta: f64,
) -> FlowDifference {
    let eval = |w: PhaseVector| u.eval(w.position, w.angle);
    let fwd = flow_shift(surface, v, delta);
    let back = flow_shift(surface, v, -delta);
    let two = 2.0 * delta;
    match (outside(&fwd), outside(&back)) {
        (false, false) | (true, true) => {
            FlowDifference { value: (eval(fwd) - eval(back)) / two, one_sided: outside(&fwd) }
        }
        (true, false) => {
            let back2 = flow_shift(surface, v, -two);
            let value = (eval(v) * 3.0 - eval(back) * 4.0 + eval(back2)) / two;
            FlowDifference { value, one_sided: true }
        }
        (false, true) => {
            let fwd2 = flow_shift(surface, v, two);
            let value = (eval(v) * -3.0 + eval(fwd) * 4.0 - eval(fwd2)) / two;
            FlowDifference { value, one_sided: true }
        }
    }
}

/// `Gu` on the sample set of `field`, with off-grid values interpolated.
/// Reports a `BoundaryProximity` warning counting one-sided samples.
pub fn flow_derivative(
    field: &AngularField,
    surface: &ConformalSurface,
    delta: f64,
) -> Result<(AngularField, Option<Warning>)> {
    let one_sided = std::sync::atomic::AtomicUsize::new(0);
    let out = AngularField::from_fn(field.grid().clone(), field.n_angles(), |x, phi| {
        let d = flow_derivative_at(field, surface, PhaseVector::new(x, phi), delta);
        if d.one_sided {
            one_sided.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        d.value
    })?;
    let count = one_sided.into_inner();
    Ok((out, (count > 0).then_some(Warning::BoundaryProximity { count })))
}
