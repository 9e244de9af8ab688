use super::xray::attenuation_primitive;
use crate::geometry::{ConformalSurface, GeodesicPath};
use crate::sphere_bundle::{Attenuation, PhaseFunction, SymmetricTensorField};
use crate::{Error, Point, Result, C64};

/// Largest `|p|` allowed on `∂M` for a kernel potential.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// A pair `(f, β)` with `f` of rank `m` and `β` of rank `m − 1` whose
/// restrictions sum to `(G + 𝔞)(restrict p)`, hence `I^𝔞(f + β) = 0`.
#[derive(Debug, Clone)]
pub struct KernelElement {
    /// `∂p + σ(p ⊗ α)`, rank `m`.
    pub f: SymmetricTensorField,
    /// `h p`, rank `m − 1`.
    pub beta: SymmetricTensorField,
}

impl KernelElement {
    pub fn rank(&self) -> usize {
        self.f.rank()
    }

    /// `f(x, ξ) + β(x, ξ)` on `SM`.
    pub fn integrand(&self, surface: &ConformalSurface) -> KernelIntegrand<'_> {
        KernelIntegrand { element: self, surface: *surface }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KernelIntegrand<'a> {
    pub element: &'a KernelElement,
    pub surface: ConformalSurface,
}

impl PhaseFunction for KernelIntegrand<'_> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        self.element.f.restrict_at(&self.surface, x, phi) + self.element.beta.restrict_at(&self.surface, x, phi)
    }
}

/// Builds the kernel element generated by a potential `p` of rank `m − 1`
/// that vanishes on `∂M`.
pub fn kernel_element(
    p: &SymmetricTensorField,
    atten: &Attenuation,
    surface: &ConformalSurface,
) -> Result<KernelElement> {
    let max_abs = p.max_abs_on_boundary(256);
    if max_abs > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryNonvanishing { max_abs });
    }
    let f = p.inner_derivative(surface).add(&p.sym_product(&atten.alpha_tensor()))?;
    let beta = p.multiply(&atten.h);
    Ok(KernelElement { f, beta })
}

/// Degree-zero solutions of `du₀ = −u₀α` along a traced geodesic, integrated
/// backwards from the exit value: `u₀(t) = u₀(τ) exp(∫_t^τ α(γ̇))`. With
/// `u₀(τ) = 0` the only solution is `u₀ ≡ 0`, so no nonzero solution can
/// vanish at both ends.
pub fn degree_zero_solution(
    path: &GeodesicPath,
    atten: &Attenuation,
    surface: &ConformalSurface,
    exit_value: C64,
) -> Vec<C64> {
    let alpha_only = Attenuation::new(crate::sphere_bundle::zero_scalar(), atten.alpha.clone());
    let primitive = attenuation_primitive(path, &alpha_only, surface);
    let total = *primitive.last().expect("nonempty path");
    primitive.iter().map(|a| exit_value * (total - a).exp()).collect()
}
