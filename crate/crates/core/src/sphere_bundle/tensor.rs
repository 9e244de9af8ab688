use std::sync::Arc;

use super::field::{AngularField, AngularPart};
use super::grid::{SampledScalar, SpatialGrid};
use super::scalar::{constant_scalar, zero_scalar, Combination, ConformalPower, FnScalar, Polynomial, Scalar};
use crate::geometry::ConformalSurface;
use crate::{Error, Point, Result, C64};

/// Binomial coefficient as a float; exact for the ranks used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Independent components of a symmetric 2-tensor of rank `m` at a point:
/// entry `j` is `f_{1…1 2…2}` with `j` indices equal to 2.
pub type SymTensor = Vec<C64>;

/// Full component array of a rank-`m` tensor in two dimensions. Index tuples
/// are bit patterns: bit `s` set means index `s` equals 2.
#[derive(Debug, Clone, PartialEq)]
pub struct FullTensor {
    pub rank: usize,
    pub data: Vec<C64>,
}

impl FullTensor {
    pub fn zeros(rank: usize) -> Self {
        FullTensor { rank, data: vec![C64::new(0.0, 0.0); 1 << rank] }
    }

    /// Expands independent components into the full (symmetric) array.
    pub fn from_symmetric(sym: &[C64]) -> Self {
        let rank = sym.len() - 1;
        let data = (0..1usize << rank).map(|t| sym[t.count_ones() as usize]).collect();
        FullTensor { rank, data }
    }

    /// Entry at an index tuple with values in `{1, 2}`.
    pub fn get(&self, indices: &[usize]) -> C64 {
        self.data[bits(indices)]
    }

    pub fn set(&mut self, indices: &[usize], value: C64) {
        let b = bits(indices);
        self.data[b] = value;
    }

    /// `σ`: average over all index permutations. For a 2-D tensor this is
    /// the mean over all tuples with the same number of 2s.
    pub fn symmetrize(&self) -> SymTensor {
        let mut sum = vec![C64::new(0.0, 0.0); self.rank + 1];
        for (t, v) in self.data.iter().enumerate() {
            sum[t.count_ones() as usize] += v;
        }
        sum.iter().enumerate().map(|(j, s)| s / binomial(self.rank, j)).collect()
    }

    /// Contraction with `ξ` in every slot.
    pub fn contract(&self, xi: [f64; 2]) -> C64 {
        self.data
            .iter()
            .enumerate()
            .map(|(t, v)| {
                let twos = t.count_ones() as i32;
                v * xi[0].powi(self.rank as i32 - twos) * xi[1].powi(twos)
            })
            .sum()
    }
}

fn bits(indices: &[usize]) -> usize {
    indices.iter().enumerate().fold(0, |acc, (s, &i)| {
        assert!(i == 1 || i == 2, "tensor indices are 1 or 2");
        acc | ((i - 1) << s)
    })
}

/// Contraction of a symmetric tensor with `ξ`:
/// `Σ_j C(m, j) f_j (ξ¹)^{m-j} (ξ²)^j`.
pub fn contract_symmetric(sym: &[C64], xi: [f64; 2]) -> C64 {
    let m = sym.len() - 1;
    sym.iter()
        .enumerate()
        .map(|(j, f)| f * (binomial(m, j) * xi[0].powi((m - j) as i32) * xi[1].powi(j as i32)))
        .sum()
}

type Evaluator = Arc<dyn Fn(Point) -> SymTensor + Send + Sync>;

/// Symmetric tensor field of rank `m` on `M`, stored as its `m + 1`
/// independent components.
#[derive(Clone)]
pub struct SymmetricTensorField {
    rank: usize,
    components: Vec<Scalar>,
    /// Evaluates all components at once when that is cheaper than one at a
    /// time (derived tensors).
    joint: Option<Evaluator>,
}

impl std::fmt::Debug for SymmetricTensorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricTensorField")
            .field("rank", &self.rank)
            .field("components", &self.components)
            .finish()
    }
}

impl SymmetricTensorField {
    pub fn new(rank: usize, components: Vec<Scalar>) -> Result<Self> {
        if components.len() != rank + 1 {
            return Err(Error::DimensionMismatch { expected: rank + 1, actual: components.len() });
        }
        Ok(SymmetricTensorField { rank, components, joint: None })
    }

    pub fn zero(rank: usize) -> Self {
        SymmetricTensorField { rank, components: vec![zero_scalar(); rank + 1], joint: None }
    }

    pub fn scalar(f: Scalar) -> Self {
        SymmetricTensorField { rank: 0, components: vec![f], joint: None }
    }

    pub fn one_form(a1: Scalar, a2: Scalar) -> Self {
        SymmetricTensorField { rank: 1, components: vec![a1, a2], joint: None }
    }

    /// `g = e^{2λ}((dx¹)² + (dx²)²)`.
    pub fn metric(surface: &ConformalSurface) -> Self {
        let e: Scalar = Arc::new(ConformalPower { surface: *surface, power: 2.0 });
        SymmetricTensorField { rank: 2, components: vec![e.clone(), zero_scalar(), e], joint: None }
    }

    /// Polynomial components.
    pub fn from_polynomials(rank: usize, polys: Vec<Polynomial>) -> Result<Self> {
        let comps = polys.into_iter().map(|p| Arc::new(p) as Scalar).collect();
        SymmetricTensorField::new(rank, comps)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn components(&self) -> &[Scalar] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    /// Largest total degree of the components, when all are polynomial.
    pub fn polynomial_degree(&self) -> Option<usize> {
        self.components.iter().try_fold(0, |d, c| Some(d.max(c.polynomial_degree()?)))
    }

    pub fn values_at(&self, x: Point) -> SymTensor {
        if let Some(joint) = &self.joint {
            return joint(x);
        }
        self.components.iter().map(|c| c.value(x)).collect()
    }

    pub fn full_at(&self, x: Point) -> FullTensor {
        FullTensor::from_symmetric(&self.values_at(x))
    }

    /// The restriction `f(x, ξ)` with `ξ = e^{-λ}(cos φ, sin φ)`.
    pub fn restrict_at(&self, surface: &ConformalSurface, x: Point, phi: f64) -> C64 {
        let e = (-surface.lambda(x)).exp();
        let (s, c) = phi.sin_cos();
        contract_symmetric(&self.values_at(x), [e * c, e * s])
    }

    /// Restriction sampled on `grid × n_angles`.
    pub fn restrict(&self, surface: &ConformalSurface, grid: Arc<SpatialGrid>, n_angles: usize) -> Result<AngularField> {
        AngularField::from_fn(grid, n_angles, |x, phi| self.restrict_at(surface, x, phi))
    }

    pub fn add(&self, other: &SymmetricTensorField) -> Result<SymmetricTensorField> {
        if self.rank != other.rank {
            return Err(Error::DimensionMismatch { expected: self.rank, actual: other.rank });
        }
        let one = C64::new(1.0, 0.0);
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let mut c = Combination::new();
                c.push(one, vec![a.clone()]);
                c.push(one, vec![b.clone()]);
                c.into_scalar()
            })
            .collect();
        let joint = (self.joint.is_some() || other.joint.is_some()).then(|| {
            let (a, b) = (self.clone(), other.clone());
            Arc::new(move |x| {
                let (va, vb) = (a.values_at(x), b.values_at(x));
                va.iter().zip(vb).map(|(p, q)| p + q).collect()
            }) as Evaluator
        });
        Ok(SymmetricTensorField { rank: self.rank, components, joint })
    }

    pub fn scale(&self, s: C64) -> SymmetricTensorField {
        self.map_components(|c| {
            let mut out = Combination::new();
            out.push(s, vec![c.clone()]);
            out.into_scalar()
        })
    }

    /// Componentwise product with a scalar field.
    pub fn multiply(&self, f: &Scalar) -> SymmetricTensorField {
        self.map_components(|c| {
            let mut out = Combination::new();
            out.push(C64::new(1.0, 0.0), vec![f.clone(), c.clone()]);
            out.into_scalar()
        })
    }

    fn map_components<F: Fn(&Scalar) -> Scalar>(&self, f: F) -> SymmetricTensorField {
        SymmetricTensorField { rank: self.rank, components: self.components.iter().map(f).collect(), joint: None }
    }

    /// Multiplies by `(1 - |x|²)²` so the tensor and its first derivatives
    /// vanish on `∂M`.
    pub fn vanish_on_boundary(&self) -> SymmetricTensorField {
        let b = Polynomial::boundary_defining();
        self.multiply(&(Arc::new(b.mul(&b)) as Scalar))
    }

    /// `σ(A ⊗ B)`, component `j` being
    /// `Σ_{a+b=j} C(m,a) C(n,b) / C(m+n,j) · A_a B_b`.
    pub fn sym_product(&self, other: &SymmetricTensorField) -> SymmetricTensorField {
        let (m, n) = (self.rank, other.rank);
        let components = (0..=m + n)
            .map(|j| {
                let mut c = Combination::new();
                for a in j.saturating_sub(n)..=j.min(m) {
                    let w = binomial(m, a) * binomial(n, j - a) / binomial(m + n, j);
                    c.push(C64::new(w, 0.0), vec![self.components[a].clone(), other.components[j - a].clone()]);
                }
                c.into_scalar()
            })
            .collect();
        SymmetricTensorField { rank: m + n, components, joint: None }
    }

    /// `λF := σ(F ⊗ g)`; the restriction is unchanged.
    pub fn raise_degree(&self, surface: &ConformalSurface) -> SymmetricTensorField {
        self.sym_product(&SymmetricTensorField::metric(surface))
    }

    /// Inner derivative `∂p = σ(∇p)` for the Levi-Civita connection of
    /// `e^{2λ}δ`, where `Γ^k_{ij} = δ_{ik}∂_jλ + δ_{jk}∂_iλ − δ_{ij}∂_kλ`.
    pub fn inner_derivative(&self, surface: &ConformalSurface) -> SymmetricTensorField {
        let p = Arc::new(self.clone());
        let surface = *surface;
        let components = (0..=self.rank + 1)
            .map(|j| {
                let p = p.clone();
                Arc::new(FnScalar::new("inner_derivative", move |x| p.inner_derivative_at(&surface, x)[j])) as Scalar
            })
            .collect();
        let joint = Arc::new(move |x| p.inner_derivative_at(&surface, x)) as Evaluator;
        SymmetricTensorField { rank: self.rank + 1, components, joint: Some(joint) }
    }

    /// Independent components of `∂p` at one point.
    pub fn inner_derivative_at(&self, surface: &ConformalSurface, x: Point) -> SymTensor {
        let r = self.rank;
        let values = self.values_at(x);
        let grads: Vec<[C64; 2]> = self.components.iter().map(|c| c.gradient(x)).collect();
        let (_, dl) = surface.factor.value_gradient(x);
        // Christoffel symbols with 0-based indices: gamma[k][i][j].
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for (i, gki) in gk.iter_mut().enumerate() {
                for (j, g) in gki.iter_mut().enumerate() {
                    *g = delta(i, k) * dl[j] + delta(j, k) * dl[i] - delta(i, j) * dl[k];
                }
            }
        }
        let mut full = FullTensor::zeros(r + 1);
        for t in 0..1usize << (r + 1) {
            let i = t & 1;
            let js = t >> 1;
            let mut v = grads[js.count_ones() as usize][i];
            for s in 0..r {
                let js_s = (js >> s) & 1;
                for (k, gk) in gamma.iter().enumerate() {
                    let g = gk[i][js_s];
                    if g != 0.0 {
                        let replaced = (js & !(1 << s)) | (k << s);
                        v -= values[replaced.count_ones() as usize] * g;
                    }
                }
            }
            full.data[t] = v;
        }
        full.symmetrize()
    }

    /// Largest modulus of the components at `n` equally spaced boundary points.
    pub fn max_abs_on_boundary(&self, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                let x = [t.cos(), t.sin()];
                self.components.iter().map(|c| c.value(x).norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Tolerance on forbidden-mode energy accepted by [`lift_to_tensor`].
pub const LIFT_TOLERANCE: f64 = 1e-10;

/// Rebuilds a symmetric `m`-tensor from a field of degree `≤ m` with the
/// parity of `m`: each pair `f_k + f_{-k}` becomes a `k`-tensor `F_k` and
/// `F = Σ_i λ^i F_{m-2i}`.
pub fn lift_to_tensor(field: &AngularField, m: usize, surface: &ConformalSurface) -> Result<SymmetricTensorField> {
    lift_to_tensor_with(field, m, surface, LIFT_TOLERANCE)
}

pub fn lift_to_tensor_with(
    field: &AngularField,
    m: usize,
    surface: &ConformalSurface,
    tol: f64,
) -> Result<SymmetricTensorField> {
    let parity = if m.is_multiple_of(2) { AngularPart::Odd } else { AngularPart::Even };
    let energy = field.relative_energy(|k| parity.keeps(k));
    if energy > tol {
        return Err(Error::ParityViolation { rank: m, energy });
    }
    let degree = field.degree(tol);
    if degree > m {
        return Err(Error::DegreeViolation { rank: m, degree });
    }
    let grid = field.grid().clone();
    let i = C64::new(0.0, 1.0);
    let mut total = SymmetricTensorField::zero(m);
    for k in (m % 2..=m).step_by(2) {
        let mut comps: Vec<Vec<C64>> = vec![Vec::with_capacity(grid.len()); k + 1];
        for (node, &x) in grid.nodes().iter().enumerate() {
            let ek = (k as f64 * surface.lambda(x)).exp();
            let (ap, am) = (field.mode(node, k as i64), field.mode(node, -(k as i64)));
            for (j, comp) in comps.iter_mut().enumerate() {
                let v = if k == 0 { ap } else { ap * i.powu(j as u32) + am * (-i).powu(j as u32) };
                comp.push(v * ek);
            }
        }
        let components = comps
            .into_iter()
            .map(|v| Ok(Arc::new(SampledScalar::new(grid.clone(), v)?) as Scalar))
            .collect::<Result<Vec<_>>>()?;
        let mut fk = SymmetricTensorField::new(k, components)?;
        for _ in 0..(m - k) / 2 {
            fk = fk.raise_degree(surface);
        }
        total = total.add(&fk)?;
    }
    Ok(total)
}

/// The constant scalar tensor `c`.
pub fn constant_tensor(c: C64) -> SymmetricTensorField {
    SymmetricTensorField::scalar(constant_scalar(c))
}
