use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::Serialize;

use super::forward::{ForwardMatrix, ForwardMode};
use super::zernike::ZernikeBasis;
use crate::geometry::ConformalSurface;
use crate::sphere_bundle::{Attenuation, Polynomial, Scalar, SpatialGrid, SymmetricTensorField};
use crate::transforms::kernel_element;
use crate::{Error, Result, C64};

/// Spectral-gap rule for the near-null space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRule {
    /// Near-null candidates lie below `ceiling × σ_max`.
    pub ceiling: f64,
    /// A gap must have `σ_i / σ_{i+1}` above this ratio.
    pub min_ratio: f64,
}

impl Default for GapRule {
    fn default() -> Self {
        GapRule { ceiling: 1e-3, min_ratio: 10.0 }
    }
}

/// Outcome of the gap search on a descending spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap {
    /// Number of singular values above the gap.
    pub index: usize,
    /// `σ_{index−1} / σ_index`; infinite when nothing falls below the ceiling.
    pub ratio: f64,
}

/// Finds the largest ratio `σ_i / σ_{i+1}` with `σ_{i+1}` below the ceiling.
/// With nothing below the ceiling the near-null space is empty.
pub fn find_gap(singular_values: &[f64], rule: &GapRule) -> Result<Gap> {
    let n = singular_values.len();
    let Some(&smax) = singular_values.first() else {
        return Ok(Gap { index: 0, ratio: f64::INFINITY });
    };
    let ceiling = rule.ceiling * smax;
    let mut best: Option<Gap> = None;
    for i in 0..n.saturating_sub(1) {
        let below = singular_values[i + 1];
        if below > ceiling {
            continue;
        }
        let ratio = if below == 0.0 { f64::INFINITY } else { singular_values[i] / below };
        if best.is_none_or(|b| ratio > b.ratio) {
            best = Some(Gap { index: i + 1, ratio });
        }
    }
    match best {
        None => Ok(Gap { index: n, ratio: f64::INFINITY }),
        Some(g) if g.ratio > rule.min_ratio => Ok(g),
        Some(g) => Err(Error::NoGapFound { best_ratio: g.ratio }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub singular_values: Vec<f64>,
    pub ceiling: f64,
    pub gap_index: usize,
    pub gap_ratio: f64,
    pub near_null_dimension: usize,
    pub theoretical_dimension: usize,
    /// `‖(I − P_T) v‖` for each unit near-null vector `v`, `P_T` the
    /// projector onto the theoretical kernel span.
    pub residuals: Vec<f64>,
    /// Principal angles (radians) between the two subspaces.
    pub principal_angles: Vec<f64>,
    pub max_angle: f64,
    /// Smallest singular value of `A` on the orthogonal complement of the
    /// theoretical kernel span.
    pub complement_min_singular: f64,
    /// Largest relative least-squares error when projecting kernel elements
    /// onto the coefficient basis.
    pub projection_error: f64,
    /// Near-null right singular vectors as `[re, im]` pairs.
    pub near_null_basis: Vec<Vec<[f64; 2]>>,
}

/// Boundary-vanishing potentials `(1 − |x|²) Z_ℓ` of rank `rank`, one
/// component at a time, with `deg Z_ℓ ≤ degree`.
pub fn boundary_vanishing_basis(rank: usize, degree: Option<usize>) -> Result<Vec<SymmetricTensorField>> {
    let Some(degree) = degree else {
        return Ok(Vec::new());
    };
    let zb = ZernikeBasis::new(degree);
    let b = Polynomial::boundary_defining();
    let mut out = Vec::new();
    for j in 0..=rank {
        for l in 0..zb.len() {
            let mut comps: Vec<Scalar> = (0..=rank).map(|_| Arc::new(Polynomial::zero()) as Scalar).collect();
            comps[j] = Arc::new(b.mul(&zb.polynomial(l)?));
            out.push(SymmetricTensorField::new(rank, comps)?);
        }
    }
    Ok(out)
}

/// Highest potential degree whose kernel elements stay inside a basis of
/// degree `basis_degree`: `D − 1` without attenuation, else
/// `D − 2 − deg(h, α)`. `None` when no potential fits.
pub fn potential_degree(basis_degree: usize, atten: &Attenuation) -> Option<usize> {
    let d = basis_degree as i64;
    let q = if atten.is_zero() {
        d - 1
    } else {
        let da = atten.polynomial_degree().unwrap_or(usize::MAX / 2) as i64;
        (d - 1).min(d - 2 - da)
    };
    (q >= 0).then_some(q as usize)
}

/// Least-squares projection of tensor pairs onto the coefficient space of
/// `a`, by collocation on disc lattice points.
struct Projector {
    points: Vec<[f64; 2]>,
    pinv: DMatrix<f64>,
    eval: DMatrix<f64>,
}

impl Projector {
    fn new(basis: &ZernikeBasis) -> Result<Self> {
        let res = (basis.max_degree() + 4).max(8);
        let grid = SpatialGrid::new(res)?;
        let points = grid.nodes().to_vec();
        let rows: Vec<Vec<f64>> = points.iter().map(|&x| basis.eval_all(x)).collect();
        let eval = DMatrix::from_fn(points.len(), basis.len(), |i, j| rows[i][j]);
        let pinv = eval.clone().pseudo_inverse(1e-12).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(Projector { points, pinv, eval })
    }

    /// Returns coefficients and relative residual.
    fn project(&self, samples: &DVector<C64>) -> (DVector<C64>, f64) {
        let pinv = self.pinv.map(|v| C64::new(v, 0.0));
        let c = &pinv * samples;
        let fit = self.eval.map(|v| C64::new(v, 0.0)) * &c;
        let err = (fit - samples).norm() / samples.norm().max(f64::MIN_POSITIVE);
        (c, err)
    }
}

/// SVD analysis of a pair-mode forward matrix against the span of kernel
/// elements generated by `p_basis`.
pub fn kernel_analysis(
    a: &ForwardMatrix,
    atten: &Attenuation,
    p_basis: &[SymmetricTensorField],
    rule: &GapRule,
) -> Result<KernelReport> {
    let ForwardMode::Pair { m } = a.spec.mode else {
        return Err(Error::InvalidArgument("kernel analysis needs a pair-mode matrix".into()));
    };
    let surface: ConformalSurface = a.spec.surface;
    let cols = a.cols();
    let nb = a.basis.len();

    let svd = SVD::new(a.matrix.clone(), false, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    // Columns beyond the row count are exactly null.
    singular_values.resize(cols, 0.0);
    let v_t = svd.v_t.expect("requested");
    let gap = find_gap(&singular_values, rule)?;
    let near_null_dimension = cols - gap.index;
    let null_vectors = if gap.index < order.len() {
        let rows: Vec<usize> = order[gap.index..].to_vec();
        DMatrix::from_fn(cols, rows.len(), |i, k| v_t[(rows[k], i)].conj())
    } else {
        DMatrix::zeros(cols, 0)
    };
    if null_vectors.ncols() != near_null_dimension {
        return Err(Error::InvalidArgument("near-null space exceeds the row count".into()));
    }

    // Theoretical span.
    let projector = Projector::new(&a.basis)?;
    let mut span = DMatrix::<C64>::zeros(cols, p_basis.len());
    let mut projection_error: f64 = 0.0;
    for (k, p) in p_basis.iter().enumerate() {
        if p.rank() + 1 != m {
            return Err(Error::DimensionMismatch { expected: m - 1, actual: p.rank() });
        }
        let el = kernel_element(p, atten, &surface)?;
        let f_vals: Vec<Vec<C64>> = projector.points.iter().map(|&x| el.f.values_at(x)).collect();
        let b_vals: Vec<Vec<C64>> = projector.points.iter().map(|&x| el.beta.values_at(x)).collect();
        for (block, &(rank, j)) in a.spec.mode.blocks().iter().enumerate() {
            let vals = if rank == m { &f_vals } else { &b_vals };
            let samples = DVector::from_iterator(vals.len(), vals.iter().map(|v| v[j]));
            if samples.norm() == 0.0 {
                continue;
            }
            let (c, err) = projector.project(&samples);
            projection_error = projection_error.max(err);
            span.view_mut((block * nb, k), (nb, 1)).copy_from(&c);
        }
    }
    let (span_basis, complement) = orthonormal_split(&span);
    let theoretical_dimension = span_basis.ncols();

    let residuals = (0..null_vectors.ncols())
        .map(|k| {
            let v = null_vectors.column(k);
            let proj = &span_basis * span_basis.ad_mul(&v);
            ((v - proj).norm() / v.norm()).clamp(0.0, 1.0)
        })
        .collect();
    let principal_angles: Vec<f64> = if null_vectors.ncols() == 0 || theoretical_dimension == 0 {
        Vec::new()
    } else {
        let overlap = null_vectors.ad_mul(&span_basis);
        let mut cosines: Vec<f64> = overlap.singular_values().iter().copied().collect();
        cosines.sort_by(|a, b| b.total_cmp(a));
        cosines.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect()
    };
    let max_angle = if near_null_dimension != theoretical_dimension {
        std::f64::consts::FRAC_PI_2
    } else {
        principal_angles.iter().copied().fold(0.0, f64::max)
    };
    let complement_min_singular = if complement.ncols() == 0 {
        0.0
    } else {
        let restricted = &a.matrix * &complement;
        restricted.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
    };
    let near_null_basis = (0..null_vectors.ncols())
        .map(|k| null_vectors.column(k).iter().map(|v| [v.re, v.im]).collect())
        .collect();
    Ok(KernelReport {
        ceiling: rule.ceiling * singular_values.first().copied().unwrap_or(0.0),
        singular_values,
        gap_index: gap.index,
        gap_ratio: gap.ratio,
        near_null_dimension,
        theoretical_dimension,
        residuals,
        principal_angles,
        max_angle,
        complement_min_singular,
        projection_error,
        near_null_basis,
    })
}

/// Orthonormal bases of the column span of `t` and of its orthogonal
/// complement, from the eigenvectors of the Hermitian Gram projector.
fn orthonormal_split(t: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = t.nrows();
    let span = if t.ncols() == 0 {
        DMatrix::zeros(n, 0)
    } else {
        let svd = SVD::new(t.clone(), true, false);
        let u = svd.u.expect("requested");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-10 * smax).collect();
        DMatrix::from_fn(n, keep.len(), |i, k| u[(i, keep[k])])
    };
    let projector = DMatrix::<C64>::identity(n, n) - &span * span.adjoint();
    let eig = SymmetricEigen::new(projector);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let complement = DMatrix::from_fn(n, keep.len(), |i, k| eig.eigenvectors[(i, keep[k])]);
    (span, complement)
}
