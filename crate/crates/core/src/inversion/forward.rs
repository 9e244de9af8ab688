use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::zernike::ZernikeBasis;
use crate::geometry::{ConformalSurface, TraceOptions};
use crate::sphere_bundle::{binomial, Attenuation, PhaseFunction};
use crate::transforms::{RayGrid, RayPaths};
use crate::{Error, Point, Result, C64};

/// Default cap on `rows × cols`.
pub const DEFAULT_SIZE_CAP: usize = 10_000_000;

/// What the coefficient vector describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForwardMode {
    /// A single function `f` on `M`.
    Scalar,
    /// A pair `(f, β)` of symmetric tensors of ranks `m` and `m − 1`.
    /// Columns are blocks of the basis: `f_0 … f_m`, then `β_0 … β_{m−1}`.
    Pair { m: usize },
}

impl ForwardMode {
    /// `(rank, component)` of each coefficient block.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        match *self {
            ForwardMode::Scalar => vec![(0, 0)],
            ForwardMode::Pair { m } => (0..=m).map(|j| (m, j)).chain((0..m).map(|j| (m - 1, j))).collect(),
        }
    }
}

/// Everything that determines a forward matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardSpec {
    pub mode: ForwardMode,
    pub basis_degree: usize,
    pub ray_grid: RayGrid,
    pub trace: TraceOptions,
    pub surface: ConformalSurface,
    /// Registry ids of `h`, `α₁`, `α₂`.
    pub attenuation: [String; 3],
}

impl ForwardSpec {
    /// SHA-256 of the JSON form.
    pub fn provenance_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serialises");
        hex::encode(Sha256::digest(json))
    }
}

/// Dense discretisation `A` of the attenuated transform: coefficient vectors
/// in a Zernike basis (one block per tensor component) to stacked fan-beam
/// samples, rows in [`RayGrid`] order.
#[derive(Debug, Clone)]
pub struct ForwardMatrix {
    pub spec: ForwardSpec,
    pub basis: ZernikeBasis,
    pub provenance: String,
    pub matrix: DMatrix<C64>,
}

impl ForwardMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, c: &DVector<C64>) -> Result<DVector<C64>> {
        if c.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), actual: c.len() });
        }
        Ok(&self.matrix * c)
    }

    /// Writes the matrix as row-major little-endian `(re, im)` pairs of
    /// 64-bit floats, with no header.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let v = self.matrix[(i, j)];
                out.write_all(&v.re.to_le_bytes())?;
                out.write_all(&v.im.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Coefficient block `b` as a function of `x`.
    pub fn block_value(&self, coeffs: &[C64], block: usize, x: Point) -> C64 {
        let nb = self.basis.len();
        self.basis.combine(&coeffs[block * nb..(block + 1) * nb], x)
    }
}

/// `A* d`, the conjugate transpose applied to a data vector.
pub fn adjoint_apply(a: &ForwardMatrix, d: &DVector<C64>) -> Result<DVector<C64>> {
    if d.len() != a.rows() {
        return Err(Error::DimensionMismatch { expected: a.rows(), actual: d.len() });
    }
    Ok(a.matrix.ad_mul(d))
}

/// Assembles `A` ray by ray (rows are independent, so the result does not
/// depend on the thread count). Each row integrates, along the traced
/// geodesic, every basis function times the restriction weight of its
/// tensor component, with the attenuation factor and trapezoid weights of
/// [`RayPaths::quadrature_weights`].
pub fn assemble_forward(
    mode: ForwardMode,
    basis_degree: usize,
    atten: &Attenuation,
    ray_grid: &RayGrid,
    surface: &ConformalSurface,
    trace: &TraceOptions,
    size_cap: usize,
) -> Result<ForwardMatrix> {
    let basis = ZernikeBasis::new(basis_degree);
    let blocks = mode.blocks();
    let nb = basis.len();
    let (rows, cols) = (ray_grid.len(), nb * blocks.len());
    if rows.saturating_mul(cols) > size_cap {
        return Err(Error::SizeGuard { rows, cols, cap: size_cap });
    }
    let paths = RayPaths::trace(surface, ray_grid, trace)?;
    let weights = paths.quadrature_weights(atten);
    let row_data: Vec<Vec<C64>> = paths
        .paths
        .par_iter()
        .zip(weights.par_iter())
        .map(|(path, w)| {
            let mut row = vec![C64::new(0.0, 0.0); cols];
            for (s, wk) in path.samples.iter().zip(w) {
                let z = basis.eval_all(s.position);
                let e = (-surface.lambda(s.position)).exp();
                let xi = [e * s.angle.cos(), e * s.angle.sin()];
                for (b, &(rank, j)) in blocks.iter().enumerate() {
                    let coef = binomial(rank, j) * xi[0].powi((rank - j) as i32) * xi[1].powi(j as i32);
                    let wc = wk * coef;
                    for (r, zl) in row[b * nb..(b + 1) * nb].iter_mut().zip(&z) {
                        *r += wc * *zl;
                    }
                }
            }
            row
        })
        .collect();
    let matrix = DMatrix::from_fn(rows, cols, |i, j| row_data[i][j]);
    let spec = ForwardSpec {
        mode,
        basis_degree,
        ray_grid: *ray_grid,
        trace: *trace,
        surface: *surface,
        attenuation: atten.ids.clone(),
    };
    let provenance = spec.provenance_hash();
    Ok(ForwardMatrix { spec, basis, provenance, matrix })
}

/// Basis element `index` of block `block` as a function on `SM` (its
/// restriction), for recomputing single columns.
pub struct BasisElement<'a> {
    pub matrix: &'a ForwardMatrix,
    pub column: usize,
}

impl PhaseFunction for BasisElement<'_> {
    fn eval(&self, x: Point, phi: f64) -> C64 {
        let a = self.matrix;
        let nb = a.basis.len();
        let (block, l) = (self.column / nb, self.column % nb);
        let (rank, j) = a.spec.mode.blocks()[block];
        let e = (-a.spec.surface.lambda(x)).exp();
        let xi = [e * phi.cos(), e * phi.sin()];
        let coef = binomial(rank, j) * xi[0].powi((rank - j) as i32) * xi[1].powi(j as i32);
        C64::new(a.basis.eval_all(x)[l] * coef, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_attenuation, rng};
    use crate::transforms::{full_transform, XrayOptions};
    use nalgebra::SymmetricEigen;
    use rand::Rng;

    fn random_vec<R: Rng>(r: &mut R, n: usize) -> DVector<C64> {
        DVector::from_fn(n, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
    }

    fn small(mode: ForwardMode, atten: &Attenuation) -> ForwardMatrix {
        let surface = ConformalSurface::parse("bump(0.2, 0.5)").unwrap();
        let grid = RayGrid::new(8, 8, 1.4).unwrap();
        assemble_forward(mode, 4, atten, &grid, &surface, &TraceOptions::with_step(2e-3), DEFAULT_SIZE_CAP).unwrap()
    }

    #[test]
    fn constant_column_is_chord_lengths() {
        let grid = RayGrid::new(4, 6, 1.4).unwrap();
        let a = assemble_forward(
            ForwardMode::Scalar,
            0,
            &Attenuation::zero(),
            &grid,
            &ConformalSurface::euclidean(),
            &TraceOptions::default(),
            DEFAULT_SIZE_CAP,
        )
        .unwrap();
        assert_eq!((a.rows(), a.cols()), (24, 1));
        for k in 0..24 {
            assert!((a.matrix[(k, 0)] - C64::new(grid.ray(k).euclidean_chord(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn columns_match_independent_transforms() {
        let mut r = rng(4);
        let atten = random_attenuation(&mut r, 1, 0.5);
        for mode in [ForwardMode::Scalar, ForwardMode::Pair { m: 1 }, ForwardMode::Pair { m: 2 }] {
            let a = small(mode, &atten);
            for column in [0, 3, a.cols() - 1] {
                let data = full_transform(
                    &BasisElement { matrix: &a, column },
                    &atten,
                    &a.spec.surface,
                    &a.spec.ray_grid,
                    &XrayOptions { trace: a.spec.trace, underresolved_threshold: None },
                )
                .unwrap();
                for (k, v) in data.values.iter().enumerate() {
                    assert!((a.matrix[(k, column)] - v).norm() <= 1e-12 * v.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn linearity_and_adjoint() {
        let mut r = rng(7);
        let atten = random_attenuation(&mut r, 1, 0.5);
        let a = small(ForwardMode::Pair { m: 1 }, &atten);
        let (e1, e2) = (random_vec(&mut r, a.cols()), random_vec(&mut r, a.cols()));
        let (c1, c2) = (C64::new(0.3, -2.0), C64::new(1.5, 0.1));
        let lhs = a.apply(&(e1.clone() * c1 + e2.clone() * c2)).unwrap();
        let rhs = a.apply(&e1).unwrap() * c1 + a.apply(&e2).unwrap() * c2;
        assert!((lhs - &rhs).norm() <= 1e-12 * rhs.norm());

        for _ in 0..5 {
            let f = random_vec(&mut r, a.cols());
            let d = random_vec(&mut r, a.rows());
            let af = a.apply(&f).unwrap();
            let ad = adjoint_apply(&a, &d).unwrap();
            let defect = (af.dotc(&d) - f.dotc(&ad)).norm() / (af.norm() * d.norm());
            assert!(defect <= 1e-12);
        }
        assert!(adjoint_apply(&a, &DVector::zeros(a.rows())).unwrap().iter().all(|v| v.norm() == 0.0));
        assert!(adjoint_apply(&a, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn normal_matrix_is_positive_semidefinite() {
        let mut r = rng(1);
        let atten = random_attenuation(&mut r, 1, 0.5);
        let a = small(ForwardMode::Scalar, &atten);
        let n = a.matrix.ad_mul(&a.matrix);
        let eig = SymmetricEigen::new(n.clone());
        let scale = a.matrix.norm().powi(2);
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10 * scale));
        assert!((n.adjoint() - &n).norm() <= 1e-12 * n.norm());
    }

    #[test]
    fn size_guard_and_provenance() {
        let grid = RayGrid::default();
        let err = assemble_forward(
            ForwardMode::Scalar,
            43,
            &Attenuation::zero(),
            &grid,
            &ConformalSurface::euclidean(),
            &TraceOptions::default(),
            1000,
        );
        assert!(matches!(err, Err(Error::SizeGuard { .. })));
        let a = small(ForwardMode::Scalar, &Attenuation::zero());
        let b = small(ForwardMode::Scalar, &Attenuation::zero());
        assert_eq!(a.provenance, b.provenance);
        assert_eq!(a.provenance.len(), 64);
        assert_ne!(a.provenance, small(ForwardMode::Pair { m: 1 }, &Attenuation::zero()).provenance);
    }

    #[test]
    fn binary_dump_layout() {
        let a = small(ForwardMode::Scalar, &Attenuation::zero());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bin");
        a.dump(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), a.rows() * a.cols() * 16);
        let at = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        let (i, j) = (3, 2);
        let k = 2 * (i * a.cols() + j);
        assert_eq!(C64::new(at(k), at(k + 1)), a.matrix[(i, j)]);
    }
}
