use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use std::sync::Arc;

use super::scalar::ScalarField;
use crate::{Error, Point, Result, C64};

/// Uniform Cartesian lattice over `[-1, 1]²` with spacing `1 / resolution`,
/// restricted to the closed unit disc.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    resolution: usize,
    nodes: Vec<Point>,
    /// Lattice coordinates of each node.
    lattice: Vec<(usize, usize)>,
    /// Node index for each lattice point, `u32::MAX` outside the disc.
    lookup: Vec<u32>,
}

/// Serializable description of a [`SpatialGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub resolution: usize,
}

impl PartialEq for SpatialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.resolution == other.resolution
    }
}

const MLS_BASIS: usize = 10;
/// Support radius of the moving-least-squares weight, in lattice spacings.
const MLS_RADIUS: f64 = 3.5;

impl SpatialGrid {
    /// Default spacing `1/32`.
    pub const DEFAULT_RESOLUTION: usize = 32;

    pub fn new(resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let side = 2 * resolution + 1;
        let h = 1.0 / resolution as f64;
        let mut nodes = Vec::new();
        let mut lattice = Vec::new();
        let mut lookup = vec![u32::MAX; side * side];
        for i in 0..side {
            for j in 0..side {
                let x = [-1.0 + i as f64 * h, -1.0 + j as f64 * h];
                // Integer test avoids rounding at boundary nodes such as (1, 0).
                let (a, b) = (i as i64 - resolution as i64, j as i64 - resolution as i64);
                if a * a + b * b <= (resolution * resolution) as i64 {
                    lookup[i * side + j] = nodes.len() as u32;
                    nodes.push(x);
                    lattice.push((i, j));
                }
            }
        }
        Ok(SpatialGrid { resolution, nodes, lattice, lookup })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        SpatialGrid::new(spec.resolution)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { resolution: self.resolution }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    /// Whether a node lies on the unit circle (to lattice precision).
    pub fn is_boundary_node(&self, i: usize) -> bool {
        let (a, b) = self.lattice[i];
        let (a, b) = (a as i64 - self.resolution as i64, b as i64 - self.resolution as i64);
        a * a + b * b == (self.resolution * self.resolution) as i64
    }

    fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        let side = (2 * self.resolution + 1) as i64;
        if i < 0 || j < 0 || i >= side || j >= side {
            return None;
        }
        let k = self.lookup[(i * side + j) as usize];
        (k != u32::MAX).then_some(k as usize)
    }

    /// Moving-least-squares shape functions at `x`: pairs `(node, weight)`
    /// such that `Σ weight · u(node)` reproduces cubic polynomials exactly.
    /// Uses a compactly supported Wendland weight, so the approximant is
    /// smooth in `x`.
    pub fn mls_weights(&self, x: Point) -> Vec<(usize, f64)> {
        let h = self.spacing();
        let radius = MLS_RADIUS;
        let ci = ((x[0] + 1.0) / h).floor() as i64;
        let cj = ((x[1] + 1.0) / h).floor() as i64;
        let reach = radius.ceil() as i64 + 1;
        let mut picked: Vec<(usize, f64, [f64; MLS_BASIS])> = Vec::with_capacity(48);
        let mut moment = SMatrix::<f64, MLS_BASIS, MLS_BASIS>::zeros();
        for i in ci - reach..=ci + reach {
            for j in cj - reach..=cj + reach {
                let Some(k) = self.node_at(i, j) else { continue };
                let n = self.nodes[k];
                let (u, v) = ((n[0] - x[0]) / h, (n[1] - x[1]) / h);
                let d = (u * u + v * v).sqrt() / radius;
                if d >= 1.0 {
                    continue;
                }
                let w = (1.0 - d).powi(4) * (4.0 * d + 1.0);
                let p = [1.0, u, v, u * u, u * v, v * v, u * u * u, u * u * v, u * v * v, v * v * v];
                let pv = SVector::<f64, MLS_BASIS>::from_column_slice(&p);
                moment += w * pv * pv.transpose();
                picked.push((k, w, p));
            }
        }
        let mut rhs = SVector::<f64, MLS_BASIS>::zeros();
        rhs[0] = 1.0;
        let coeffs = match moment.cholesky() {
            Some(c) => c.solve(&rhs),
            None => moment.try_inverse().map(|m| m * rhs).unwrap_or_else(|| {
                // Degenerate neighbourhood (far outside the disc): nearest node.
                SVector::<f64, MLS_BASIS>::zeros()
            }),
        };
        if coeffs.iter().all(|c| *c == 0.0) {
            return self.nearest(x).map(|k| vec![(k, 1.0)]).unwrap_or_default();
        }
        picked
            .into_iter()
            .map(|(k, w, p)| {
                let pv = SVector::<f64, MLS_BASIS>::from_column_slice(&p);
                (k, w * pv.dot(&coeffs))
            })
            .collect()
    }

    /// Index of the node at `x`, if `x` is a lattice point of the grid.
    pub fn node_index(&self, x: Point) -> Option<usize> {
        let r = self.resolution as f64;
        let (fi, fj) = ((x[0] + 1.0) * r, (x[1] + 1.0) * r);
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-9 || (fj - j).abs() > 1e-9 {
            return None;
        }
        self.node_at(i as i64, j as i64)
    }

    pub fn nearest(&self, x: Point) -> Option<usize> {
        self.nodes
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1[0] - x[0]).powi(2) + (a.1[1] - x[1]).powi(2);
                let db = (b.1[0] - x[0]).powi(2) + (b.1[1] - x[1]).powi(2);
                da.total_cmp(&db)
            })
            .map(|(k, _)| k)
    }
}

/// Scalar field known by its samples at the nodes of a grid. Evaluates
/// exactly at nodes and by moving least squares elsewhere.
#[derive(Debug, Clone)]
pub struct SampledScalar {
    pub grid: Arc<SpatialGrid>,
    pub values: Vec<C64>,
}

impl SampledScalar {
    pub fn new(grid: Arc<SpatialGrid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), actual: values.len() });
        }
        Ok(SampledScalar { grid, values })
    }

    fn interpolate(&self, x: Point) -> C64 {
        self.grid.mls_weights(x).into_iter().map(|(k, w)| self.values[k] * w).sum()
    }
}

impl ScalarField for SampledScalar {
    fn value(&self, x: Point) -> C64 {
        match self.grid.node_index(x) {
            Some(k) => self.values[k],
            None => self.interpolate(x),
        }
    }

    /// Centred difference of the (smooth) interpolant.
    fn gradient(&self, x: Point) -> [C64; 2] {
        let h = 1e-3 * self.grid.spacing();
        let d = |e: [f64; 2]| {
            (self.interpolate([x[0] + h * e[0], x[1] + h * e[1]]) - self.interpolate([x[0] - h * e[0], x[1] - h * e[1]]))
                / (2.0 * h)
        };
        [d([1.0, 0.0]), d([0.0, 1.0])]
    }

    fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == C64::new(0.0, 0.0))
    }
}
