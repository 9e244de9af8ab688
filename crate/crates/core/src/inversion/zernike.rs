use serde::{Deserialize, Serialize};

use crate::sphere_bundle::{binomial, Polynomial};
use crate::{Error, Point, Result, C64};

/// Angular part of a Zernike function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Azimuth {
    Cos,
    Sin,
}

/// One Zernike function `N R_n^m(r) · {cos, sin}(mθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZernikeIndex {
    pub n: usize,
    pub m: usize,
    pub azimuth: Azimuth,
}

/// Real Zernike functions of degree `≤ max_degree`, orthonormal for the
/// normalised area measure `(1/π) dx` on the unit disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZernikeBasis {
    max_degree: usize,
    indices: Vec<ZernikeIndex>,
}

impl ZernikeBasis {
    pub fn new(max_degree: usize) -> Self {
        let mut indices = Vec::with_capacity(Self::dimension(max_degree));
        for n in 0..=max_degree {
            for m in (n % 2..=n).step_by(2) {
                indices.push(ZernikeIndex { n, m, azimuth: Azimuth::Cos });
                if m > 0 {
                    indices.push(ZernikeIndex { n, m, azimuth: Azimuth::Sin });
                }
            }
        }
        ZernikeBasis { max_degree, indices }
    }

    /// `(D + 1)(D + 2) / 2` functions up to degree `D`.
    pub fn dimension(max_degree: usize) -> usize {
        (max_degree + 1) * (max_degree + 2) / 2
    }

    /// Smallest degree whose basis has at least `n` functions.
    pub fn degree_for_dimension(n: usize) -> usize {
        (0..).find(|&d| Self::dimension(d) >= n).expect("unbounded search")
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[ZernikeIndex] {
        &self.indices
    }

    /// `(1 + n)^{-order}` per basis function, for [`super::cgls_weighted`].
    pub fn smoothness_weights(&self, order: f64) -> Vec<f64> {
        self.indices.iter().map(|z| (1.0 + z.n as f64).powf(-order)).collect()
    }

    fn normalisation(n: usize, m: usize) -> f64 {
        let delta = if m == 0 { 2.0 } else { 1.0 };
        (2.0 * (n as f64 + 1.0) / delta).sqrt()
    }

    /// All basis functions at `x`, in basis order. Radial parts come from
    /// the Jacobi recurrence `R_n^m = (−1)^k r^m P_k^{(m,0)}(1 − 2r²)`,
    /// `k = (n − m)/2`, which stays stable at high degree.
    pub fn eval_all(&self, x: Point) -> Vec<f64> {
        let d = self.max_degree;
        let r2 = x[0] * x[0] + x[1] * x[1];
        let t = 1.0 - 2.0 * r2;
        // z^m = (x + iy)^m = r^m e^{imθ}.
        let mut zpow = Vec::with_capacity(d + 1);
        let mut z = C64::new(1.0, 0.0);
        for _ in 0..=d {
            zpow.push(z);
            z *= C64::new(x[0], x[1]);
        }
        // jacobi[m][k] = (−1)^k P_k^{(m,0)}(t).
        let mut jacobi: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
        for m in 0..=d {
            let kmax = (d - m) / 2;
            let a = m as f64;
            let mut p = Vec::with_capacity(kmax + 1);
            p.push(1.0);
            if kmax >= 1 {
                p.push((a + 1.0) + (a + 2.0) * (t - 1.0) / 2.0);
            }
            for k in 2..=kmax {
                let kf = k as f64;
                let a1 = 2.0 * kf * (kf + a) * (2.0 * kf + a - 2.0);
                let a2 = (2.0 * kf + a - 1.0) * a * a;
                let a3 = (2.0 * kf + a - 2.0) * (2.0 * kf + a - 1.0) * (2.0 * kf + a);
                let a4 = 2.0 * (kf + a - 1.0) * (kf - 1.0) * (2.0 * kf + a);
                let next = ((a2 + a3 * t) * p[k - 1] - a4 * p[k - 2]) / a1;
                p.push(next);
            }
            for (k, v) in p.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
            jacobi.push(p);
        }
        self.indices
            .iter()
            .map(|idx| {
                let k = (idx.n - idx.m) / 2;
                let ang = match idx.azimuth {
                    Azimuth::Cos => zpow[idx.m].re,
                    Azimuth::Sin => zpow[idx.m].im,
                };
                Self::normalisation(idx.n, idx.m) * jacobi[idx.m][k] * ang
            })
            .collect()
    }

    /// `Σ_j c_j Z_j(x)`.
    pub fn combine(&self, coeffs: &[C64], x: Point) -> C64 {
        self.eval_all(x).iter().zip(coeffs).map(|(z, c)| c * *z).sum()
    }

    /// Basis function `j` as an explicit polynomial in `(x¹, x²)`, from the
    /// factorial formula for `R_n^m`. Intended for low degrees, where the
    /// monomial coefficients stay moderate.
    pub fn polynomial(&self, j: usize) -> Result<Polynomial> {
        let idx = *self
            .indices
            .get(j)
            .ok_or_else(|| Error::InvalidArgument(format!("basis index {j} out of range")))?;
        let (n, m) = (idx.n, idx.m);
        let k = (n - m) / 2;
        // Re / Im of (x + iy)^m.
        let mut ang = Polynomial::zero();
        for b in 0..=m {
            let coeff = binomial(m, b);
            let (re, im) = match b % 4 {
                0 => (coeff, 0.0),
                1 => (0.0, coeff),
                2 => (-coeff, 0.0),
                _ => (0.0, -coeff),
            };
            let v = match idx.azimuth {
                Azimuth::Cos => re,
                Azimuth::Sin => im,
            };
            if v != 0.0 {
                ang.set(m - b, b, C64::new(v, 0.0));
            }
        }
        let mut r2 = Polynomial::zero();
        r2.set(2, 0, C64::new(1.0, 0.0));
        r2.set(0, 2, C64::new(1.0, 0.0));
        let mut radial = Polynomial::zero();
        let mut r2pow = Polynomial::constant(C64::new(1.0, 0.0));
        // R = Σ_s (−1)^s (n−s)! / (s! (k+m−s)! (k−s)!) r^{n−2s}; the power
        // r^{n−2s} = r^m · (r²)^{k−s} and r^m is carried by `ang`.
        let fact = |v: usize| (1..=v).fold(1.0, |a, i| a * i as f64);
        for q in 0..=k {
            let s = k - q;
            let c = if s % 2 == 0 { 1.0 } else { -1.0 } * fact(n - s) / (fact(s) * fact(k + m - s) * fact(k - s));
            radial = radial.add(&r2pow.scale(C64::new(c, 0.0)));
            r2pow = r2pow.mul(&r2);
        }
        Ok(radial.mul(&ang).scale(C64::new(Self::normalisation(n, m), 0.0)))
    }
}
