use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::C64;

/// One CGLS iteration record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CglsStep {
    pub iteration: usize,
    /// `‖b − Ax‖`.
    pub residual: f64,
    /// `‖A*(b − Ax)‖ / ‖A*b‖`.
    pub normal_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CglsResult {
    #[serde(skip)]
    pub x: DVector<C64>,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<CglsStep>,
}

/// Conjugate gradients on the normal equations `A*A x = A*b`, started at
/// zero. Stops when the relative normal residual reaches `rtol` or after
/// `max_iter` iterations; in the latter case the last iterate is returned
/// with `converged = false`.
pub fn cgls(a: &DMatrix<C64>, b: &DVector<C64>, max_iter: usize, rtol: f64) -> CglsResult {
    cgls_weighted(a, b, &vec![1.0; a.ncols()], max_iter, rtol)
}

/// CGLS on `A W y = b` with `W = diag(weights)`, returning `x = W y`.
///
/// Started at zero, CGLS converges towards the minimum-norm solution; with
/// weights decaying in the basis degree that selects the smoothest
/// consistent solution instead of the one with the smallest coefficients.
/// Residuals in the trace are those of the weighted system.
pub fn cgls_weighted(a: &DMatrix<C64>, b: &DVector<C64>, weights: &[f64], max_iter: usize, rtol: f64) -> CglsResult {
    assert_eq!(weights.len(), a.ncols(), "one weight per column");
    let w = DVector::from_iterator(weights.len(), weights.iter().map(|&v| C64::new(v, 0.0)));
    let mut y = DVector::zeros(a.ncols());
    let mut r = b.clone();
    let mut s = a.ad_mul(&r).component_mul(&w);
    let s0 = s.norm();
    let finish = |y: DVector<C64>, converged, trace: Vec<CglsStep>| CglsResult {
        x: y.component_mul(&w),
        converged,
        iterations: trace.len(),
        trace,
    };
    if s0 == 0.0 {
        return finish(y, true, Vec::new());
    }
    let mut p = s.clone();
    let mut gamma = s.norm_squared();
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        let q = a * p.component_mul(&w);
        let qq = q.norm_squared();
        if qq == 0.0 {
            break;
        }
        let alpha = C64::new(gamma / qq, 0.0);
        y.axpy(alpha, &p, C64::new(1.0, 0.0));
        r.axpy(-alpha, &q, C64::new(1.0, 0.0));
        s = a.ad_mul(&r).component_mul(&w);
        let gamma_new = s.norm_squared();
        let rel = gamma_new.sqrt() / s0;
        trace.push(CglsStep { iteration: it, residual: r.norm(), normal_residual: rel });
        if rel <= rtol {
            return finish(y, true, trace);
        }
        let beta = C64::new(gamma_new / gamma, 0.0);
        p = &s + p * beta;
        gamma = gamma_new;
    }
    finish(y, false, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<C64> {
        let mut r = rng(seed);
        DMatrix::from_fn(rows, cols, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
    }

    #[test]
    fn solves_consistent_system() {
        let a = random_matrix(40, 15, 1);
        let x_true = random_matrix(15, 1, 2).column(0).into_owned();
        let b = &a * &x_true;
        let res = cgls(&a, &b, 100, 1e-13);
        assert!(res.converged);
        assert!((res.x - x_true).norm() < 1e-10);
        assert!(res.trace.windows(2).all(|w| w[1].residual <= w[0].residual * (1.0 + 1e-12)));
    }

    #[test]
    fn least_squares_solution_matches_qr() {
        let a = random_matrix(30, 8, 3);
        let b = random_matrix(30, 1, 4).column(0).into_owned();
        let res = cgls(&a, &b, 200, 1e-14);
        let normal = a.ad_mul(&a);
        let direct = normal.lu().solve(&a.ad_mul(&b)).unwrap();
        assert!((res.x - direct).norm() < 1e-9);
    }

    #[test]
    fn zero_data_and_iteration_cap() {
        let a = random_matrix(10, 5, 5);
        let res = cgls(&a, &DVector::zeros(10), 10, 1e-12);
        assert!(res.converged && res.x.iter().all(|v| v.norm() == 0.0));
        let b = random_matrix(10, 1, 6).column(0).into_owned();
        let res = cgls(&a, &b, 1, 1e-30);
        assert!(!res.converged);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn weighted_solution_is_the_weighted_minimum_norm_one() {
        // Underdetermined: x = W W* A* (A W W* A*)^{-1} b.
        let a = random_matrix(6, 12, 7);
        let b = random_matrix(6, 1, 8).column(0).into_owned();
        let weights: Vec<f64> = (0..12).map(|j| 1.0 / (1.0 + j as f64)).collect();
        let res = cgls_weighted(&a, &b, &weights, 200, 1e-14);
        let w2 = DMatrix::from_diagonal(&DVector::from_iterator(12, weights.iter().map(|v| C64::new(v * v, 0.0))));
        let gram = &a * &w2 * a.adjoint();
        let direct = &w2 * a.adjoint() * gram.lu().solve(&b).unwrap();
        assert!((&res.x - &direct).norm() < 1e-8 * direct.norm());
        assert!((&a * &res.x - &b).norm() < 1e-9);
    }
}
