use geoxray_core::geometry::{ConformalSurface, TraceOptions};
use geoxray_core::inversion::{
    assemble_forward, boundary_vanishing_basis, cgls, kernel_analysis, potential_degree, ForwardMatrix, ForwardMode,
    GapRule, DEFAULT_SIZE_CAP,
};
use geoxray_core::random::{random_attenuation, rng};
use geoxray_core::sphere_bundle::Attenuation;
use geoxray_core::transforms::RayGrid;
use geoxray_core::C64;
use nalgebra::DVector;
use rand::Rng;

fn bump() -> ConformalSurface {
    ConformalSurface::parse("bump(0.2, 0.5)").unwrap()
}

fn forward(mode: ForwardMode, degree: usize, atten: &Attenuation) -> ForwardMatrix {
    assemble_forward(mode, degree, atten, &RayGrid::default(), &bump(), &TraceOptions::default(), DEFAULT_SIZE_CAP)
        .unwrap()
}

fn extreme_singular_values(a: &ForwardMatrix) -> (f64, f64) {
    let sv = a.matrix.singular_values();
    (sv.max(), sv.min())
}

#[test]
fn inverse_crime_recovers_coefficients() {
    let mut r = rng(11);
    let atten = random_attenuation(&mut r, 1, 0.5);
    // Largest degree the 32 x 32 lattice resolves; from degree 32 on the
    // 32 boundary angles alias azimuthal frequencies.
    let a = forward(ForwardMode::Scalar, 28, &atten);
    let c = DVector::from_fn(a.cols(), |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)));
    let d = a.apply(&c).unwrap();
    let sol = cgls(&a.matrix, &d, 200, 1e-14);
    let err = (&sol.x - &c).norm() / c.norm();
    assert!(err <= 1e-6 && sol.iterations <= 200, "error {err:e} after {} iterations", sol.iterations);
}

#[test]
fn zero_data_reconstructs_zero() {
    let a = forward(ForwardMode::Scalar, 6, &Attenuation::zero());
    let sol = cgls(&a.matrix, &DVector::zeros(a.rows()), 200, 1e-12);
    assert!(sol.converged);
    assert!(sol.x.iter().all(|v| *v == C64::new(0.0, 0.0)));
}

#[test]
fn smallest_singular_value_survives_refinement() {
    let atten = random_attenuation(&mut rng(12), 1, 0.5);
    let (max10, min10) = extreme_singular_values(&forward(ForwardMode::Scalar, 10, &atten));
    let (max20, min20) = extreme_singular_values(&forward(ForwardMode::Scalar, 20, &atten));
    assert!(min20 >= 0.5 * min10, "{min10} -> {min20}");
    assert!(min20 / max20 >= 0.1 && min10 / max10 >= 0.1);
}

#[test]
fn kernel_without_attenuation_is_gradients() {
    let atten = Attenuation::zero();
    let a = forward(ForwardMode::Pair { m: 1 }, 8, &atten);
    let p_basis = boundary_vanishing_basis(0, potential_degree(8, &atten)).unwrap();
    let rep = kernel_analysis(&a, &atten, &p_basis, &GapRule::default()).unwrap();
    assert!((100..=300).contains(&a.cols()));
    assert_eq!(rep.near_null_dimension, p_basis.len());
    assert_eq!(rep.theoretical_dimension, p_basis.len());
    assert!(rep.residuals.iter().all(|&v| v <= 1e-2), "{:?}", rep.residuals);
    assert!(rep.complement_min_singular >= 10.0 * rep.ceiling);
}

#[test]
fn kernel_with_attenuation_matches_potentials() {
    let atten = random_attenuation(&mut rng(13), 1, 0.5);
    let a = forward(ForwardMode::Pair { m: 1 }, 10, &atten);
    let p_basis = boundary_vanishing_basis(0, potential_degree(10, &atten)).unwrap();
    let rep = kernel_analysis(&a, &atten, &p_basis, &GapRule::default()).unwrap();
    assert_eq!(rep.near_null_dimension, p_basis.len());
    assert!(rep.residuals.iter().all(|&v| v <= 1e-2), "{:?}", rep.residuals);
    assert!(rep.max_angle <= 0.1);
    assert!(rep.projection_error <= 1e-8, "{}", rep.projection_error);
}

#[test]
fn constant_basis_has_no_kernel() {
    let atten = random_attenuation(&mut rng(14), 1, 0.5);
    let a = forward(ForwardMode::Pair { m: 1 }, 0, &atten);
    let p_basis = boundary_vanishing_basis(0, potential_degree(0, &atten)).unwrap();
    assert!(p_basis.is_empty());
    let rep = kernel_analysis(&a, &atten, &p_basis, &GapRule::default()).unwrap();
    assert_eq!(rep.near_null_dimension, 0);
    assert!(rep.complement_min_singular >= 10.0 * rep.ceiling);
}
