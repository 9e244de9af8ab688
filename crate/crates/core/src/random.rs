//! Seeded generators for test and experiment inputs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::sphere_bundle::{Attenuation, Polynomial, SymmetricTensorField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric tensor with independent random complex polynomial components.
pub fn random_tensor<R: Rng + ?Sized>(rng: &mut R, rank: usize, degree: usize, scale: f64) -> SymmetricTensorField {
    let polys = (0..=rank).map(|_| Polynomial::random(rng, degree, scale)).collect();
    SymmetricTensorField::from_polynomials(rank, polys).expect("rank + 1 components")
}

/// Random tensor multiplied by `(1 - |x|²)²`.
pub fn random_boundary_vanishing_tensor<R: Rng + ?Sized>(
    rng: &mut R,
    rank: usize,
    degree: usize,
    scale: f64,
) -> SymmetricTensorField {
    random_tensor(rng, rank, degree, scale).vanish_on_boundary()
}

/// Attenuation with random complex polynomial `h`, `α₁`, `α₂`.
pub fn random_attenuation<R: Rng + ?Sized>(rng: &mut R, degree: usize, scale: f64) -> Attenuation {
    let id = format!("random_poly({degree}, {scale})");
    let mut a = Attenuation::from_polynomials(
        Polynomial::random(rng, degree, scale),
        Polynomial::random(rng, degree, scale),
        Polynomial::random(rng, degree, scale),
    );
    a.ids = [id.clone(), id.clone(), id];
    a
}
