use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;

use crate::geometry::{parse_registry_call, ConformalSurface};
use crate::{Error, Point, Result, C64};

/// A complex scalar field on `M` with analytic first derivatives.
pub trait ScalarField: Send + Sync + Debug {
    fn value(&self, x: Point) -> C64;
    fn gradient(&self, x: Point) -> [C64; 2];
    /// Total degree when the field is a polynomial.
    fn polynomial_degree(&self) -> Option<usize> {
        None
    }
    fn is_zero(&self) -> bool {
        false
    }
    fn as_polynomial(&self) -> Option<&Polynomial> {
        None
    }
}

pub type Scalar = Arc<dyn ScalarField>;

/// Complex polynomial in `(x¹, x²)`, coefficients of `x^a y^b` stored by
/// total degree then by `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    degree: usize,
    coeffs: Vec<C64>,
}

fn index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { degree: 0, coeffs: vec![C64::new(0.0, 0.0)] }
    }

    pub fn constant(c: C64) -> Self {
        Polynomial { degree: 0, coeffs: vec![c] }
    }

    pub fn with_degree(degree: usize) -> Self {
        Polynomial { degree, coeffs: vec![C64::new(0.0, 0.0); (degree + 1) * (degree + 2) / 2] }
    }

    /// `c0 + c1 x¹ + c2 x²`.
    pub fn affine(c0: C64, c1: C64, c2: C64) -> Self {
        let mut p = Polynomial::with_degree(1);
        p.coeffs = vec![c0, c1, c2];
        p
    }

    /// `1 - |x|²`, which vanishes on the unit circle.
    pub fn boundary_defining() -> Self {
        let mut p = Polynomial::with_degree(2);
        p.set(0, 0, C64::new(1.0, 0.0));
        p.set(2, 0, C64::new(-1.0, 0.0));
        p.set(0, 2, C64::new(-1.0, 0.0));
        p
    }

    /// Random complex coefficients uniform in `[-scale, scale]²` for all
    /// monomials up to `degree`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, degree: usize, scale: f64) -> Self {
        let mut p = Polynomial::with_degree(degree);
        for c in p.coeffs.iter_mut() {
            *c = C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale));
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, a: usize, b: usize) -> C64 {
        if a + b > self.degree {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[index(a, b)]
        }
    }

    pub fn set(&mut self, a: usize, b: usize, c: C64) {
        if a + b > self.degree {
            let mut grown = Polynomial::with_degree(a + b);
            for d in 0..=self.degree {
                for bb in 0..=d {
                    grown.coeffs[index(d - bb, bb)] = self.coeffs[index(d - bb, bb)];
                }
            }
            *self = grown;
        }
        self.coeffs[index(a, b)] = c;
    }

    fn terms(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..=self.degree).flat_map(move |d| (0..=d).map(move |b| (d - b, b, self.coeffs[index(d - b, b)])))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::with_degree(self.degree + other.degree);
        for (a1, b1, c1) in self.terms() {
            if c1 == C64::new(0.0, 0.0) {
                continue;
            }
            for (a2, b2, c2) in other.terms() {
                out.coeffs[index(a1 + a2, b1 + b2)] += c1 * c2;
            }
        }
        out
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::with_degree(self.degree.max(other.degree));
        for (a, b, c) in self.terms().chain(other.terms()) {
            out.coeffs[index(a, b)] += c;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        Polynomial { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Partial derivative in `x¹` (`axis = 0`) or `x²` (`axis = 1`).
    pub fn derivative(&self, axis: usize) -> Polynomial {
        let mut out = Polynomial::with_degree(self.degree.saturating_sub(1));
        for (a, b, c) in self.terms() {
            match axis {
                0 if a > 0 => out.coeffs[index(a - 1, b)] += c * a as f64,
                1 if b > 0 => out.coeffs[index(a, b - 1)] += c * b as f64,
                _ => {}
            }
        }
        out
    }

    /// Degree ignoring vanishing top coefficients; `None` for the zero polynomial.
    pub fn effective_degree(&self) -> Option<usize> {
        self.terms().filter(|(_, _, c)| *c != C64::new(0.0, 0.0)).map(|(a, b, _)| a + b).max()
    }

    fn powers(&self, x: Point) -> (Vec<f64>, Vec<f64>) {
        let mut px = vec![1.0; self.degree + 1];
        let mut py = vec![1.0; self.degree + 1];
        for k in 1..=self.degree {
            px[k] = px[k - 1] * x[0];
            py[k] = py[k - 1] * x[1];
        }
        (px, py)
    }
}

impl ScalarField for Polynomial {
    fn value(&self, x: Point) -> C64 {
        let (px, py) = self.powers(x);
        self.terms().map(|(a, b, c)| c * (px[a] * py[b])).sum()
    }

    fn gradient(&self, x: Point) -> [C64; 2] {
        let (px, py) = self.powers(x);
        let mut g = [C64::new(0.0, 0.0); 2];
        for (a, b, c) in self.terms() {
            if a > 0 {
                g[0] += c * (a as f64 * px[a - 1] * py[b]);
            }
            if b > 0 {
                g[1] += c * (b as f64 * px[a] * py[b - 1]);
            }
        }
        g
    }

    fn polynomial_degree(&self) -> Option<usize> {
        Some(self.effective_degree().unwrap_or(0))
    }

    fn is_zero(&self) -> bool {
        self.effective_degree().is_none()
    }

    fn as_polynomial(&self) -> Option<&Polynomial> {
        Some(self)
    }
}

/// `amplitude · exp(-|x - center|² / width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amplitude: C64,
    pub center: Point,
    pub width: f64,
}

impl ScalarField for Gaussian {
    fn value(&self, x: Point) -> C64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        self.amplitude * (-(d[0] * d[0] + d[1] * d[1]) / self.width).exp()
    }

    fn gradient(&self, x: Point) -> [C64; 2] {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let v = self.value(x);
        [v * (-2.0 * d[0] / self.width), v * (-2.0 * d[1] / self.width)]
    }
}

/// `e^{kλ}` for the conformal factor of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalPower {
    pub surface: ConformalSurface,
    pub power: f64,
}

impl ScalarField for ConformalPower {
    fn value(&self, x: Point) -> C64 {
        C64::new((self.power * self.surface.lambda(x)).exp(), 0.0)
    }

    fn gradient(&self, x: Point) -> [C64; 2] {
        let (lambda, grad) = self.surface.factor.value_gradient(x);
        let v = (self.power * lambda).exp() * self.power;
        [C64::new(v * grad[0], 0.0), C64::new(v * grad[1], 0.0)]
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// Sum of scaled products `Σ_t c_t Π_i s_{t,i}`, differentiated by the
/// product rule.
#[derive(Debug, Clone, Default)]
pub struct Combination {
    pub terms: Vec<(C64, Vec<Scalar>)>,
}

impl Combination {
    pub fn new() -> Self {
        Combination::default()
    }

    pub fn push(&mut self, coeff: C64, factors: Vec<Scalar>) {
        if coeff != C64::new(0.0, 0.0) && factors.iter().all(|f| !f.is_zero()) {
            self.terms.push((coeff, factors));
        }
    }

    /// Collapses to a single polynomial when every factor is polynomial
    /// (in particular to zero when no terms survive).
    pub fn into_scalar(self) -> Scalar {
        let mut sum = Polynomial::zero();
        for (c, fs) in &self.terms {
            let mut prod = Polynomial::constant(*c);
            for f in fs {
                match f.as_polynomial() {
                    Some(p) => prod = prod.mul(p),
                    None => return Arc::new(self),
                }
            }
            sum = sum.add(&prod);
        }
        Arc::new(sum)
    }
}

impl ScalarField for Combination {
    fn value(&self, x: Point) -> C64 {
        self.terms.iter().map(|(c, fs)| fs.iter().fold(*c, |acc, f| acc * f.value(x))).sum()
    }

    fn gradient(&self, x: Point) -> [C64; 2] {
        let mut g = [C64::new(0.0, 0.0); 2];
        for (c, fs) in &self.terms {
            let values: Vec<C64> = fs.iter().map(|f| f.value(x)).collect();
            for (i, f) in fs.iter().enumerate() {
                let rest = values.iter().enumerate().filter(|(j, _)| *j != i).fold(*c, |acc, (_, v)| acc * v);
                let gi = f.gradient(x);
                g[0] += rest * gi[0];
                g[1] += rest * gi[1];
            }
        }
        g
    }

    fn polynomial_degree(&self) -> Option<usize> {
        let mut deg = 0;
        for (_, fs) in &self.terms {
            let mut d = 0;
            for f in fs {
                d += f.polynomial_degree()?;
            }
            deg = deg.max(d);
        }
        Some(deg)
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Scalar field given by a closure; the gradient is a centred difference
/// with step [`FnScalar::FD_STEP`].
#[derive(Clone)]
pub struct FnScalar {
    f: Arc<dyn Fn(Point) -> C64 + Send + Sync>,
    label: &'static str,
}

impl FnScalar {
    pub const FD_STEP: f64 = 1e-6;

    pub fn new<F: Fn(Point) -> C64 + Send + Sync + 'static>(label: &'static str, f: F) -> Self {
        FnScalar { f: Arc::new(f), label }
    }
}

impl Debug for FnScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnScalar({})", self.label)
    }
}

impl ScalarField for FnScalar {
    fn value(&self, x: Point) -> C64 {
        (self.f)(x)
    }

    fn gradient(&self, x: Point) -> [C64; 2] {
        let h = Self::FD_STEP;
        let d = |e: [f64; 2]| ((self.f)([x[0] + h * e[0], x[1] + h * e[1]]) - (self.f)([x[0] - h * e[0], x[1] - h * e[1]])) / (2.0 * h);
        [d([1.0, 0.0]), d([0.0, 1.0])]
    }
}

pub fn zero_scalar() -> Scalar {
    Arc::new(Polynomial::zero())
}

pub fn constant_scalar(c: C64) -> Scalar {
    Arc::new(Polynomial::constant(c))
}

/// Parses scalar registry entries:
/// `zero`, `constant(re[, im])`, `affine(c0, c1, c2)`,
/// `gaussian(amp, x0, y0, width)` and `random_poly(degree, scale)`.
/// Only `random_poly` draws from `rng`.
pub fn parse_scalar<R: Rng + ?Sized>(spec: &str, rng: &mut R) -> Result<Scalar> {
    let (name, args) = parse_registry_call(spec)?;
    let bad = || Error::Registry(spec.to_string());
    let field: Scalar = match (name.as_str(), args.as_slice()) {
        ("zero", []) => Arc::new(Polynomial::zero()),
        ("constant", [re]) => Arc::new(Polynomial::constant(C64::new(*re, 0.0))),
        ("constant", [re, im]) => Arc::new(Polynomial::constant(C64::new(*re, *im))),
        ("affine", [c0, c1, c2]) => Arc::new(Polynomial::affine(
            C64::new(*c0, 0.0),
            C64::new(*c1, 0.0),
            C64::new(*c2, 0.0),
        )),
        ("gaussian", [amp, x0, y0, width]) if *width > 0.0 => Arc::new(Gaussian {
            amplitude: C64::new(*amp, 0.0),
            center: [*x0, *y0],
            width: *width,
        }),
        ("random_poly", [degree, scale]) if *degree >= 0.0 && degree.fract() == 0.0 => {
            Arc::new(Polynomial::random(rng, *degree as usize, *scale))
        }
        _ => return Err(bad()),
    };
    Ok(field)
}
