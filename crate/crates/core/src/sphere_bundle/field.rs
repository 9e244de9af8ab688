use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::grid::SpatialGrid;
use super::phase_fn::PhaseFunction;
use crate::{Error, Point, Result, Warning, C64};

/// Which angular modes to keep in [`AngularField::project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularPart {
    /// `k ≥ 0`.
    Holomorphic,
    /// `k ≤ 0`.
    Antiholomorphic,
    /// `k < 0`; the complement of [`AngularPart::Holomorphic`].
    StrictlyNegative,
    /// `k > 0`; the complement of [`AngularPart::Antiholomorphic`].
    StrictlyPositive,
    Even,
    Odd,
    Mode(i64),
}

impl AngularPart {
    pub fn keeps(&self, k: i64) -> bool {
        match *self {
            AngularPart::Holomorphic => k >= 0,
            AngularPart::Antiholomorphic => k <= 0,
            AngularPart::StrictlyNegative => k < 0,
            AngularPart::StrictlyPositive => k > 0,
            AngularPart::Even => k.rem_euclid(2) == 0,
            AngularPart::Odd => k.rem_euclid(2) == 1,
            AngularPart::Mode(m) => k == m,
        }
    }
}

/// A complex function on `SM` sampled at every grid node and at
/// `n_angles` uniform fibre angles `φ_j = 2πj / n_angles`.
///
/// The angular spectrum `û_k(x_i)`, `k ∈ [-n/2, n/2)`, is computed once on
/// first use and cached; the normalisation is
/// `û_k = (1/n) Σ_j u(φ_j) e^{-ikφ_j}`, so Parseval reads
/// `Σ_j |u_j|²/n = Σ_k |û_k|²`.
#[derive(Debug, Clone)]
pub struct AngularField {
    grid: Arc<SpatialGrid>,
    n_angles: usize,
    values: Vec<C64>,
    spectrum: OnceLock<Vec<C64>>,
}

impl AngularField {
    pub fn from_values(grid: Arc<SpatialGrid>, n_angles: usize, values: Vec<C64>) -> Result<Self> {
        check_n_angles(n_angles)?;
        if values.len() != grid.len() * n_angles {
            return Err(Error::DimensionMismatch { expected: grid.len() * n_angles, actual: values.len() });
        }
        Ok(AngularField { grid, n_angles, values, spectrum: OnceLock::new() })
    }

    /// Samples `f` at every node and angle (parallel over nodes).
    pub fn from_fn<F>(grid: Arc<SpatialGrid>, n_angles: usize, f: F) -> Result<Self>
    where
        F: Fn(Point, f64) -> C64 + Send + Sync,
    {
        check_n_angles(n_angles)?;
        let values: Vec<C64> = grid
            .nodes()
            .par_iter()
            .flat_map_iter(|&x| (0..n_angles).map(move |j| (x, angle(j, n_angles))))
            .map(|(x, phi)| f(x, phi))
            .collect();
        AngularField::from_values(grid, n_angles, values)
    }

    pub fn sample<P: PhaseFunction + ?Sized>(grid: Arc<SpatialGrid>, n_angles: usize, f: &P) -> Result<Self> {
        AngularField::from_fn(grid, n_angles, |x, phi| f.eval(x, phi))
    }

    /// Builds a field from per-node spectra in FFT order.
    pub fn from_spectrum(grid: Arc<SpatialGrid>, n_angles: usize, spectrum: Vec<C64>) -> Result<Self> {
        check_n_angles(n_angles)?;
        if spectrum.len() != grid.len() * n_angles {
            return Err(Error::DimensionMismatch { expected: grid.len() * n_angles, actual: spectrum.len() });
        }
        let mut values = spectrum.clone();
        FftPlanner::<f64>::new().plan_fft_inverse(n_angles).process(&mut values);
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Ok(AngularField { grid, n_angles, values, spectrum: cell })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn value(&self, node: usize, angle_index: usize) -> C64 {
        self.values[node * self.n_angles + angle_index]
    }

    pub fn angle(&self, j: usize) -> f64 {
        angle(j, self.n_angles)
    }

    /// Mode numbers in FFT storage order.
    pub fn modes(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n_angles as i64;
        (0..n).map(move |i| if i < n / 2 { i } else { i - n })
    }

    fn slot(&self, k: i64) -> Option<usize> {
        let n = self.n_angles as i64;
        if k < -n / 2 || k >= n / 2 {
            None
        } else {
            Some(k.rem_euclid(n) as usize)
        }
    }

    /// Per-node Fourier coefficients in FFT order (cached).
    pub fn angular_spectrum(&self) -> &[C64] {
        self.spectrum.get_or_init(|| {
            let mut buf = self.values.clone();
            FftPlanner::<f64>::new().plan_fft_forward(self.n_angles).process(&mut buf);
            let scale = 1.0 / self.n_angles as f64;
            buf.iter_mut().for_each(|c| *c *= scale);
            buf
        })
    }

    /// `û_k(x_node)`; zero for modes outside the stored range.
    pub fn mode(&self, node: usize, k: i64) -> C64 {
        match self.slot(k) {
            Some(s) => self.angular_spectrum()[node * self.n_angles + s],
            None => C64::new(0.0, 0.0),
        }
    }

    /// Energy summed over all nodes of modes satisfying `keep`.
    pub fn energy_where<F: Fn(i64) -> bool>(&self, keep: F) -> f64 {
        let spec = self.angular_spectrum();
        let modes: Vec<i64> = self.modes().collect();
        spec.chunks(self.n_angles)
            .map(|row| row.iter().zip(&modes).filter(|(_, &k)| keep(k)).map(|(c, _)| c.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.energy_where(|_| true)
    }

    /// Energy fraction of modes satisfying `keep`; zero for the zero field.
    pub fn relative_energy<F: Fn(i64) -> bool>(&self, keep: F) -> f64 {
        let total = self.total_energy();
        if total == 0.0 {
            0.0
        } else {
            self.energy_where(keep) / total
        }
    }

    /// `AliasRisk` when the top quarter of modes (`|k| ≥ 3n/8`) carries more
    /// than `1e-6` of the energy.
    pub fn alias_risk(&self) -> Option<Warning> {
        let cut = (3 * self.n_angles / 8) as i64;
        let rel = self.relative_energy(|k| k.abs() >= cut);
        (rel > 1e-6).then_some(Warning::AliasRisk { relative_energy: rel })
    }

    pub fn project(&self, part: AngularPart) -> AngularField {
        self.map_spectrum(|k, c| if part.keeps(k) { c } else { C64::new(0.0, 0.0) })
    }

    /// Smallest `m` such that modes `|k| > m` carry at most `tol` of the energy.
    pub fn degree(&self, tol: f64) -> usize {
        let total = self.total_energy();
        if total == 0.0 {
            return 0;
        }
        let max_mode = (self.n_angles / 2) as i64;
        let mut tail = vec![0.0; max_mode as usize + 2];
        let spec = self.angular_spectrum();
        for row in spec.chunks(self.n_angles) {
            for (c, k) in row.iter().zip(self.modes()) {
                tail[k.unsigned_abs() as usize] += c.norm_sqr();
            }
        }
        // tail[m] becomes the energy of modes with |k| > m.
        let mut above = 0.0;
        let mut result = 0;
        for m in (0..=max_mode as usize).rev() {
            if above > tol * total {
                result = m + 1;
                break;
            }
            above += tail[m];
        }
        result
    }

    /// `Vu = ∂u/∂φ`, computed spectrally: `û_k ↦ ik û_k`.
    pub fn vertical_derivative(&self) -> AngularField {
        self.map_spectrum(|k, c| c * C64::new(0.0, k as f64))
    }

    pub fn map_spectrum<F: Fn(i64, C64) -> C64>(&self, f: F) -> AngularField {
        let modes: Vec<i64> = self.modes().collect();
        let spec: Vec<C64> = self
            .angular_spectrum()
            .chunks(self.n_angles)
            .flat_map(|row| row.iter().zip(&modes).map(|(c, &k)| f(k, *c)).collect::<Vec<_>>())
            .collect();
        AngularField::from_spectrum(self.grid.clone(), self.n_angles, spec).expect("same layout")
    }

    pub fn map<F: Fn(C64) -> C64 + Sync>(&self, f: F) -> AngularField {
        let values = self.values.par_iter().map(|&v| f(v)).collect();
        AngularField { grid: self.grid.clone(), n_angles: self.n_angles, values, spectrum: OnceLock::new() }
    }

    pub fn exp(&self) -> AngularField {
        self.map(|v| v.exp())
    }

    pub fn scale(&self, s: C64) -> AngularField {
        self.map(|v| v * s)
    }

    fn zip_with<F: Fn(C64, C64) -> C64>(&self, other: &AngularField, f: F) -> Result<AngularField> {
        self.check_layout(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(AngularField { grid: self.grid.clone(), n_angles: self.n_angles, values, spectrum: OnceLock::new() })
    }

    /// Pointwise product of the samples.
    pub fn mul(&self, other: &AngularField) -> Result<AngularField> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &AngularField) -> Result<AngularField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &AngularField) -> Result<AngularField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &AngularField) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    fn check_layout(&self, other: &AngularField) -> Result<()> {
        if self.n_angles != other.n_angles {
            return Err(Error::DimensionMismatch { expected: self.n_angles, actual: other.n_angles });
        }
        if *self.grid != *other.grid {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), actual: other.grid.len() });
        }
        Ok(())
    }

    /// Spatially interpolated spectrum at an arbitrary point (moving least
    /// squares over neighbouring nodes), in FFT order.
    pub fn spectrum_at(&self, x: Point) -> Vec<C64> {
        let spec = self.angular_spectrum();
        let mut out = vec![C64::new(0.0, 0.0); self.n_angles];
        for (node, w) in self.grid.mls_weights(x) {
            let row = &spec[node * self.n_angles..(node + 1) * self.n_angles];
            for (o, c) in out.iter_mut().zip(row) {
                *o += c * w;
            }
        }
        out
    }
}

impl PhaseFunction for AngularField {
    /// Off-grid evaluation: moving least squares in space, trigonometric
    /// interpolation (exact for band-limited fields) in angle.
    fn eval(&self, x: Point, phi: f64) -> C64 {
        let coeffs = self.spectrum_at(x);
        coeffs
            .iter()
            .zip(self.modes())
            .map(|(c, k)| c * Complex64::from_polar(1.0, k as f64 * phi))
            .sum()
    }
}

fn angle(j: usize, n: usize) -> f64 {
    std::f64::consts::TAU * j as f64 / n as f64
}

fn check_n_angles(n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("n_angles must be a power of two ≥ 2, got {n}")))
    }
}
