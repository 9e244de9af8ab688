use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::PhaseVector;
use crate::{Error, Result, Warning, C64};

/// A point of `∂₊SM` in fan-beam coordinates: boundary point
/// `(cos β, sin β)` and inward direction at angle `a` from the inner normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanBeamRay {
    pub boundary_angle: f64,
    pub incidence: f64,
}

impl FanBeamRay {
    pub fn new(boundary_angle: f64, incidence: f64) -> Result<Self> {
        if !(incidence.abs() < FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("incidence {incidence} is not strictly inward")));
        }
        Ok(FanBeamRay { boundary_angle: boundary_angle.rem_euclid(TAU), incidence })
    }

    /// Start vector: the inner normal at `(cos β, sin β)` is the direction
    /// `β + π`, rotated by `a`.
    pub fn start(&self) -> PhaseVector {
        let (s, c) = self.boundary_angle.sin_cos();
        PhaseVector::new([c, s], self.boundary_angle + PI + self.incidence)
    }

    /// `⟨ξ, ν⟩ = cos a` for the Euclidean-normalised direction.
    pub fn inwardness(&self) -> f64 {
        self.incidence.cos()
    }

    /// Euclidean chord length `2 cos a`.
    pub fn euclidean_chord(&self) -> f64 {
        2.0 * self.incidence.cos()
    }
}

/// Uniform `n_beta × n_inc` lattice on `∂₊SM`:
/// `β_i = 2πi / n_beta`, `a_j = −a_max + 2 a_max j / (n_inc − 1)`.
/// Rays are ordered with `β` major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RayGrid {
    pub n_beta: usize,
    pub n_inc: usize,
    pub max_incidence: f64,
}

impl Default for RayGrid {
    fn default() -> Self {
        RayGrid { n_beta: 32, n_inc: 32, max_incidence: FRAC_PI_2 - 0.05 }
    }
}

impl RayGrid {
    pub fn new(n_beta: usize, n_inc: usize, max_incidence: f64) -> Result<Self> {
        let grid = RayGrid { n_beta, n_inc, max_incidence };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_beta == 0 || self.n_inc == 0 {
            return Err(Error::InvalidArgument("ray grid must be nonempty".into()));
        }
        if !(self.max_incidence >= 0.0 && self.max_incidence < FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!("max incidence {} out of range", self.max_incidence)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_beta * self.n_inc
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn beta(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n_beta as f64
    }

    pub fn incidence(&self, j: usize) -> f64 {
        if self.n_inc == 1 {
            0.0
        } else {
            -self.max_incidence + 2.0 * self.max_incidence * j as f64 / (self.n_inc - 1) as f64
        }
    }

    pub fn ray(&self, index: usize) -> FanBeamRay {
        let (i, j) = (index / self.n_inc, index % self.n_inc);
        FanBeamRay { boundary_angle: self.beta(i), incidence: self.incidence(j) }
    }

    pub fn rays(&self) -> Vec<FanBeamRay> {
        (0..self.len()).map(|k| self.ray(k)).collect()
    }
}

/// Provenance recorded alongside transform samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FanBeamMeta {
    pub surface: String,
    /// Registry ids of `h`, `α₁`, `α₂`.
    pub attenuation: [String; 3],
    pub integrand: String,
    pub step: f64,
    #[serde(default)]
    pub config_hash: Option<String>,
}

/// Transform samples on a [`RayGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FanBeamData {
    pub grid: RayGrid,
    pub values: Vec<C64>,
    pub meta: FanBeamMeta,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    version: u32,
    ray_grid: RayGrid,
    meta: FanBeamMeta,
    warnings: Vec<Warning>,
}

pub const FAN_BEAM_FORMAT_VERSION: u32 = 1;

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

impl FanBeamData {
    pub fn new(grid: RayGrid, values: Vec<C64>, meta: FanBeamMeta) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), actual: values.len() });
        }
        Ok(FanBeamData { grid, values, meta, warnings: Vec::new() })
    }

    pub fn value(&self, i_beta: usize, j_inc: usize) -> C64 {
        self.values[i_beta * self.grid.n_inc + j_inc]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// CSV body `<stem>.csv` with columns `beta,incidence,re,im` (β major)
    /// and JSON sidecar `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(with_ext(stem, "csv"))?);
        self.write_csv(&mut out)?;
        out.flush()?;
        let sidecar = Sidecar {
            format: "fan_beam".into(),
            version: FAN_BEAM_FORMAT_VERSION,
            ray_grid: self.grid,
            meta: self.meta.clone(),
            warnings: self.warnings.clone(),
        };
        fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "beta,incidence,re,im")?;
        for (k, v) in self.values.iter().enumerate() {
            let ray = self.grid.ray(k);
            writeln!(out, "{:?},{:?},{:?},{:?}", ray.boundary_angle, ray.incidence, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(with_ext(stem, "json"))?)?;
        if sidecar.format != "fan_beam" || sidecar.version != FAN_BEAM_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported sidecar {}/{}", sidecar.format, sidecar.version)));
        }
        sidecar.ray_grid.validate()?;
        let reader = BufReader::new(fs::File::open(with_ext(stem, "csv"))?);
        let mut values = Vec::with_capacity(sidecar.ray_grid.len());
        for (line_no, line) in reader.lines().enumerate().skip(1) {
            let line = line?;
            let bad = || Error::Format(format!("line {}: {line:?}", line_no + 1));
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().map_err(|_| bad())).collect::<Result<_>>()?;
            if cols.len() != 4 {
                return Err(bad());
            }
            values.push(C64::new(cols[2], cols[3]));
        }
        let mut data = FanBeamData::new(sidecar.ray_grid, values, sidecar.meta)?;
        data.warnings = sidecar.warnings;
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConformalSurface;

    #[test]
    fn rays_start_inward_on_boundary() {
        let grid = RayGrid::default();
        let surface = ConformalSurface::euclidean();
        for ray in grid.rays() {
            let v = ray.start();
            assert!(v.is_on_boundary());
            let nu = surface.inner_normal(v.position);
            let xi = v.tangent(&surface);
            let cos = nu[0] * xi[0] + nu[1] * xi[1];
            assert!((cos - ray.incidence.cos()).abs() < 1e-12 && cos > 0.0);
        }
        assert_eq!(grid.incidence(0), -grid.max_incidence);
        assert_eq!(grid.incidence(31), grid.max_incidence);
        assert!(FanBeamRay::new(0.0, FRAC_PI_2).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let grid = RayGrid::new(3, 2, 1.0).unwrap();
        let values = (0..6).map(|k| C64::new(k as f64 / 7.0, -(k as f64).sqrt())).collect();
        let mut data = FanBeamData::new(grid, values, FanBeamMeta { step: 1e-3, ..Default::default() }).unwrap();
        data.warnings.push(Warning::QuadratureUnderresolved { ray: 1, relative_change: 0.5 });
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("sino");
        data.write(&stem).unwrap();
        assert_eq!(FanBeamData::read(&stem).unwrap(), data);
        let text = fs::read_to_string(dir.path().join("sino.csv")).unwrap();
        assert!(text.starts_with("beta,incidence,re,im\n0.0,-1.0,0.0,-0.0\n"));
    }
}
