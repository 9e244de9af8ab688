use std::path::{Path, PathBuf};

use geoxray_core::geometry::{SimplicitySampling, TraceOptions};
use geoxray_core::transforms::RayGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Experiment description read from TOML. Every section is optional and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Metric registry entry, e.g. `bump(0.2, 0.5)`.
    pub surface: String,
    /// Seed for every random input. `--seed` overrides it.
    pub seed: u64,
    /// Output directory. `--out` overrides it; not part of the config hash.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Tensor rank `m` for kernel, degree and pair-mode experiments.
    pub rank: usize,
    pub attenuation: AttenuationConfig,
    pub rays: RayGrid,
    pub trace: TraceOptions,
    pub simplicity: SimplicitySampling,
    pub forward: ForwardConfig,
    pub kernel: KernelConfig,
    pub degree: DegreeConfig,
    pub adjoint: AdjointConfig,
    pub invert: InvertConfig,
    pub kernel_analysis: KernelAnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            surface: "euclidean".into(),
            seed: 0,
            out: None,
            rank: 1,
            attenuation: AttenuationConfig::default(),
            rays: RayGrid::default(),
            trace: TraceOptions::default(),
            simplicity: SimplicitySampling::default(),
            forward: ForwardConfig::default(),
            kernel: KernelConfig::default(),
            degree: DegreeConfig::default(),
            adjoint: AdjointConfig::default(),
            invert: InvertConfig::default(),
            kernel_analysis: KernelAnalysisConfig::default(),
        }
    }
}

/// Scalar registry entries for `h`, `α₁`, `α₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttenuationConfig {
    pub h: String,
    pub alpha1: String,
    pub alpha2: String,
}

impl Default for AttenuationConfig {
    fn default() -> Self {
        let r = "random_poly(1, 0.5)".to_string();
        AttenuationConfig { h: r.clone(), alpha1: r.clone(), alpha2: r }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    /// Scalar registry entry `f`; the integrand is `ψ(x, ξ) = f(x)`.
    pub integrand: String,
    /// Relative change under step halving that raises a warning.
    pub underresolved_threshold: Option<f64>,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig { integrand: "gaussian(1, 0.2, -0.1, 0.125)".into(), underresolved_threshold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Number of random potentials.
    pub potentials: usize,
    /// Degree of the random polynomial before the boundary factor.
    pub potential_degree: usize,
    pub scale: f64,
    pub tolerance: f64,
    /// Required decrease of the sup when the step is halved; 0 skips the check.
    pub min_halving_ratio: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { potentials: 3, potential_degree: 2, scale: 1.0, tolerance: 1e-4, min_halving_ratio: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegreeConfig {
    pub grid_resolution: usize,
    pub n_angles: usize,
    pub potential_degree: usize,
    pub tolerance: f64,
    /// Also run the one-sided checks on both halves of the spectrum.
    pub one_sided: bool,
}

impl Default for DegreeConfig {
    fn default() -> Self {
        DegreeConfig { grid_resolution: 8, n_angles: 16, potential_degree: 2, tolerance: 1e-3, one_sided: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjointConfig {
    pub basis_degree: usize,
    pub pairs: usize,
    pub tolerance: f64,
}

impl Default for AdjointConfig {
    fn default() -> Self {
        AdjointConfig { basis_degree: 10, pairs: 20, tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvertConfig {
    pub basis_degree: usize,
    /// Scalar registry entry for the phantom.
    pub phantom: String,
    pub max_iter: usize,
    pub rtol: f64,
    /// Column weights `(1 + n)^{-smoothness}`; 0 gives plain CGLS.
    pub smoothness: f64,
    /// Resolution of the grid on which the error is measured.
    pub reference_resolution: usize,
    pub tolerance: f64,
    pub size_cap: usize,
}

impl Default for InvertConfig {
    fn default() -> Self {
        InvertConfig {
            basis_degree: 43,
            phantom: "gaussian(1, 0.2, -0.1, 0.125)".into(),
            max_iter: 200,
            rtol: 1e-10,
            smoothness: 1.0,
            reference_resolution: 64,
            tolerance: 0.05,
            size_cap: geoxray_core::inversion::DEFAULT_SIZE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelAnalysisConfig {
    pub basis_degree: usize,
    /// Ceiling for near-null singular values, relative to `σ_max`.
    pub ceiling: f64,
    pub min_gap_ratio: f64,
    pub angle_tolerance: f64,
    /// Required `σ_min` on the complement, in multiples of the ceiling.
    pub complement_factor: f64,
    /// Write the matrix in the binary dump layout.
    pub dump_matrix: bool,
}

impl Default for KernelAnalysisConfig {
    fn default() -> Self {
        KernelAnalysisConfig {
            basis_degree: 10,
            ceiling: 1e-3,
            min_gap_ratio: 10.0,
            angle_tolerance: 0.1,
            complement_factor: 10.0,
            dump_matrix: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form (output directory excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_sections() {
        let c = ExperimentConfig::parse("surface = \"bump(0.2, 0.5)\"\n[rays]\nn_beta = 8\n").unwrap();
        assert_eq!(c.rays.n_beta, 8);
        assert_eq!(c.rays.n_inc, 32);
        assert_eq!(c.trace, TraceOptions::default());
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("surfce = \"euclidean\"").is_err());
        assert!(ExperimentConfig::parse("[rays]\nn_betas = 3").is_err());
        assert!(ExperimentConfig::parse("[kernel]\ntolerence = 1.0").is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { out: Some("elsewhere".into()), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }
}
