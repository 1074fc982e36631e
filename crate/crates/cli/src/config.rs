//! Layered run configuration: defaults, then an optional TOML file, then
//! command-line flags, hashed for provenance.

use std::path::{Path, PathBuf};

use noisy_lpm::model::{LinkFunction, ParameterSpace};
use noisy_lpm::sampler::{AdaptSettings, Mode, SamplerConfig};
use noisy_lpm::synth::{PositionLaw, SynthSpec};
use noisy_lpm::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub link: LinkFunction,
    pub half_side: f64,
    pub prior_std: f64,
    pub psi_bounds: Vec<(f64, f64)>,
    pub psi_prior_std: Vec<f64>,
    pub prop_std_z: f64,
    pub prop_std_psi: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let space = ParameterSpace::study_default();
        Self {
            link: LinkFunction::TwoParamLogit,
            half_side: space.half_side,
            prior_std: space.prior_std,
            psi_bounds: space.psi_bounds,
            psi_prior_std: space.psi_prior_std,
            prop_std_z: space.prop_std_z,
            prop_std_psi: space.prop_std_psi,
        }
    }
}

impl ModelConfig {
    pub fn space(&self) -> ParameterSpace {
        ParameterSpace {
            half_side: self.half_side,
            prior_std: self.prior_std,
            psi_bounds: self.psi_bounds.clone(),
            psi_prior_std: self.psi_prior_std.clone(),
            prop_std_z: self.prop_std_z,
            prop_std_psi: self.prop_std_psi.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSection {
    pub mode: Mode,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub random_scan: bool,
    pub adapt: AdaptSettings,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            mode: Mode::Noisy,
            iterations: 20_000,
            burn_in: 10_000,
            thin: 10,
            seed: 1,
            random_scan: false,
            adapt: AdaptSettings::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSection {
    pub m: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { m: 16 }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct IoSection {
    pub out_dir: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub true_positions: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySection {
    pub n: usize,
    pub beta: f64,
    pub theta: f64,
    pub law: PositionLaw,
    pub pin_first_node_at_origin: bool,
    pub replicates: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            n: 1000,
            beta: 0.5,
            theta: 3f64.ln(),
            law: PositionLaw::UniformSquare,
            pin_first_node_at_origin: false,
            replicates: 1,
        }
    }
}

/// The full layered configuration.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sampler: SamplerSection,
    pub grid: GridSection,
    pub io: IoSection,
    pub study: StudySection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.to_owned(),
                    source,
                })?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    /// SHA-256 of the canonical TOML serialisation of the effective config.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            iterations: self.sampler.iterations,
            burn_in: self.sampler.burn_in,
            thin: self.sampler.thin,
            mode: self.sampler.mode,
            grid_m: self.grid.m,
            seed: self.sampler.seed,
            adapt: self.sampler.adapt,
            random_scan: self.sampler.random_scan,
            init_positions: None,
            init_psi: None,
        }
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            n_nodes: self.study.n,
            beta: self.study.beta,
            theta: self.study.theta,
            law: self.study.law,
            seed: self.sampler.seed,
            pin_first_node_at_origin: self.study.pin_first_node_at_origin,
        }
    }
}
