use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::AnsatzSpec;
use crate::error::{Error, Result};
use crate::estimator::NoiseModel;
use crate::models::{self, Boundary};
use crate::optimizers::{Algorithm, OptimizerConfig};
use crate::pauli::Hamiltonian;

/// Which Hamiltonian an experiment runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Ising {
        qubits: usize,
    },
    Hubbard {
        sites: usize,
        #[serde(default = "one")]
        t: f64,
        #[serde(default = "one")]
        u: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    /// One of the bundled molecular files (`h2`, `h4`, `lih-active`, `lih`).
    Molecule {
        name: String,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl HamiltonianSpec {
    pub fn build(&self) -> Result<Hamiltonian> {
        match self {
            HamiltonianSpec::Ising { qubits } => models::build_ising(*qubits),
            HamiltonianSpec::Hubbard {
                sites,
                t,
                u,
                boundary,
            } => models::build_hubbard(*sites, *t, *u, *boundary),
            HamiltonianSpec::Molecule { name } => models::bundled(name),
            HamiltonianSpec::File { path } => models::load_hamiltonian(path),
        }
    }

    /// Short label for summaries.
    pub fn label(&self) -> String {
        match self {
            HamiltonianSpec::Ising { qubits } => format!("ising-{qubits}"),
            HamiltonianSpec::Hubbard { sites, .. } => format!("hubbard-{sites}"),
            HamiltonianSpec::Molecule { name } => name.clone(),
            HamiltonianSpec::File { path } => path
                .file_stem()
                .map_or_else(|| "file".into(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

/// Starting point of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Named(InitKind),
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Each parameter uniform in [0, 1).
    Uniform01,
    Zeros,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Named(InitKind::Uniform01)
    }
}

/// How final points are re-measured after the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reevaluation {
    /// Use exact expectations instead of `shots` samples.
    #[serde(default)]
    pub exact: bool,
    #[serde(default = "default_high_shots")]
    pub shots: u64,
}

fn default_high_shots() -> u64 {
    1_000_000
}

impl Default for Reevaluation {
    fn default() -> Self {
        Self {
            exact: false,
            shots: default_high_shots(),
        }
    }
}

impl Reevaluation {
    /// Noise model for reevaluating runs made under `noise`: exact runs stay
    /// exact, noisy ones keep their mode and allocation at `shots`.
    pub fn noise_for(&self, noise: NoiseModel) -> NoiseModel {
        if self.exact || !noise.mode.is_noisy() {
            NoiseModel::exact()
        } else {
            NoiseModel {
                shots: self.shots,
                ..noise
            }
        }
    }
}

fn default_runs() -> usize {
    10
}

fn default_budget() -> u64 {
    10_000
}

fn default_tolerance() -> f64 {
    1e-1
}

/// One experiment: a Hamiltonian, an ansatz, an optimiser, a noise model and
/// a number of independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub hamiltonian: HamiltonianSpec,
    #[serde(default)]
    pub ansatz: AnsatzSpec,
    #[serde(default)]
    pub optimizer: Algorithm,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub init: InitSpec,
    /// Run `i` uses seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    /// FE budget per run.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// A run counts as converged once its exact energy is within this of E0.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// End runs as soon as the tolerance is met.
    #[serde(default)]
    pub stop_at_tolerance: bool,
    /// Abort a run when `|value|` exceeds this; default `1e3 * |E0|`.
    #[serde(default)]
    pub divergence_limit: Option<f64>,
    #[serde(default)]
    pub reevaluation: Reevaluation,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        Ok(cfg)
    }

    /// Reads and parses a config file. Relative `file` Hamiltonian paths are
    /// resolved against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let HamiltonianSpec::File { path: h } = &mut cfg.hamiltonian {
            if h.is_relative() {
                if let Some(dir) = path.parent() {
                    *h = dir.join(&*h);
                }
            }
        }
        Ok(cfg)
    }

    pub fn optimizer_config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig::new(self.optimizer.clone(), self.budget, seed)
    }

    /// Checks everything that can be checked without running: counts,
    /// tolerances, optimizer settings, file existence.
    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be >= 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if let Some(limit) = self.divergence_limit {
            if !limit.is_finite() || limit <= 0.0 {
                return Err(Error::Config(format!("divergence_limit must be positive, got {limit}")));
            }
        }
        if self.noise.mode.is_noisy() && self.noise.shots == 0 {
            return Err(Error::Config("noisy mode needs shots >= 1".into()));
        }
        if self.reevaluation.shots == 0 && !self.reevaluation.exact {
            return Err(Error::Config("reevaluation shots must be >= 1".into()));
        }
        if let HamiltonianSpec::File { path } = &self.hamiltonian {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "Hamiltonian file {} does not exist",
                    path.display()
                )));
            }
        }
        if let InitSpec::Custom(v) = &self.init {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("custom init has non-finite entries".into()));
            }
        }
        self.optimizer_config(self.seed).validate()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            format!(
                "{}/{}/{:?}",
                self.hamiltonian.label(),
                self.optimizer.name(),
                self.noise.effective_shots()
            )
        })
    }

    /// SHA-256 over the canonical JSON form of every result-affecting field
    /// (the run count and name excluded) plus the bytes of any Hamiltonian
    /// file.
    pub fn hash(&self) -> Result<String> {
        let mut hashed = self.clone();
        hashed.name = None;
        hashed.n_runs = 0;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&hashed)?);
        if let HamiltonianSpec::File { path } = &self.hamiltonian {
            hasher.update(std::fs::read(path).map_err(|e| Error::file(path, e))?);
        }
        Ok(hex::encode(hasher.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::NoiseMode;

    const EXAMPLE: &str = r#"
        name = "ising5-cma"
        n_runs = 5
        seed = 11
        budget = 4000
        init = "zeros"

        [hamiltonian]
        model = "ising"
        qubits = 5

        [ansatz]
        family = "two_local"
        reps = 1

        [optimizer]
        algorithm = "cma_es"
        sigma0 = 0.4

        [noise]
        mode = "sampled"
        shots = 64
    "#;

    #[test]
    fn parses_example() {
        let cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(cfg.n_runs, 5);
        assert_eq!(cfg.init, InitSpec::Named(InitKind::Zeros));
        assert_eq!(cfg.noise.mode, NoiseMode::Sampled);
        assert_eq!(cfg.tolerance, 1e-1);
        assert_eq!(cfg.optimizer.name(), "cma_es");
        cfg.validate().unwrap();
    }

    #[test]
    fn custom_init_and_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "init = [0.1, 0.2]\n[hamiltonian]\nmodel = \"molecule\"\nname = \"h2\"\n",
        )
        .unwrap();
        assert_eq!(cfg.init, InitSpec::Custom(vec![0.1, 0.2]));
        assert_eq!(cfg.noise.shots, 6144);
        assert_eq!(cfg.budget, 10_000);
        assert_eq!(cfg.optimizer.name(), "cma_es");
    }

    #[test]
    fn hash_tracks_result_fields_only() {
        let a = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        let mut b = a.clone();
        b.n_runs = 50;
        b.name = Some("renamed".into());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.noise.shots = 65;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn validation_errors() {
        let mut cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        cfg.n_runs = 0;
        assert!(cfg.validate().unwrap_err().is_config_error());
        let cfg = ExperimentConfig::from_toml(
            "[hamiltonian]\nmodel = \"file\"\npath = \"/nonexistent/h.json\"\n",
        )
        .unwrap();
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("[hamiltonian]\nmodel = \"ising\"\nqubits = 3\nfoo = 1\n").is_err());
    }
}
