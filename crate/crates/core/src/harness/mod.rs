//! Config-driven batch experiments.
//!
//! An experiment is a TOML file ([`ExperimentConfig`]). Runs are independent
//! and are the unit of parallelism; run `i` uses seed `seed + i` for every
//! random stream it touches, so any single run can be replayed on its own.
//! With an output directory each run leaves a JSON-lines trace and one line
//! in `records.jsonl`, written before the worker moves to its next run.
//! Re-running an experiment into the same directory skips runs already
//! recorded there.

mod config;
mod summary;
mod trace;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, HamiltonianSpec, InitKind, InitSpec, Reevaluation};
pub use summary::{summarize, SummaryRow, SummaryTable};
pub use trace::{load_records, read_trace, write_trace, RecordWriter, TraceHeader};

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::estimator::{Estimator, NoiseMode};
use crate::exec::Execution;
use crate::optimizers::{minimize, OptimizerTrace, RunOptions, Target, Termination};
use crate::pauli::{exact_ground_state, Hamiltonian, GROUND_STATE_LIMIT};
use crate::rng::RngStream;

/// Stream channel for uniform initial points.
pub const INIT_CHANNEL: u64 = 2;
/// Stream channel for high-shot reevaluation.
pub const REEVALUATION_CHANNEL: u64 = 3;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// The exact energy came within tolerance of E0 at some FE.
    Converged,
    /// Budget spent (or the optimiser stopped itself) without converging.
    Budget,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub label: String,
    pub run: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub termination: Termination,
    pub e0: f64,
    pub n_evaluations: u64,
    pub fes_to_tolerance: Option<u64>,
    /// Lowest value the optimiser saw (noisy in noisy modes).
    pub best_value: f64,
    /// High-shot (or exact) value at the best-seen parameters.
    pub corrected_best: f64,
    /// High-shot (or exact) value at the optimiser's final recommendation.
    pub corrected_final: f64,
    /// Per-FE noise floor of the run; 0 for exact runs.
    pub sigma_noise: f64,
    pub best_theta: Vec<f64>,
    pub final_theta: Vec<f64>,
    pub wall_clock_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<PathBuf>,
}

impl RunRecord {
    pub fn raw_error(&self) -> f64 {
        self.best_value - self.e0
    }

    pub fn corrected_error(&self) -> f64 {
        self.corrected_final - self.e0
    }
}

/// Where and how to run.
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    /// Directory for traces and `records.jsonl`; nothing is written if unset.
    pub out_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    pub threads: usize,
    pub execution: Execution,
}

/// A validated experiment with everything shared between runs built once.
pub struct Experiment {
    config: ExperimentConfig,
    hash: String,
    hamiltonian: Arc<Hamiltonian>,
    ansatz: Arc<Ansatz>,
    e0: f64,
    estimator: Estimator,
    reevaluator: Estimator,
}

/// E0 by exact diagonalisation where feasible, else the file's reference.
pub fn ground_energy(h: &Hamiltonian) -> Result<f64> {
    if h.n_qubits() <= GROUND_STATE_LIMIT {
        Ok(exact_ground_state(h)?.0)
    } else {
        h.e0_reference().ok_or(Error::Capability {
            what: "exact diagonalisation without a reference energy",
            limit: GROUND_STATE_LIMIT,
            requested: h.n_qubits(),
        })
    }
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let hamiltonian = Arc::new(config.hamiltonian.build()?);
        let ansatz = Arc::new(config.ansatz.build(&hamiltonian)?);
        if let InitSpec::Custom(v) = &config.init {
            if v.len() != ansatz.n_params() {
                return Err(Error::Config(format!(
                    "custom init has {} entries but the ansatz has {} parameters",
                    v.len(),
                    ansatz.n_params()
                )));
            }
        }
        let e0 = ground_energy(&hamiltonian)?;
        let estimator = Estimator::new(ansatz.clone(), hamiltonian.clone(), config.noise)?;
        let reevaluator = estimator.with_noise(config.reevaluation.noise_for(config.noise))?;
        Ok(Self {
            hash: config.hash()?,
            config,
            hamiltonian,
            ansatz,
            e0,
            estimator,
            reevaluator,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.config.seed.wrapping_add(run as u64)
    }

    pub fn initial_point(&self, run: usize) -> Vec<f64> {
        let d = self.ansatz.n_params();
        match &self.config.init {
            InitSpec::Named(InitKind::Zeros) => vec![0.0; d],
            InitSpec::Named(InitKind::Uniform01) => {
                let mut rng = RngStream::new(self.seed(run), 0)
                    .with_channel(INIT_CHANNEL)
                    .at(0);
                (0..d).map(|_| rng.random::<f64>()).collect()
            }
            InitSpec::Custom(v) => v.clone(),
        }
    }

    fn divergence_limit(&self) -> f64 {
        self.config
            .divergence_limit
            .unwrap_or(1e3 * self.e0.abs().max(1.0))
    }

    fn variance_convention(&self) -> String {
        match self.config.noise.mode {
            NoiseMode::Exact => "exact: no sampling variance".into(),
            NoiseMode::Gaussian => "gaussian: Var[H] of the prepared state".into(),
            NoiseMode::Sampled => self.config.noise.allocation.convention().into(),
        }
    }

    /// Runs one optimisation; nothing is written to disk.
    pub fn run(&self, run: usize) -> Result<(TraceHeader, OptimizerTrace, RunRecord)> {
        let seed = self.seed(run);
        let x0 = self.initial_point(run);
        let cfg = self.config.optimizer_config(seed);
        let options = RunOptions {
            run: 0,
            divergence_limit: Some(self.divergence_limit()),
            target: Some(Target {
                e0: self.e0,
                tolerance: self.config.tolerance,
                stop: self.config.stop_at_tolerance,
            }),
        };
        let m = minimize(&self.estimator, &x0, &cfg, options)?;
        let trace = m.trace;

        let stream = RngStream::new(seed, 0).with_channel(REEVALUATION_CHANNEL);
        let corrected_best = self.reevaluator.estimate(&trace.best_theta, &mut stream.at(0))?.value;
        let corrected_final = self.reevaluator.estimate(&trace.final_theta, &mut stream.at(1))?.value;
        let sigma_noise = match self.config.noise.effective_shots() {
            Some(n) => trace.noise_floor(n)?,
            None => 0.0,
        };
        let status = if trace.termination == Termination::Diverged {
            RunStatus::Diverged
        } else if trace.fes_to_target.is_some() {
            RunStatus::Converged
        } else {
            RunStatus::Budget
        };
        let header = TraceHeader {
            config: self.config.clone(),
            config_hash: self.hash.clone(),
            run,
            seed,
            optimizer: cfg.resolved(self.ansatz.n_params()),
            variance_convention: self.variance_convention(),
            e0: self.e0,
            n_params: self.ansatz.n_params(),
            x0,
        };
        let record = RunRecord {
            config_hash: self.hash.clone(),
            label: self.config.label(),
            run,
            seed,
            status,
            termination: trace.termination.clone(),
            e0: self.e0,
            n_evaluations: trace.n_evaluations,
            fes_to_tolerance: trace.fes_to_target,
            best_value: trace.best_value,
            corrected_best,
            corrected_final,
            sigma_noise,
            best_theta: trace.best_theta.clone(),
            final_theta: trace.final_theta.clone(),
            wall_clock_s: trace.wall_clock_s,
            trace_file: None,
        };
        Ok((header, trace, record))
    }

    fn trace_path(&self, dir: &Path, run: usize) -> PathBuf {
        dir.join(TRACE_DIR)
            .join(format!("{}-run-{run:04}.jsonl", &self.hash[..12]))
    }

    /// Runs every run not already recorded in the output directory and
    /// returns all records of this experiment ordered by run index.
    pub fn run_all(&self, settings: &RunSettings) -> Result<Vec<RunRecord>> {
        let mut done = Vec::new();
        let writer = match &settings.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir.join(TRACE_DIR)).map_err(|e| Error::file(dir, e))?;
                let path = dir.join(RECORDS_FILE);
                done = load_records(&path)?
                    .into_iter()
                    .filter(|r| r.config_hash == self.hash && r.run < self.config.n_runs)
                    .collect();
                Some(RecordWriter::open(path)?)
            }
            None => None,
        };
        let pending: Vec<usize> = (0..self.config.n_runs)
            .filter(|i| !done.iter().any(|r| r.run == *i))
            .collect();

        let exec = settings.execution;
        let results = exec.install(settings.threads, || {
            exec.map(pending.len(), |k| -> Result<RunRecord> {
                let run = pending[k];
                let (header, trace, mut record) = self.run(run)?;
                if let (Some(dir), Some(writer)) = (&settings.out_dir, &writer) {
                    let path = self.trace_path(dir, run);
                    write_trace(&path, &header, &trace)?;
                    record.trace_file = Some(path);
                    writer.append(&record)?;
                }
                Ok(record)
            })
        });
        for r in results {
            done.push(r?);
        }
        done.sort_by_key(|r| r.run);
        done.dedup_by_key(|r| r.run);
        Ok(done)
    }
}

/// Validates `cfg` and runs it.
pub fn run_experiment(cfg: &ExperimentConfig, settings: &RunSettings) -> Result<Vec<RunRecord>> {
    Experiment::new(cfg.clone())?.run_all(settings)
}
