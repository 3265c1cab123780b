//! Budgeted minimisation of noisy objectives.
//!
//! Every optimiser talks to the objective through an [`ObjectiveHandle`],
//! which counts function evaluations (FEs), enforces the budget and the
//! divergence guard, and records the full [`OptimizerTrace`]. An optimiser
//! cannot evaluate the objective any other way, so the trace's FE count is
//! the objective's call count by construction.

mod bfgs;
mod cma_es;
mod de;
mod gd;
mod ilshade;
mod nelder_mead;
mod pso;
mod sa;
mod spsa;
pub mod testfns;

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::GradientRule;
use crate::error::{Error, Result};
use crate::estimator::gradient;
use crate::rng::RngStream;

pub use bfgs::BfgsParams;
pub use cma_es::CmaEsParams;
pub use de::DeParams;
pub use gd::GdParams;
pub use ilshade::IlshadeParams;
pub use nelder_mead::NelderMeadParams;
pub use pso::PsoParams;
pub use sa::SaParams;
pub use spsa::SpsaParams;

/// Coordinate bounds applied by the population methods (angles are
/// periodic, so nothing is lost).
pub const POPULATION_BOUND: f64 = 2.0 * std::f64::consts::PI;

/// RNG channel for measurement noise; the optimiser's own randomness uses
/// [`OPTIMIZER_CHANNEL`].
pub const NOISE_CHANNEL: u64 = 0;
pub const OPTIMIZER_CHANNEL: u64 = 1;

/// Result of one objective call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Single-shot variance behind `value` (0 for deterministic objectives).
    pub variance: f64,
    /// Noise-free value at the same point, when the objective knows it.
    pub exact: Option<f64>,
}

pub trait Objective: Sync {
    fn dimension(&self) -> usize;

    fn evaluate(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Evaluation>;

    fn gradient_rule(&self) -> GradientRule {
        GradientRule::FiniteDifference
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeRecord {
    pub theta: Vec<f64>,
    pub value: f64,
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub evaluations: Vec<FeRecord>,
    pub mean: f64,
    pub best: f64,
    pub running_best: f64,
    pub elapsed_s: f64,
}

impl IterationRecord {
    pub fn best_theta(&self) -> Option<&[f64]> {
        self.evaluations
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .map(|e| e.theta.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "reason")]
pub enum Termination {
    Budget,
    /// Exact energy came within tolerance of the target.
    Target,
    Diverged,
    /// The optimiser stopped on its own criterion.
    AlgorithmStop(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub iterations: Vec<IterationRecord>,
    pub n_evaluations: u64,
    pub termination: Termination,
    pub best_theta: Vec<f64>,
    pub best_value: f64,
    /// The optimiser's own recommended point at the end (CMA-ES mean, simplex
    /// best vertex, current iterate, ...).
    pub final_theta: Vec<f64>,
    /// 1-based FE index at which the target tolerance was first met.
    pub fes_to_target: Option<u64>,
    pub wall_clock_s: f64,
}

impl OptimizerTrace {
    pub fn evaluations(&self) -> impl Iterator<Item = &FeRecord> {
        self.iterations.iter().flat_map(|it| it.evaluations.iter())
    }

    pub fn variances(&self) -> Vec<f64> {
        self.evaluations().map(|e| e.variance).collect()
    }

    /// Noise floor over every FE in the trace.
    pub fn noise_floor(&self, n_shots: u64) -> Result<f64> {
        crate::estimator::noise_floor(&self.variances(), n_shots)
    }
}

/// Stop condition on the noise-free energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub e0: f64,
    pub tolerance: f64,
    /// End the run as soon as the tolerance is met.
    pub stop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Run index; selects the random streams together with the seed.
    pub run: u64,
    /// Abort when `|value|` exceeds this.
    pub divergence_limit: Option<f64>,
    pub target: Option<Target>,
}

/// Why an optimiser loop ended early.
#[derive(Debug)]
pub(crate) enum Halt {
    Stop,
    Fail(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Self {
        Halt::Fail(e)
    }
}

pub(crate) type Step<T> = std::result::Result<T, Halt>;

/// Counting, budget-enforcing, trace-recording wrapper around an objective.
pub struct ObjectiveHandle<'a> {
    objective: &'a dyn Objective,
    stream: RngStream,
    budget: u64,
    options: RunOptions,
    count: u64,
    current: Vec<FeRecord>,
    iterations: Vec<IterationRecord>,
    best: Option<(Vec<f64>, f64)>,
    recommended: Option<Vec<f64>>,
    termination: Option<Termination>,
    fes_to_target: Option<u64>,
    started: Instant,
}

impl<'a> ObjectiveHandle<'a> {
    pub fn new(objective: &'a dyn Objective, seed: u64, budget: u64, options: RunOptions) -> Self {
        Self {
            objective,
            stream: RngStream::new(seed, options.run).with_channel(NOISE_CHANNEL),
            budget,
            options,
            count: 0,
            current: Vec::new(),
            iterations: Vec::new(),
            best: None,
            recommended: None,
            termination: None,
            fes_to_target: None,
            started: Instant::now(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.objective.dimension()
    }

    pub fn evaluations(&self) -> u64 {
        self.count
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.count
    }

    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, v)| (x.as_slice(), *v))
    }

    pub(crate) fn stop(&mut self, termination: Termination) -> Halt {
        self.termination.get_or_insert(termination);
        Halt::Stop
    }

    /// One FE. Fails with `Halt::Stop` once the budget is spent or a stop
    /// condition fires; the triggering evaluation is still recorded.
    pub(crate) fn evaluate(&mut self, x: &[f64]) -> Step<f64> {
        if self.termination.is_some() {
            return Err(Halt::Stop);
        }
        if self.count >= self.budget {
            return Err(self.stop(Termination::Budget));
        }
        let mut rng = self.stream.at(self.count);
        self.count += 1;
        let e = self.objective.evaluate(x, &mut rng)?;
        self.current.push(FeRecord {
            theta: x.to_vec(),
            value: e.value,
            variance: e.variance,
            exact: e.exact,
        });

        let finite = e.value.is_finite();
        if finite && self.best.as_ref().is_none_or(|(_, b)| e.value < *b) {
            self.best = Some((x.to_vec(), e.value));
        }
        let too_large = self
            .options
            .divergence_limit
            .is_some_and(|limit| e.value.abs() > limit);
        if !finite || too_large {
            return Err(self.stop(Termination::Diverged));
        }
        if let Some(t) = self.options.target {
            let reference = e.exact.unwrap_or(e.value);
            if self.fes_to_target.is_none() && reference - t.e0 <= t.tolerance {
                self.fes_to_target = Some(self.count);
                if t.stop {
                    return Err(self.stop(Termination::Target));
                }
            }
        }
        Ok(e.value)
    }

    pub(crate) fn evaluate_all(&mut self, xs: &[Vec<f64>]) -> Step<Vec<f64>> {
        xs.iter().map(|x| self.evaluate(x)).collect()
    }

    /// Gradient estimate with the objective's rule; `2 d` FEs.
    pub(crate) fn gradient(&mut self, x: &[f64]) -> Step<Vec<f64>> {
        let rule = self.objective.gradient_rule();
        let mut halt = None;
        let g = gradient(rule, x, |p| match self.evaluate(p) {
            Ok(v) => Ok(v),
            Err(h) => {
                halt = Some(h);
                Err(Error::Diagnostic("halted".into()))
            }
        });
        match (g, halt) {
            (Ok(g), _) => Ok(g),
            (Err(_), Some(h)) => Err(h),
            (Err(e), None) => Err(Halt::Fail(e)),
        }
    }

    pub(crate) fn recommend(&mut self, x: &[f64]) {
        match &mut self.recommended {
            Some(r) => r.copy_from_slice(x),
            None => self.recommended = Some(x.to_vec()),
        }
    }

    /// Closes the current iteration; a no-op if it holds no FEs.
    pub(crate) fn end_iteration(&mut self) {
        if self.current.is_empty() {
            return;
        }
        let evaluations = std::mem::take(&mut self.current);
        let n = evaluations.len() as f64;
        let mean = evaluations.iter().map(|e| e.value).sum::<f64>() / n;
        let best = evaluations
            .iter()
            .map(|e| e.value)
            .fold(f64::INFINITY, f64::min);
        let previous = self
            .iterations
            .last()
            .map_or(f64::INFINITY, |it| it.running_best);
        self.iterations.push(IterationRecord {
            index: self.iterations.len(),
            evaluations,
            mean,
            best,
            running_best: previous.min(best),
            elapsed_s: self.started.elapsed().as_secs_f64(),
        });
    }

    fn finish(mut self, x0: &[f64]) -> OptimizerTrace {
        self.end_iteration();
        let (best_theta, best_value) = self.best.take().unwrap_or((x0.to_vec(), f64::INFINITY));
        OptimizerTrace {
            iterations: self.iterations,
            n_evaluations: self.count,
            termination: self.termination.unwrap_or(Termination::Budget),
            final_theta: self.recommended.unwrap_or_else(|| best_theta.clone()),
            best_theta,
            best_value,
            fes_to_target: self.fes_to_target,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Optimiser and its hyperparameters. Unset optional fields take defaults
/// that depend on the problem dimension; see [`OptimizerConfig::resolved`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Algorithm {
    Gd(GdParams),
    Spsa(SpsaParams),
    NelderMead(NelderMeadParams),
    BfgsFd(BfgsParams),
    CmaEs(CmaEsParams),
    Pso(PsoParams),
    #[serde(rename = "de_best1bin")]
    DeBest1Bin(DeParams),
    Ilshade(IlshadeParams),
    SaCauchy(SaParams),
}

impl Algorithm {
    pub const NAMES: [&'static str; 9] = [
        "gd",
        "spsa",
        "nelder_mead",
        "bfgs_fd",
        "cma_es",
        "pso",
        "de_best1bin",
        "ilshade",
        "sa_cauchy",
    ];

    /// Algorithm with default hyperparameters.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "gd" => Algorithm::Gd(GdParams::default()),
            "spsa" => Algorithm::Spsa(SpsaParams::default()),
            "nelder_mead" => Algorithm::NelderMead(NelderMeadParams::default()),
            "bfgs_fd" => Algorithm::BfgsFd(BfgsParams::default()),
            "cma_es" => Algorithm::CmaEs(CmaEsParams::default()),
            "pso" => Algorithm::Pso(PsoParams::default()),
            "de_best1bin" => Algorithm::DeBest1Bin(DeParams::default()),
            "ilshade" => Algorithm::Ilshade(IlshadeParams::default()),
            "sa_cauchy" => Algorithm::SaCauchy(SaParams::default()),
            other => {
                return Err(Error::Config(format!(
                    "unknown optimizer {other:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gd(_) => "gd",
            Algorithm::Spsa(_) => "spsa",
            Algorithm::NelderMead(_) => "nelder_mead",
            Algorithm::BfgsFd(_) => "bfgs_fd",
            Algorithm::CmaEs(_) => "cma_es",
            Algorithm::Pso(_) => "pso",
            Algorithm::DeBest1Bin(_) => "de_best1bin",
            Algorithm::Ilshade(_) => "ilshade",
            Algorithm::SaCauchy(_) => "sa_cauchy",
        }
    }

    pub fn is_population_method(&self) -> bool {
        matches!(
            self,
            Algorithm::CmaEs(_) | Algorithm::Pso(_) | Algorithm::DeBest1Bin(_) | Algorithm::Ilshade(_)
        )
    }

    fn population(&self) -> Option<usize> {
        match self {
            Algorithm::CmaEs(p) => p.population,
            Algorithm::Pso(p) => p.population,
            Algorithm::DeBest1Bin(p) => p.population,
            Algorithm::Ilshade(p) => p.initial_population,
            _ => None,
        }
    }
}

impl Default for Algorithm {
    fn default() -> Self {
        Algorithm::CmaEs(CmaEsParams::default())
    }
}

fn default_budget() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(flatten)]
    pub algorithm: Algorithm,
    /// Maximum number of FEs.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Base seed; the run index selects the stream.
    #[serde(default)]
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, budget: u64, seed: u64) -> Self {
        Self {
            algorithm,
            budget,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("optimizer budget must be >= 1".into()));
        }
        if let Some(p) = self.algorithm.population() {
            if p < 4 {
                return Err(Error::Config(format!(
                    "population size must be >= 4, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Copy with every dimension-dependent default filled in, as written to
    /// trace headers.
    pub fn resolved(&self, dimension: usize) -> Self {
        let mut out = self.clone();
        match &mut out.algorithm {
            Algorithm::Gd(_) | Algorithm::BfgsFd(_) | Algorithm::NelderMead(_) => {}
            Algorithm::Spsa(p) => p.resolve(self.budget),
            Algorithm::CmaEs(p) => p.resolve(dimension),
            Algorithm::Pso(p) => p.resolve(dimension),
            Algorithm::DeBest1Bin(p) => p.resolve(dimension),
            Algorithm::Ilshade(p) => p.resolve(dimension),
            Algorithm::SaCauchy(p) => p.resolve(dimension, self.budget),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub theta: Vec<f64>,
    pub value: f64,
    pub trace: OptimizerTrace,
}

/// Minimises `objective` from `x0` within `cfg.budget` FEs.
///
/// Budget exhaustion, reaching the target and divergence all end the run
/// normally (see [`OptimizerTrace::termination`]); only objective errors are
/// returned as `Err`.
pub fn minimize(
    objective: &dyn Objective,
    x0: &[f64],
    cfg: &OptimizerConfig,
    options: RunOptions,
) -> Result<Minimum> {
    cfg.validate()?;
    let d = objective.dimension();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("initial point has non-finite entries".into()));
    }
    let cfg = cfg.resolved(d);
    let mut rng = RngStream::new(cfg.seed, options.run)
        .with_channel(OPTIMIZER_CHANNEL)
        .at(0);
    let mut handle = ObjectiveHandle::new(objective, cfg.seed, cfg.budget, options);

    let outcome = match &cfg.algorithm {
        Algorithm::Gd(p) => gd::run(&mut handle, x0, p),
        Algorithm::Spsa(p) => spsa::run(&mut handle, x0, p, &mut rng),
        Algorithm::NelderMead(p) => nelder_mead::run(&mut handle, x0, p),
        Algorithm::BfgsFd(p) => bfgs::run(&mut handle, x0, p),
        Algorithm::CmaEs(p) => cma_es::run(&mut handle, x0, p, &mut rng),
        Algorithm::Pso(p) => pso::run(&mut handle, x0, p, &mut rng),
        Algorithm::DeBest1Bin(p) => de::run(&mut handle, x0, p, &mut rng),
        Algorithm::Ilshade(p) => ilshade::run(&mut handle, x0, p, &mut rng),
        Algorithm::SaCauchy(p) => sa::run(&mut handle, x0, p, &mut rng),
    };
    match outcome {
        Ok(()) => {
            // optimiser returned by itself without naming a reason
            handle.stop(Termination::AlgorithmStop("finished".into()));
        }
        Err(Halt::Stop) => {}
        Err(Halt::Fail(e)) => return Err(e),
    }
    let trace = handle.finish(x0);
    Ok(Minimum {
        theta: trace.best_theta.clone(),
        value: trace.best_value,
        trace,
    })
}

/// Initial population: `x0` itself plus `n - 1` points drawn uniformly from
/// the box `x0 +- radius`, clipped to the population bounds.
pub(crate) fn initial_population<R: Rng>(x0: &[f64], n: usize, radius: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pop = Vec::with_capacity(n);
    pop.push(x0.iter().map(|v| clip(*v)).collect());
    for _ in 1..n {
        pop.push(
            x0.iter()
                .map(|v| clip(v + radius * (2.0 * rng.random::<f64>() - 1.0)))
                .collect(),
        );
    }
    pop
}

#[inline]
pub(crate) fn clip(v: f64) -> f64 {
    v.clamp(-POPULATION_BOUND, POPULATION_BOUND)
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::testfns::{Quadratic, Sphere};
    use super::*;

    #[test]
    fn config_parses_from_toml() {
        let cfg: OptimizerConfig = toml::from_str(
            "algorithm = \"cma_es\"\nbudget = 500\nseed = 3\nsigma0 = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.budget, 500);
        assert!(matches!(cfg.algorithm, Algorithm::CmaEs(CmaEsParams { sigma0, .. }) if sigma0 == 0.5));
        let cfg: OptimizerConfig = toml::from_str("algorithm = \"de_best1bin\"\n").unwrap();
        assert_eq!(cfg.budget, 10_000);
        assert!(toml::from_str::<OptimizerConfig>("algorithm = \"slsqp\"\n").is_err());
    }

    #[test]
    fn small_populations_are_rejected() {
        let cfg = OptimizerConfig::new(
            Algorithm::Pso(PsoParams {
                population: Some(3),
                ..Default::default()
            }),
            100,
            0,
        );
        assert!(minimize(&Sphere::new(2), &[1.0, 1.0], &cfg, RunOptions::default()).is_err());
    }

    #[test]
    fn budget_is_respected_and_counted() {
        for name in Algorithm::NAMES {
            let cfg = OptimizerConfig::new(Algorithm::from_name(name).unwrap(), 37, 1);
            let m = minimize(&Sphere::new(3), &[1.0; 3], &cfg, RunOptions::default()).unwrap();
            assert!(m.trace.n_evaluations <= 37, "{name}");
            assert_eq!(m.trace.evaluations().count() as u64, m.trace.n_evaluations, "{name}");
        }
    }

    #[test]
    fn divergence_is_recorded_not_raised() {
        let cfg = OptimizerConfig::new(Algorithm::Gd(GdParams { eta: 0.55 }), 10_000, 0);
        let q = Quadratic::diagonal(vec![1.0, 4.0]);
        let options = RunOptions {
            divergence_limit: Some(1e6),
            ..Default::default()
        };
        let m = minimize(&q, &[1.0, 1.0], &cfg, options).unwrap();
        assert_eq!(m.trace.termination, Termination::Diverged);
    }

    #[test]
    fn target_stops_the_run() {
        let cfg = OptimizerConfig::new(Algorithm::from_name("nelder_mead").unwrap(), 5000, 0);
        let options = RunOptions {
            target: Some(Target {
                e0: 0.0,
                tolerance: 1e-2,
                stop: true,
            }),
            ..Default::default()
        };
        let m = minimize(&Sphere::new(2), &[1.0, 1.0], &cfg, options).unwrap();
        assert_eq!(m.trace.termination, Termination::Target);
        assert_eq!(m.trace.fes_to_target, Some(m.trace.n_evaluations));
        assert!(m.value <= 1e-2);
    }
}
