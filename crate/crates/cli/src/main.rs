use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use vqelab::analysis::{self, NOISY_HESSIAN_REPEATS};
use vqelab::ansatz::{Ansatz, AnsatzSpec};
use vqelab::estimator::{Estimator, NoiseMode, NoiseModel, ShotAllocation, DEFAULT_SHOTS};
use vqelab::harness::{self, ExperimentConfig, HamiltonianSpec, RunSettings, RECORDS_FILE};
use vqelab::models::Boundary;
use vqelab::optimizers::{minimize, Algorithm, OptimizerConfig, RunOptions};
use vqelab::pauli::{exact_ground_state, Hamiltonian};
use vqelab::rng::RngStream;
use vqelab::{Error, Execution, Result};

/// Budget of the noiseless CMA-ES run used to locate a reference optimum.
const REFERENCE_BUDGET: u64 = 5000;

#[derive(Parser)]
#[command(name = "vqelab", version, about = "Finite-shot VQE optimization laboratory")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for batch work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Machine-readable output instead of text.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// One energy estimate at given parameters.
    Energy {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ansatz: AnsatzArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Comma-separated parameters (default: all zeros).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Exact ground-state energy (and optionally the state).
    Exactdiag {
        #[command(flatten)]
        model: ModelArgs,
        /// Also print the largest ground-state amplitudes.
        #[arg(long)]
        state: bool,
    },
    /// Run an experiment config.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's run count.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Two-parameter landscape slice written as a matrix file.
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ansatz: AnsatzArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Points per axis.
        #[arg(long, default_value_t = 81)]
        grid: usize,
        /// Parameters to vary, `i,j` (default: the two most curved at the
        /// centre).
        #[arg(long, value_delimiter = ',')]
        axes: Option<Vec<usize>>,
        /// Half-width of the slice in radians.
        #[arg(long, default_value_t = std::f64::consts::PI)]
        half_width: f64,
        /// Centre of the slice (default: noiseless optimum).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Winner's-curse report and tracking errors for a trace file.
    Bias {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Finite-difference Hessian and step-size diagnostics.
    Hessian {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ansatz: AnsatzArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Point to analyse (default: noiseless optimum).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
    },
    /// Aggregate run records (output directories or records files).
    Summarize {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Ising,
    Hubbard,
    H2,
    H4,
    LihActive,
    Lih,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum, required_unless_present = "hamiltonian")]
    model: Option<Model>,
    /// Hamiltonian JSON file instead of a built-in model.
    #[arg(long, conflicts_with = "model")]
    hamiltonian: Option<PathBuf>,
    /// Ising chain length.
    #[arg(long, default_value_t = 5)]
    qubits: usize,
    /// Hubbard chain length.
    #[arg(long, default_value_t = 2)]
    sites: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    #[arg(long)]
    periodic: bool,
}

impl ModelArgs {
    fn spec(&self) -> HamiltonianSpec {
        if let Some(path) = &self.hamiltonian {
            return HamiltonianSpec::File { path: path.clone() };
        }
        let molecule = |name: &str| HamiltonianSpec::Molecule { name: name.into() };
        match self.model.unwrap_or(Model::Ising) {
            Model::Ising => HamiltonianSpec::Ising {
                qubits: self.qubits,
            },
            Model::Hubbard => HamiltonianSpec::Hubbard {
                sites: self.sites,
                t: self.t,
                u: self.u,
                boundary: if self.periodic {
                    Boundary::Periodic
                } else {
                    Boundary::Open
                },
            },
            Model::H2 => molecule("h2"),
            Model::H4 => molecule("h4"),
            Model::LihActive => molecule("lih-active"),
            Model::Lih => molecule("lih"),
        }
    }

    /// Lattice models default to TwoLocal, molecules to tVHA.
    fn is_lattice(&self) -> bool {
        self.hamiltonian.is_none() && matches!(self.model, Some(Model::Ising | Model::Hubbard))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    TwoLocal,
    Tvha,
}

#[derive(Args)]
struct AnsatzArgs {
    /// Ansatz family (default: two-local for lattice models, tvha otherwise).
    #[arg(long, value_enum)]
    ansatz: Option<Family>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    /// tVHA truncation weight.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

impl AnsatzArgs {
    fn spec(&self, lattice: bool) -> AnsatzSpec {
        let family = self
            .ansatz
            .unwrap_or(if lattice { Family::TwoLocal } else { Family::Tvha });
        match family {
            Family::TwoLocal => AnsatzSpec::TwoLocal {
                reps: self.reps,
                rotation: Default::default(),
                entangler: Default::default(),
                entanglement: Default::default(),
            },
            Family::Tvha => AnsatzSpec::Tvha {
                p: self.p,
                layers: self.layers,
                initial_state: None,
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Gaussian,
    Sampled,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Allocation {
    Split,
    PerGroup,
}

#[derive(Args)]
struct NoiseArgs {
    /// Noise mode (default: sampled when --shots is given, else exact).
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum, default_value_t = Allocation::Split)]
    allocation: Allocation,
}

impl NoiseArgs {
    fn model(&self) -> NoiseModel {
        let mode = match (self.mode, self.shots) {
            (Some(Mode::Exact), _) | (None, None) => NoiseMode::Exact,
            (Some(Mode::Gaussian), _) => NoiseMode::Gaussian,
            (Some(Mode::Sampled), _) | (None, Some(_)) => NoiseMode::Sampled,
        };
        NoiseModel {
            mode,
            shots: self.shots.unwrap_or(DEFAULT_SHOTS),
            allocation: match self.allocation {
                Allocation::Split => ShotAllocation::Split,
                Allocation::PerGroup => ShotAllocation::PerGroup,
            },
        }
    }
}

struct Problem {
    label: String,
    hamiltonian: Arc<Hamiltonian>,
    ansatz: Arc<Ansatz>,
    exact: Estimator,
    noisy: Estimator,
}

impl Problem {
    fn new(model: &ModelArgs, ansatz: &AnsatzArgs, noise: &NoiseArgs) -> Result<Self> {
        let spec = model.spec();
        let hamiltonian = Arc::new(spec.build()?);
        let a = Arc::new(ansatz.spec(model.is_lattice()).build(&hamiltonian)?);
        let exact = Estimator::new(a.clone(), hamiltonian.clone(), NoiseModel::exact())?;
        let noisy = exact.with_noise(noise.model())?;
        Ok(Self {
            label: spec.label(),
            hamiltonian,
            ansatz: a,
            exact,
            noisy,
        })
    }

    fn theta_or_zeros(&self, theta: Option<Vec<f64>>) -> Result<Vec<f64>> {
        let theta = theta.unwrap_or_else(|| vec![0.0; self.ansatz.n_params()]);
        self.check(&theta)?;
        Ok(theta)
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.ansatz.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.ansatz.n_params(),
                actual: theta.len(),
            });
        }
        Ok(())
    }

    /// Best point of a noiseless CMA-ES run from the origin.
    fn reference_optimum(&self, seed: u64) -> Result<Vec<f64>> {
        let cfg = OptimizerConfig::new(Algorithm::from_name("cma_es")?, REFERENCE_BUDGET, seed);
        let zeros = vec![0.0; self.ansatz.n_params()];
        Ok(minimize(&self.exact, &zeros, &cfg, RunOptions::default())?.theta)
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Energies with trailing zeros trimmed but at least one decimal.
fn fmt_energy(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[(&str, String)]) {
    let names: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
    println!("{}\n{}", names.join(","), values.join(","));
}

fn energy(cli: &Cli, model: &ModelArgs, ansatz: &AnsatzArgs, noise: &NoiseArgs, theta: Option<Vec<f64>>) -> Result<()> {
    let p = Problem::new(model, ansatz, noise)?;
    let theta = p.theta_or_zeros(theta)?;
    let e = p.noisy.estimate(&theta, &mut RngStream::new(cli.seed, 0).at(0))?;
    match cli.format {
        Some(Format::Json) => print_json(&json!(e))?,
        Some(Format::Csv) => csv_line(&[
            ("value", e.value.to_string()),
            ("exact", e.true_expectation.to_string()),
            ("variance_single_shot", e.variance_single_shot.to_string()),
            ("n_shots", e.n_shots.to_string()),
        ]),
        None => {
            println!("value     {}", e.value);
            println!("exact     {}", e.true_expectation);
            println!("variance  {}", e.variance_single_shot);
            println!("shots     {}", e.n_shots);
        }
    }
    Ok(())
}

fn exactdiag(cli: &Cli, model: &ModelArgs, show_state: bool) -> Result<()> {
    let h = model.spec().build()?;
    let (e0, state) = exact_ground_state(&h)?;
    let mut amps: Vec<(usize, f64, f64)> = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 1e-8)
        .map(|(i, a)| (i, a.re, a.im))
        .collect();
    amps.sort_by(|a, b| (b.1 * b.1 + b.2 * b.2).total_cmp(&(a.1 * a.1 + a.2 * a.2)));
    amps.truncate(16);
    let n = h.n_qubits();
    match cli.format {
        Some(Format::Json) => print_json(&json!({
            "model": h.name(),
            "n_qubits": n,
            "e0": e0,
            "state": amps.iter().map(|(i, re, im)| json!({
                "basis": format!("{i:0n$b}"), "re": re, "im": im
            })).collect::<Vec<_>>(),
        }))?,
        Some(Format::Csv) => csv_line(&[("n_qubits", n.to_string()), ("e0", e0.to_string())]),
        None => {
            println!("{}", fmt_energy(e0));
            if show_state {
                for (i, re, im) in &amps {
                    println!("|{i:0n$b}>  {re:+.6} {im:+.6}i");
                }
            }
        }
    }
    Ok(())
}

fn optimize(cli: &Cli, config: &Path, runs: Option<usize>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.seed = cfg.seed.wrapping_add(cli.seed);
    if let Some(n) = runs {
        cfg.n_runs = n;
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let settings = RunSettings {
        out_dir: Some(out_dir.clone()),
        threads: cli.threads,
        execution: Execution::available(),
    };
    let records = harness::run_experiment(&cfg, &settings)?;
    eprintln!("{} runs recorded in {}", records.len(), out_dir.join(RECORDS_FILE).display());
    print_summary(cli, &records)
}

fn print_summary(cli: &Cli, records: &[harness::RunRecord]) -> Result<()> {
    let table = harness::summarize(records)?;
    match cli.format {
        Some(Format::Json) => print_json(&json!(table))?,
        Some(Format::Csv) => print!("{}", table.to_csv()?),
        None => print!("{}", table.to_text()),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn scan(
    cli: &Cli,
    model: &ModelArgs,
    ansatz: &AnsatzArgs,
    noise: &NoiseArgs,
    grid: usize,
    axes: Option<Vec<usize>>,
    half_width: f64,
    theta: Option<Vec<f64>>,
) -> Result<()> {
    let p = Problem::new(model, ansatz, noise)?;
    let center = match theta {
        Some(t) => {
            p.check(&t)?;
            t
        }
        None => p.reference_optimum(cli.seed)?,
    };
    let (i, j) = match axes.as_deref() {
        Some([i, j]) => (*i, *j),
        Some(_) => return Err(Error::Config("--axes takes exactly two indices".into())),
        None => analysis::curved_axes(&p.exact, &center)?,
    };
    let stream = RngStream::new(cli.seed, 0);
    let exec = Execution::available();
    let scan = exec.install(cli.threads, || {
        analysis::landscape_scan(&p.noisy, i, j, &center, half_width, grid, stream, exec)
    })?;
    let e0 = exact_ground_state(&p.hamiltonian)?.0;
    let shots = p
        .noisy
        .noise()
        .effective_shots()
        .map_or_else(|| "exact".to_string(), |n| n.to_string());
    let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(Error::Io)?;
    let (sep, ext) = if cli.format == Some(Format::Csv) { (',', "csv") } else { (' ', "dat") };
    let path = dir.join(format!("scan-{}-{}-{grid}.{ext}", p.label, shots));
    std::fs::write(&path, scan.to_text(sep)).map_err(Error::Io)?;
    let below = scan.count_below(e0);
    match cli.format {
        Some(Format::Json) => print_json(&json!({
            "file": path, "axes": [i, j], "grid": grid, "shots": shots,
            "e0": e0, "min": scan.min(), "cells_below_e0": below,
        }))?,
        _ => {
            println!("wrote {}", path.display());
            println!("axes {i},{j}  grid {grid}x{grid}  shots {shots}");
            println!("E0 {}  min {}  cells below E0: {below}", fmt_energy(e0), scan.min());
        }
    }
    Ok(())
}

fn bias(cli: &Cli, trace: &Path) -> Result<()> {
    let (header, trace) = harness::read_trace(trace)?;
    let shots = header.config.noise.effective_shots();
    let report = analysis::bias_report(&trace, shots)?;
    let tracking = analysis::tracking_errors(&trace, header.e0, shots)?;
    match cli.format {
        Some(Format::Json) => print_json(&json!({ "bias": report, "tracking": tracking }))?,
        Some(Format::Csv) => csv_line(&[
            ("k", report.k.to_string()),
            ("sigma_noise", report.sigma_noise.to_string()),
            ("predicted_bias", report.predicted_bias.to_string()),
            ("observed_min_gap", report.observed_min_gap.map_or(String::new(), |v| v.to_string())),
            ("mean_error", tracking.mean_error.map_or(String::new(), |v| v.to_string())),
            ("best_error", tracking.best_error.to_string()),
        ]),
        None => {
            println!("FEs                 {}", report.k);
            println!("sigma_noise         {:.4e}", report.sigma_noise);
            println!("predicted bias      {:.4e}", report.predicted_bias);
            if let Some(g) = report.observed_min_gap {
                println!("observed min gap    {g:.4e}");
            }
            println!("significance (4sd)  {:.4e}", report.significance_threshold);
            if let Some(m) = tracking.mean_error {
                println!("mean tracking error {m:.4e}");
            }
            println!("best tracking error {:.4e}", tracking.best_error);
        }
    }
    Ok(())
}

fn hessian(cli: &Cli, model: &ModelArgs, ansatz: &AnsatzArgs, noise: &NoiseArgs, theta: Option<Vec<f64>>) -> Result<()> {
    let p = Problem::new(model, ansatz, noise)?;
    let star = p.reference_optimum(cli.seed)?;
    let theta = match theta {
        Some(t) => {
            p.check(&t)?;
            t
        }
        None => star.clone(),
    };
    let repeats = if p.noisy.noise().mode.is_noisy() { NOISY_HESSIAN_REPEATS } else { 1 };
    let d = analysis::hessian_diagnostics(&p.noisy, &theta, Some(&star), repeats, RngStream::new(cli.seed, 0))?;
    match cli.format {
        Some(Format::Json) => print_json(&json!(d))?,
        Some(Format::Csv) => csv_line(&[
            ("lambda_max", d.lambda_max.to_string()),
            ("lambda_min", d.lambda_min.to_string()),
            ("condition_number", d.condition_number.map_or(String::new(), |v| v.to_string())),
            ("eta_max", d.eta_max.to_string()),
            ("gradient_noise", d.gradient_noise.to_string()),
            ("noise_dominated", d.noise_dominated.map_or(String::new(), |v| v.to_string())),
        ]),
        None => {
            println!("lambda_max      {:.6e}", d.lambda_max);
            println!("lambda_min      {:.6e}", d.lambda_min);
            match d.condition_number {
                Some(k) => println!("condition       {k:.4e}"),
                None => println!("condition       n/a (lambda_min <= 1e-10)"),
            }
            println!("eta_max         {:.6e}", d.eta_max);
            println!("gradient noise  {:.4e}", d.gradient_noise);
            if let (Some(s), Some(nd)) = (d.curvature_signal, d.noise_dominated) {
                println!("curvature term  {s:.4e} (against best-known optimum)");
                println!("noise dominated {nd}");
            }
        }
    }
    Ok(())
}

fn summarize(cli: &Cli, paths: &[PathBuf]) -> Result<()> {
    let mut records = Vec::new();
    for p in paths {
        let file = if p.is_dir() { p.join(RECORDS_FILE) } else { p.clone() };
        if !file.exists() {
            return Err(Error::Config(format!("{} does not exist", file.display())));
        }
        records.extend(harness::load_records(&file)?);
    }
    print_summary(cli, &records)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Energy {
            model,
            ansatz,
            noise,
            theta,
        } => energy(cli, model, ansatz, noise, theta.clone()),
        Command::Exactdiag { model, state } => exactdiag(cli, model, *state),
        Command::Optimize { config, runs } => optimize(cli, config, *runs),
        Command::Scan {
            model,
            ansatz,
            noise,
            grid,
            axes,
            half_width,
            theta,
        } => scan(cli, model, ansatz, noise, *grid, axes.clone(), *half_width, theta.clone()),
        Command::Bias { trace } => bias(cli, trace),
        Command::Hessian {
            model,
            ansatz,
            noise,
            theta,
        } => hessian(cli, model, ansatz, noise, theta.clone()),
        Command::Summarize { paths } => summarize(cli, paths),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
