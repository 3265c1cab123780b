//! Statistics over estimators and traces: winner's-curse bias, noise floors,
//! mean-vs-best tracking errors, high-shot reevaluation, Hessian step-size
//! diagnostics and two-dimensional landscape scans.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{gradient, EnergyEstimate, Estimator, FD_STEP};
use crate::exec::Execution;
use crate::optimizers::{Objective, OptimizerTrace};
use crate::rng::RngStream;

/// Improvements smaller than this many noise standard deviations are not
/// treated as real.
pub const SIGNIFICANCE_SIGMAS: f64 = 4.0;
/// Fraction of iterations, counted from the end, that forms the converged
/// phase for tracking errors.
pub const CONVERGED_FRACTION: f64 = 0.25;
/// Repeats averaged per Hessian entry when the objective is noisy.
pub const NOISY_HESSIAN_REPEATS: usize = 16;
pub const MAX_HESSIAN_DIMENSION: usize = 64;
pub const MAX_GRID: usize = 512;

/// Expected shift of the minimum of `k` independent `N(mu, sigma^2)` draws
/// below `mu`, to leading order: `-sigma sqrt(2 ln k)`.
pub fn predicted_winner_bias(sigma_noise: f64, k: u64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    -sigma_noise * (2.0 * (k as f64).ln()).sqrt()
}

/// True when `decrease` exceeds the significance threshold.
pub fn is_significant(decrease: f64, sigma_noise: f64) -> bool {
    decrease > SIGNIFICANCE_SIGMAS * sigma_noise
}

/// Average over `repetitions` of the minimum of `k` draws from
/// `N(0, sigma^2)`. Repetition `r` draws from `stream.at(r)`.
pub fn mean_min_of_normals(sigma: f64, k: u64, repetitions: usize, stream: RngStream) -> f64 {
    let total: f64 = (0..repetitions)
        .map(|r| {
            let mut rng = stream.at(r as u64);
            (0..k)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / repetitions as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    /// Number of FEs in the trace.
    pub k: u64,
    pub sigma_noise: f64,
    pub predicted_bias: f64,
    /// Best noisy value minus the exact energy at the same parameters.
    pub observed_min_gap: Option<f64>,
    pub significance_threshold: f64,
}

/// Winner's-curse report for a trace recorded with `n_shots` per FE (`None`
/// for exact traces).
pub fn bias_report(trace: &OptimizerTrace, n_shots: Option<u64>) -> Result<BiasReport> {
    let sigma_noise = match n_shots {
        Some(n) => trace.noise_floor(n)?,
        None => 0.0,
    };
    let best = trace
        .evaluations()
        .filter(|e| e.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value));
    Ok(BiasReport {
        k: trace.n_evaluations,
        sigma_noise,
        predicted_bias: predicted_winner_bias(sigma_noise, trace.n_evaluations),
        observed_min_gap: best.and_then(|e| e.exact.map(|x| e.value - x)),
        significance_threshold: SIGNIFICANCE_SIGMAS * sigma_noise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingErrors {
    /// Average `|iteration mean - E0|` over the converged phase; `None` when
    /// every iteration there holds a single FE.
    pub mean_error: Option<f64>,
    /// Average `|iteration minimum - E0|` over the converged phase.
    pub best_error: f64,
    pub sigma_noise: f64,
    pub iterations_used: usize,
}

/// The iterations forming the converged phase (last quarter, at least one).
pub fn converged_phase(trace: &OptimizerTrace) -> &[crate::optimizers::IterationRecord] {
    let n = trace.iterations.len();
    let keep = ((n as f64 * CONVERGED_FRACTION).ceil() as usize).clamp(1.min(n), n);
    &trace.iterations[n - keep..]
}

/// Mean-vs-best tracking errors of the iteration-aggregated values against
/// `e0`.
pub fn tracking_errors(trace: &OptimizerTrace, e0: f64, n_shots: Option<u64>) -> Result<TrackingErrors> {
    let phase = converged_phase(trace);
    if phase.is_empty() {
        return Err(Error::Diagnostic("trace has no iterations".into()));
    }
    let best_error = phase.iter().map(|it| (it.best - e0).abs()).sum::<f64>() / phase.len() as f64;
    let populated: Vec<f64> = phase
        .iter()
        .filter(|it| it.evaluations.len() >= 2)
        .map(|it| (it.mean - e0).abs())
        .collect();
    let mean_error = (!populated.is_empty()).then(|| populated.iter().sum::<f64>() / populated.len() as f64);
    let sigma_noise = match n_shots {
        Some(n) => trace.noise_floor(n)?,
        None => 0.0,
    };
    Ok(TrackingErrors {
        mean_error,
        best_error,
        sigma_noise,
        iterations_used: phase.len(),
    })
}

/// Variant that re-evaluates the mean parameter vector of each converged
/// iteration with `energy` instead of averaging the noisy values.
pub fn tracking_errors_reevaluated<F>(trace: &OptimizerTrace, e0: f64, mut energy: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let phase = converged_phase(trace);
    if phase.is_empty() {
        return Err(Error::Diagnostic("trace has no iterations".into()));
    }
    let mut total = 0.0;
    for it in phase {
        let d = it.evaluations[0].theta.len();
        let n = it.evaluations.len() as f64;
        let centre: Vec<f64> = (0..d)
            .map(|j| it.evaluations.iter().map(|e| e.theta[j]).sum::<f64>() / n)
            .collect();
        total += (energy(&centre)? - e0).abs();
    }
    Ok(total / phase.len() as f64)
}

/// Re-measures every candidate with `estimator` (typically exact or with
/// many more shots than the optimisation used). Candidate `i` draws from
/// `stream.at(i)`, so duplicates get independent noise and the result does
/// not depend on `exec`.
pub fn high_shot_reevaluate(
    candidates: &[Vec<f64>],
    estimator: &Estimator,
    stream: RngStream,
    exec: Execution,
) -> Result<Vec<(Vec<f64>, EnergyEstimate)>> {
    exec.map(candidates.len(), |i| {
        let mut rng = stream.at(i as u64);
        estimator
            .estimate(&candidates[i], &mut rng)
            .map(|e| (candidates[i].clone(), e))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianDiagnostics {
    /// Symmetrised Hessian, row-major rows.
    pub hessian: Vec<Vec<f64>>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// `lambda_max / lambda_min`, only when `lambda_min > 1e-10`.
    pub condition_number: Option<f64>,
    /// Largest stable gradient-descent step `2 / lambda_max`.
    pub eta_max: f64,
    /// `sqrt(E ||xi||^2)` of the gradient estimator at `theta`.
    pub gradient_noise: f64,
    /// `||H (theta - theta_star)||` when a reference point was given.
    pub curvature_signal: Option<f64>,
    /// Gradient noise at least as large as the curvature signal. The
    /// reference point is the best known one, so this is an estimate.
    pub noise_dominated: Option<bool>,
    pub repeats: usize,
}

/// Central-difference Hessian (step [`FD_STEP`]) of `objective` at `theta`.
///
/// For noisy objectives (`repeats > 1`) each entry is averaged over
/// `repeats` independent evaluations, and the gradient noise is estimated
/// from the same number of repeated gradients.
pub fn hessian_diagnostics(
    objective: &dyn Objective,
    theta: &[f64],
    theta_star: Option<&[f64]>,
    repeats: usize,
    stream: RngStream,
) -> Result<HessianDiagnostics> {
    let d = theta.len();
    if d != objective.dimension() {
        return Err(Error::DimensionMismatch {
            expected: objective.dimension(),
            actual: d,
        });
    }
    if d == 0 || d > MAX_HESSIAN_DIMENSION {
        return Err(Error::Config(format!(
            "Hessian diagnostics need 1..={MAX_HESSIAN_DIMENSION} parameters, got {d}"
        )));
    }
    let repeats = repeats.max(1);
    let mut counter = 0u64;
    let mut eval = |x: &[f64]| -> Result<f64> {
        let mut rng = stream.at(counter);
        counter += 1;
        Ok(objective.evaluate(x, &mut rng)?.value)
    };
    let h = FD_STEP;
    let mut m = vec![vec![0.0; d]; d];
    let mut x = theta.to_vec();
    for _ in 0..repeats {
        let f0 = eval(&x)?;
        for i in 0..d {
            x[i] = theta[i] + h;
            let fp = eval(&x)?;
            x[i] = theta[i] - h;
            let fm = eval(&x)?;
            x[i] = theta[i];
            m[i][i] += (fp - 2.0 * f0 + fm) / (h * h);
            for j in i + 1..d {
                let mut corner = |si: f64, sj: f64| {
                    x[i] = theta[i] + si * h;
                    x[j] = theta[j] + sj * h;
                    let v = eval(&x);
                    x[i] = theta[i];
                    x[j] = theta[j];
                    v
                };
                let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                    + corner(-1.0, -1.0)?)
                    / (4.0 * h * h);
                m[i][j] += v;
                m[j][i] += v;
            }
        }
    }
    let scale = 1.0 / repeats as f64;
    let sym = DMatrix::from_fn(d, d, |i, j| 0.5 * (m[i][j] + m[j][i]) * scale);
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diagnostic("Hessian has non-finite entries".into()));
    }
    let eig = sym.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.max();
    let lambda_min = eig.eigenvalues.min();

    // gradient noise: per-component sample variance over repeated estimates
    let gradient_noise = if repeats > 1 {
        let rule = objective.gradient_rule();
        let grads: Vec<Vec<f64>> = (0..repeats)
            .map(|_| gradient(rule, theta, &mut eval))
            .collect::<Result<_>>()?;
        let n = repeats as f64;
        (0..d)
            .map(|j| {
                let mean = grads.iter().map(|g| g[j]).sum::<f64>() / n;
                grads.iter().map(|g| (g[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            })
            .sum::<f64>()
            .sqrt()
    } else {
        0.0
    };
    let curvature_signal = match theta_star {
        Some(star) if star.len() == d => {
            let delta = nalgebra::DVector::from_fn(d, |i, _| theta[i] - star[i]);
            Some((&sym * delta).norm())
        }
        Some(star) => {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: star.len(),
            })
        }
        None => None,
    };
    Ok(HessianDiagnostics {
        hessian: (0..d).map(|i| (0..d).map(|j| sym[(i, j)]).collect()).collect(),
        lambda_max,
        lambda_min,
        condition_number: (lambda_min > 1e-10).then(|| lambda_max / lambda_min),
        eta_max: 2.0 / lambda_max,
        gradient_noise,
        curvature_signal,
        noise_dominated: curvature_signal.map(|s| gradient_noise > 0.0 && gradient_noise >= s),
        repeats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeScan {
    pub axis_i: usize,
    pub axis_j: usize,
    /// Values of parameter `axis_i`, one per row.
    pub xs: Vec<f64>,
    /// Values of parameter `axis_j`, one per column.
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl LandscapeScan {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Number of cells strictly below `level`.
    pub fn count_below(&self, level: f64) -> usize {
        self.values.iter().flatten().filter(|&&v| v < level).count()
    }

    /// Plain-text matrix: comment header, then a row `n y_0 ... y_{n-1}`,
    /// then one row `x_r v_r0 ... v_r(n-1)` per grid row (gnuplot's
    /// non-uniform matrix layout). `sep` is `' '` or `','`.
    pub fn to_text(&self, sep: char) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# rows: theta[{}], columns: theta[{}], {} x {}",
            self.axis_i,
            self.axis_j,
            self.xs.len(),
            self.ys.len()
        );
        let mut row = vec![self.ys.len().to_string()];
        row.extend(self.ys.iter().map(|y| y.to_string()));
        let _ = writeln!(out, "{}", row.join(&sep.to_string()));
        for (x, vals) in self.xs.iter().zip(&self.values) {
            let mut row = vec![x.to_string()];
            row.extend(vals.iter().map(|v| v.to_string()));
            let _ = writeln!(out, "{}", row.join(&sep.to_string()));
        }
        out
    }
}

/// The two parameters with the largest second difference at `center`
/// (returned in ascending order). Uses `2 d + 1` evaluations with step
/// [`FD_STEP`]; meant for exact objectives, where it picks the directions
/// along which a slice actually shows structure.
pub fn curved_axes(objective: &dyn Objective, center: &[f64]) -> Result<(usize, usize)> {
    let d = center.len();
    if d < 2 {
        return Err(Error::Config(format!("need at least 2 parameters to pick axes, got {d}")));
    }
    let mut rng = RngStream::new(0, 0).at(0);
    let f0 = objective.evaluate(center, &mut rng)?.value;
    let mut x = center.to_vec();
    let mut curv = Vec::with_capacity(d);
    for i in 0..d {
        x[i] = center[i] + FD_STEP;
        let fp = objective.evaluate(&x, &mut rng)?.value;
        x[i] = center[i] - FD_STEP;
        let fm = objective.evaluate(&x, &mut rng)?.value;
        x[i] = center[i];
        curv.push((fp - 2.0 * f0 + fm).abs());
    }
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| curv[b].total_cmp(&curv[a]).then(a.cmp(&b)));
    Ok((idx[0].min(idx[1]), idx[0].max(idx[1])))
}

/// `grid_n x grid_n` slice through `center` varying parameters `axis_i` and
/// `axis_j` over `center +- half_width`. Cell `(r, c)` draws from
/// `stream.at(r * grid_n + c)`; rows are independent and run under `exec`.
#[allow(clippy::too_many_arguments)]
pub fn landscape_scan(
    estimator: &Estimator,
    axis_i: usize,
    axis_j: usize,
    center: &[f64],
    half_width: f64,
    grid_n: usize,
    stream: RngStream,
    exec: Execution,
) -> Result<LandscapeScan> {
    let d = estimator.ansatz().n_params();
    if center.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: center.len(),
        });
    }
    if axis_i >= d || axis_j >= d || axis_i == axis_j {
        return Err(Error::Config(format!(
            "scan axes ({axis_i}, {axis_j}) must be distinct parameters below {d}"
        )));
    }
    if !(2..=MAX_GRID).contains(&grid_n) {
        return Err(Error::Config(format!("grid size must lie in 2..={MAX_GRID}, got {grid_n}")));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::Config(format!("scan half-width must be positive, got {half_width}")));
    }
    let axis = |c: f64| -> Vec<f64> {
        (0..grid_n)
            .map(|k| c - half_width + 2.0 * half_width * k as f64 / (grid_n - 1) as f64)
            .collect()
    };
    let xs = axis(center[axis_i]);
    let ys = axis(center[axis_j]);
    let rows: Vec<Result<Vec<f64>>> = exec.map(grid_n, |r| {
        let mut theta = center.to_vec();
        theta[axis_i] = xs[r];
        ys.iter()
            .enumerate()
            .map(|(c, &y)| {
                theta[axis_j] = y;
                let mut rng = stream.at((r * grid_n + c) as u64);
                estimator.estimate(&theta, &mut rng).map(|e| e.value)
            })
            .collect()
    });
    Ok(LandscapeScan {
        axis_i,
        axis_j,
        xs,
        ys,
        values: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::testfns::Quadratic;

    #[test]
    fn bias_formula() {
        assert_eq!(predicted_winner_bias(0.3, 1), 0.0);
        assert!((predicted_winner_bias(0.01, 10_000) + 0.04292).abs() < 1e-4);
        assert!((predicted_winner_bias(0.019, 10_000) + 0.08155).abs() < 1e-4);
    }

    #[test]
    fn significance_rule() {
        assert!(!is_significant(0.039, 0.01));
        assert!(is_significant(0.041, 0.01));
    }

    #[test]
    fn quadratic_hessian() {
        let q = Quadratic::diagonal(vec![1.0, 4.0]);
        let diag = hessian_diagnostics(&q, &[0.3, -0.2], None, 1, RngStream::new(0, 0)).unwrap();
        assert!((diag.lambda_max - 4.0).abs() < 1e-6);
        assert!((diag.lambda_min - 1.0).abs() < 1e-6);
        assert!((diag.condition_number.unwrap() - 4.0).abs() < 1e-5);
        assert!((diag.eta_max - 0.5).abs() < 1e-6);
        assert!(diag.hessian[0][1].abs() < 1e-6);
        assert_eq!(diag.gradient_noise, 0.0);
    }
}
