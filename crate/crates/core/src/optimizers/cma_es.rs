use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{clip, ObjectiveHandle, Step, Termination};

/// CMA-ES with cumulative step-size adaptation and rank-one plus rank-mu
/// covariance updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaEsParams {
    pub sigma0: f64,
    /// Offspring per generation; `4 + floor(3 ln d)` when unset.
    pub population: Option<usize>,
}

impl Default for CmaEsParams {
    fn default() -> Self {
        Self {
            sigma0: 0.3,
            population: None,
        }
    }
}

impl CmaEsParams {
    pub(super) fn resolve(&mut self, d: usize) {
        self.population
            .get_or_insert(4 + (3.0 * (d.max(1) as f64).ln()).floor() as usize);
    }
}

pub(super) fn run<R: Rng>(
    h: &mut ObjectiveHandle,
    x0: &[f64],
    p: &CmaEsParams,
    rng: &mut R,
) -> Step<()> {
    let n = x0.len();
    let nf = n as f64;
    let lambda = p.population.unwrap_or(4 + (3.0 * nf.ln()).floor() as usize);
    let mu = lambda / 2;
    let raw: Vec<f64> = (1..=mu)
        .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
        .collect();
    let sum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
    let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut mean = DVector::from_column_slice(x0);
    let mut sigma = p.sigma0;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut pc = DVector::<f64>::zeros(n);
    let mut ps = DVector::<f64>::zeros(n);
    h.recommend(x0);

    for generation in 0.. {
        let eig = cov.clone().symmetric_eigen();
        let b = eig.eigenvectors;
        let d: DVector<f64> = eig.eigenvalues.map(|v| v.max(1e-300).sqrt());

        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let z = DVector::<f64>::from_fn(n, |_, _| rng.sample(StandardNormal));
            let y = &b * d.component_mul(&z);
            offspring.push((0..n).map(|i| clip(mean[i] + sigma * y[i])).collect());
        }
        let values = h.evaluate_all(&offspring)?;
        h.end_iteration();

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

        let old_mean = mean.clone();
        let steps: Vec<DVector<f64>> = order[..mu]
            .iter()
            .map(|&k| (DVector::from_column_slice(&offspring[k]) - &old_mean) / sigma)
            .collect();
        let y_w = steps
            .iter()
            .zip(&weights)
            .fold(DVector::zeros(n), |acc, (y, w)| acc + y * *w);
        mean = &old_mean + &y_w * sigma;

        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|v| 1.0 / v)) * b.transpose();
        ps = ps * (1.0 - cs) + (&inv_sqrt * &y_w) * (cs * (2.0 - cs) * mueff).sqrt();
        let ps_norm = ps.norm();
        let decay = 1.0 - (1.0 - cs).powi(2 * (generation + 1));
        let hsig = ps_norm / decay.sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let hs = if hsig { 1.0 } else { 0.0 };
        pc = pc * (1.0 - cc) + &y_w * (hs * (cc * (2.0 - cc) * mueff).sqrt());

        let rank_mu = steps
            .iter()
            .zip(&weights)
            .fold(DMatrix::zeros(n, n), |acc, (y, w)| acc + (y * y.transpose()) * *w);
        cov = &cov * (1.0 - c1 - cmu)
            + (&pc * pc.transpose() + &cov * ((1.0 - hs) * cc * (2.0 - cc))) * c1
            + rank_mu * cmu;
        cov = (&cov + cov.transpose()) * 0.5;
        sigma *= ((cs / damps) * (ps_norm / chi_n - 1.0)).exp();

        h.recommend(mean.as_slice());
        let spread = sigma * d.max();
        if !spread.is_finite() || spread < 1e-14 {
            return Err(h.stop(Termination::AlgorithmStop("step size collapsed".into())));
        }
    }
    Ok(())
}
