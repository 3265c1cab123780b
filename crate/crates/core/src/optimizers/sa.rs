use rand::Rng;
use rand_distr::{Cauchy, Distribution};
use serde::{Deserialize, Serialize};

use super::{ObjectiveHandle, Step};

/// Simulated annealing with Cauchy proposals whose scale shrinks with the
/// temperature, geometric cooling and Metropolis acceptance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    pub initial_temperature: f64,
    /// Temperature reached when the budget runs out (sets `cooling` when that
    /// is unset).
    pub final_temperature: f64,
    /// Temperature factor applied after every iteration.
    pub cooling: Option<f64>,
    /// Proposal scale at the initial temperature.
    pub step: f64,
    /// Proposals per temperature level; `d` when unset.
    pub moves_per_temperature: Option<usize>,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            final_temperature: 1e-6,
            cooling: None,
            step: 0.5,
            moves_per_temperature: None,
        }
    }
}

impl SaParams {
    pub(super) fn resolve(&mut self, d: usize, budget: u64) {
        let moves = *self.moves_per_temperature.get_or_insert(d.max(1));
        let levels = (budget as f64 / moves as f64).max(1.0);
        let ratio = (self.final_temperature / self.initial_temperature).clamp(1e-300, 1.0);
        self.cooling.get_or_insert(ratio.powf(1.0 / levels));
    }
}

pub(super) fn run<R: Rng>(
    h: &mut ObjectiveHandle,
    x0: &[f64],
    p: &SaParams,
    rng: &mut R,
) -> Step<()> {
    let moves = p.moves_per_temperature.unwrap_or(x0.len()).max(1);
    let mut x = x0.to_vec();
    let mut fx = h.evaluate(&x)?;
    h.end_iteration();
    h.recommend(&x);
    let mut temperature = p.initial_temperature;

    loop {
        let scale = p.step * temperature / p.initial_temperature;
        let cauchy = Cauchy::new(0.0, scale.max(f64::MIN_POSITIVE))
            .map_err(|e| crate::Error::Config(format!("sa_cauchy step: {e}")))?;
        for _ in 0..moves {
            let candidate: Vec<f64> = x.iter().map(|v| v + cauchy.sample(rng)).collect();
            let fc = h.evaluate(&candidate)?;
            let accept = fc <= fx || rng.random::<f64>() < (-(fc - fx) / temperature).exp();
            if accept {
                x = candidate;
                fx = fc;
                h.recommend(&x);
            }
        }
        h.end_iteration();
        temperature *= p.cooling.unwrap_or(0.99);
    }
}
