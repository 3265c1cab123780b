use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ObjectiveHandle, Step};

/// Simultaneous perturbation stochastic approximation with Spall's gain
/// sequences `a_k = a / (k + 1 + A)^alpha`, `c_k = c / (k + 1)^gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpsaParams {
    /// Step gain; calibrated from the initial gradient magnitude when unset.
    pub a: Option<f64>,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Stability constant; 10% of the expected iteration count when unset.
    pub stability: Option<f64>,
    /// Desired size of the first update when calibrating `a`.
    pub target_step: f64,
    /// Gradient samples (two FEs each) used for calibration.
    pub calibration_steps: usize,
}

impl Default for SpsaParams {
    fn default() -> Self {
        Self {
            a: None,
            c: 0.2,
            alpha: 0.602,
            gamma: 0.101,
            stability: None,
            target_step: 0.2 * std::f64::consts::PI,
            calibration_steps: 25,
        }
    }
}

impl SpsaParams {
    pub(super) fn resolve(&mut self, budget: u64) {
        let calibration = if self.a.is_none() {
            2 * self.calibration_steps as u64
        } else {
            0
        };
        let iterations = budget.saturating_sub(calibration) / 2;
        self.stability.get_or_insert(0.1 * iterations as f64);
    }
}

fn rademacher<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

pub(super) fn run<R: Rng>(
    h: &mut ObjectiveHandle,
    x0: &[f64],
    p: &SpsaParams,
    rng: &mut R,
) -> Step<()> {
    let d = x0.len();
    let mut x = x0.to_vec();
    let big_a = p.stability.unwrap_or(0.0);
    h.recommend(&x);

    let a = match p.a {
        Some(a) => a,
        None => {
            // average |(f(x + c D) - f(x - c D)) / 2c| over random directions
            let mut total = 0.0;
            for _ in 0..p.calibration_steps {
                let delta = rademacher(d, rng);
                let plus: Vec<f64> = x.iter().zip(&delta).map(|(v, s)| v + p.c * s).collect();
                let minus: Vec<f64> = x.iter().zip(&delta).map(|(v, s)| v - p.c * s).collect();
                let fp = h.evaluate(&plus)?;
                let fm = h.evaluate(&minus)?;
                total += ((fp - fm) / (2.0 * p.c)).abs();
            }
            h.end_iteration();
            let magnitude = total / p.calibration_steps.max(1) as f64;
            if magnitude > 0.0 {
                p.target_step * (1.0 + big_a).powf(p.alpha) / magnitude
            } else {
                p.target_step
            }
        }
    };

    for k in 0.. {
        let ak = a / (k as f64 + 1.0 + big_a).powf(p.alpha);
        let ck = p.c / (k as f64 + 1.0).powf(p.gamma);
        let delta = rademacher(d, rng);
        let plus: Vec<f64> = x.iter().zip(&delta).map(|(v, s)| v + ck * s).collect();
        let minus: Vec<f64> = x.iter().zip(&delta).map(|(v, s)| v - ck * s).collect();
        let fp = h.evaluate(&plus)?;
        let fm = h.evaluate(&minus)?;
        h.end_iteration();
        let scale = ak * (fp - fm) / (2.0 * ck);
        // delta_i = +-1, so 1 / delta_i = delta_i
        x.iter_mut().zip(&delta).for_each(|(v, s)| *v -= scale * s);
        h.recommend(&x);
    }
    Ok(())
}
