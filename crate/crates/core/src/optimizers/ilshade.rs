use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{argmin, initial_population, ObjectiveHandle, Step, POPULATION_BOUND};

/// iL-SHADE: success-history adaptation of F and CR, current-to-pbest/1
/// mutation with an external archive, and linear population size reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IlshadeParams {
    /// `18 d` when unset.
    pub initial_population: Option<usize>,
    pub min_population: usize,
    pub memory_size: usize,
    /// Archive capacity relative to the current population.
    pub archive_rate: f64,
    /// The pbest fraction grows linearly from `p_min` to `p_max`.
    pub p_min: f64,
    pub p_max: f64,
    pub init_radius: f64,
}

impl Default for IlshadeParams {
    fn default() -> Self {
        Self {
            initial_population: None,
            min_population: 4,
            memory_size: 6,
            archive_rate: 2.6,
            p_min: 0.1,
            p_max: 0.2,
            init_radius: 0.5,
        }
    }
}

impl IlshadeParams {
    pub(super) fn resolve(&mut self, d: usize) {
        self.initial_population.get_or_insert((18 * d).max(self.min_population));
    }
}

/// Weighted Lehmer mean `sum w s^2 / sum w s`.
fn lehmer(values: &[f64], weights: &[f64]) -> f64 {
    let num: f64 = values.iter().zip(weights).map(|(s, w)| w * s * s).sum();
    let den: f64 = values.iter().zip(weights).map(|(s, w)| w * s).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn sample_f<R: Rng>(center: f64, progress: f64, rng: &mut R) -> f64 {
    let cauchy = Cauchy::new(center, 0.1).expect("positive scale");
    let f = loop {
        let f = cauchy.sample(rng);
        if f > 0.0 {
            break f.min(1.0);
        }
    };
    if progress < 0.25 {
        f.min(0.7)
    } else if progress < 0.5 {
        f.min(0.8)
    } else if progress < 0.75 {
        f.min(0.9)
    } else {
        f
    }
}

fn sample_cr<R: Rng>(center: Option<f64>, progress: f64, rng: &mut R) -> f64 {
    let cr = match center {
        None => 0.0,
        Some(m) => Normal::new(m, 0.1)
            .expect("positive scale")
            .sample(rng)
            .clamp(0.0, 1.0),
    };
    if progress < 0.25 {
        cr.max(0.5)
    } else if progress < 0.5 {
        cr.max(0.25)
    } else {
        cr
    }
}

pub(super) fn run<R: Rng>(
    h: &mut ObjectiveHandle,
    x0: &[f64],
    p: &IlshadeParams,
    rng: &mut R,
) -> Step<()> {
    let d = x0.len();
    let np_init = p.initial_population.unwrap_or(18 * d).max(p.min_population);
    let np_min = p.min_population.max(4);
    let slots = p.memory_size.max(2);
    let max_fes = h.budget() as f64;
    let (lo, hi) = (-POPULATION_BOUND, POPULATION_BOUND);

    let mut pop = initial_population(x0, np_init, p.init_radius, rng);
    let mut fit = h.evaluate_all(&pop)?;
    h.end_iteration();

    // the last slot stays fixed at 0.9
    let mut mem_f = vec![0.5; slots];
    let mut mem_cr: Vec<Option<f64>> = vec![Some(0.8); slots];
    mem_f[slots - 1] = 0.9;
    mem_cr[slots - 1] = Some(0.9);
    let mut k = 0;
    let mut archive: Vec<Vec<f64>> = Vec::new();

    loop {
        let np = pop.len();
        h.recommend(&pop[argmin(&fit)]);
        let progress = h.evaluations() as f64 / max_fes;
        let p_best = p.p_min + (p.p_max - p.p_min) * progress;
        let n_best = ((p_best * np as f64).round() as usize).clamp(2, np);
        let mut ranked: Vec<usize> = (0..np).collect();
        ranked.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]));

        let mut trials = Vec::with_capacity(np);
        let mut params = Vec::with_capacity(np);
        for i in 0..np {
            let r = rng.random_range(0..slots);
            let f = sample_f(mem_f[r], progress, rng);
            let cr = sample_cr(mem_cr[r], progress, rng);
            let pb = ranked[rng.random_range(0..n_best)];
            let r1 = loop {
                let c = rng.random_range(0..np);
                if c != i {
                    break c;
                }
            };
            let r2 = loop {
                let c = rng.random_range(0..np + archive.len());
                if c != i && c != r1 {
                    break c;
                }
            };
            let x_r2 = if r2 < np { &pop[r2] } else { &archive[r2 - np] };
            let jrand = rng.random_range(0..d);
            let trial: Vec<f64> = (0..d)
                .map(|j| {
                    if j != jrand && rng.random::<f64>() >= cr {
                        return pop[i][j];
                    }
                    let v = pop[i][j] + f * (pop[pb][j] - pop[i][j]) + f * (pop[r1][j] - x_r2[j]);
                    if v < lo {
                        0.5 * (lo + pop[i][j])
                    } else if v > hi {
                        0.5 * (hi + pop[i][j])
                    } else {
                        v
                    }
                })
                .collect();
            trials.push(trial);
            params.push((f, cr));
        }
        let trial_fit = h.evaluate_all(&trials)?;
        h.end_iteration();

        let (mut s_f, mut s_cr, mut gains) = (Vec::new(), Vec::new(), Vec::new());
        for (i, (trial, tf)) in trials.into_iter().zip(trial_fit).enumerate() {
            if tf <= fit[i] {
                if tf < fit[i] {
                    s_f.push(params[i].0);
                    s_cr.push(params[i].1);
                    gains.push(fit[i] - tf);
                    archive.push(std::mem::replace(&mut pop[i], trial));
                } else {
                    pop[i] = trial;
                }
                fit[i] = tf;
            }
        }

        if !s_f.is_empty() {
            let total: f64 = gains.iter().sum();
            let w: Vec<f64> = if total > 0.0 {
                gains.iter().map(|g| g / total).collect()
            } else {
                vec![1.0 / gains.len() as f64; gains.len()]
            };
            mem_f[k] = 0.5 * (lehmer(&s_f, &w) + mem_f[k]);
            mem_cr[k] = match mem_cr[k] {
                _ if s_cr.iter().all(|&c| c == 0.0) => None,
                Some(old) => Some(0.5 * (lehmer(&s_cr, &w) + old)),
                None => Some(lehmer(&s_cr, &w)),
            };
            k = (k + 1) % (slots - 1);
        }

        // linear population size reduction
        let progress = h.evaluations() as f64 / max_fes;
        let target = ((np_min as f64 - np_init as f64) * progress + np_init as f64).round() as usize;
        let target = target.clamp(np_min, np);
        if target < np {
            let mut order: Vec<usize> = (0..np).collect();
            order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]));
            order.truncate(target);
            order.sort_unstable();
            pop = order.iter().map(|&i| pop[i].clone()).collect();
            fit = order.iter().map(|&i| fit[i]).collect();
        }
        let capacity = (p.archive_rate * pop.len() as f64).round() as usize;
        while archive.len() > capacity {
            let victim = rng.random_range(0..archive.len());
            archive.swap_remove(victim);
        }
    }
}
