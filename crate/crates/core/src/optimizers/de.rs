use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmin, clip, initial_population, ObjectiveHandle, Step};

/// Differential evolution, DE/best/1/bin, generation-synchronous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeParams {
    /// Differential weight.
    pub f: f64,
    /// Crossover probability.
    pub cr: f64,
    /// Population size; `15 d` when unset.
    pub population: Option<usize>,
    pub init_radius: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            f: 0.8,
            cr: 0.9,
            population: None,
            init_radius: 0.5,
        }
    }
}

impl DeParams {
    pub(super) fn resolve(&mut self, d: usize) {
        self.population.get_or_insert((15 * d).max(5));
    }
}

/// Two distinct indices in `0..n`, both different from `exclude`.
pub(super) fn pick_two<R: Rng>(n: usize, exclude: usize, rng: &mut R) -> (usize, usize) {
    let mut draw = |avoid: &[usize]| loop {
        let k = rng.random_range(0..n);
        if !avoid.contains(&k) {
            return k;
        }
    };
    let a = draw(&[exclude]);
    let b = draw(&[exclude, a]);
    (a, b)
}

pub(super) fn run<R: Rng>(
    h: &mut ObjectiveHandle,
    x0: &[f64],
    p: &DeParams,
    rng: &mut R,
) -> Step<()> {
    let d = x0.len();
    let np = p.population.unwrap_or(15 * d).max(4);
    let mut pop = initial_population(x0, np, p.init_radius, rng);
    let mut values = h.evaluate_all(&pop)?;
    h.end_iteration();

    loop {
        let best = argmin(&values);
        h.recommend(&pop[best]);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let (r1, r2) = pick_two(np, best, rng);
                let jrand = rng.random_range(0..d);
                (0..d)
                    .map(|j| {
                        if j == jrand || rng.random::<f64>() < p.cr {
                            clip(pop[best][j] + p.f * (pop[r1][j] - pop[r2][j]))
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_values = h.evaluate_all(&trials)?;
        h.end_iteration();
        for (i, (t, v)) in trials.into_iter().zip(trial_values).enumerate() {
            if v <= values[i] {
                pop[i] = t;
                values[i] = v;
            }
        }
    }
}
