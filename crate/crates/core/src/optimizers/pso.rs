use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmin, clip, initial_population, ObjectiveHandle, Step, POPULATION_BOUND};

/// Global-best particle swarm with constriction-style coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoParams {
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Swarm size; `10 + floor(2 sqrt(d))` when unset.
    pub population: Option<usize>,
    /// Half-width of the initial box around `x0`.
    pub init_radius: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            population: None,
            init_radius: 0.5,
        }
    }
}

impl PsoParams {
    pub(super) fn resolve(&mut self, d: usize) {
        self.population
            .get_or_insert(10 + (2.0 * (d as f64).sqrt()).floor() as usize);
    }
}

pub(super) fn run<R: Rng>(
    h: &mut ObjectiveHandle,
    x0: &[f64],
    p: &PsoParams,
    rng: &mut R,
) -> Step<()> {
    let d = x0.len();
    let n = p.population.unwrap_or(10);
    let vmax = POPULATION_BOUND;
    let mut pos = initial_population(x0, n, p.init_radius, rng);
    let mut vel: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| p.init_radius * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        })
        .collect();
    let mut values = h.evaluate_all(&pos)?;
    h.end_iteration();
    let mut pbest = pos.clone();
    let mut pbest_val = values.clone();
    let mut g = argmin(&pbest_val);
    h.recommend(&pbest[g]);

    loop {
        for i in 0..n {
            for j in 0..d {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = p.inertia * vel[i][j]
                    + p.cognitive * r1 * (pbest[i][j] - pos[i][j])
                    + p.social * r2 * (pbest[g][j] - pos[i][j]);
                vel[i][j] = v.clamp(-vmax, vmax);
                pos[i][j] = clip(pos[i][j] + vel[i][j]);
            }
        }
        values = h.evaluate_all(&pos)?;
        h.end_iteration();
        for i in 0..n {
            if values[i] < pbest_val[i] {
                pbest_val[i] = values[i];
                pbest[i].copy_from_slice(&pos[i]);
            }
        }
        g = argmin(&pbest_val);
        h.recommend(&pbest[g]);
    }
}
