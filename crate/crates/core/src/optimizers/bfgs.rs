use serde::{Deserialize, Serialize};

use super::{ObjectiveHandle, Step, Termination};

/// Quasi-Newton BFGS on central-difference gradients with a backtracking
/// Armijo line search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfgsParams {
    pub fd_step: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Stop when the gradient norm drops below this.
    pub gtol: f64,
}

impl Default for BfgsParams {
    fn default() -> Self {
        Self {
            fd_step: 1e-4,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 30,
            gtol: 1e-9,
        }
    }
}

fn central_gradient(h: &mut ObjectiveHandle, x: &[f64], step: f64) -> Step<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let plus = h.evaluate(&probe)?;
        probe[j] = x[j] - step;
        let minus = h.evaluate(&probe)?;
        probe[j] = x[j];
        g.push((plus - minus) / (2.0 * step));
    }
    Ok(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(super) fn run(h: &mut ObjectiveHandle, x0: &[f64], p: &BfgsParams) -> Step<()> {
    let d = x0.len();
    let identity = |m: &mut Vec<f64>| {
        m.iter_mut().for_each(|v| *v = 0.0);
        (0..d).for_each(|i| m[i * d + i] = 1.0);
    };
    let mut inv = vec![0.0; d * d];
    identity(&mut inv);

    let mut x = x0.to_vec();
    h.recommend(&x);
    let mut fx = h.evaluate(&x)?;
    let mut g = central_gradient(h, &x, p.fd_step)?;
    h.end_iteration();
    let mut failures = 0;

    loop {
        if dot(&g, &g).sqrt() < p.gtol {
            return Err(h.stop(Termination::AlgorithmStop("gradient below tolerance".into())));
        }
        let mut dir: Vec<f64> = (0..d)
            .map(|i| -(0..d).map(|j| inv[i * d + j] * g[j]).sum::<f64>())
            .collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            identity(&mut inv);
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..p.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
            let ft = h.evaluate(&trial)?;
            if ft <= fx + p.armijo * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= p.backtrack;
        }

        let Some((x_new, f_new)) = accepted else {
            h.end_iteration();
            failures += 1;
            if failures >= 2 {
                return Err(h.stop(Termination::AlgorithmStop("line search failed twice".into())));
            }
            identity(&mut inv);
            continue;
        };
        failures = 0;
        let g_new = central_gradient(h, &x_new, p.fd_step)?;
        h.end_iteration();

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| inv[i * d + j] * y[j]).sum())
                .collect();
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    inv[i * d + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        h.recommend(&x);
    }
}
