use serde::{Deserialize, Serialize};

use super::{argmin, ObjectiveHandle, Step, Termination};

/// Downhill simplex with reflection, expansion, contraction and shrink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NelderMeadParams {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Edge length of the initial axis-aligned simplex.
    pub initial_edge: f64,
    /// Stop once both the value spread and the simplex diameter fall below
    /// these.
    pub ftol: f64,
    pub xtol: f64,
}

impl Default for NelderMeadParams {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_edge: 0.1,
            ftol: 1e-12,
            xtol: 1e-12,
        }
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

pub(super) fn run(h: &mut ObjectiveHandle, x0: &[f64], p: &NelderMeadParams) -> Step<()> {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += p.initial_edge;
        simplex.push(v);
    }
    let mut values = h.evaluate_all(&simplex)?;
    h.end_iteration();

    loop {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        h.recommend(&simplex[0]);

        let spread = values[d] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= p.ftol && diameter <= p.xtol {
            return Err(h.stop(Termination::AlgorithmStop("simplex collapsed".into())));
        }

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let reflected = affine(&centroid, &worst, -p.reflection);
        let fr = h.evaluate(&reflected)?;

        if fr < values[0] {
            let expanded = affine(&centroid, &worst, -p.reflection * p.expansion);
            let fe = h.evaluate(&expanded)?;
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
        } else {
            let (candidate, reference) = if fr < values[d] {
                (affine(&centroid, &reflected, p.contraction), fr)
            } else {
                (affine(&centroid, &worst, p.contraction), values[d])
            };
            let fc = h.evaluate(&candidate)?;
            if fc < reference {
                simplex[d] = candidate;
                values[d] = fc;
            } else {
                for i in 1..=d {
                    simplex[i] = affine(&simplex[0], &simplex[i], p.shrink);
                    values[i] = h.evaluate(&simplex[i])?;
                }
            }
        }
        h.end_iteration();
        let best = argmin(&values);
        h.recommend(&simplex[best]);
    }
}
