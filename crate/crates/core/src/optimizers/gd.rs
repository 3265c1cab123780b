use serde::{Deserialize, Serialize};

use super::{ObjectiveHandle, Step};

/// Fixed-step steepest descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdParams {
    /// Step size; stable on a quadratic only for `eta < 2 / lambda_max`.
    pub eta: f64,
}

impl Default for GdParams {
    fn default() -> Self {
        Self { eta: 0.1 }
    }
}

/// Each iteration evaluates the iterate once and the gradient with `2 d` FEs.
pub(super) fn run(h: &mut ObjectiveHandle, x0: &[f64], p: &GdParams) -> Step<()> {
    let mut x = x0.to_vec();
    loop {
        h.recommend(&x);
        h.evaluate(&x)?;
        let g = h.gradient(&x)?;
        h.end_iteration();
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= p.eta * gi);
    }
}
