//! Classical test objectives, optionally with additive Gaussian noise.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Evaluation, Objective};
use crate::error::{Error, Result};

fn check(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    Ok(())
}

fn noisy(exact: f64, sd: f64, rng: &mut ChaCha8Rng) -> Evaluation {
    let value = if sd > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        exact + sd * z
    } else {
        exact
    };
    Evaluation {
        value,
        variance: sd * sd,
        exact: Some(exact),
    }
}

/// `sum x_i^2`.
#[derive(Debug, Clone)]
pub struct Sphere {
    dimension: usize,
    noise_sd: f64,
}

impl Sphere {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            noise_sd: 0.0,
        }
    }

    pub fn with_noise(mut self, sd: f64) -> Self {
        self.noise_sd = sd;
        self
    }
}

impl Objective for Sphere {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Evaluation> {
        check(x, self.dimension)?;
        Ok(noisy(x.iter().map(|v| v * v).sum(), self.noise_sd, rng))
    }
}

/// `10 d + sum (x_i^2 - 10 cos(2 pi x_i))`, global minimum 0 at the origin.
#[derive(Debug, Clone)]
pub struct Rastrigin {
    dimension: usize,
}

impl Rastrigin {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }
}

impl Objective for Rastrigin {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Evaluation> {
        check(x, self.dimension)?;
        let tau = 2.0 * std::f64::consts::PI;
        let v = 10.0 * x.len() as f64
            + x.iter()
                .map(|xi| xi * xi - 10.0 * (tau * xi).cos())
                .sum::<f64>();
        Ok(noisy(v, 0.0, rng))
    }
}

/// `x^T A x / 2` for a symmetric `A` given row-major.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dimension: usize,
    matrix: Vec<f64>,
}

impl Quadratic {
    pub fn new(dimension: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != dimension * dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension * dimension,
                actual: matrix.len(),
            });
        }
        Ok(Self { dimension, matrix })
    }

    pub fn diagonal(diag: Vec<f64>) -> Self {
        let d = diag.len();
        let mut matrix = vec![0.0; d * d];
        for (i, v) in diag.into_iter().enumerate() {
            matrix[i * d + i] = v;
        }
        Self {
            dimension: d,
            matrix,
        }
    }
}

impl Objective for Quadratic {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Evaluation> {
        check(x, self.dimension)?;
        let d = self.dimension;
        let mut v = 0.0;
        for i in 0..d {
            for j in 0..d {
                v += x[i] * self.matrix[i * d + j] * x[j];
            }
        }
        Ok(noisy(0.5 * v, 0.0, rng))
    }
}
