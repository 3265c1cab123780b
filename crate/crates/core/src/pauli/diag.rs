//! Exact ground states.
//!
//! Registers up to [`DENSE_DIAG_LIMIT`] qubits are diagonalised densely (complex
//! Hermitian eigensolver). Larger registers, up to [`GROUND_STATE_LIMIT`], use
//! a matrix-free Lanczos iteration with full reorthogonalisation, because a
//! dense 2^14 x 2^14 complex matrix alone needs 4 GiB.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Hamiltonian, Statevector};
use crate::error::{Error, Result};

/// Largest register for which a dense matrix is ever built.
pub const DENSE_LIMIT: usize = 12;
/// Above this, ground states come from Lanczos instead of a dense solve.
pub const DENSE_DIAG_LIMIT: usize = 8;
pub const GROUND_STATE_LIMIT: usize = 14;

const LANCZOS_MAX_KRYLOV: usize = 400;
const LANCZOS_TOL: f64 = 1e-11;

/// Smallest eigenvalue of `h` and a unit eigenvector.
pub fn exact_ground_state(h: &Hamiltonian) -> Result<(f64, Statevector)> {
    let n = h.n_qubits();
    if n > GROUND_STATE_LIMIT {
        return Err(Error::Capability {
            what: "exact diagonalisation",
            limit: GROUND_STATE_LIMIT,
            requested: n,
        });
    }
    if n <= DENSE_DIAG_LIMIT {
        dense_ground_state(h)
    } else {
        lanczos_ground_state(h)
    }
}

fn dense_ground_state(h: &Hamiltonian) -> Result<(f64, Statevector)> {
    let dim = h.dimension();
    let flat = h.to_dense()?;
    let m = DMatrix::from_row_slice(dim, dim, &flat);
    let eig = m.symmetric_eigen();
    let (k, e0) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Diagnostic("empty spectrum".into()))?;
    let v: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
    Ok((e0, Statevector::from_amplitudes(v)?))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn lanczos_ground_state(h: &Hamiltonian) -> Result<(f64, Statevector)> {
    let dim = h.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2051);
    let start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let start = Statevector::from_amplitudes(start)?;

    let mut basis: Vec<Vec<Complex64>> = vec![start.amplitudes().to_vec()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut previous = f64::INFINITY;
    let max_k = LANCZOS_MAX_KRYLOV.min(dim);

    loop {
        let k = basis.len() - 1;
        let v = Statevector::from_amplitudes(basis[k].clone())?;
        let mut w = h.apply(&v)?;
        let alpha = dot(&basis[k], &w).re;
        alphas.push(alpha);
        // full reorthogonalisation, twice for stability
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let beta = norm(&w);

        let (theta, y) = tridiagonal_lowest(&alphas, &betas);
        let residual = beta * y[y.len() - 1].abs();
        let converged = residual < LANCZOS_TOL * (1.0 + theta.abs())
            || (previous - theta).abs() < 1e-14 * (1.0 + theta.abs()) && residual < 1e-8;
        previous = theta;

        if converged || beta < 1e-13 || basis.len() >= max_k {
            let mut ritz = vec![Complex64::new(0.0, 0.0); dim];
            for (coef, q) in y.iter().zip(&basis) {
                ritz.iter_mut().zip(q).for_each(|(r, qi)| *r += qi * *coef);
            }
            let state = Statevector::from_amplitudes(ritz)?;
            let energy = h.expectation(&state)?;
            return Ok((energy, state));
        }
        betas.push(beta);
        basis.push(w.into_iter().map(|x| x / beta).collect());
    }
}

/// Lowest eigenpair of the symmetric tridiagonal matrix (alphas, betas).
fn tridiagonal_lowest(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let (k, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    (theta, eig.eigenvectors.column(k).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliTerm;

    fn chain(n: usize) -> Hamiltonian {
        // transverse-field Ising: non-trivial, non-degenerate ground state
        let mut terms = Vec::new();
        for i in 0..n - 1 {
            let mut s = vec!['I'; n];
            s[i] = 'Z';
            s[i + 1] = 'Z';
            terms.push(PauliTerm::parse(&s.iter().collect::<String>(), -1.0).unwrap());
        }
        for i in 0..n {
            let mut s = vec!['I'; n];
            s[i] = 'X';
            terms.push(PauliTerm::parse(&s.iter().collect::<String>(), -0.7).unwrap());
        }
        Hamiltonian::new(n, 0.0, terms).unwrap()
    }

    #[test]
    fn lanczos_matches_dense() {
        let h = chain(8);
        let (dense, _) = dense_ground_state(&h).unwrap();
        let (lanczos, state) = lanczos_ground_state(&h).unwrap();
        assert!((dense - lanczos).abs() < 1e-9, "{dense} vs {lanczos}");
        assert!(h.variance(&state).unwrap() < 1e-8);
    }

    #[test]
    fn too_many_qubits_is_a_capability_error() {
        let h = Hamiltonian::new(15, 0.0, vec![]).unwrap();
        assert!(matches!(
            exact_ground_state(&h),
            Err(Error::Capability { limit: 14, .. })
        ));
    }
}
