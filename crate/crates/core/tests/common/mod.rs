//! Dense-matrix reference implementations, written independently of the
//! crate's bit-twiddling kernels. Qubit 0 is the leftmost tensor factor.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vqelab::pauli::{Hamiltonian, Statevector};

pub type Mat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single(p: char) -> Mat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        'I' => Mat::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => Mat::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => Mat::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => Mat::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad Pauli {p}"),
    }
}

/// Tensor product of 2x2 factors, first factor most significant.
pub fn kron_all(factors: &[Mat]) -> Mat {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

pub fn pauli_matrix(label: &str) -> Mat {
    let f: Vec<Mat> = label.chars().map(single).collect();
    kron_all(&f)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(1 << n, 1 << n)
}

/// Sum of `c_k P_k` built from the printed Pauli labels.
pub fn dense(h: &Hamiltonian) -> Mat {
    let n = h.n_qubits();
    let mut m = identity(n) * c(h.identity_offset(), 0.0);
    for t in h.terms() {
        m += pauli_matrix(&t.paulis.to_string()) * c(t.coefficient, 0.0);
    }
    m
}

/// Annihilation operator on mode `j` of `n`: `Z ... Z (|0><1|) I ... I`.
pub fn annihilator(j: usize, n: usize) -> Mat {
    let lower = Mat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let f: Vec<Mat> = (0..n)
        .map(|k| match k.cmp(&j) {
            std::cmp::Ordering::Less => single('Z'),
            std::cmp::Ordering::Equal => lower.clone(),
            std::cmp::Ordering::Greater => single('I'),
        })
        .collect();
    kron_all(&f)
}

pub fn creator(j: usize, n: usize) -> Mat {
    annihilator(j, n).adjoint()
}

pub fn number_operator(n: usize) -> Mat {
    (0..n).fold(Mat::zeros(1 << n, 1 << n), |acc, j| acc + creator(j, n) * annihilator(j, n))
}

/// Hubbard chain from ladder matrices (interleaved spin orbitals).
pub fn hubbard_dense(sites: usize, t: f64, u: f64, periodic: bool) -> Mat {
    let n = 2 * sites;
    let mut bonds: Vec<(usize, usize)> = (0..sites - 1).map(|i| (i, i + 1)).collect();
    if periodic && sites > 2 {
        bonds.push((sites - 1, 0));
    }
    let mut h = Mat::zeros(1 << n, 1 << n);
    for (i, j) in bonds {
        for s in 0..2 {
            let (a, b) = (2 * i + s, 2 * j + s);
            let hop = creator(a, n) * annihilator(b, n);
            h += (&hop + hop.adjoint()) * c(-t, 0.0);
        }
    }
    for i in 0..sites {
        let nu = creator(2 * i, n) * annihilator(2 * i, n);
        let nd = creator(2 * i + 1, n) * annihilator(2 * i + 1, n);
        h += nu * nd * c(u, 0.0);
    }
    h
}

pub fn vector(s: &Statevector) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

pub fn expectation(m: &Mat, psi: &DVector<Complex64>) -> f64 {
    psi.dotc(&(m * psi)).re
}

pub fn variance(m: &Mat, psi: &DVector<Complex64>) -> f64 {
    let e = expectation(m, psi);
    let hpsi = m * psi;
    hpsi.dotc(&hpsi).re - e * e
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_state(n: usize, seed: u64) -> Statevector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

/// `RY(theta) = exp(-i theta Y / 2)` on `qubit`.
pub fn ry(theta: f64, qubit: usize, n: usize) -> Mat {
    let (s, co) = (theta / 2.0).sin_cos();
    let r = Mat::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]);
    let f: Vec<Mat> = (0..n).map(|k| if k == qubit { r.clone() } else { single('I') }).collect();
    kron_all(&f)
}

/// CX from its definition as a permutation of basis states.
pub fn cx(control: usize, target: usize, n: usize) -> Mat {
    let dim = 1usize << n;
    let mut m = Mat::zeros(dim, dim);
    for b in 0..dim {
        let cbit = (b >> (n - 1 - control)) & 1;
        let out = if cbit == 1 { b ^ (1 << (n - 1 - target)) } else { b };
        m[(out, b)] = c(1.0, 0.0);
    }
    m
}

/// Linear-CX TwoLocal circuit as a dense unitary.
pub fn twolocal_unitary(n: usize, reps: usize, theta: &[f64]) -> Mat {
    let mut u = identity(n);
    for r in 0..=reps {
        for q in 0..n {
            u = ry(theta[r * n + q], q, n) * u;
        }
        if r < reps {
            for q in 0..n - 1 {
                u = cx(q, q + 1, n) * u;
            }
        }
    }
    u
}

/// `exp(-i a P) = cos a I - i sin a P` for a Pauli label.
pub fn pauli_exp(label: &str, a: f64) -> Mat {
    let n = label.len();
    identity(n) * c(a.cos(), 0.0) - pauli_matrix(label) * c(0.0, a.sin())
}
