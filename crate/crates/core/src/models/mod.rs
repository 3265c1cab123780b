//! Benchmark Hamiltonians: the open Ising chain, the Fermi-Hubbard chain via
//! Jordan-Wigner, and molecular Pauli sums loaded from JSON files.

mod fermion;
mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, HamiltonianMetadata, Pauli, PauliString, PauliTerm};

pub use fermion::{jordan_wigner, FermionOperator, Ladder};
pub use io::{
    bundled, bundled_names, load_hamiltonian, parse_hamiltonian, save_hamiltonian,
    HamiltonianFile, TermEntry,
};

/// `H = -sum_{i} Z_i Z_{i+1}` on an open chain of `n_qubits` spins.
pub fn build_ising(n_qubits: usize) -> Result<Hamiltonian> {
    if !(2..=14).contains(&n_qubits) {
        return Err(Error::Config(format!(
            "Ising chain needs 2..=14 qubits, got {n_qubits}"
        )));
    }
    let terms = (0..n_qubits - 1)
        .map(|i| {
            let p = PauliString::from_sparse(n_qubits, &[(i, Pauli::Z), (i + 1, Pauli::Z)])?;
            Ok(PauliTerm::new(p, -1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Hamiltonian::new(n_qubits, 0.0, terms)?.with_metadata(HamiltonianMetadata {
        name: format!("ising-{n_qubits}"),
        e0_reference: Some(-((n_qubits - 1) as f64)),
        n_electrons: None,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Lattice bonds of a 1D chain. A periodic 2-site chain has a single bond.
pub fn chain_bonds(n_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut bonds: Vec<_> = (0..n_sites - 1).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n_sites > 2 {
        bonds.push((n_sites - 1, 0));
    }
    bonds
}

/// Fermi-Hubbard chain as a fermion operator on `2 * n_sites` interleaved
/// spin-orbital modes.
pub fn hubbard_fermion_operator(
    n_sites: usize,
    t: f64,
    u: f64,
    boundary: Boundary,
) -> FermionOperator {
    let mut op = FermionOperator::new();
    for (i, j) in chain_bonds(n_sites, boundary) {
        for spin in 0..2 {
            op.add_hopping(-t, 2 * i + spin, 2 * j + spin);
        }
    }
    for i in 0..n_sites {
        let (up, down) = (2 * i, 2 * i + 1);
        op.add(
            u,
            vec![
                Ladder::create(up),
                Ladder::annihilate(up),
                Ladder::create(down),
                Ladder::annihilate(down),
            ],
        );
    }
    op
}

/// `-t sum_{<ij>,s} (c+_is c_js + h.c.) + U sum_i n_i,up n_i,down` mapped to
/// qubits with Jordan-Wigner; `2 * n_sites` qubits.
pub fn build_hubbard(n_sites: usize, t: f64, u: f64, boundary: Boundary) -> Result<Hamiltonian> {
    if !(2..=7).contains(&n_sites) {
        return Err(Error::Config(format!(
            "Hubbard chain needs 2..=7 sites, got {n_sites}"
        )));
    }
    if !(t.is_finite() && u.is_finite()) {
        return Err(Error::Config("Hubbard t and U must be finite".into()));
    }
    let op = hubbard_fermion_operator(n_sites, t, u, boundary);
    let name = format!(
        "hubbard-{n_sites}-t{t}-u{u}-{}",
        match boundary {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    );
    Ok(jordan_wigner(&op, 2 * n_sites)?.with_metadata(HamiltonianMetadata {
        name,
        e0_reference: None,
        n_electrons: None,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{exact_ground_state, Statevector};

    #[test]
    fn ising_structure() {
        let h = build_ising(5).unwrap();
        assert_eq!(h.terms().len(), 4);
        assert!(h.terms().iter().all(|t| t.coefficient == -1.0));
        assert!((exact_ground_state(&h).unwrap().0 + 4.0).abs() < 1e-10);

        let h2 = build_ising(2).unwrap();
        assert_eq!(h2.terms().len(), 1);
        assert_eq!(h2.terms()[0].paulis.to_string(), "ZZ");

        let h9 = build_ising(9).unwrap();
        assert_eq!(h9.terms().len(), 8);
        assert!((exact_ground_state(&h9).unwrap().0 + 8.0).abs() < 1e-10);
    }

    #[test]
    fn ising_range() {
        assert!(build_ising(1).is_err());
        assert!(build_ising(15).is_err());
    }

    #[test]
    fn ising_ground_is_doubly_degenerate() {
        for n in [3, 5, 6] {
            let h = build_ising(n).unwrap();
            let dim = 1usize << n;
            let minimisers: Vec<usize> = (0..dim)
                .filter(|&b| {
                    let e = h.expectation(&Statevector::basis(n, b).unwrap()).unwrap();
                    (e + (n - 1) as f64).abs() < 1e-12
                })
                .collect();
            assert_eq!(minimisers, vec![0, dim - 1]);
        }
    }

    #[test]
    fn two_site_hubbard_minimum() {
        let h = build_hubbard(2, 1.0, 1.0, Boundary::Open).unwrap();
        assert_eq!(h.n_qubits(), 4);
        let (e0, _) = exact_ground_state(&h).unwrap();
        let analytic = (1.0 - 17f64.sqrt()) / 2.0;
        assert!((e0 - analytic).abs() < 1e-9, "{e0} vs {analytic}");
    }

    #[test]
    fn hubbard_without_hopping_is_diagonal() {
        for n in [2, 3] {
            let h = build_hubbard(n, 0.0, 1.0, Boundary::Open).unwrap();
            assert!(h.terms().iter().all(|t| t.paulis.is_diagonal()));
            assert!(exact_ground_state(&h).unwrap().0.abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_two_sites_equals_open() {
        let a = build_hubbard(2, 1.0, 2.0, Boundary::Open).unwrap();
        let b = build_hubbard(2, 1.0, 2.0, Boundary::Periodic).unwrap();
        assert_eq!(a.terms(), b.terms());
        assert_eq!(chain_bonds(4, Boundary::Periodic).len(), 4);
    }

    #[test]
    fn hubbard_range() {
        assert!(build_hubbard(1, 1.0, 1.0, Boundary::Open).is_err());
        assert!(build_hubbard(8, 1.0, 1.0, Boundary::Open).is_err());
        assert!(build_hubbard(3, f64::NAN, 1.0, Boundary::Open).is_err());
    }
}
