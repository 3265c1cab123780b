use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, PauliString, PauliTerm};

/// Imaginary Pauli coefficients larger than this mean the operator was not
/// Hermitian.
const IMAG_TOL: f64 = 1e-12;

/// A single creation (`dagger = true`) or annihilation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self {
            mode,
            dagger: false,
        }
    }
}

/// Real linear combination of products of ladder operators.
///
/// Spin-orbital convention for lattice models: mode `2i` is site `i` spin-up,
/// mode `2i + 1` is site `i` spin-down.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FermionOperator {
    terms: Vec<(f64, Vec<Ladder>)>,
}

impl FermionOperator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, coefficient: f64, ops: Vec<Ladder>) -> &mut Self {
        self.terms.push((coefficient, ops));
        self
    }

    /// `c_j^dagger c_j`.
    pub fn add_number(&mut self, coefficient: f64, mode: usize) -> &mut Self {
        self.add(coefficient, vec![Ladder::create(mode), Ladder::annihilate(mode)])
    }

    /// `coefficient * (c_i^dagger c_j + c_j^dagger c_i)`.
    pub fn add_hopping(&mut self, coefficient: f64, i: usize, j: usize) -> &mut Self {
        self.add(coefficient, vec![Ladder::create(i), Ladder::annihilate(j)]);
        self.add(coefficient, vec![Ladder::create(j), Ladder::annihilate(i)])
    }

    pub fn terms(&self) -> &[(f64, Vec<Ladder>)] {
        &self.terms
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|(_, ops)| ops.iter().map(|o| o.mode))
            .max()
    }
}

/// Jordan-Wigner image of a single ladder operator on `n` modes:
/// `c_j -> Z_0 ... Z_{j-1} (X_j + i Y_j) / 2`, `c_j^dagger` its adjoint.
fn ladder_paulis(op: Ladder, n: usize) -> [(Complex64, PauliString); 2] {
    let z_string: u64 = (0..op.mode).map(|k| 1u64 << (n - 1 - k)).sum();
    let bit = 1u64 << (n - 1 - op.mode);
    let x = PauliString::from_masks(n, bit, z_string);
    let y = PauliString::from_masks(n, bit, z_string | bit);
    let y_coef = if op.dagger { -0.5 } else { 0.5 };
    [
        (Complex64::new(0.5, 0.0), x),
        (Complex64::new(0.0, y_coef), y),
    ]
}

/// Maps `op` to a qubit Hamiltonian on `n_modes` qubits (mode j -> qubit j).
pub fn jordan_wigner(op: &FermionOperator, n_modes: usize) -> Result<Hamiltonian> {
    if n_modes == 0 || n_modes > 64 {
        return Err(Error::Config(format!(
            "Jordan-Wigner needs 1..=64 modes, got {n_modes}"
        )));
    }
    if let Some(m) = op.max_mode() {
        if m >= n_modes {
            return Err(Error::Config(format!(
                "mode index {m} out of range for {n_modes} modes"
            )));
        }
    }
    let identity = PauliString::identity(n_modes);
    let mut total: HashMap<PauliString, Complex64> = HashMap::new();
    let mut order: Vec<PauliString> = Vec::new();

    for (coef, ops) in op.terms() {
        let mut product: Vec<(Complex64, PauliString)> =
            vec![(Complex64::new(*coef, 0.0), identity)];
        for &ladder in ops {
            let factors = ladder_paulis(ladder, n_modes);
            let mut next: HashMap<PauliString, Complex64> = HashMap::new();
            let mut next_order = Vec::new();
            for (ca, pa) in &product {
                for (cb, pb) in &factors {
                    let (phase, p) = pa.mul(pb);
                    let entry = next.entry(p).or_insert_with(|| {
                        next_order.push(p);
                        Complex64::new(0.0, 0.0)
                    });
                    *entry += ca * cb * phase;
                }
            }
            product = next_order.into_iter().map(|p| (next[&p], p)).collect();
        }
        for (c, p) in product {
            let entry = total.entry(p).or_insert_with(|| {
                order.push(p);
                Complex64::new(0.0, 0.0)
            });
            *entry += c;
        }
    }

    let mut offset = 0.0;
    let mut terms = Vec::with_capacity(order.len());
    for p in order {
        let c = total[&p];
        if c.im.abs() > IMAG_TOL {
            return Err(Error::NonHermitian(format!(
                "Pauli string {p} has coefficient {c}"
            )));
        }
        if p.is_identity() {
            offset += c.re;
        } else {
            terms.push(PauliTerm::new(p, c.re));
        }
    }
    Hamiltonian::new(n_modes, offset, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeff(h: &Hamiltonian, label: &str) -> f64 {
        let p: PauliString = label.parse().unwrap();
        h.terms()
            .iter()
            .find(|t| t.paulis == p)
            .map_or(0.0, |t| t.coefficient)
    }

    #[test]
    fn number_operator() {
        let mut op = FermionOperator::new();
        op.add_number(1.0, 1);
        let h = jordan_wigner(&op, 3).unwrap();
        assert!((h.identity_offset() - 0.5).abs() < 1e-15);
        assert_eq!(h.terms().len(), 1);
        assert!((coeff(&h, "IZI") + 0.5).abs() < 1e-15);
    }

    #[test]
    fn adjacent_hopping() {
        let mut op = FermionOperator::new();
        op.add_hopping(1.0, 0, 1);
        let h = jordan_wigner(&op, 2).unwrap();
        assert_eq!(h.terms().len(), 2);
        assert!((coeff(&h, "XX") - 0.5).abs() < 1e-15);
        assert!((coeff(&h, "YY") - 0.5).abs() < 1e-15);
        assert!(h.identity_offset().abs() < 1e-15);
    }

    #[test]
    fn hopping_carries_z_string() {
        let mut op = FermionOperator::new();
        op.add_hopping(1.0, 0, 2);
        let h = jordan_wigner(&op, 3).unwrap();
        assert_eq!(h.terms().len(), 2);
        assert!((coeff(&h, "XZX") - 0.5).abs() < 1e-15);
        assert!((coeff(&h, "YZY") - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut op = FermionOperator::new();
        op.add(1.0, vec![Ladder::create(0), Ladder::annihilate(1)]);
        assert!(matches!(jordan_wigner(&op, 2), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn mode_out_of_range() {
        let mut op = FermionOperator::new();
        op.add_number(1.0, 3);
        assert!(jordan_wigner(&op, 3).is_err());
    }

    #[test]
    fn pauli_exclusion_gives_zero() {
        let mut op = FermionOperator::new();
        op.add(1.0, vec![Ladder::create(0), Ladder::create(0)]);
        let h = jordan_wigner(&op, 1).unwrap();
        assert!(h.terms().is_empty());
        assert_eq!(h.identity_offset(), 0.0);
    }
}
