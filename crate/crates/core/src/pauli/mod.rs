//! Pauli strings, Pauli-sum Hamiltonians and dense statevector simulation.
//!
//! Convention used throughout the crate: qubit 0 is the leftmost character of
//! a Pauli label and the most significant bit of a basis-state index. A
//! 3-qubit label `"XIZ"` therefore acts with X on bit 2 and Z on bit 0 of the
//! index.

mod diag;
mod state;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diag::{exact_ground_state, DENSE_DIAG_LIMIT, DENSE_LIMIT, GROUND_STATE_LIMIT};
pub use state::{Gate, Statevector, MAX_QUBITS};

/// Coefficients with magnitude below this are dropped at construction.
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis in symplectic form.
///
/// Bit `n - 1 - q` of `x` / `z` is set when qubit `q` carries an X / Z
/// component; Y sets both. The operator is `i^{|x & z|} X^x Z^z`, so
/// applying it to `|b>` gives `i^{#Y} (-1)^{|b & z|} |b ^ x>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x: 0, z: 0 }
    }

    /// Builds a string from `(qubit, pauli)` pairs; unlisted qubits are I.
    pub fn from_sparse(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        check_width(n_qubits)?;
        let mut s = Self::identity(n_qubits);
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            s.set(q, p);
        }
        Ok(s)
    }

    pub(crate) fn from_masks(n_qubits: usize, x: u64, z: u64) -> Self {
        Self { n_qubits, x, z }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Qubits acted on non-trivially, as a basis-index bit mask.
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub(crate) fn bit(&self, qubit: usize) -> u64 {
        1u64 << (self.n_qubits - 1 - qubit)
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        let b = self.bit(qubit);
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn set(&mut self, qubit: usize, p: Pauli) {
        let b = self.bit(qubit);
        self.x &= !b;
        self.z &= !b;
        match p {
            Pauli::I => {}
            Pauli::X => self.x |= b,
            Pauli::Y => {
                self.x |= b;
                self.z |= b
            }
            Pauli::Z => self.z |= b,
        }
    }

    /// `i^{#Y}` as a complex number.
    pub(crate) fn y_phase(&self) -> Complex64 {
        i_pow((self.x & self.z).count_ones())
    }

    /// Two strings qubit-wise commute when, on every qubit, they carry the
    /// same letter or at least one of them is I.
    pub fn qubit_wise_commutes(&self, other: &Self) -> bool {
        let sa = self.support_mask();
        let sb = other.support_mask();
        let both = sa & sb;
        (self.x ^ other.x) & both == 0 && (self.z ^ other.z) & both == 0
    }

    /// Full (not qubit-wise) commutation via the symplectic product.
    pub fn commutes(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Operator product `self * other = phase * result`.
    pub fn mul(&self, other: &Self) -> (Complex64, PauliString) {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let ny_a = (self.x & self.z).count_ones();
        let ny_b = (other.x & other.z).count_ones();
        let ny = (x & z).count_ones();
        // X^a Z^b X^c Z^d = (-1)^{|b & c|} X^{a^c} Z^{b^d}
        let swaps = (self.z & other.x).count_ones();
        let exponent = (ny_a + ny_b + 2 * swaps + 4 * 64 - ny) % 4;
        (
            i_pow(exponent),
            PauliString {
                n_qubits: self.n_qubits,
                x,
                z,
            },
        )
    }

    /// Sign/phase of `P|b>`: `P|b> = phase(b) |b ^ x>`.
    #[inline]
    pub(crate) fn phase_at(&self, y_phase: Complex64, b: usize) -> Complex64 {
        if (b as u64 & self.z).count_ones().is_multiple_of(2) {
            y_phase
        } else {
            -y_phase
        }
    }

    /// Adds `scale * P|src>` into `dst`.
    pub(crate) fn accumulate(&self, scale: Complex64, src: &[Complex64], dst: &mut [Complex64]) {
        let yp = self.y_phase() * scale;
        let x = self.x as usize;
        for (b, amp) in src.iter().enumerate() {
            dst[b ^ x] += self.phase_at(yp, b) * amp;
        }
    }

    /// `<psi|P|psi>`; real for Hermitian P up to rounding.
    pub(crate) fn expectation_complex(&self, amps: &[Complex64]) -> Complex64 {
        let yp = self.y_phase();
        let x = self.x as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, amp) in amps.iter().enumerate() {
            acc += amps[b ^ x].conj() * self.phase_at(yp, b) * amp;
        }
        acc
    }
}

fn i_pow(e: u32) -> Complex64 {
    match e % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > 64 {
        return Err(Error::Config(format!(
            "Pauli strings need 1..=64 qubits, got {n_qubits}"
        )));
    }
    Ok(())
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        check_width(n).map_err(|_| Error::InvalidPauli(s.to_string()))?;
        let mut out = Self::identity(n);
        for (q, c) in s.chars().enumerate() {
            let p = Pauli::from_char(c).ok_or_else(|| Error::InvalidPauli(s.to_string()))?;
            out.set(q, p);
        }
        Ok(out)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.get(q).as_char())?;
        }
        Ok(())
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One weighted Pauli string `c_k P_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    #[serde(rename = "pauli")]
    pub paulis: PauliString,
    #[serde(rename = "coeff")]
    pub coefficient: f64,
}

impl PauliTerm {
    pub fn new(paulis: PauliString, coefficient: f64) -> Self {
        Self {
            paulis,
            coefficient,
        }
    }

    pub fn parse(label: &str, coefficient: f64) -> Result<Self> {
        Ok(Self::new(label.parse()?, coefficient))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HamiltonianMetadata {
    pub name: String,
    pub e0_reference: Option<f64>,
    /// Electron count for molecular systems; fixes the Hartree-Fock reference.
    #[serde(default)]
    pub n_electrons: Option<usize>,
}

/// Greedy first-fit partition into qubit-wise commuting groups, visiting the
/// strings in the given order. Returns positions into `strings`.
pub fn qubit_wise_groups<'a>(strings: impl IntoIterator<Item = &'a PauliString>) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut members: Vec<Vec<PauliString>> = Vec::new();
    for (i, s) in strings.into_iter().enumerate() {
        match members
            .iter()
            .position(|g| g.iter().all(|m| m.qubit_wise_commutes(s)))
        {
            Some(k) => {
                groups[k].push(i);
                members[k].push(*s);
            }
            None => {
                groups.push(vec![i]);
                members.push(vec![*s]);
            }
        }
    }
    groups
}

/// `identity_offset * I + sum_k c_k P_k` with unique, non-identity strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    identity_offset: f64,
    terms: Vec<PauliTerm>,
    metadata: Option<HamiltonianMetadata>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize, identity_offset: f64, terms: Vec<PauliTerm>) -> Result<Self> {
        Self::with_threshold(n_qubits, identity_offset, terms, DEFAULT_DROP_THRESHOLD)
    }

    /// Merges duplicate strings by summing coefficients (first occurrence
    /// keeps its position), folds all-identity terms into the offset and drops
    /// terms whose merged |coefficient| is below `threshold`.
    pub fn with_threshold(
        n_qubits: usize,
        identity_offset: f64,
        terms: Vec<PauliTerm>,
        threshold: f64,
    ) -> Result<Self> {
        check_width(n_qubits)?;
        if !identity_offset.is_finite() {
            return Err(Error::Config("identity offset is not finite".into()));
        }
        let mut offset = identity_offset;
        let mut merged: Vec<PauliTerm> = Vec::with_capacity(terms.len());
        let mut index: HashMap<PauliString, usize> = HashMap::new();
        for (i, term) in terms.into_iter().enumerate() {
            if term.paulis.n_qubits() != n_qubits {
                return Err(Error::Load {
                    index: i,
                    message: format!(
                        "Pauli string {} has length {}, expected {n_qubits}",
                        term.paulis,
                        term.paulis.n_qubits()
                    ),
                });
            }
            if !term.coefficient.is_finite() {
                return Err(Error::Load {
                    index: i,
                    message: format!("coefficient {} is not finite", term.coefficient),
                });
            }
            if term.paulis.is_identity() {
                offset += term.coefficient;
                continue;
            }
            match index.get(&term.paulis) {
                Some(&k) => merged[k].coefficient += term.coefficient,
                None => {
                    index.insert(term.paulis, merged.len());
                    merged.push(term);
                }
            }
        }
        merged.retain(|t| t.coefficient.abs() >= threshold);
        Ok(Self {
            n_qubits,
            identity_offset: offset,
            terms: merged,
            metadata: None,
        })
    }

    pub fn with_metadata(mut self, metadata: HamiltonianMetadata) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn identity_offset(&self) -> f64 {
        self.identity_offset
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn metadata(&self) -> Option<&HamiltonianMetadata> {
        self.metadata.as_ref()
    }

    pub fn e0_reference(&self) -> Option<f64> {
        self.metadata.as_ref().and_then(|m| m.e0_reference)
    }

    pub fn name(&self) -> &str {
        self.metadata.as_ref().map_or("", |m| m.name.as_str())
    }

    pub fn dimension(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Sum of |c_k| over the non-identity terms.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    fn check_state(&self, state: &Statevector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: state.dimension(),
            });
        }
        Ok(())
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        self.check_state(state)?;
        let amps = state.amplitudes();
        let mut acc = Complex64::new(self.identity_offset * state.norm_sqr(), 0.0);
        for t in &self.terms {
            acc += t.paulis.expectation_complex(amps) * t.coefficient;
        }
        debug_assert!(acc.im.abs() < 1e-9 * (1.0 + acc.re.abs()));
        Ok(acc.re)
    }

    /// `H|psi>` accumulated term by term (not normalised).
    pub fn apply(&self, state: &Statevector) -> Result<Vec<Complex64>> {
        self.check_state(state)?;
        let amps = state.amplitudes();
        let mut out: Vec<Complex64> = amps.iter().map(|a| a * self.identity_offset).collect();
        for t in &self.terms {
            t.paulis
                .accumulate(Complex64::new(t.coefficient, 0.0), amps, &mut out);
        }
        Ok(out)
    }

    /// `<H^2> - <H>^2`, via the squared norm of `H|psi>`.
    pub fn variance(&self, state: &Statevector) -> Result<f64> {
        Ok(self.moments(state)?.1)
    }

    /// `(<H>, Var[H])` from a single application of `H`.
    pub fn moments(&self, state: &Statevector) -> Result<(f64, f64)> {
        let h_psi = self.apply(state)?;
        let (mut mean, mut second) = (0.0, 0.0);
        for (a, ha) in state.amplitudes().iter().zip(&h_psi) {
            mean += (a.conj() * ha).re;
            second += ha.norm_sqr();
        }
        Ok((mean, (second - mean * mean).max(0.0)))
    }

    /// Dense matrix built by bit-mask traversal of every term, row-major
    /// (`m[row * dim + col]`). Only small systems are sensible here.
    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        if self.n_qubits > DENSE_LIMIT {
            return Err(Error::Capability {
                what: "dense Hamiltonian matrix",
                limit: DENSE_LIMIT,
                requested: self.n_qubits,
            });
        }
        let dim = self.dimension();
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for b in 0..dim {
            m[b * dim + b] += self.identity_offset;
        }
        for t in &self.terms {
            let yp = t.paulis.y_phase() * t.coefficient;
            let x = t.paulis.x_mask() as usize;
            for col in 0..dim {
                m[(col ^ x) * dim + col] += t.paulis.phase_at(yp, col);
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["XIZY", "I", "ZZZZZZZZ", "YXXY"] {
            assert_eq!(ps(s).to_string(), s);
        }
        assert!("ZQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn qubit_zero_is_most_significant_bit() {
        let p = ps("XII");
        assert_eq!(p.x_mask(), 0b100);
        assert_eq!(ps("IIZ").z_mask(), 0b001);
    }

    #[test]
    fn single_qubit_products() {
        let (ph, r) = ps("X").mul(&ps("Y"));
        assert_eq!(r, ps("Z"));
        assert!((ph - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let (ph, r) = ps("Y").mul(&ps("X"));
        assert_eq!(r, ps("Z"));
        assert!((ph - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let (ph, r) = ps("Z").mul(&ps("X"));
        assert_eq!(r, ps("Y"));
        assert!((ph - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let (ph, r) = ps("Y").mul(&ps("Y"));
        assert!(r.is_identity());
        assert!((ph - 1.0).norm() < 1e-15);
    }

    #[test]
    fn commutation_checks() {
        assert!(ps("ZZ").qubit_wise_commutes(&ps("ZI")));
        assert!(!ps("XI").qubit_wise_commutes(&ps("ZI")));
        assert!(!ps("XX").qubit_wise_commutes(&ps("YY")));
        assert!(ps("XX").commutes(&ps("YY")));
        assert!(!ps("XI").commutes(&ps("ZI")));
    }

    #[test]
    fn duplicates_merge_and_small_terms_drop() {
        let h = Hamiltonian::new(
            4,
            0.0,
            vec![
                PauliTerm::parse("ZZII", 0.3).unwrap(),
                PauliTerm::parse("XIII", 1e-13).unwrap(),
                PauliTerm::parse("ZZII", 0.2).unwrap(),
                PauliTerm::parse("IIII", 1.5).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(h.terms().len(), 1);
        assert!((h.terms()[0].coefficient - 0.5).abs() < 1e-15);
        assert_eq!(h.identity_offset(), 1.5);
    }

    #[test]
    fn cancelling_duplicates_vanish() {
        let h = Hamiltonian::new(
            2,
            0.0,
            vec![
                PauliTerm::parse("XX", 0.4).unwrap(),
                PauliTerm::parse("XX", -0.4).unwrap(),
            ],
        )
        .unwrap();
        assert!(h.terms().is_empty());
    }

    #[test]
    fn construction_rejects_bad_terms() {
        let err = Hamiltonian::new(2, 0.0, vec![PauliTerm::parse("XXX", 1.0).unwrap()]);
        assert!(matches!(err, Err(Error::Load { index: 0, .. })));
        let err = Hamiltonian::new(
            2,
            0.0,
            vec![
                PauliTerm::parse("XX", 1.0).unwrap(),
                PauliTerm::parse("ZZ", f64::NAN).unwrap(),
            ],
        );
        assert!(matches!(err, Err(Error::Load { index: 1, .. })));
    }

    #[test]
    fn expectation_examples() {
        let ising = Hamiltonian::new(
            5,
            0.0,
            (0..4)
                .map(|i| {
                    let mut s = [Pauli::I; 5];
                    s[i] = Pauli::Z;
                    s[i + 1] = Pauli::Z;
                    let label: String = s.iter().map(|p| p.as_char()).collect();
                    PauliTerm::parse(&label, -1.0).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let zero = Statevector::zero(5);
        assert!((ising.expectation(&zero).unwrap() + 4.0).abs() < 1e-12);
        assert!(ising.variance(&zero).unwrap().abs() < 1e-10);

        let offset_only = Hamiltonian::new(3, 2.5, vec![]).unwrap();
        assert!((offset_only.expectation(&Statevector::zero(3)).unwrap() - 2.5).abs() < 1e-15);

        let uniform = Statevector::uniform(5);
        assert!(ising.expectation(&uniform).unwrap().abs() < 1e-12);
        assert!((ising.variance(&uniform).unwrap() - 4.0).abs() < 1e-10);

        let z0 = Hamiltonian::new(1, 0.0, vec![PauliTerm::parse("Z", 1.0).unwrap()]).unwrap();
        let plus = Statevector::uniform(1);
        assert!(z0.expectation(&plus).unwrap().abs() < 1e-15);
        assert!((z0.variance(&plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = Hamiltonian::new(2, 0.0, vec![PauliTerm::parse("ZZ", 1.0).unwrap()]).unwrap();
        let err = h.expectation(&Statevector::zero(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 4, actual: 8 }));
        assert!(h.variance(&Statevector::zero(1)).is_err());
    }
}
