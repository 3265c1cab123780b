use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::PauliString;
use crate::error::{Error, Result};

/// Largest register the simulator will allocate (2^26 amplitudes, 1 GiB).
pub const MAX_QUBITS: usize = 26;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    H(usize),
    X(usize),
    S(usize),
    Sdg(usize),
    Cx { control: usize, target: usize },
    Cz { control: usize, target: usize },
}

/// Dense `2^n` amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0).expect("index 0 is always valid")
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capability {
                what: "statevector simulation",
                limit: MAX_QUBITS,
                requested: n_qubits,
            });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Config(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Equal superposition of all basis states.
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Self {
            n_qubits,
            amps: vec![a; dim],
        }
    }

    /// Wraps raw amplitudes, normalising them. Fails on a non-power-of-two
    /// length or a zero vector.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Config(format!(
                "amplitude vector length {dim} is not a power of two >= 2"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capability {
                what: "statevector simulation",
                limit: MAX_QUBITS,
                requested: n_qubits,
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Config("amplitude vector has zero or non-finite norm".into()));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dimension(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Statevector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    /// Resets to basis state `index` without reallocating.
    pub(crate) fn reset_to_basis(&mut self, index: usize) {
        self.amps.iter_mut().for_each(|a| *a = ZERO);
        self.amps[index] = ONE;
    }

    fn bit(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(1usize << (self.n_qubits - 1 - qubit))
    }

    fn check_pauli(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: 1usize << p.n_qubits(),
            });
        }
        Ok(())
    }

    /// `|psi> <- P|psi>`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_pauli(p)?;
        let mut out = vec![ZERO; self.amps.len()];
        p.accumulate(ONE, &self.amps, &mut out);
        self.amps = out;
        Ok(())
    }

    /// `|psi> <- exp(-i angle P)|psi> = (cos(angle) I - i sin(angle) P)|psi>`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, angle: f64) -> Result<()> {
        self.check_pauli(p)?;
        if !angle.is_finite() {
            return Err(Error::Config(format!("rotation angle {angle} is not finite")));
        }
        let (s, c) = angle.sin_cos();
        let minus_i_sin = Complex64::new(0.0, -s);
        let yp = p.y_phase();
        let x = p.x_mask() as usize;
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= c + minus_i_sin * p.phase_at(yp, b);
            }
            return Ok(());
        }
        for b in 0..self.amps.len() {
            let partner = b ^ x;
            if partner < b {
                continue;
            }
            let (a0, a1) = (self.amps[b], self.amps[partner]);
            // (P psi)[b] = phase(partner) psi[partner], and vice versa.
            self.amps[b] = a0 * c + minus_i_sin * p.phase_at(yp, partner) * a1;
            self.amps[partner] = a1 * c + minus_i_sin * p.phase_at(yp, b) * a0;
        }
        Ok(())
    }

    fn apply_1q(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        let bit = self.bit(qubit)?;
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[i], self.amps[i | bit]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    fn control_target(&self, control: usize, target: usize) -> Result<(usize, usize)> {
        if control == target {
            return Err(Error::Config(format!(
                "control and target are both qubit {control}"
            )));
        }
        Ok((self.bit(control)?, self.bit(target)?))
    }

    pub fn apply_gate(&mut self, gate: Gate) -> Result<()> {
        let r = |v: f64| Complex64::new(v, 0.0);
        let im = |v: f64| Complex64::new(0.0, v);
        match gate {
            Gate::Ry(q, theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                self.apply_1q(q, [[r(c), r(-s)], [r(s), r(c)]])
            }
            Gate::Rx(q, theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                self.apply_1q(q, [[r(c), im(-s)], [im(-s), r(c)]])
            }
            Gate::Rz(q, theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                self.apply_1q(q, [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]])
            }
            Gate::H(q) => {
                let h = r(FRAC_1_SQRT_2);
                self.apply_1q(q, [[h, h], [h, -h]])
            }
            Gate::X(q) => self.apply_1q(q, [[ZERO, ONE], [ONE, ZERO]]),
            Gate::S(q) => self.apply_1q(q, [[ONE, ZERO], [ZERO, im(1.0)]]),
            Gate::Sdg(q) => self.apply_1q(q, [[ONE, ZERO], [ZERO, im(-1.0)]]),
            Gate::Cx { control, target } => {
                let (cb, tb) = self.control_target(control, target)?;
                for i in 0..self.amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        self.amps.swap(i, i | tb);
                    }
                }
                Ok(())
            }
            Gate::Cz { control, target } => {
                let (cb, tb) = self.control_target(control, target)?;
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & cb != 0 && i & tb != 0 {
                        *a = -*a;
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Statevector, b: &Statevector, tol: f64) -> bool {
        a.amps.iter().zip(&b.amps).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn zero_angle_rotation_is_identity() {
        let mut s = Statevector::uniform(3);
        let before = s.clone();
        s.apply_pauli_rotation(&"XYZ".parse().unwrap(), 0.0).unwrap();
        assert!(close(&s, &before, 1e-15));
        s.apply_gate(Gate::Ry(1, 0.0)).unwrap();
        assert!(close(&s, &before, 1e-15));
    }

    #[test]
    fn z_rotation_by_pi_is_a_phase() {
        let mut s = Statevector::zero(1);
        s.apply_pauli_rotation(&"Z".parse().unwrap(), PI).unwrap();
        assert!((s.amps[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((s.probabilities()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_rotation_by_half_pi_flips() {
        let mut s = Statevector::zero(1);
        s.apply_pauli_rotation(&"X".parse().unwrap(), FRAC_PI_2).unwrap();
        assert!((s.amps[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((s.probabilities()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_and_cx() {
        let mut s = Statevector::zero(1);
        s.apply_gate(Gate::H(0)).unwrap();
        let p = s.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);

        let mut s = Statevector::basis(2, 0b10).unwrap();
        s.apply_gate(Gate::Cx { control: 0, target: 1 }).unwrap();
        assert!((s.probabilities()[0b11] - 1.0).abs() < 1e-15);
        let mut s = Statevector::basis(2, 0b01).unwrap();
        s.apply_gate(Gate::Cx { control: 0, target: 1 }).unwrap();
        assert!((s.probabilities()[0b01] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ry_matches_y_rotation_at_half_angle() {
        let mut a = Statevector::uniform(2);
        a.apply_gate(Gate::Rx(0, 0.3)).unwrap();
        let mut b = a.clone();
        a.apply_gate(Gate::Ry(1, 0.7)).unwrap();
        b.apply_pauli_rotation(&"IY".parse().unwrap(), 0.35).unwrap();
        assert!(close(&a, &b, 1e-14));
    }

    #[test]
    fn gate_errors() {
        let mut s = Statevector::zero(2);
        assert!(matches!(
            s.apply_gate(Gate::H(2)),
            Err(Error::QubitOutOfRange { index: 2, n_qubits: 2 })
        ));
        assert!(s.apply_gate(Gate::Cz { control: 1, target: 1 }).is_err());
        assert!(s.apply_pauli_rotation(&"XXX".parse().unwrap(), 0.1).is_err());
        assert!(s.apply_pauli_rotation(&"XX".parse().unwrap(), f64::NAN).is_err());
    }

    #[test]
    fn s_then_sdg_is_identity() {
        let mut s = Statevector::uniform(1);
        let before = s.clone();
        s.apply_gate(Gate::S(0)).unwrap();
        s.apply_gate(Gate::Sdg(0)).unwrap();
        assert!(close(&s, &before, 1e-15));
    }
}
