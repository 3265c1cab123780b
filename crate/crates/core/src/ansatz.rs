//! Parameterized circuits: hardware-efficient TwoLocal and the truncated
//! variational Hamiltonian ansatz (tVHA).

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{qubit_wise_groups, Gate, Hamiltonian, PauliTerm, Statevector, MAX_QUBITS};

/// Circuit angles. All entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "parameter {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParameterVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ParameterVector> for Vec<f64> {
    fn from(p: ParameterVector) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    #[default]
    Ry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    #[default]
    Cx,
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    #[default]
    Linear,
    Circular,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operation {
    /// Single-qubit rotation by `theta[param]`, `exp(-i theta G / 2)`.
    Rotate {
        axis: Rotation,
        qubit: usize,
        param: usize,
    },
    Fixed(Gate),
    /// `prod_k exp(-i theta[param] c_k P_k)` over a qubit-wise commuting group.
    Evolve { param: usize, terms: Vec<PauliTerm> },
}

/// How the gradient with respect to one parameter may be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientRule {
    /// Two-point shift by +-pi/2; exact for generators with `G^2 = I`.
    ParameterShift,
    /// Central difference with a fixed step.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TwoLocal,
    Tvha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    n_qubits: usize,
    layers: Vec<Vec<Operation>>,
    n_params: usize,
    initial_state: usize,
    family: Family,
}

impl Ansatz {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn layers(&self) -> &[Vec<Operation>] {
        &self.layers
    }

    pub fn gradient_rule(&self) -> GradientRule {
        match self.family {
            Family::TwoLocal => GradientRule::ParameterShift,
            Family::Tvha => GradientRule::FiniteDifference,
        }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch {
                expected: self.n_params,
                actual: theta.len(),
            });
        }
        if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("parameter {i} is not finite")));
        }
        Ok(())
    }

    /// `|psi(theta)> = U(theta)|initial_state>`.
    pub fn prepare(&self, theta: &[f64]) -> Result<Statevector> {
        let mut state = Statevector::zero(self.n_qubits);
        self.prepare_into(theta, &mut state)?;
        Ok(state)
    }

    /// Like [`Ansatz::prepare`], reusing the buffer of `state`.
    pub fn prepare_into(&self, theta: &[f64], state: &mut Statevector) -> Result<()> {
        self.check_theta(theta)?;
        if state.n_qubits() != self.n_qubits {
            *state = Statevector::zero(self.n_qubits);
        }
        state.reset_to_basis(self.initial_state);
        for op in self.layers.iter().flatten() {
            match op {
                Operation::Rotate {
                    axis: Rotation::Ry,
                    qubit,
                    param,
                } => state.apply_gate(Gate::Ry(*qubit, theta[*param]))?,
                Operation::Fixed(g) => state.apply_gate(*g)?,
                Operation::Evolve { param, terms } => {
                    for t in terms {
                        state.apply_pauli_rotation(&t.paulis, theta[*param] * t.coefficient)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact energy `<psi(theta)|H|psi(theta)>`.
    pub fn energy(&self, h: &Hamiltonian, theta: &[f64]) -> Result<f64> {
        h.expectation(&self.prepare(theta)?)
    }
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Capability {
            what: "ansatz construction",
            limit: MAX_QUBITS,
            requested: n_qubits,
        });
    }
    Ok(())
}

/// Rotation layer, entangler layer, ..., final rotation layer.
/// Parameter `r * n + q` drives the rotation on qubit `q` in rotation layer `r`.
pub fn build_twolocal(
    n_qubits: usize,
    reps: usize,
    rotation: Rotation,
    entangler: Entangler,
    entanglement: Entanglement,
) -> Result<Ansatz> {
    check_register(n_qubits)?;
    if reps == 0 {
        return Err(Error::Config("TwoLocal needs reps >= 1".into()));
    }
    let rotations = |r: usize| -> Vec<Operation> {
        (0..n_qubits)
            .map(|q| Operation::Rotate {
                axis: rotation,
                qubit: q,
                param: r * n_qubits + q,
            })
            .collect()
    };
    let mut pairs: Vec<(usize, usize)> = (0..n_qubits.saturating_sub(1)).map(|q| (q, q + 1)).collect();
    if entanglement == Entanglement::Circular && n_qubits > 2 {
        pairs.push((n_qubits - 1, 0));
    }
    let entangling: Vec<Operation> = pairs
        .into_iter()
        .map(|(control, target)| {
            Operation::Fixed(match entangler {
                Entangler::Cx => Gate::Cx { control, target },
                Entangler::Cz => Gate::Cz { control, target },
            })
        })
        .collect();

    let mut layers = Vec::with_capacity(2 * reps + 1);
    for r in 0..reps {
        layers.push(rotations(r));
        layers.push(entangling.clone());
    }
    layers.push(rotations(reps));
    Ok(Ansatz {
        n_qubits,
        layers,
        n_params: n_qubits * (reps + 1),
        initial_state: 0,
        family: Family::TwoLocal,
    })
}

/// Indices of the terms kept at truncation level `p`, in ranked order
/// (`|c|` descending, ties by original index).
pub fn tvha_retained_terms(h: &Hamiltonian, p: f64) -> Result<Vec<usize>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("tVHA truncation p must lie in (0, 1], got {p}")));
    }
    if h.terms().is_empty() {
        return Err(Error::Config(
            "tVHA needs a Hamiltonian with at least one non-identity term".into(),
        ));
    }
    let mut ranked: Vec<usize> = (0..h.terms().len()).collect();
    ranked.sort_by(|&a, &b| {
        h.terms()[b]
            .coefficient
            .abs()
            .total_cmp(&h.terms()[a].coefficient.abs())
    });
    let weights: Vec<f64> = ranked.iter().map(|&i| h.terms()[i].coefficient.abs()).collect();
    let total: f64 = weights.iter().sum();
    let target = p * total * (1.0 - 1e-12);
    let mut cumulative = 0.0;
    let mut keep = ranked.len();
    for (k, w) in weights.iter().enumerate() {
        cumulative += w;
        if cumulative >= target {
            keep = k + 1;
            break;
        }
    }
    ranked.truncate(keep.max(1));
    Ok(ranked)
}

/// Basis index with fermionic modes `0..n_electrons` occupied (qubit `j` is
/// mode `j`).
pub fn hartree_fock_index(n_qubits: usize, n_electrons: usize) -> Result<usize> {
    check_register(n_qubits)?;
    if n_electrons > n_qubits {
        return Err(Error::Config(format!(
            "{n_electrons} electrons do not fit in {n_qubits} spin orbitals"
        )));
    }
    Ok(((1usize << n_electrons) - 1) << (n_qubits - n_electrons))
}

pub fn build_tvha(h: &Hamiltonian, p: f64, n_layers: usize, hf_occupation: usize) -> Result<Ansatz> {
    let n_qubits = h.n_qubits();
    check_register(n_qubits)?;
    if n_layers == 0 {
        return Err(Error::Config("tVHA needs n_layers >= 1".into()));
    }
    if hf_occupation >= 1usize << n_qubits {
        return Err(Error::Config(format!(
            "initial basis index {hf_occupation} out of range for {n_qubits} qubits"
        )));
    }
    let retained = tvha_retained_terms(h, p)?;
    let groups = qubit_wise_groups(retained.iter().map(|&i| &h.terms()[i].paulis));
    let n_groups = groups.len();
    let layers = (0..n_layers)
        .map(|l| {
            groups
                .iter()
                .enumerate()
                .map(|(g, members)| Operation::Evolve {
                    param: l * n_groups + g,
                    terms: members.iter().map(|&k| h.terms()[retained[k]]).collect(),
                })
                .collect()
        })
        .collect();
    Ok(Ansatz {
        n_qubits,
        layers,
        n_params: n_groups * n_layers,
        initial_state: hf_occupation,
        family: Family::Tvha,
    })
}

fn default_reps() -> usize {
    1
}

fn default_p() -> f64 {
    1.0
}

fn default_layers() -> usize {
    2
}

/// Serializable ansatz description, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnsatzSpec {
    TwoLocal {
        #[serde(default = "default_reps")]
        reps: usize,
        #[serde(default)]
        rotation: Rotation,
        #[serde(default)]
        entangler: Entangler,
        #[serde(default)]
        entanglement: Entanglement,
    },
    Tvha {
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_layers")]
        layers: usize,
        /// Initial basis index; defaults to the Hartree-Fock occupation from
        /// the Hamiltonian's electron count, or `|0...0>` if unknown.
        #[serde(default)]
        initial_state: Option<usize>,
    },
}

impl Default for AnsatzSpec {
    fn default() -> Self {
        AnsatzSpec::TwoLocal {
            reps: default_reps(),
            rotation: Rotation::default(),
            entangler: Entangler::default(),
            entanglement: Entanglement::default(),
        }
    }
}

impl AnsatzSpec {
    pub fn build(&self, h: &Hamiltonian) -> Result<Ansatz> {
        match *self {
            AnsatzSpec::TwoLocal {
                reps,
                rotation,
                entangler,
                entanglement,
            } => build_twolocal(h.n_qubits(), reps, rotation, entangler, entanglement),
            AnsatzSpec::Tvha {
                p,
                layers,
                initial_state,
            } => {
                let init = match initial_state {
                    Some(i) => i,
                    None => match h.metadata().and_then(|m| m.n_electrons) {
                        Some(ne) => hartree_fock_index(h.n_qubits(), ne)?,
                        None => 0,
                    },
                };
                build_tvha(h, p, layers, init)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_ising, bundled};
    use std::f64::consts::PI;

    fn h_from(coeffs: &[(&str, f64)]) -> Hamiltonian {
        let n = coeffs[0].0.len();
        let terms = coeffs
            .iter()
            .map(|(l, c)| PauliTerm::parse(l, *c).unwrap())
            .collect();
        Hamiltonian::new(n, 0.0, terms).unwrap()
    }

    #[test]
    fn twolocal_parameter_count() {
        let a = build_twolocal(5, 1, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap();
        assert_eq!(a.n_params(), 10);
        let a = build_twolocal(4, 3, Rotation::Ry, Entangler::Cz, Entanglement::Circular).unwrap();
        assert_eq!(a.n_params(), 16);
        assert!(build_twolocal(3, 0, Rotation::Ry, Entangler::Cx, Entanglement::Linear).is_err());
    }

    #[test]
    fn zero_angles_give_the_reference_state() {
        let a = build_twolocal(4, 2, Rotation::Ry, Entangler::Cx, Entanglement::Circular).unwrap();
        let s = a.prepare(&vec![0.0; a.n_params()]).unwrap();
        assert_eq!(s, Statevector::zero(4));

        let h = bundled("h2").unwrap();
        let a = AnsatzSpec::Tvha {
            p: 1.0,
            layers: 2,
            initial_state: None,
        }
        .build(&h)
        .unwrap();
        assert_eq!(a.initial_state(), 0b1100);
        let s = a.prepare(&vec![0.0; a.n_params()]).unwrap();
        assert!(s.fidelity(&Statevector::basis(4, 0b1100).unwrap()) > 1.0 - 1e-12);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let a = build_twolocal(3, 1, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap();
        assert!(matches!(
            a.prepare(&[0.0; 5]),
            Err(Error::DimensionMismatch { expected: 6, actual: 5 })
        ));
    }

    #[test]
    fn prefix_rule() {
        let h = h_from(&[("ZI", 0.2), ("XX", 0.5), ("IZ", -0.3)]);
        let kept = tvha_retained_terms(&h, 0.79).unwrap();
        assert_eq!(kept, vec![1, 2]);
        assert_eq!(tvha_retained_terms(&h, 1.0).unwrap().len(), 3);
        assert_eq!(tvha_retained_terms(&h, 1e-9).unwrap(), vec![1]);
        assert!(tvha_retained_terms(&h, 0.0).is_err());
        assert!(tvha_retained_terms(&h, 1.1).is_err());
    }

    #[test]
    fn ties_keep_file_order() {
        let h = h_from(&[("ZI", 0.5), ("IZ", -0.5), ("XX", 0.5)]);
        assert_eq!(tvha_retained_terms(&h, 1.0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn h2_tvha_has_five_groups_per_layer() {
        let h = bundled("h2").unwrap();
        let a = build_tvha(&h, 1.0, 2, 0b1100).unwrap();
        assert_eq!(a.n_params(), 10);
        for op in a.layers().iter().flatten() {
            let Operation::Evolve { terms, .. } = op else {
                panic!("tVHA holds only evolutions")
            };
            for x in terms {
                for y in terms {
                    assert!(x.paulis.qubit_wise_commutes(&y.paulis));
                }
            }
        }
    }

    #[test]
    fn diagonal_group_leaves_energy_fixed_on_basis_state() {
        let h = bundled("h2").unwrap();
        let z_only: Vec<PauliTerm> = h
            .terms()
            .iter()
            .filter(|t| t.paulis.is_diagonal())
            .copied()
            .collect();
        let hz = Hamiltonian::new(4, 0.0, z_only).unwrap();
        let a = build_tvha(&hz, 1.0, 1, 0b1100).unwrap();
        assert_eq!(a.n_params(), 1);
        let e0 = a.energy(&h, &[0.0]).unwrap();
        for k in 1..20 {
            let e = a.energy(&h, &[k as f64 * 0.37 - 3.0]).unwrap();
            assert!((e - e0).abs() < 1e-12);
        }
    }

    #[test]
    fn twolocal_is_two_pi_periodic() {
        let h = build_ising(4).unwrap();
        let a = build_twolocal(4, 2, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap();
        let theta: Vec<f64> = (0..a.n_params()).map(|i| 0.3 * i as f64 - 1.1).collect();
        let e = a.energy(&h, &theta).unwrap();
        for j in 0..a.n_params() {
            let mut t = theta.clone();
            t[j] += 2.0 * PI;
            assert!((a.energy(&h, &t).unwrap() - e).abs() < 1e-10);
        }
    }

    #[test]
    fn hartree_fock_bits() {
        assert_eq!(hartree_fock_index(4, 2).unwrap(), 0b1100);
        assert_eq!(hartree_fock_index(6, 0).unwrap(), 0);
        assert_eq!(hartree_fock_index(3, 3).unwrap(), 0b111);
        assert!(hartree_fock_index(3, 4).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec: AnsatzSpec = toml::from_str("family = \"tvha\"\np = 0.9\n").unwrap();
        assert_eq!(
            spec,
            AnsatzSpec::Tvha {
                p: 0.9,
                layers: 2,
                initial_state: None
            }
        );
        let spec: AnsatzSpec = toml::from_str("family = \"two_local\"\nentangler = \"cz\"\n").unwrap();
        assert!(matches!(spec, AnsatzSpec::TwoLocal { reps: 1, entangler: Entangler::Cz, .. }));
    }

    #[test]
    fn parameter_vector_rejects_nan() {
        assert!(ParameterVector::new(vec![0.0, f64::NAN]).is_err());
        let p = ParameterVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(p.len(), 2);
    }
}
