//! Finite-shot energy estimates.
//!
//! Three noise modes:
//!
//! - `exact`: the statevector expectation, nothing injected.
//! - `gaussian`: exact value plus `N(0, Var[H] / N)`.
//! - `sampled`: measurement in qubit-wise commuting groups. Each group rotates
//!   a copy of the state into the Z basis, draws its share of the shots from
//!   the outcome distribution and scores every outcome by the signed sum of
//!   its terms.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, GradientRule};
use crate::error::{Error, Result};
use crate::optimizers::{Evaluation, Objective};
use crate::pauli::{qubit_wise_groups, Gate, Hamiltonian, Pauli, Statevector};
use crate::rng::RngStream;

/// Default shots per evaluation for noisy runs.
pub const DEFAULT_SHOTS: u64 = 6144;
/// Central-difference step for parameters without a shift rule.
pub const FD_STEP: f64 = 1e-3;

/// How the shots of one sampled evaluation are distributed over the
/// measurement groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotAllocation {
    /// `n_shots` is the total, split evenly (remainder to the earliest
    /// groups). Single-shot variance `n_groups * sum_g Var_g`.
    #[default]
    Split,
    /// Every group is measured `n_shots` times. Single-shot variance
    /// `sum_g Var_g`.
    PerGroup,
}

impl ShotAllocation {
    /// Description of the variance bookkeeping, written into trace headers.
    pub fn convention(self) -> &'static str {
        match self {
            ShotAllocation::Split => {
                "per-group variance of the rotated-basis score, covariances included; \
                 shots split evenly across groups; single-shot variance = n_groups * sum_g Var_g"
            }
            ShotAllocation::PerGroup => {
                "per-group variance of the rotated-basis score, covariances included; \
                 n_shots per group; single-shot variance = sum_g Var_g"
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Exact,
    #[default]
    Gaussian,
    Sampled,
}

impl NoiseMode {
    pub fn is_noisy(self) -> bool {
        self != NoiseMode::Exact
    }
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub mode: NoiseMode,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Only used in sampled mode.
    #[serde(default)]
    pub allocation: ShotAllocation,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            mode: NoiseMode::default(),
            shots: DEFAULT_SHOTS,
            allocation: ShotAllocation::default(),
        }
    }
}

impl NoiseModel {
    pub fn exact() -> Self {
        Self {
            mode: NoiseMode::Exact,
            shots: 0,
            allocation: ShotAllocation::Split,
        }
    }

    pub fn gaussian(shots: u64) -> Self {
        Self {
            mode: NoiseMode::Gaussian,
            shots,
            allocation: ShotAllocation::Split,
        }
    }

    pub fn sampled(shots: u64) -> Self {
        Self {
            mode: NoiseMode::Sampled,
            shots,
            allocation: ShotAllocation::Split,
        }
    }

    pub fn with_allocation(self, allocation: ShotAllocation) -> Self {
        Self { allocation, ..self }
    }

    /// Shot count that sets the noise floor; `None` when nothing is injected.
    pub fn effective_shots(&self) -> Option<u64> {
        self.mode.is_noisy().then_some(self.shots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub true_expectation: f64,
    pub variance_single_shot: f64,
    pub n_shots: u64,
    pub mode: NoiseMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    /// Indices into the Hamiltonian's term list.
    pub terms: Vec<usize>,
    /// Single-qubit gates mapping every member onto a Z string.
    pub basis_change: Vec<Gate>,
    /// Score of each computational outcome after the basis change.
    scores: Vec<f64>,
}

impl MeasurementGroup {
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGrouping {
    n_qubits: usize,
    groups: Vec<MeasurementGroup>,
}

impl MeasurementGrouping {
    pub fn groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Shots assigned to each group: floor split, remainder to the earliest.
    pub fn shot_split(&self, n_shots: u64) -> Vec<u64> {
        let g = self.groups.len() as u64;
        if g == 0 {
            return Vec::new();
        }
        (0..g)
            .map(|i| n_shots / g + u64::from(i < n_shots % g))
            .collect()
    }
}

/// Greedy first-fit qubit-wise commuting partition, terms visited in file
/// order.
pub fn build_grouping(h: &Hamiltonian) -> Result<MeasurementGrouping> {
    let n = h.n_qubits();
    if n > crate::pauli::DENSE_LIMIT + 2 {
        return Err(Error::Capability {
            what: "sampled estimation",
            limit: crate::pauli::DENSE_LIMIT + 2,
            requested: n,
        });
    }
    let dim = 1usize << n;
    let parts = qubit_wise_groups(h.terms().iter().map(|t| &t.paulis));
    let groups = parts
        .into_iter()
        .map(|terms| {
            let mut basis_change = Vec::new();
            for q in 0..n {
                let letter = terms
                    .iter()
                    .map(|&k| h.terms()[k].paulis.get(q))
                    .find(|&p| p != Pauli::I)
                    .unwrap_or(Pauli::I);
                match letter {
                    Pauli::X => basis_change.push(Gate::H(q)),
                    Pauli::Y => basis_change.extend([Gate::Sdg(q), Gate::H(q)]),
                    Pauli::I | Pauli::Z => {}
                }
            }
            let mut scores = vec![0.0; dim];
            for &k in &terms {
                let t = &h.terms()[k];
                let support = t.paulis.support_mask();
                for (b, s) in scores.iter_mut().enumerate() {
                    if (b as u64 & support).count_ones().is_multiple_of(2) {
                        *s += t.coefficient;
                    } else {
                        *s -= t.coefficient;
                    }
                }
            }
            MeasurementGroup {
                terms,
                basis_change,
                scores,
            }
        })
        .collect();
    Ok(MeasurementGrouping { n_qubits: n, groups })
}

/// Noise floor `sqrt(mean(variances) / n_shots)`.
pub fn noise_floor(variances: &[f64], n_shots: u64) -> Result<f64> {
    if variances.is_empty() {
        return Err(Error::Diagnostic("noise floor of an empty variance log".into()));
    }
    if n_shots == 0 {
        return Err(Error::Config("noise floor needs n_shots >= 1".into()));
    }
    let mean = variances.iter().sum::<f64>() / variances.len() as f64;
    Ok((mean / n_shots as f64).sqrt())
}

/// Draws a multinomial sample of `n` outcomes and returns the mean score.
fn sample_mean<R: Rng + ?Sized>(probs: &[f64], scores: &[f64], n: u64, rng: &mut R) -> f64 {
    let mut remaining_n = n;
    let mut remaining_p = 1.0;
    let mut total = 0.0;
    for (&p, &s) in probs.iter().zip(scores) {
        if remaining_n == 0 {
            break;
        }
        let q = if remaining_p > 0.0 {
            (p / remaining_p).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let k = if q >= 1.0 {
            remaining_n
        } else {
            Binomial::new(remaining_n, q)
                .map(|d| d.sample(rng))
                .unwrap_or(0)
        };
        total += k as f64 * s;
        remaining_n -= k;
        remaining_p -= p;
    }
    // rounding can leave a few shots unassigned; give them to the last outcome
    if remaining_n > 0 {
        if let Some(&s) = scores.last() {
            total += remaining_n as f64 * s;
        }
    }
    total / n as f64
}

/// Energy estimator for one (ansatz, Hamiltonian, noise model) triple.
/// Cheap to clone; the heavy parts are shared.
#[derive(Debug, Clone)]
pub struct Estimator {
    ansatz: Arc<Ansatz>,
    hamiltonian: Arc<Hamiltonian>,
    grouping: Option<Arc<MeasurementGrouping>>,
    noise: NoiseModel,
}

impl Estimator {
    pub fn new(ansatz: Arc<Ansatz>, hamiltonian: Arc<Hamiltonian>, noise: NoiseModel) -> Result<Self> {
        if ansatz.n_qubits() != hamiltonian.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: hamiltonian.n_qubits(),
                actual: ansatz.n_qubits(),
            });
        }
        if noise.mode.is_noisy() && noise.shots == 0 {
            return Err(Error::Config("noisy estimation needs n_shots >= 1".into()));
        }
        let grouping = match noise.mode {
            NoiseMode::Sampled => {
                let g = build_grouping(&hamiltonian)?;
                if noise.allocation == ShotAllocation::Split && (g.len() as u64) > noise.shots {
                    return Err(Error::Config(format!(
                        "{} shots cannot cover {} measurement groups",
                        noise.shots,
                        g.len()
                    )));
                }
                Some(Arc::new(g))
            }
            _ => None,
        };
        Ok(Self {
            ansatz,
            hamiltonian,
            grouping,
            noise,
        })
    }

    /// Same ansatz and Hamiltonian under a different noise model.
    pub fn with_noise(&self, noise: NoiseModel) -> Result<Self> {
        match (&self.grouping, noise.mode) {
            (Some(g), NoiseMode::Sampled)
                if noise.allocation == ShotAllocation::PerGroup || noise.shots >= g.len() as u64 =>
            {
                Ok(Self {
                    noise,
                    ..self.clone()
                })
            }
            _ => Self::new(self.ansatz.clone(), self.hamiltonian.clone(), noise),
        }
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn grouping(&self) -> Option<&MeasurementGrouping> {
        self.grouping.as_deref()
    }

    pub fn exact_energy(&self, theta: &[f64]) -> Result<f64> {
        self.ansatz.energy(&self.hamiltonian, theta)
    }

    pub fn estimate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<EnergyEstimate> {
        let state = self.ansatz.prepare(theta)?;
        self.estimate_state(&state, rng)
    }

    /// Estimate for an already prepared state.
    pub fn estimate_state<R: Rng + ?Sized>(
        &self,
        state: &Statevector,
        rng: &mut R,
    ) -> Result<EnergyEstimate> {
        let h = &*self.hamiltonian;
        let NoiseModel {
            mode,
            shots,
            allocation,
        } = self.noise;
        match mode {
            NoiseMode::Exact | NoiseMode::Gaussian => {
                let (mean, var) = h.moments(state)?;
                let value = if mode == NoiseMode::Gaussian {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + z * (var / shots as f64).sqrt()
                } else {
                    mean
                };
                Ok(EnergyEstimate {
                    value,
                    true_expectation: mean,
                    variance_single_shot: var,
                    n_shots: shots,
                    mode,
                })
            }
            NoiseMode::Sampled => {
                let grouping = self
                    .grouping
                    .as_ref()
                    .ok_or_else(|| Error::Diagnostic("sampled estimator without grouping".into()))?;
                debug_assert_eq!(grouping.n_qubits, h.n_qubits());
                let (split, factor) = match allocation {
                    ShotAllocation::Split => (grouping.shot_split(shots), grouping.len() as f64),
                    ShotAllocation::PerGroup => (vec![shots; grouping.len()], 1.0),
                };
                let mut value = h.identity_offset();
                let mut exact = h.identity_offset();
                let mut variance = 0.0;
                for (group, n) in grouping.groups.iter().zip(split) {
                    let mut rotated = state.clone();
                    for &g in &group.basis_change {
                        rotated.apply_gate(g)?;
                    }
                    let probs = rotated.probabilities();
                    let (mut m1, mut m2) = (0.0, 0.0);
                    for (p, s) in probs.iter().zip(&group.scores) {
                        m1 += p * s;
                        m2 += p * s * s;
                    }
                    exact += m1;
                    variance += factor * (m2 - m1 * m1).max(0.0);
                    value += sample_mean(&probs, &group.scores, n, rng);
                }
                Ok(EnergyEstimate {
                    value,
                    true_expectation: exact,
                    variance_single_shot: variance,
                    n_shots: shots,
                    mode,
                })
            }
        }
    }

    /// Gradient using the ansatz's rule, 2 * d evaluations drawn from
    /// `stream` at indices `first_index..`.
    pub fn gradient(&self, theta: &[f64], stream: RngStream, first_index: u64) -> Result<Vec<f64>> {
        let mut k = first_index;
        gradient(self.ansatz.gradient_rule(), theta, |x| {
            let mut rng = stream.at(k);
            k += 1;
            Ok(self.estimate(x, &mut rng)?.value)
        })
    }
}

impl Objective for Estimator {
    fn dimension(&self) -> usize {
        self.ansatz.n_params()
    }

    fn evaluate(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Evaluation> {
        let e = self.estimate(x, rng)?;
        Ok(Evaluation {
            value: e.value,
            variance: e.variance_single_shot,
            exact: Some(e.true_expectation),
        })
    }

    fn gradient_rule(&self) -> GradientRule {
        self.ansatz.gradient_rule()
    }
}

/// Two-point gradient. With [`GradientRule::ParameterShift`] component `j` is
/// `(f(x + pi/2 e_j) - f(x - pi/2 e_j)) / 2`; otherwise a central difference
/// with step [`FD_STEP`]. Always `2 * d` calls to `eval`, plus first.
pub fn gradient<F>(rule: GradientRule, x: &[f64], mut eval: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (shift, denom) = match rule {
        GradientRule::ParameterShift => (std::f64::consts::FRAC_PI_2, 2.0),
        GradientRule::FiniteDifference => (FD_STEP, 2.0 * FD_STEP),
    };
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + shift;
        let plus = eval(&probe)?;
        probe[j] = x[j] - shift;
        let minus = eval(&probe)?;
        probe[j] = x[j];
        g.push((plus - minus) / denom);
    }
    Ok(g)
}

/// Parameter-shift gradient of `<H>` for `ansatz` (central differences for
/// parameters without a shift rule).
pub fn parameter_shift_gradient(
    ansatz: Arc<Ansatz>,
    h: Arc<Hamiltonian>,
    theta: &[f64],
    noise: NoiseModel,
    stream: RngStream,
) -> Result<Vec<f64>> {
    Estimator::new(ansatz, h, noise)?.gradient(theta, stream, 0)
}

/// One-off estimate; builds the grouping on every call, so prefer
/// [`Estimator`] in loops.
pub fn estimate<R: Rng + ?Sized>(
    ansatz: &Ansatz,
    h: &Hamiltonian,
    theta: &[f64],
    noise: NoiseModel,
    rng: &mut R,
) -> Result<EnergyEstimate> {
    Estimator::new(Arc::new(ansatz.clone()), Arc::new(h.clone()), noise)?.estimate(theta, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_twolocal, build_tvha, Entangler, Entanglement, Rotation};
    use crate::models::{build_ising, bundled};
    use crate::pauli::PauliTerm;

    fn single(label: &str) -> Hamiltonian {
        Hamiltonian::new(label.len(), 0.0, vec![PauliTerm::parse(label, 1.0).unwrap()]).unwrap()
    }

    fn ry_plus() -> Arc<Ansatz> {
        // RY(pi/2)|0> = |+>
        Arc::new(build_twolocal(1, 1, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap())
    }

    #[test]
    fn grouping_counts() {
        assert_eq!(build_grouping(&build_ising(6).unwrap()).unwrap().len(), 1);
        let h = Hamiltonian::new(
            1,
            0.0,
            vec![PauliTerm::parse("X", 1.0).unwrap(), PauliTerm::parse("Z", 1.0).unwrap()],
        )
        .unwrap();
        assert_eq!(build_grouping(&h).unwrap().len(), 2);
        let h2 = build_grouping(&bundled("h2").unwrap()).unwrap();
        assert_eq!(h2.len(), 5);
        let mut seen: Vec<usize> = h2.groups().iter().flat_map(|g| g.terms.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..14).collect::<Vec<_>>());
    }

    #[test]
    fn shot_split_gives_remainder_to_first_groups() {
        let h2 = build_grouping(&bundled("h2").unwrap()).unwrap();
        assert_eq!(h2.shot_split(64), vec![13, 13, 13, 13, 12]);
        assert_eq!(h2.shot_split(64).iter().sum::<u64>(), 64);
    }

    #[test]
    fn exact_mode_on_ising_ground_state() {
        let h = Arc::new(build_ising(5).unwrap());
        let a = Arc::new(
            build_twolocal(5, 1, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap(),
        );
        let est = Estimator::new(a, h, NoiseModel::exact()).unwrap();
        let e = est.estimate(&[0.0; 10], &mut RngStream::new(1, 0).at(0)).unwrap();
        assert_eq!(e.value, -4.0);
        assert_eq!(e.true_expectation, -4.0);
        assert!(e.variance_single_shot.abs() < 1e-12);
    }

    #[test]
    fn gaussian_mode_on_eigenstate_injects_nothing() {
        let h = Arc::new(build_ising(3).unwrap());
        let a = Arc::new(
            build_twolocal(3, 1, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap(),
        );
        let est = Estimator::new(a, h, NoiseModel::gaussian(8)).unwrap();
        for k in 0..20 {
            let e = est.estimate(&[0.0; 6], &mut RngStream::new(3, 0).at(k)).unwrap();
            assert_eq!(e.value, -2.0);
        }
    }

    #[test]
    fn sampled_mode_z_on_plus_state() {
        let est = Estimator::new(ry_plus(), Arc::new(single("Z")), NoiseModel::sampled(10_000))
            .unwrap();
        let theta = [std::f64::consts::FRAC_PI_2, 0.0];
        let stream = RngStream::new(11, 0);
        let inside = (0..200)
            .filter(|&k| est.estimate(&theta, &mut stream.at(k)).unwrap().value.abs() <= 0.05)
            .count();
        assert!(inside >= 198, "{inside}");
        let e = est.estimate(&theta, &mut stream.at(0)).unwrap();
        assert!((e.variance_single_shot - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_mode_measures_y_correctly() {
        // RX(-pi/2)|0> is the +1 eigenstate of Y.
        let mut state = Statevector::zero(1);
        state.apply_gate(Gate::Rx(0, -std::f64::consts::FRAC_PI_2)).unwrap();
        let est = Estimator::new(ry_plus(), Arc::new(single("Y")), NoiseModel::sampled(100)).unwrap();
        let e = est.estimate_state(&state, &mut RngStream::new(0, 0).at(0)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert!(e.variance_single_shot < 1e-12);
    }

    #[test]
    fn sampled_variance_matches_intrinsic_variance_for_one_group() {
        let h = Arc::new(build_ising(4).unwrap());
        let a = Arc::new(
            build_twolocal(4, 1, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap(),
        );
        let theta: Vec<f64> = (0..8).map(|i| 0.2 * i as f64).collect();
        let est = Estimator::new(a.clone(), h.clone(), NoiseModel::sampled(100)).unwrap();
        let e = est.estimate(&theta, &mut RngStream::new(0, 0).at(0)).unwrap();
        let var = h.variance(&a.prepare(&theta).unwrap()).unwrap();
        assert!((e.variance_single_shot - var).abs() < 1e-10);
        assert!((e.true_expectation - a.energy(&h, &theta).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn too_few_shots_for_groups_is_a_config_error() {
        let h = Arc::new(bundled("h2").unwrap());
        let a = Arc::new(build_tvha(&h, 1.0, 1, 12).unwrap());
        let err = Estimator::new(a.clone(), h.clone(), NoiseModel::sampled(4)).unwrap_err();
        assert!(err.is_config_error());
        assert!(Estimator::new(a, h, NoiseModel::gaussian(0)).is_err());
    }

    #[test]
    fn same_stream_same_estimates() {
        let h = Arc::new(bundled("h2").unwrap());
        let a = Arc::new(build_tvha(&h, 1.0, 2, 12).unwrap());
        let est = Estimator::new(a, h, NoiseModel::sampled(64)).unwrap();
        let theta = vec![0.1; 10];
        let s = RngStream::new(5, 2);
        let first: Vec<f64> = (0..10).map(|k| est.estimate(&theta, &mut s.at(k)).unwrap().value).collect();
        let again: Vec<f64> = (0..10).map(|k| est.estimate(&theta, &mut s.at(k)).unwrap().value).collect();
        assert_eq!(first, again);
    }

    #[test]
    fn noise_floor_arithmetic() {
        assert!((noise_floor(&[0.0231], 64).unwrap() - 0.019).abs() < 5e-4);
        assert_eq!(noise_floor(&[0.0], 10).unwrap(), 0.0);
        assert!((noise_floor(&[1.0, 3.0], 4).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(noise_floor(&[], 4).is_err());
    }

    #[test]
    fn shift_rule_matches_finite_difference() {
        let h = Arc::new(build_ising(3).unwrap());
        let a = Arc::new(
            build_twolocal(3, 2, Rotation::Ry, Entangler::Cx, Entanglement::Linear).unwrap(),
        );
        let theta: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin()).collect();
        let g = parameter_shift_gradient(a.clone(), h.clone(), &theta, NoiseModel::exact(), RngStream::new(0, 0))
            .unwrap();
        let fd = gradient(GradientRule::FiniteDifference, &theta, |x| a.energy(&h, x)).unwrap();
        for (x, y) in g.iter().zip(&fd) {
            assert!((x - y).abs() < 1e-5);
        }
    }
}
