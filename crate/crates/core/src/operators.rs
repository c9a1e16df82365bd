//! Measurements and the trace rule `P(a|x) = tr(O · M_{a_1}^{x_1} ⊗ ... ⊗ M_{a_N}^{x_N})`.

use serde::{Deserialize, Serialize};

use crate::boxes::{decode, CorrelationBox, Scenario, NS_TOL};
use crate::error::{Error, Result};
use crate::hilbert::{
    c, hermitian_deviation, kron_all, matrix_from_repr, matrix_to_repr, pauli_x, pauli_y, projector,
    ComplexMatrix, ComplexVector, HermitianOperator, MatrixRepr, HERMITIAN_TOL, ONE,
};
use crate::witness::{self, WitnessVerdict, VIOLATION_TOL};

/// Tolerance on POVM positivity and completeness.
pub const POVM_TOL: f64 = 1e-10;
/// Allowed deviation of `tr(O)` from 1 before evaluation.
pub const TRACE_TOL: f64 = 1e-9;
/// Positivity threshold on the minimum eigenvalue in [`classify`].
pub const POSITIVE_TOL: f64 = 1e-10;

/// Deviation of a family of local effects from being a POVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PovmCheck {
    pub min_eigenvalue: f64,
    pub completeness_error: f64,
}

impl PovmCheck {
    pub fn of(elements: &[ComplexMatrix]) -> PovmCheck {
        let dim = elements.first().map_or(0, |e| e.nrows());
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut min_eigenvalue = f64::INFINITY;
        for e in elements {
            sum += e;
            min_eigenvalue = min_eigenvalue.min(crate::hilbert::eigh(e).values[0]);
        }
        let completeness_error = (sum - ComplexMatrix::identity(dim, dim)).camax();
        PovmCheck {
            min_eigenvalue,
            completeness_error,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.min_eigenvalue >= -POVM_TOL && self.completeness_error <= POVM_TOL
    }
}

/// Local POVM: positive semidefinite elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?;
        if elements.iter().any(|e| e.n_parties() != 1 || e.dim() != first.dim()) {
            return Err(Error::InvalidPovm("elements must act on one common local space".into()));
        }
        let matrices: Vec<ComplexMatrix> = elements.iter().map(|e| e.matrix().clone()).collect();
        let check = PovmCheck::of(&matrices);
        if check.min_eigenvalue < -POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "element has eigenvalue {:e}",
                check.min_eigenvalue
            )));
        }
        if check.completeness_error > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {:e}",
                check.completeness_error
            )));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn n_outcomes(&self) -> usize {
        self.elements.len()
    }

    /// Two-outcome projective measurement of a `±1`-valued observable `A`:
    /// outcome 0 is the `+1` eigenspace `(1 + A)/2`, outcome 1 is `(1 - A)/2`.
    pub fn from_observable(observable: &ComplexMatrix) -> Result<Self> {
        let n = observable.nrows();
        let id = ComplexMatrix::identity(n, n);
        let plus = (&id + observable) * c(0.5, 0.0);
        let minus = (&id - observable) * c(0.5, 0.0);
        Self::new(vec![HermitianOperator::local(plus)?, HermitianOperator::local(minus)?])
    }
}

/// Rank-1 projective POVM `{|v_k><v_k|}` from an orthonormal basis.
pub fn projective_povm(basis: &[ComplexVector]) -> Result<Povm> {
    let gram_error = basis
        .iter()
        .enumerate()
        .flat_map(|(i, u)| {
            basis.iter().enumerate().map(move |(j, v)| {
                let want = if i == j { ONE } else { c(0.0, 0.0) };
                (u.dotc(v) - want).norm()
            })
        })
        .fold(0.0, f64::max);
    if !(gram_error <= POVM_TOL) {
        return Err(Error::NonOrthonormal { deviation: gram_error });
    }
    let elements = basis
        .iter()
        .map(|v| HermitianOperator::from_hermitian_part(vec![v.len()], projector(v)))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}

/// One projective POVM per setting.
pub fn projective_from_bases(bases: &[Vec<ComplexVector>]) -> Result<Vec<Povm>> {
    bases.iter().map(|b| projective_povm(b)).collect()
}

/// One party's measurements: `settings[x]` is the POVM for setting `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyMeasurements {
    pub dim: usize,
    pub settings: Vec<Povm>,
}

/// Per-party, per-setting POVMs over a uniform `(N, m, r)` scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementRepr", into = "MeasurementRepr")]
pub struct MeasurementModel {
    parties: Vec<PartyMeasurements>,
}

impl MeasurementModel {
    pub fn new(parties: Vec<PartyMeasurements>) -> Result<Self> {
        let first = parties
            .first()
            .ok_or_else(|| Error::InvalidPovm("measurement model has no parties".into()))?;
        let m = first.settings.len();
        let r = first.settings.first().map_or(0, Povm::n_outcomes);
        if m == 0 || r == 0 {
            return Err(Error::InvalidPovm("parties need at least one setting and outcome".into()));
        }
        for (i, party) in parties.iter().enumerate() {
            if party.settings.len() != m {
                return Err(Error::InvalidPovm(format!(
                    "party {i} has {} settings, expected {m}",
                    party.settings.len()
                )));
            }
            for (x, povm) in party.settings.iter().enumerate() {
                if povm.dim() != party.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "party {i} setting {x} acts on dimension {}, declared {}",
                        povm.dim(),
                        party.dim
                    )));
                }
                if povm.n_outcomes() != r {
                    return Err(Error::InvalidPovm(format!(
                        "party {i} setting {x} has {} outcomes, expected {r}",
                        povm.n_outcomes()
                    )));
                }
            }
        }
        Ok(Self { parties })
    }

    /// The same measurements for every party.
    pub fn uniform(n_parties: usize, dim: usize, settings: Vec<Povm>) -> Result<Self> {
        Self::new(vec![PartyMeasurements { dim, settings }; n_parties])
    }

    pub fn parties(&self) -> &[PartyMeasurements] {
        &self.parties
    }

    pub fn local_dims(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.dim).collect()
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(
            self.parties.len(),
            self.parties[0].settings.len(),
            self.parties[0].settings[0].n_outcomes(),
        )
        .expect("validated on construction")
    }

    pub fn element(&self, party: usize, setting: usize, outcome: usize) -> &HermitianOperator {
        &self.parties[party].settings[setting].elements()[outcome]
    }

    /// `⊗_i M_{a_i}^{x_i}`
    pub fn joint_element(&self, settings: &[usize], outcomes: &[usize]) -> ComplexMatrix {
        kron_all(
            (0..self.parties.len()).map(|i| self.element(i, settings[i], outcomes[i]).matrix()),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartyRepr {
    pub dim: usize,
    pub settings: Vec<Vec<MatrixRepr>>,
}

/// JSON shape: `{ "parties": [ { "dim": d, "settings": [[element, ...], ...] } ] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementRepr {
    pub parties: Vec<PartyRepr>,
}

impl From<MeasurementModel> for MeasurementRepr {
    fn from(mm: MeasurementModel) -> Self {
        Self {
            parties: mm
                .parties
                .iter()
                .map(|p| PartyRepr {
                    dim: p.dim,
                    settings: p
                        .settings
                        .iter()
                        .map(|povm| povm.elements().iter().map(|e| matrix_to_repr(e.matrix())).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MeasurementRepr> for MeasurementModel {
    type Error = Error;

    fn try_from(repr: MeasurementRepr) -> Result<Self> {
        let parties = repr
            .parties
            .into_iter()
            .map(|p| {
                let settings = p
                    .settings
                    .iter()
                    .map(|elements| {
                        let ops = elements
                            .iter()
                            .map(|m| HermitianOperator::local(matrix_from_repr(m)?))
                            .collect::<Result<Vec<_>>>()?;
                        Povm::new(ops)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PartyMeasurements { dim: p.dim, settings })
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementModel::new(parties)
    }
}

/// Output of [`evaluate_box`]. `valid_probabilities` is false when some entry
/// lies more than `NS_TOL` outside `[0, 1]`; those entries are kept as computed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxEvaluation {
    pub correlations: CorrelationBox,
    pub valid_probabilities: bool,
}

/// `tr(O · ⊗_i M_{a_i}^{x_i})` without forming Kronecker products of the
/// measurement elements.
fn trace_rule_entry(o: &ComplexMatrix, factors: &[&ComplexMatrix], strides: &[usize]) -> f64 {
    // tr(O K) = Σ_{I,J} O_{IJ} K_{JI}, K_{JI} = Π_i (M_i)_{j_i i_i}.
    let n = o.nrows();
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let mut acc = 0.0;
    for row in 0..n {
        for col in 0..n {
            let mut k = ONE;
            for (p, f) in factors.iter().enumerate() {
                let i = (row / strides[p]) % dims[p];
                let j = (col / strides[p]) % dims[p];
                k *= f[(j, i)];
                if k.re == 0.0 && k.im == 0.0 {
                    break;
                }
            }
            acc += (o[(row, col)] * k).re;
        }
    }
    acc
}

fn strides(local_dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; local_dims.len()];
    for i in (0..local_dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * local_dims[i + 1];
    }
    s
}

/// Evaluates the trace rule for every setting and outcome tuple.
pub fn evaluate_box(o: &HermitianOperator, mm: &MeasurementModel) -> Result<BoxEvaluation> {
    let dims = mm.local_dims();
    if o.local_dims() != dims.as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "operator has local dimensions {:?}, measurements {:?}",
            o.local_dims(),
            dims
        )));
    }
    let trace = o.trace();
    if !((trace - 1.0).abs() <= TRACE_TOL) {
        return Err(Error::NotUnitTrace { trace });
    }
    let scenario = mm.scenario();
    let n = scenario.n_parties;
    let strides = strides(&dims);
    let mut probs = Vec::with_capacity(scenario.len());
    let mut valid = true;
    for x_idx in 0..scenario.n_setting_tuples() {
        let x = decode(x_idx, scenario.n_settings, n);
        for a_idx in 0..scenario.n_outcome_tuples() {
            let a = decode(a_idx, scenario.n_outcomes, n);
            let factors: Vec<&ComplexMatrix> = (0..n).map(|i| mm.element(i, x[i], a[i]).matrix()).collect();
            let mut p = trace_rule_entry(o.matrix(), &factors, &strides);
            if (-NS_TOL..0.0).contains(&p) {
                p = 0.0;
            } else if p > 1.0 && p <= 1.0 + NS_TOL {
                p = 1.0;
            } else if !(0.0..=1.0).contains(&p) {
                valid = false;
            }
            probs.push(p);
        }
    }
    Ok(BoxEvaluation {
        correlations: CorrelationBox::quasi(scenario, probs)?,
        valid_probabilities: valid,
    })
}

/// Where an operator sits in the hierarchy unit-trace Hermitian ⊃ witness ⊃ positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorClass {
    pub hermitian_unit_trace: bool,
    pub positive: bool,
    pub min_eigenvalue: f64,
    pub product_min: f64,
    pub witness_flag: WitnessVerdict,
}

/// Classifies `o`; the product-state minimum uses `samples` restarts of the
/// alternating minimizer (for one party it is the minimum eigenvalue).
pub fn classify(o: &HermitianOperator, samples: usize, seed: u64) -> OperatorClass {
    let hermitian_unit_trace =
        hermitian_deviation(o.matrix()) <= HERMITIAN_TOL && (o.trace() - 1.0).abs() <= TRACE_TOL;
    let min_eigenvalue = o.min_eigenvalue();
    let (product_min, converged) = if o.n_parties() < 2 {
        (min_eigenvalue, true)
    } else {
        let r = witness::minimize_over_products(o, samples.max(1), seed)
            .expect("operator has at least two parties");
        (r.value, r.converged)
    };
    let witness_flag = if product_min < -VIOLATION_TOL {
        WitnessVerdict::Violated
    } else if converged {
        WitnessVerdict::CertifiedNonnegativeOnProducts
    } else {
        WitnessVerdict::Unknown
    };
    OperatorClass {
        hermitian_unit_trace,
        positive: min_eigenvalue >= -POSITIVE_TOL,
        min_eigenvalue,
        product_min,
        witness_flag,
    }
}

/// Operator plus measurements; the JSON shape read by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRuleModel {
    pub operator: HermitianOperator,
    pub measurements: MeasurementModel,
}

impl TraceRuleModel {
    pub fn evaluate(&self) -> Result<BoxEvaluation> {
        evaluate_box(&self.operator, &self.measurements)
    }
}

/// `O = α⁺Φ⁺ + α⁻Φ⁻` with `α± = (1 ± √2)/2`, a unit-trace operator reproducing the PR box.
pub fn pr_operator() -> HermitianOperator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = |sign: f64| ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(sign * s, 0.0)]);
    let alpha_plus = (1.0 + 2f64.sqrt()) / 2.0;
    let alpha_minus = (1.0 - 2f64.sqrt()) / 2.0;
    let m = projector(&phi(1.0)) * c(alpha_plus, 0.0) + projector(&phi(-1.0)) * c(alpha_minus, 0.0);
    HermitianOperator::from_hermitian_part(vec![2, 2], m).expect("4x4 on two qubits")
}

/// Alice measures `σx, σy`; Bob measures `(σx ∓ σy)/√2`. Outcome 0 is the `+1` eigenspace.
pub fn pr_measurements() -> MeasurementModel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = pauli_x();
    let y = pauli_y();
    let alice = vec![Povm::from_observable(&x), Povm::from_observable(&y)];
    let bob = vec![
        Povm::from_observable(&((&x - &y) * c(s, 0.0))),
        Povm::from_observable(&((&x + &y) * c(s, 0.0))),
    ];
    let collect = |v: Vec<Result<Povm>>| v.into_iter().collect::<Result<Vec<_>>>().expect("±1 observables");
    MeasurementModel::new(vec![
        PartyMeasurements {
            dim: 2,
            settings: collect(alice),
        },
        PartyMeasurements {
            dim: 2,
            settings: collect(bob),
        },
    ])
    .expect("two qubits, two settings, two outcomes")
}

/// Computational-basis measurement on every party, `m` copies of it.
pub fn computational_measurements(local_dims: &[usize], n_settings: usize) -> Result<MeasurementModel> {
    let parties = local_dims
        .iter()
        .map(|&d| {
            let basis: Vec<ComplexVector> = (0..d).map(|k| crate::hilbert::basis_vector(d, k)).collect();
            let povm = projective_povm(&basis)?;
            Ok(PartyMeasurements {
                dim: d,
                settings: vec![povm; n_settings],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementModel::new(parties)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::{is_nonsignalling, pr_box};
    use crate::hilbert::basis_vector;
    use crate::sample;

    fn phi_plus() -> HermitianOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        HermitianOperator::from_projector(vec![2, 2], &v).unwrap()
    }

    #[test]
    fn maximally_entangled_computational_statistics() {
        let mm = computational_measurements(&[2, 2], 1).unwrap();
        let b = evaluate_box(&phi_plus(), &mm).unwrap();
        assert!(b.valid_probabilities);
        let expected = [0.5, 0.0, 0.0, 0.5];
        for (got, want) in b.correlations.probs().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn pr_operator_reproduces_pr_box() {
        let b = evaluate_box(&pr_operator(), &pr_measurements()).unwrap();
        assert!(b.correlations.max_abs_difference(&pr_box()) < 1e-12);
        assert!((pr_operator().trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_gives_uniform_box() {
        let o = HermitianOperator::identity(vec![2, 2]).scaled(0.25);
        let mm = sample::measurement_model(&mut sample::rng(5), &[2, 2], 2, 3);
        let b = evaluate_box(&o, &mm).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..3 {
                    for c in 0..3 {
                        let want = mm.element(0, x, a).trace() * mm.element(1, y, c).trace() / 4.0;
                        assert!((b.correlations.get(&[x, y], &[a, c]) - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn evaluate_checks_preconditions() {
        let mm = computational_measurements(&[2, 2], 1).unwrap();
        let big = HermitianOperator::identity(vec![2, 2]);
        assert!(matches!(evaluate_box(&big, &mm), Err(Error::NotUnitTrace { .. })));
        let wrong = HermitianOperator::identity(vec![4]).scaled(0.25);
        assert!(matches!(evaluate_box(&wrong, &mm), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn indefinite_operator_may_leave_the_simplex() {
        // The PR operator is not positive; measuring in the computational basis
        // gives tr(O |00><00|) = (α⁺ + α⁻)/2 = 1/2 but tr(O |Φ⁻><Φ⁻|) = α⁻ < 0.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell: Vec<ComplexVector> = [(1.0, 0.0, 0.0, 1.0), (1.0, 0.0, 0.0, -1.0), (0.0, 1.0, 1.0, 0.0), (0.0, 1.0, -1.0, 0.0)]
            .iter()
            .map(|&(a, b, cc, d)| ComplexVector::from_vec(vec![c(a * s, 0.0), c(b * s, 0.0), c(cc * s, 0.0), c(d * s, 0.0)]))
            .collect();
        let povm = projective_povm(&bell).unwrap();
        let mm = MeasurementModel::new(vec![PartyMeasurements { dim: 4, settings: vec![povm] }]).unwrap();
        let o = HermitianOperator::new(vec![4], pr_operator().into_matrix()).unwrap();
        let b = evaluate_box(&o, &mm).unwrap();
        assert!(!b.valid_probabilities);
        assert!((b.correlations.probs()[1] - (1.0 - 2f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn projective_examples() {
        let comp = projective_povm(&[basis_vector(2, 0), basis_vector(2, 1)]).unwrap();
        assert_eq!(comp.elements()[0].matrix()[(0, 0)], ONE);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let minus = ComplexVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)]);
        let x_basis = projective_povm(&[plus, minus]).unwrap();
        let from_obs = Povm::from_observable(&pauli_x()).unwrap();
        for k in 0..2 {
            assert!((x_basis.elements()[k].matrix() - from_obs.elements()[k].matrix()).camax() < 1e-15);
        }
        let skew = ComplexVector::from_vec(vec![c(s, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            projective_povm(&[basis_vector(2, 0), skew]),
            Err(Error::NonOrthonormal { .. })
        ));
    }

    #[test]
    fn povm_rejects_bad_elements() {
        let half = HermitianOperator::identity(vec![2]).scaled(0.5);
        assert!(Povm::new(vec![half.clone()]).is_err());
        assert!(Povm::new(vec![half.clone(), half.clone()]).is_ok());
        let neg = HermitianOperator::local(crate::hilbert::pauli_z()).unwrap();
        let id = HermitianOperator::identity(vec![2]);
        let rest = HermitianOperator::linear_combination(&[(1.0, &id), (-1.0, &neg)]).unwrap();
        assert!(Povm::new(vec![neg, rest]).is_err());
    }

    #[test]
    fn classify_examples() {
        let mixed = HermitianOperator::identity(vec![2, 2]).scaled(0.25);
        let k = classify(&mixed, 4, 1);
        assert!(k.hermitian_unit_trace && k.positive);
        assert!((k.product_min - 0.25).abs() < 1e-12);
        assert_eq!(k.witness_flag, WitnessVerdict::CertifiedNonnegativeOnProducts);

        let pr = classify(&pr_operator(), 16, 1);
        assert!(pr.hermitian_unit_trace && !pr.positive);
        assert_eq!(pr.witness_flag, WitnessVerdict::Violated);

        let rho = sample::density_matrix(&mut sample::rng(4), &[2, 3]);
        let k = classify(&rho, 8, 2);
        assert!(k.positive && k.witness_flag != WitnessVerdict::Violated);
        assert!(k.product_min >= k.min_eigenvalue - 1e-12);
    }

    #[test]
    fn measurement_json_round_trip() {
        let mm = pr_measurements();
        let text = serde_json::to_string(&mm).unwrap();
        let back: MeasurementModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, mm);
        let bad = r#"{"parties":[{"dim":2,"settings":[[[[[1,0],[0,0]],[[0,0],[0,0]]]]]}]}"#;
        assert!(serde_json::from_str::<MeasurementModel>(bad).is_err());
    }

    #[test]
    fn random_unit_trace_operators_give_nonsignalling_boxes() {
        for seed in 0..10 {
            let mut rng = sample::rng_stream(seed, 0);
            let o = sample::unit_trace_hermitian(&mut rng, &[2, 3]);
            let mm = sample::measurement_model(&mut rng, &[2, 3], 3, 2);
            let b = evaluate_box(&o, &mm).unwrap();
            assert!(b.correlations.normalization_error() < 1e-9);
            assert!(is_nonsignalling(&b.correlations).max_violation < 1e-9);
        }
    }
}
