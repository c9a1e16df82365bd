//! Builds, for any nonsignalling box, local measurements and a unit-trace
//! Hermitian operator `O` that reproduce it through the trace rule.
//!
//! Every party uses the same family in dimension `d = max(r, m)`: for each
//! setting `x`, outcomes `a < r-1` get `M_a^x = z |α_a^x><α_a^x|` with `z = 1/r`
//! and the last outcome gets `1 - Σ_a M_a^x`. With `{1~, M~_a^x}` the dual set of
//! `{1, M_a^x}`,
//!
//! ```text
//! O = Σ_{S ⊆ parties} Σ_{x_S, a_S < r-1} P_S(a_S|x_S) ⊗_i T_i,
//!     T_i = M~_{a_i}^{x_i} for i in S, T_i = 1~ otherwise,
//! ```
//!
//! where `P_S` is the marginal on `S` and `P_∅ = 1`. The entries with some
//! `a_i = r-1` then follow from normalization of the marginals.

use serde::Serialize;

use crate::boxes::{decode, is_nonsignalling, CorrelationBox, Scenario};
use crate::error::{Error, Result};
use crate::hilbert::{
    c, kron_all, projector, solve_dual, vector_to_repr, ComplexMatrix, ComplexVector, HermitianOperator,
};
use crate::operators::{MeasurementModel, Povm};
use crate::sample;

/// Redraws allowed before giving up on linear independence.
pub const MAX_REDRAWS: usize = 100;

/// The shared local measurement family with its dual set.
#[derive(Debug, Clone)]
pub struct MeasurementFamily {
    pub scenario: Scenario,
    pub local_dim: usize,
    /// `vectors[x][a]` for `a < r - 1`.
    pub vectors: Vec<Vec<ComplexVector>>,
    /// `weights[x][a]` for `a < r - 1`.
    pub weights: Vec<Vec<f64>>,
    /// One POVM per setting, `r` elements each.
    pub povms: Vec<Povm>,
    /// `[1, M_0^0, M_1^0, ..., M_{r-2}^{m-1}]`
    pub basis: Vec<HermitianOperator>,
    /// Dual of `basis`, same order.
    pub duals: Vec<HermitianOperator>,
}

impl MeasurementFamily {
    /// Position of `M_a^x` (`a < r - 1`) in `basis` and `duals`.
    pub fn slot(&self, setting: usize, outcome: usize) -> usize {
        1 + setting * (self.scenario.n_outcomes - 1) + outcome
    }

    pub fn identity_dual(&self) -> &HermitianOperator {
        &self.duals[0]
    }

    pub fn measurement_model(&self) -> MeasurementModel {
        MeasurementModel::uniform(self.scenario.n_parties, self.local_dim, self.povms.clone())
            .expect("family POVMs are uniform")
    }

    /// Largest `|tr(M_i M~_j) - δ_ij|` over the family.
    pub fn duality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, m) in self.basis.iter().enumerate() {
            for (j, d) in self.duals.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = crate::hilbert::hs_inner(m, d).expect("same dimension");
                worst = worst.max((got - want).abs());
            }
        }
        worst
    }
}

fn draw_family(scenario: Scenario, rng: &mut rand_chacha::ChaCha8Rng) -> Result<MeasurementFamily> {
    let (m, r) = (scenario.n_settings, scenario.n_outcomes);
    let d = r.max(m);
    let z = 1.0 / r as f64;
    let identity = HermitianOperator::identity(vec![d]);
    let mut vectors = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let mut povms = Vec::with_capacity(m);
    let mut basis = vec![identity.clone()];
    for _ in 0..m {
        let xs: Vec<ComplexVector> = (0..r - 1).map(|_| sample::haar_vector(rng, d)).collect();
        let mut elements = Vec::with_capacity(r);
        let mut rest = ComplexMatrix::identity(d, d);
        for v in &xs {
            let p = projector(v) * c(z, 0.0);
            rest -= &p;
            elements.push(HermitianOperator::from_hermitian_part(vec![d], p)?);
        }
        basis.extend(elements.iter().cloned());
        elements.push(HermitianOperator::from_hermitian_part(vec![d], rest)?);
        povms.push(Povm::new(elements)?);
        vectors.push(xs);
        weights.push(vec![z; r - 1]);
    }
    let duals = solve_dual(&basis)?;
    Ok(MeasurementFamily {
        scenario,
        local_dim: d,
        vectors,
        weights,
        povms,
        basis,
        duals,
    })
}

/// Draws Haar-random vectors from `seed` until `{1, M_a^x}` is linearly
/// independent, at most [`MAX_REDRAWS`] times.
pub fn build_measurements(scenario: Scenario, seed: u64) -> Result<MeasurementFamily> {
    let mut rng = sample::rng(seed);
    for _ in 0..MAX_REDRAWS {
        match draw_family(scenario, &mut rng) {
            Ok(family) => return Ok(family),
            Err(Error::GramSingular { .. }) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(Error::IndependenceFailure { attempts: MAX_REDRAWS })
}

/// Assembles `O` from the box and its marginals.
pub fn build_operator(b: &CorrelationBox, family: &MeasurementFamily) -> Result<HermitianOperator> {
    let s = b.scenario();
    if s != family.scenario {
        return Err(Error::WrongShape(format!(
            "box scenario {s:?} does not match the measurement family {:?}",
            family.scenario
        )));
    }
    let check = is_nonsignalling(b);
    if !check.nonsignalling {
        return Err(Error::SignallingInput {
            violation: check.max_violation,
        });
    }
    let n = s.n_parties;
    let d = family.local_dim;
    let side = d.pow(n as u32);
    let mut o = ComplexMatrix::zeros(side, side);
    let identity_dual = family.identity_dual().matrix();
    let reduced = s.n_outcomes - 1;
    for mask in 0u32..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if subset.is_empty() {
            o += kron_all(std::iter::repeat_n(identity_dual, n));
            continue;
        }
        if reduced == 0 {
            continue;
        }
        let marginal = b.marginal(&subset)?;
        let k = subset.len();
        for x_idx in 0..s.n_settings.pow(k as u32) {
            let x = decode(x_idx, s.n_settings, k);
            for a_idx in 0..reduced.pow(k as u32) {
                let a = decode(a_idx, reduced, k);
                let p = marginal.get(&x, &a);
                if p == 0.0 {
                    continue;
                }
                let mut factors = vec![identity_dual; n];
                for (slot, &party) in subset.iter().enumerate() {
                    factors[party] = family.duals[family.slot(x[slot], a[slot])].matrix();
                }
                o += kron_all(factors) * c(p, 0.0);
            }
        }
    }
    HermitianOperator::from_hermitian_part(vec![d; n], o)
}

/// Operator plus measurement model reproducing a nonsignalling box.
#[derive(Debug, Clone)]
pub struct SynthesisModel {
    pub seed: u64,
    pub family: MeasurementFamily,
    pub measurements: MeasurementModel,
    pub operator: HermitianOperator,
}

impl SynthesisModel {
    pub fn scenario(&self) -> Scenario {
        self.family.scenario
    }

    pub fn local_dim(&self) -> usize {
        self.family.local_dim
    }

    /// Trace rule applied to the synthesized pair.
    pub fn evaluate(&self) -> Result<CorrelationBox> {
        Ok(crate::operators::evaluate_box(&self.operator, &self.measurements)?.correlations)
    }

    pub fn to_json_model(&self) -> SynthesisModelJson {
        SynthesisModelJson {
            n_parties: self.scenario().n_parties,
            n_settings: self.scenario().n_settings,
            n_outcomes: self.scenario().n_outcomes,
            seed: self.seed,
            local_dim: self.local_dim(),
            weights: self.family.weights.clone(),
            vectors: self
                .family
                .vectors
                .iter()
                .map(|vs| vs.iter().map(vector_to_repr).collect())
                .collect(),
            operator: self.operator.clone(),
            measurements: self.measurements.clone(),
        }
    }
}

/// Serialized form of a synthesis. `operator` and `measurements` use the
/// common operator and measurement encodings, so the file is also a valid
/// input for trace-rule evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesisModelJson {
    pub n_parties: usize,
    pub n_settings: usize,
    pub n_outcomes: usize,
    pub seed: u64,
    pub local_dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub vectors: Vec<Vec<Vec<[f64; 2]>>>,
    pub operator: HermitianOperator,
    pub measurements: MeasurementModel,
}

pub fn synthesize(b: &CorrelationBox, seed: u64) -> Result<SynthesisModel> {
    let check = is_nonsignalling(b);
    if !check.nonsignalling {
        return Err(Error::SignallingInput {
            violation: check.max_violation,
        });
    }
    let family = build_measurements(b.scenario(), seed)?;
    let operator = build_operator(b, &family)?;
    Ok(SynthesisModel {
        seed,
        measurements: family.measurement_model(),
        family,
        operator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::{deterministic_box, pr_box, random_ns_box};

    #[test]
    fn two_party_bits_family() {
        let f = build_measurements(Scenario::new(2, 2, 2).unwrap(), 0).unwrap();
        assert_eq!(f.local_dim, 2);
        assert_eq!(f.basis.len(), 3);
        assert_eq!(f.povms.len(), 2);
        assert!(f.povms.iter().all(|p| p.n_outcomes() == 2));
        assert!(f.duality_error() < 1e-10);
    }

    #[test]
    fn remainder_element_is_positive_definite() {
        let f = build_measurements(Scenario::new(2, 3, 4).unwrap(), 1).unwrap();
        assert_eq!(f.local_dim, 4);
        for p in &f.povms {
            let last = p.elements().last().unwrap();
            // Σ z_a |α_a><α_a| has norm at most (r-1)/r.
            assert!(last.min_eigenvalue() >= 1.0 / 4.0 - 1e-12);
        }
    }

    #[test]
    fn single_party_single_setting() {
        let s = Scenario::new(1, 1, 2).unwrap();
        let f = build_measurements(s, 2).unwrap();
        assert_eq!(f.local_dim, 2);
        let p = &f.povms[0];
        let v = &f.vectors[0][0];
        assert!((p.elements()[0].matrix() - projector(v) * c(0.5, 0.0)).camax() < 1e-15);
        let b = CorrelationBox::new(s, vec![0.3, 0.7]).unwrap();
        let model = synthesize(&b, 2).unwrap();
        assert!(model.evaluate().unwrap().max_abs_difference(&b) < 1e-12);
    }

    #[test]
    fn one_party_reconstruction() {
        let b = CorrelationBox::new(Scenario::new(1, 2, 3).unwrap(), vec![0.2, 0.5, 0.3, 0.6, 0.1, 0.3]).unwrap();
        let model = synthesize(&b, 7).unwrap();
        let f = &model.family;
        // O = Σ_{a<r-1,x} P(a|x) M~_a^x + 1~
        let mut terms = vec![(1.0, f.identity_dual())];
        for x in 0..2 {
            for a in 0..2 {
                terms.push((b.get(&[x], &[a]), &f.duals[f.slot(x, a)]));
            }
        }
        let direct = HermitianOperator::linear_combination(&terms).unwrap();
        assert!((direct.matrix() - model.operator.matrix()).camax() < 1e-12);
        assert!(model.evaluate().unwrap().max_abs_difference(&b) < 1e-10);
    }

    #[test]
    fn pr_box_round_trip() {
        let model = synthesize(&pr_box(), 3).unwrap();
        assert!(model.evaluate().unwrap().max_abs_difference(&pr_box()) < 1e-9);
        assert!((model.operator.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_round_trip() {
        let b = deterministic_box(3, &[vec![2, 0, 1], vec![1, 1, 0]]).unwrap();
        let model = synthesize(&b, 5).unwrap();
        assert!(model.evaluate().unwrap().max_abs_difference(&b) < 1e-10);
    }

    #[test]
    fn tripartite_round_trip() {
        let b = random_ns_box(Scenario::new(3, 2, 2).unwrap(), 9);
        let model = synthesize(&b, 9).unwrap();
        assert!(model.evaluate().unwrap().max_abs_difference(&b) < 1e-9);
    }

    #[test]
    fn signalling_box_is_rejected() {
        let b = deterministic_box(2, &[vec![0, 0], vec![0, 0]]).unwrap();
        let mut probs = b.probs().to_vec();
        // Setting (0,0): move 0.1 of weight from outcome 00 to outcome 10.
        probs[0] -= 0.1;
        probs[2] += 0.1;
        let bad = CorrelationBox::new(b.scenario(), probs).unwrap();
        assert!(matches!(synthesize(&bad, 0), Err(Error::SignallingInput { .. })));
    }

    #[test]
    fn build_operator_checks_scenario() {
        let f = build_measurements(Scenario::new(2, 2, 2).unwrap(), 0).unwrap();
        let b = random_ns_box(Scenario::new(3, 2, 2).unwrap(), 0);
        assert!(matches!(build_operator(&b, &f), Err(Error::WrongShape(_))));
    }
}
