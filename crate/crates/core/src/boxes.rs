//! Correlation boxes `P(a_1..a_N | x_1..x_N)` over uniform scenarios.
//!
//! Storage is a flat vector, settings-major then outcomes-major, each tuple in
//! lexicographic order with party 0 most significant and 0-based labels.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample;

/// Tolerance for no-signalling and normalization checks.
pub const NS_TOL: f64 = 1e-9;
/// Entries this far outside `[0, 1]` are clamped on construction.
pub const ENTRY_TOL: f64 = 1e-10;
/// Floor kept by the random nonsignalling generator.
const RANDOM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub n_parties: usize,
    pub n_settings: usize,
    pub n_outcomes: usize,
}

impl Scenario {
    pub fn new(n_parties: usize, n_settings: usize, n_outcomes: usize) -> Result<Self> {
        if n_parties == 0 || n_settings == 0 || n_outcomes == 0 {
            return Err(Error::InvalidScenario(format!(
                "counts must be >= 1, got (N={n_parties}, m={n_settings}, r={n_outcomes})"
            )));
        }
        let s = Self {
            n_parties,
            n_settings,
            n_outcomes,
        };
        s.n_setting_tuples()
            .checked_mul(s.n_outcome_tuples())
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| Error::InvalidScenario(format!("scenario {s:?} is too large")))?;
        Ok(s)
    }

    /// `m^N`
    pub fn n_setting_tuples(&self) -> usize {
        self.n_settings.pow(self.n_parties as u32)
    }

    /// `r^N`
    pub fn n_outcome_tuples(&self) -> usize {
        self.n_outcomes.pow(self.n_parties as u32)
    }

    pub fn len(&self) -> usize {
        self.n_setting_tuples() * self.n_outcome_tuples()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, settings: &[usize], outcomes: &[usize]) -> usize {
        encode(settings, self.n_settings) * self.n_outcome_tuples() + encode(outcomes, self.n_outcomes)
    }
}

/// Lexicographic rank of `digits` in base `base`, first digit most significant.
pub(crate) fn encode(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * base + d)
}

pub(crate) fn decode(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for slot in digits.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    digits
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct CorrelationBox {
    scenario: Scenario,
    probs: Vec<f64>,
}

/// JSON shape of a box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxRepr {
    pub n_parties: usize,
    pub n_settings: usize,
    pub n_outcomes: usize,
    pub probs: Vec<f64>,
}

impl From<CorrelationBox> for BoxRepr {
    fn from(b: CorrelationBox) -> Self {
        Self {
            n_parties: b.scenario.n_parties,
            n_settings: b.scenario.n_settings,
            n_outcomes: b.scenario.n_outcomes,
            probs: b.probs,
        }
    }
}

impl TryFrom<BoxRepr> for CorrelationBox {
    type Error = Error;

    fn try_from(r: BoxRepr) -> Result<Self> {
        CorrelationBox::new(Scenario::new(r.n_parties, r.n_settings, r.n_outcomes)?, r.probs)
    }
}

impl CorrelationBox {
    /// A probability box: entries in `[0, 1]` (values within `ENTRY_TOL` outside
    /// are clamped) and each conditional distribution normalized within `NS_TOL`.
    pub fn new(scenario: Scenario, mut probs: Vec<f64>) -> Result<Self> {
        for (i, p) in probs.iter_mut().enumerate() {
            if !(*p >= -ENTRY_TOL && *p <= 1.0 + ENTRY_TOL) {
                return Err(Error::InvalidBox(format!("entry {i} = {p} is not a probability")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        Self::quasi(scenario, probs)
    }

    /// A quasi-probability box: normalized, entries possibly outside `[0, 1]`.
    /// Trace rules with indefinite operators produce these.
    pub fn quasi(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != scenario.len() {
            return Err(Error::InvalidBox(format!(
                "scenario {scenario:?} needs {} entries, got {}",
                scenario.len(),
                probs.len()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidBox(format!("entry {i} is not finite")));
        }
        let b = Self { scenario, probs };
        let err = b.normalization_error();
        if !(err <= NS_TOL) {
            return Err(Error::InvalidBox(format!("conditional distributions off by {err:e}")));
        }
        Ok(b)
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let p = 1.0 / scenario.n_outcome_tuples() as f64;
        Self {
            scenario,
            probs: vec![p; scenario.len()],
        }
    }

    /// Convex combination; weights must be nonnegative and sum to 1.
    pub fn mixture(components: &[(f64, &CorrelationBox)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::InvalidBox("empty mixture".into()))?;
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidBox(format!("mixture weights sum to {total}")));
        }
        let mut probs = vec![0.0; first.probs.len()];
        for (w, b) in components {
            if b.scenario != first.scenario {
                return Err(Error::WrongShape(format!(
                    "cannot mix {:?} with {:?}",
                    first.scenario, b.scenario
                )));
            }
            for (acc, p) in probs.iter_mut().zip(&b.probs) {
                *acc += w * p;
            }
        }
        Ok(Self {
            scenario: first.scenario,
            probs,
        })
    }

    /// Product box `P(a|x) Q(b|y)`; both factors must share `m` and `r`.
    pub fn product(&self, other: &CorrelationBox) -> Result<Self> {
        let (s, t) = (self.scenario, other.scenario);
        if s.n_settings != t.n_settings || s.n_outcomes != t.n_outcomes {
            return Err(Error::WrongShape(format!("cannot multiply {s:?} by {t:?}")));
        }
        let scenario = Scenario::new(s.n_parties + t.n_parties, s.n_settings, s.n_outcomes)?;
        let mut probs = vec![0.0; scenario.len()];
        for (i, p) in probs.iter_mut().enumerate() {
            let (x, a) = split_index(&scenario, i);
            *p = self.get(&x[..s.n_parties], &a[..s.n_parties])
                * other.get(&x[s.n_parties..], &a[s.n_parties..]);
        }
        Ok(Self { scenario, probs })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, settings: &[usize], outcomes: &[usize]) -> f64 {
        self.probs[self.scenario.index(settings, outcomes)]
    }

    /// All entries lie in `[-tol, 1 + tol]`.
    pub fn entries_within(&self, tol: f64) -> bool {
        self.probs.iter().all(|&p| p >= -tol && p <= 1.0 + tol)
    }

    /// Largest `|Σ_a P(a|x) - 1|` over setting tuples.
    pub fn normalization_error(&self) -> f64 {
        let block = self.scenario.n_outcome_tuples();
        self.probs
            .chunks(block)
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_difference(&self, other: &CorrelationBox) -> f64 {
        if self.scenario != other.scenario {
            return f64::INFINITY;
        }
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    /// Sums party `party`'s outcome out of the conditional distribution at
    /// settings `x`; indexed by the remaining parties' outcomes.
    fn sum_out(&self, party: usize, x: &[usize]) -> Vec<f64> {
        let s = self.scenario;
        let n = s.n_parties;
        let base = encode(x, s.n_settings) * s.n_outcome_tuples();
        let mut out = vec![0.0; s.n_outcome_tuples() / s.n_outcomes];
        for a_idx in 0..s.n_outcome_tuples() {
            let a = decode(a_idx, s.n_outcomes, n);
            let rest: Vec<usize> = (0..n).filter(|&q| q != party).map(|q| a[q]).collect();
            out[encode(&rest, s.n_outcomes)] += self.probs[base + a_idx];
        }
        out
    }

    /// Marginal on the sorted party subset `parties`, taken at complement
    /// settings all 0 and cross-checked against complement settings all `m-1`.
    pub fn marginal(&self, parties: &[usize]) -> Result<CorrelationBox> {
        let s = self.scenario;
        let mut subset = parties.to_vec();
        subset.sort_unstable();
        subset.dedup();
        if subset.is_empty() || subset.len() != parties.len() || subset.iter().any(|&p| p >= s.n_parties) {
            return Err(Error::InvalidSubset(format!(
                "{parties:?} is not a nonempty set of distinct parties below {}",
                s.n_parties
            )));
        }
        if subset.len() == s.n_parties {
            return Ok(self.clone());
        }
        let primary = self.marginal_at(&subset, 0);
        if s.n_settings > 1 {
            let check = self.marginal_at(&subset, s.n_settings - 1);
            let violation = primary
                .iter()
                .zip(&check)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            if violation > NS_TOL {
                return Err(Error::SignallingInput { violation });
            }
        }
        let scenario = Scenario::new(subset.len(), s.n_settings, s.n_outcomes)?;
        Ok(Self {
            scenario,
            probs: primary,
        })
    }

    fn marginal_at(&self, subset: &[usize], complement_setting: usize) -> Vec<f64> {
        let s = self.scenario;
        let n = s.n_parties;
        let k = subset.len();
        let sub_outcomes = s.n_outcomes.pow(k as u32);
        let mut out = vec![0.0; s.n_settings.pow(k as u32) * sub_outcomes];
        let mut x = vec![complement_setting; n];
        for xs_idx in 0..s.n_settings.pow(k as u32) {
            let xs = decode(xs_idx, s.n_settings, k);
            for (slot, &party) in subset.iter().enumerate() {
                x[party] = xs[slot];
            }
            let base = encode(&x, s.n_settings) * s.n_outcome_tuples();
            for a_idx in 0..s.n_outcome_tuples() {
                let a = decode(a_idx, s.n_outcomes, n);
                let a_sub: Vec<usize> = subset.iter().map(|&q| a[q]).collect();
                out[xs_idx * sub_outcomes + encode(&a_sub, s.n_outcomes)] += self.probs[base + a_idx];
            }
        }
        out
    }
}

fn split_index(s: &Scenario, i: usize) -> (Vec<usize>, Vec<usize>) {
    let block = s.n_outcome_tuples();
    (
        decode(i / block, s.n_settings, s.n_parties),
        decode(i % block, s.n_outcomes, s.n_parties),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsCheck {
    pub nonsignalling: bool,
    pub max_violation: f64,
}

/// Single-party no-signalling conditions for every party; together they imply
/// the condition for every bipartition.
pub fn is_nonsignalling(b: &CorrelationBox) -> NsCheck {
    let s = b.scenario;
    let n = s.n_parties;
    let mut worst = 0.0f64;
    for party in 0..n {
        for x_idx in 0..s.n_setting_tuples() {
            let x = decode(x_idx, s.n_settings, n);
            if x[party] != 0 {
                continue;
            }
            let reference = b.sum_out(party, &x);
            for alt in 1..s.n_settings {
                let mut y = x.clone();
                y[party] = alt;
                let other = b.sum_out(party, &y);
                for (p, q) in reference.iter().zip(&other) {
                    worst = worst.max((p - q).abs());
                }
            }
        }
    }
    NsCheck {
        nonsignalling: worst < NS_TOL,
        max_violation: worst,
    }
}

/// The PR box: `P(a,b|x,y) = 1/2` iff `x·y = a ⊕ b`.
pub fn pr_box() -> CorrelationBox {
    let scenario = Scenario::new(2, 2, 2).expect("valid");
    let mut probs = vec![0.0; scenario.len()];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    if (x & y) == (a ^ b) {
                        probs[scenario.index(&[x, y], &[a, b])] = 0.5;
                    }
                }
            }
        }
    }
    CorrelationBox { scenario, probs }
}

/// Product of deterministic local responses: `strategies[i][x]` is party `i`'s
/// outcome for setting `x`.
pub fn deterministic_box(n_outcomes: usize, strategies: &[Vec<usize>]) -> Result<CorrelationBox> {
    let m = strategies.first().map_or(0, Vec::len);
    if strategies.iter().any(|f| f.len() != m) {
        return Err(Error::InvalidScenario("strategies disagree on the number of settings".into()));
    }
    if strategies.iter().flatten().any(|&a| a >= n_outcomes) {
        return Err(Error::InvalidScenario(format!("outcome labels must be below {n_outcomes}")));
    }
    let scenario = Scenario::new(strategies.len(), m, n_outcomes)?;
    let mut probs = vec![0.0; scenario.len()];
    for x_idx in 0..scenario.n_setting_tuples() {
        let x = decode(x_idx, m, strategies.len());
        let a: Vec<usize> = strategies.iter().zip(&x).map(|(f, &xi)| f[xi]).collect();
        probs[scenario.index(&x, &a)] = 1.0;
    }
    Ok(CorrelationBox { scenario, probs })
}

/// `(settings, outcomes)` of the four terms of the tripartite inequality
/// `p(000|000) + p(110|011) + p(011|101) + p(101|110) <= 1`.
pub const BELL_TERMS: [([usize; 3], [usize; 3]); 4] = [
    ([0, 0, 0], [0, 0, 0]),
    ([0, 1, 1], [1, 1, 0]),
    ([1, 0, 1], [0, 1, 1]),
    ([1, 1, 0], [1, 0, 1]),
];

fn require_tripartite_bits(b: &CorrelationBox) -> Result<()> {
    let s = b.scenario;
    if (s.n_parties, s.n_settings, s.n_outcomes) != (3, 2, 2) {
        return Err(Error::WrongShape(format!("Bell functional needs scenario (3,2,2), got {s:?}")));
    }
    Ok(())
}

pub fn bell_beta(b: &CorrelationBox) -> Result<f64> {
    require_tripartite_bits(b)?;
    Ok(BELL_TERMS.iter().map(|(x, a)| b.get(x, a)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellVerdict {
    pub beta: f64,
    pub classical_max: f64,
    pub violates_classical: bool,
}

pub fn bell_verdict(b: &CorrelationBox) -> Result<BellVerdict> {
    let beta = bell_beta(b)?;
    let classical_max = classical_max_beta();
    Ok(BellVerdict {
        beta,
        classical_max,
        violates_classical: beta > classical_max + NS_TOL,
    })
}

/// A deterministic local strategy per party: `[outcome for x=0, outcome for x=1]`.
pub type LocalStrategy = [usize; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalBound {
    /// Largest number of simultaneously satisfied terms.
    pub max_terms: usize,
    pub maximizers: Vec<[LocalStrategy; 3]>,
}

/// Exhaustive scan of the 4^3 tripartite deterministic strategies, counting
/// satisfied Bell terms in integers.
pub fn classical_bell_enumeration() -> ClassicalBound {
    const LOCAL: [LocalStrategy; 4] = [[0, 0], [0, 1], [1, 0], [1, 1]];
    let mut max_terms = 0;
    let mut maximizers = Vec::new();
    for f0 in LOCAL {
        for f1 in LOCAL {
            for f2 in LOCAL {
                let strategy = [f0, f1, f2];
                let hits = BELL_TERMS
                    .iter()
                    .filter(|(x, a)| (0..3).all(|i| strategy[i][x[i]] == a[i]))
                    .count();
                if hits > max_terms {
                    max_terms = hits;
                    maximizers.clear();
                }
                if hits == max_terms {
                    maximizers.push(strategy);
                }
            }
        }
    }
    ClassicalBound {
        max_terms,
        maximizers,
    }
}

pub fn classical_max_beta() -> f64 {
    classical_bell_enumeration().max_terms as f64
}

/// Seeded random nonsignalling box with all entries >= 1e-6.
///
/// A uniform random tensor is orthogonally projected onto the affine subspace
/// cut out by normalization and the single-party no-signalling equalities, then
/// mixed toward the uniform box with the largest weight that keeps the floor.
pub fn random_ns_box(scenario: Scenario, seed: u64) -> CorrelationBox {
    let mut rng = sample::rng(seed);
    let raw: Vec<f64> = (0..scenario.len()).map(|_| rng.random::<f64>()).collect();
    let projected = project_onto_ns(scenario, &raw);
    let u = 1.0 / scenario.n_outcome_tuples() as f64;
    let lambda = projected
        .iter()
        .filter(|&&p| p < u)
        .map(|&p| (u - RANDOM_FLOOR) / (u - p))
        .fold(1.0, f64::min);
    mix_with_uniform(scenario, &projected, lambda)
}

/// `lambda·P + (1 - lambda)·U`
pub fn mix_with_uniform(scenario: Scenario, probs: &[f64], lambda: f64) -> CorrelationBox {
    let u = 1.0 / scenario.n_outcome_tuples() as f64;
    CorrelationBox {
        scenario,
        probs: probs.iter().map(|p| lambda * p + (1.0 - lambda) * u).collect(),
    }
}

/// Rows `A` and right-hand side `b` of the constraints `A p = b`.
fn ns_constraints(s: Scenario) -> (DMatrix<f64>, DVector<f64>) {
    let n = s.n_parties;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs = Vec::new();
    let block = s.n_outcome_tuples();
    for x_idx in 0..s.n_setting_tuples() {
        rows.push((0..block).map(|a| (x_idx * block + a, 1.0)).collect());
        rhs.push(1.0);
    }
    for party in 0..n {
        for x_idx in 0..s.n_setting_tuples() {
            let x = decode(x_idx, s.n_settings, n);
            if x[party] != 0 {
                continue;
            }
            for alt in 1..s.n_settings {
                let mut y = x.clone();
                y[party] = alt;
                let y_idx = encode(&y, s.n_settings);
                for rest_idx in 0..block / s.n_outcomes {
                    let mut row = Vec::with_capacity(2 * s.n_outcomes);
                    for a_idx in 0..block {
                        let a = decode(a_idx, s.n_outcomes, n);
                        let rest: Vec<usize> = (0..n).filter(|&q| q != party).map(|q| a[q]).collect();
                        if encode(&rest, s.n_outcomes) == rest_idx {
                            row.push((x_idx * block + a_idx, 1.0));
                            row.push((y_idx * block + a_idx, -1.0));
                        }
                    }
                    rows.push(row);
                    rhs.push(0.0);
                }
            }
        }
    }
    let mut a = DMatrix::zeros(rows.len(), s.len());
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] += v;
        }
    }
    (a, DVector::from_vec(rhs))
}

fn project_onto_ns(s: Scenario, p: &[f64]) -> Vec<f64> {
    // Minimal-norm correction A^T (A A^T)^+ (A p - b).
    let (a, b) = ns_constraints(s);
    let p = DVector::from_column_slice(p);
    let residual = &a * &p - b;
    let gram = &a * a.transpose();
    let eig = nalgebra::SymmetricEigen::new(gram);
    let cutoff = 1e-10 * eig.eigenvalues.amax();
    let coords = eig.eigenvectors.transpose() * residual;
    let scaled = DVector::from_iterator(
        coords.len(),
        coords
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(&c, &l)| if l > cutoff { c / l } else { 0.0 }),
    );
    let y = &eig.eigenvectors * scaled;
    (p - a.transpose() * y).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_local() -> CorrelationBox {
        CorrelationBox::uniform(Scenario::new(1, 2, 2).unwrap())
    }

    #[test]
    fn pr_box_entries() {
        let pr = pr_box();
        assert_eq!(pr.get(&[0, 0], &[0, 0]), 0.5);
        assert_eq!(pr.get(&[1, 1], &[0, 1]), 0.5);
        assert_eq!(pr.get(&[1, 1], &[0, 0]), 0.0);
        let check = is_nonsignalling(&pr);
        assert!(check.nonsignalling && check.max_violation < 1e-15);
    }

    #[test]
    fn product_of_uniform_boxes_is_nonsignalling() {
        let b = uniform_local().product(&uniform_local()).unwrap();
        assert_eq!(is_nonsignalling(&b).max_violation, 0.0);
    }

    #[test]
    fn signalling_box_is_detected() {
        // Party 0 outputs party 1's setting, party 1 always outputs 0.
        let s = Scenario::new(2, 2, 2).unwrap();
        let mut probs = vec![0.0; s.len()];
        for x in 0..2 {
            for y in 0..2 {
                probs[s.index(&[x, y], &[y, 0])] = 1.0;
            }
        }
        let b = CorrelationBox::new(s, probs).unwrap();
        let check = is_nonsignalling(&b);
        assert!(!check.nonsignalling);
        assert_eq!(check.max_violation, 1.0);
        assert!(matches!(b.marginal(&[0]), Err(Error::SignallingInput { .. })));
    }

    #[test]
    fn pr_marginals_are_uniform() {
        let m = pr_box().marginal(&[0]).unwrap();
        assert_eq!(m.scenario(), Scenario::new(1, 2, 2).unwrap());
        assert!(m.probs().iter().all(|&p| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn product_marginal_recovers_factor() {
        let f = deterministic_box(2, &[vec![0, 1]]).unwrap();
        let g = uniform_local();
        let b = f.product(&g).unwrap();
        assert_eq!(b.marginal(&[0]).unwrap(), f);
        assert_eq!(b.marginal(&[1]).unwrap(), g);
    }

    #[test]
    fn deterministic_marginal_is_deterministic() {
        let b = deterministic_box(3, &[vec![2, 0], vec![1, 1], vec![0, 2]]).unwrap();
        let m = b.marginal(&[0, 2]).unwrap();
        assert_eq!(m, deterministic_box(3, &[vec![2, 0], vec![0, 2]]).unwrap());
    }

    #[test]
    fn deterministic_examples() {
        let ones = deterministic_box(2, &[vec![1, 1], vec![1, 1]]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(ones.get(&[x, y], &[1, 1]), 1.0);
            }
        }
        let id = deterministic_box(2, &[vec![0, 1]]).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                assert_eq!(id.get(&[x], &[a]), if a == x { 1.0 } else { 0.0 });
            }
        }
        let zeros = deterministic_box(2, &[vec![0, 0]]).unwrap();
        let mix = CorrelationBox::mixture(&[(0.5, &id), (0.5, &zeros)]).unwrap();
        for (i, p) in mix.probs().iter().enumerate() {
            assert_eq!(*p, 0.5 * (id.probs()[i] + zeros.probs()[i]));
        }
        assert!(deterministic_box(2, &[vec![0, 2]]).is_err());
    }

    #[test]
    fn marginal_rejects_bad_subsets() {
        let pr = pr_box();
        assert!(pr.marginal(&[]).is_err());
        assert!(pr.marginal(&[2]).is_err());
        assert!(pr.marginal(&[0, 0]).is_err());
    }

    #[test]
    fn bell_beta_examples() {
        let zeros = deterministic_box(2, &[vec![0, 0], vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(bell_beta(&zeros).unwrap(), 1.0);
        let uniform = CorrelationBox::uniform(Scenario::new(3, 2, 2).unwrap());
        assert_eq!(bell_beta(&uniform).unwrap(), 0.5);
        assert!(matches!(bell_beta(&pr_box()), Err(Error::WrongShape(_))));
        let v = bell_verdict(&uniform).unwrap();
        assert!(!v.violates_classical && v.classical_max == 1.0);
    }

    #[test]
    fn classical_bound_by_enumeration() {
        let bound = classical_bell_enumeration();
        assert_eq!(bound.max_terms, 1);
        assert_eq!(classical_max_beta(), 1.0);
        assert!(bound.maximizers.contains(&[[0, 0], [0, 0], [0, 0]]));
        // Cross-check through the box representation of every vertex.
        let mut best = 0.0f64;
        for code in 0..64usize {
            let f: Vec<Vec<usize>> = (0..3)
                .map(|i| {
                    let k = (code >> (2 * i)) & 3;
                    vec![k >> 1, k & 1]
                })
                .collect();
            let beta = bell_beta(&deterministic_box(2, &f).unwrap()).unwrap();
            assert!(beta < 2.0);
            best = best.max(beta);
        }
        assert_eq!(best, 1.0);
    }

    #[test]
    fn random_boxes_are_nonsignalling_and_reproducible() {
        for (n, m, r) in [(2, 2, 2), (2, 3, 2), (2, 2, 3), (3, 2, 2), (1, 3, 3)] {
            let s = Scenario::new(n, m, r).unwrap();
            let a = random_ns_box(s, 11);
            assert_eq!(a, random_ns_box(s, 11));
            assert_ne!(a, random_ns_box(s, 12));
            let check = is_nonsignalling(&a);
            assert!(check.max_violation < 1e-12, "{s:?}: {}", check.max_violation);
            assert!(a.normalization_error() < 1e-12);
            assert!(a.probs().iter().all(|&p| p >= RANDOM_FLOOR - 1e-15));
        }
    }

    #[test]
    fn zero_mixing_gives_uniform() {
        let s = Scenario::new(2, 2, 2).unwrap();
        let b = random_ns_box(s, 3);
        assert_eq!(mix_with_uniform(s, b.probs(), 0.0), CorrelationBox::uniform(s));
    }

    #[test]
    fn json_layout() {
        let b = deterministic_box(2, &[vec![0, 1]]).unwrap();
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(
            text,
            r#"{"n_parties":1,"n_settings":2,"n_outcomes":2,"probs":[1.0,0.0,0.0,1.0]}"#
        );
        assert_eq!(serde_json::from_str::<CorrelationBox>(&text).unwrap(), b);
        let unnormalized = r#"{"n_parties":1,"n_settings":1,"n_outcomes":2,"probs":[0.5,0.6]}"#;
        assert!(serde_json::from_str::<CorrelationBox>(unnormalized).is_err());
    }
}
