//! Linear maps in `(L, R)`-pair form `X ↦ Σ_k L_k X R_k†`, their Hilbert–Schmidt
//! duals, Choi operators, and a check of the bipartite identity
//! `tr((1⊗Λ)(Ψ) · M_1⊗M_2) = tr(Ψ · M_1⊗Λ*(M_2))`.

use rand::Rng;
use serde::Serialize;

use crate::boxes::{decode, CorrelationBox};
use crate::error::{Error, Result};
use crate::hilbert::{
    c, hermitian_deviation, kron, trace_product, ComplexMatrix, HermitianOperator,
};
use crate::operators::{MeasurementModel, PovmCheck};
use crate::sample;

/// Choi operator `(1⊗Λ)(Σ_ij |i><j| ⊗ |i><j|)`; Hermitian when `Λ` preserves Hermiticity.
pub type ChoiOperator = HermitianOperator;

/// `X ↦ Σ_k L_k X R_k†` from `C^{input_dim}` to `C^{output_dim}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    terms: Vec<(ComplexMatrix, ComplexMatrix)>,
    input_dim: usize,
    output_dim: usize,
}

impl LinearMap {
    pub fn new(terms: Vec<(ComplexMatrix, ComplexMatrix)>) -> Result<Self> {
        let (l0, _) = terms
            .first()
            .ok_or_else(|| Error::InvalidMap("a map needs at least one term".into()))?;
        let (output_dim, input_dim) = l0.shape();
        for (l, r) in &terms {
            if l.shape() != (output_dim, input_dim) || r.shape() != (output_dim, input_dim) {
                return Err(Error::InvalidMap(format!(
                    "every L_k and R_k must be {output_dim}x{input_dim}"
                )));
            }
        }
        Ok(Self {
            terms,
            input_dim,
            output_dim,
        })
    }

    /// Completely positive map with Kraus operators `K_k`.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(kraus.into_iter().map(|k| (k.clone(), k)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_kraus(vec![ComplexMatrix::identity(dim, dim)]).expect("one square term")
    }

    /// `X ↦ Xᵀ = Σ_{ij} E_ij X E_ij`, i.e. pairs `(E_ij, E_ji)`.
    pub fn transpose(dim: usize) -> Self {
        let mut terms = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut e_ij = ComplexMatrix::zeros(dim, dim);
                e_ij[(i, j)] = c(1.0, 0.0);
                terms.push((e_ij.clone(), e_ij.transpose()));
            }
        }
        Self::new(terms).expect("square terms")
    }

    /// `X ↦ tr(X) 1/d`, Kraus operators `E_ij/√d`.
    pub fn depolarizing(dim: usize) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let mut kraus = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut k = ComplexMatrix::zeros(dim, dim);
                k[(i, j)] = c(scale, 0.0);
                kraus.push(k);
            }
        }
        Self::from_kraus(kraus).expect("square terms")
    }

    /// Random CPTP map: Kraus operators are the blocks of a random isometry
    /// `C^{input} → C^{n_kraus} ⊗ C^{output}`.
    pub fn random_cptp<R: Rng + ?Sized>(rng: &mut R, input_dim: usize, output_dim: usize, n_kraus: usize) -> Self {
        let v = sample::isometry(rng, n_kraus * output_dim, input_dim);
        let kraus = (0..n_kraus)
            .map(|k| v.rows(k * output_dim, output_dim).into_owned())
            .collect();
        Self::from_kraus(kraus).expect("blocks share one shape")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn terms(&self) -> &[(ComplexMatrix, ComplexMatrix)] {
        &self.terms
    }

    /// True when every pair has `R_k = L_k`, which makes the map completely positive.
    pub fn is_kraus_form(&self) -> bool {
        self.terms.iter().all(|(l, r)| l == r)
    }

    /// `‖Σ_k R_k† L_k - 1‖_max`; zero exactly for trace-preserving maps.
    pub fn trace_preservation_error(&self) -> f64 {
        let sum = self
            .terms
            .iter()
            .fold(ComplexMatrix::zeros(self.input_dim, self.input_dim), |acc, (l, r)| {
                acc + r.adjoint() * l
            });
        (sum - ComplexMatrix::identity(self.input_dim, self.input_dim)).camax()
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.input_dim, self.input_dim) {
            return Err(Error::DimensionMismatch(format!(
                "map acts on {0}x{0} matrices, got {1}x{2}",
                self.input_dim,
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(self
            .terms
            .iter()
            .fold(ComplexMatrix::zeros(self.output_dim, self.output_dim), |acc, (l, r)| {
                acc + l * x * r.adjoint()
            }))
    }

    /// Hilbert–Schmidt adjoint `X ↦ Σ_k L_k† X R_k`.
    pub fn dual(&self) -> LinearMap {
        LinearMap {
            terms: self.terms.iter().map(|(l, r)| (l.adjoint(), r.adjoint())).collect(),
            input_dim: self.output_dim,
            output_dim: self.input_dim,
        }
    }

    /// `next ∘ self`
    pub fn then(&self, next: &LinearMap) -> Result<LinearMap> {
        if next.input_dim != self.output_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose a map into dimension {} with one from dimension {}",
                self.output_dim, next.input_dim
            )));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * next.terms.len());
        for (l2, r2) in &next.terms {
            for (l1, r1) in &self.terms {
                terms.push((l2 * l1, r2 * r1));
            }
        }
        LinearMap::new(terms)
    }

    /// `(1 ⊗ Λ)(X)` for `X` on `C^{aux_dim} ⊗ C^{input_dim}`.
    pub fn apply_on_second(&self, aux_dim: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let side = aux_dim * self.input_dim;
        if x.shape() != (side, side) {
            return Err(Error::DimensionMismatch(format!(
                "expected a {side}x{side} bipartite operator, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let id = ComplexMatrix::identity(aux_dim, aux_dim);
        let out = aux_dim * self.output_dim;
        Ok(self
            .terms
            .iter()
            .fold(ComplexMatrix::zeros(out, out), |acc, (l, r)| {
                acc + kron(&id, l) * x * kron(&id, r).adjoint()
            }))
    }

    /// `(1 ⊗ Λ)(Σ_{ij} |ii><jj|)` on `C^{input} ⊗ C^{output}`. Fails when the map
    /// does not preserve Hermiticity.
    pub fn choi(&self) -> Result<ChoiOperator> {
        let d = self.input_dim;
        let mut omega = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                omega[(i * d + i, j * d + j)] = c(1.0, 0.0);
            }
        }
        let m = self.apply_on_second(d, &omega)?;
        let deviation = hermitian_deviation(&m);
        if deviation > 1e-10 {
            return Err(Error::NotHermitian { deviation });
        }
        HermitianOperator::from_hermitian_part(vec![d, self.output_dim], m)
    }
}

/// Result of comparing both sides of the bipartite identity on every box entry.
#[derive(Debug, Clone, Serialize)]
pub struct GleasonIdentityCheck {
    pub max_discrepancy: f64,
    /// Largest imaginary part seen on either side.
    pub max_imaginary: f64,
    /// Both sides as quasi-probability boxes.
    #[serde(skip)]
    pub witness_side: CorrelationBox,
    #[serde(skip)]
    pub state_side: CorrelationBox,
    /// Minimum eigenvalue of `(1⊗Λ)(Ψ)`; negative when it is a genuine witness.
    pub witness_min_eigenvalue: f64,
    /// Validity of the transported measurements `{Λ*(M)}` on party 2.
    pub dual_povm_min_eigenvalue: f64,
    pub dual_povm_completeness_error: f64,
    pub dual_povms_valid: bool,
}

/// Compares `tr((1⊗Λ)(Ψ)·M_1⊗M_2)` with `tr(Ψ·M_1⊗Λ*(M_2))` for all settings
/// and outcomes of a bipartite measurement model, and checks that
/// `{Λ*(M_a^x)}` is again a POVM for each setting `x`.
pub fn verify_gleason_identity(
    psi: &HermitianOperator,
    lambda: &LinearMap,
    mm: &MeasurementModel,
) -> Result<GleasonIdentityCheck> {
    let dims = mm.local_dims();
    if dims.len() != 2 {
        return Err(Error::WrongShape(format!("need a bipartite measurement model, got {} parties", dims.len())));
    }
    if psi.local_dims() != [dims[0], lambda.input_dim()] {
        return Err(Error::DimensionMismatch(format!(
            "Ψ on {:?}, expected [{}, {}]",
            psi.local_dims(),
            dims[0],
            lambda.input_dim()
        )));
    }
    if dims[1] != lambda.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "party 2 measures dimension {}, map outputs {}",
            dims[1],
            lambda.output_dim()
        )));
    }
    let trace = psi.trace();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitTrace { trace });
    }
    let purity_error = (psi.matrix() * psi.matrix() - psi.matrix()).camax();
    if purity_error > 1e-9 {
        return Err(Error::InvalidMap(format!("Ψ is not a rank-1 projector (‖Ψ²-Ψ‖ = {purity_error:e})")));
    }

    let witness = lambda.apply_on_second(dims[0], psi.matrix())?;
    let witness_min_eigenvalue = crate::hilbert::eigh(&witness).values[0];
    let dual = lambda.dual();
    let scenario = mm.scenario();
    let party2 = &mm.parties()[1];
    let transported: Vec<Vec<ComplexMatrix>> = party2
        .settings
        .iter()
        .map(|povm| {
            povm.elements()
                .iter()
                .map(|e| dual.apply(e.matrix()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dual_min = f64::INFINITY;
    let mut dual_completeness = 0.0f64;
    for elements in &transported {
        let check = PovmCheck::of(elements);
        dual_min = dual_min.min(check.min_eigenvalue);
        dual_completeness = dual_completeness.max(check.completeness_error);
    }

    let mut lhs = Vec::with_capacity(scenario.len());
    let mut rhs = Vec::with_capacity(scenario.len());
    let mut max_discrepancy = 0.0f64;
    let mut max_imaginary = 0.0f64;
    for x_idx in 0..scenario.n_setting_tuples() {
        let x = decode(x_idx, scenario.n_settings, 2);
        for a_idx in 0..scenario.n_outcome_tuples() {
            let a = decode(a_idx, scenario.n_outcomes, 2);
            let m1 = mm.element(0, x[0], a[0]).matrix();
            let m2 = mm.element(1, x[1], a[1]).matrix();
            let left = trace_product(&witness, &kron(m1, m2));
            let right = trace_product(psi.matrix(), &kron(m1, &transported[x[1]][a[1]]));
            max_discrepancy = max_discrepancy.max((left - right).norm());
            max_imaginary = max_imaginary.max(left.im.abs()).max(right.im.abs());
            lhs.push(left.re);
            rhs.push(right.re);
        }
    }
    Ok(GleasonIdentityCheck {
        max_discrepancy,
        max_imaginary,
        witness_side: CorrelationBox::quasi(scenario, lhs)?,
        state_side: CorrelationBox::quasi(scenario, rhs)?,
        witness_min_eigenvalue,
        dual_povm_min_eigenvalue: dual_min,
        dual_povm_completeness_error: dual_completeness,
        dual_povms_valid: dual_min >= -crate::operators::POVM_TOL
            && dual_completeness <= crate::operators::POVM_TOL,
    })
}

/// `Φ+` on `C^2 ⊗ C^2` with the transpose map and Pauli-basis measurements.
pub fn transpose_fixture() -> (HermitianOperator, LinearMap, MeasurementModel) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = crate::hilbert::ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
    let psi = HermitianOperator::from_projector(vec![2, 2], &v).expect("4-dimensional projector");
    (psi, LinearMap::transpose(2), crate::operators::pr_measurements())
}

/// Random pure `Ψ` on `C^2 ⊗ C^2`, random CPTP `Λ: M_2 → M_{d}` with `d` in `{2, 3}`,
/// and random two-setting, two-outcome POVMs.
pub fn random_trial<R: Rng + ?Sized>(rng: &mut R) -> (HermitianOperator, LinearMap, MeasurementModel) {
    let out_dim = 2 + rng.random_range(0..2usize);
    let psi_vec = sample::haar_vector(rng, 4);
    let psi = HermitianOperator::from_projector(vec![2, 2], &psi_vec).expect("4-dimensional projector");
    let lambda = LinearMap::random_cptp(rng, 2, out_dim, 3);
    let mm = sample::measurement_model(rng, &[2, out_dim], 2, 2);
    (psi, lambda, mm)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub max_discrepancy: f64,
    pub max_imaginary: f64,
    pub all_dual_povms_valid: bool,
    pub worst_dual_povm_min_eigenvalue: f64,
    pub worst_dual_povm_completeness_error: f64,
}

/// Runs [`verify_gleason_identity`] on `trials` random instances; trial `k` uses stream `k` of `seed`.
pub fn run_random_trials(trials: usize, seed: u64) -> Result<TrialSummary> {
    let mut summary = TrialSummary {
        trials,
        max_discrepancy: 0.0,
        max_imaginary: 0.0,
        all_dual_povms_valid: true,
        worst_dual_povm_min_eigenvalue: f64::INFINITY,
        worst_dual_povm_completeness_error: 0.0,
    };
    for k in 0..trials {
        let (psi, lambda, mm) = random_trial(&mut sample::rng_stream(seed, k as u64));
        let check = verify_gleason_identity(&psi, &lambda, &mm)?;
        summary.max_discrepancy = summary.max_discrepancy.max(check.max_discrepancy);
        summary.max_imaginary = summary.max_imaginary.max(check.max_imaginary);
        summary.all_dual_povms_valid &= check.dual_povms_valid;
        summary.worst_dual_povm_min_eigenvalue =
            summary.worst_dual_povm_min_eigenvalue.min(check.dual_povm_min_eigenvalue);
        summary.worst_dual_povm_completeness_error =
            summary.worst_dual_povm_completeness_error.max(check.dual_povm_completeness_error);
    }
    Ok(summary)
}
