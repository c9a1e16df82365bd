//! The three-qubit unextendible product basis `|000>, |1 e⊥ e>, |e 1 e⊥>, |e⊥ e 1>`,
//! its bound entangled complement state, the normalized witness detecting it,
//! and the correlations that witness produces under the basis' own local
//! projective measurements.

use serde::Serialize;

use crate::boxes::{bell_beta, CorrelationBox};
use crate::error::{Error, Result};
use crate::hilbert::{basis_vector, c, kron_vectors, projector, ComplexMatrix, ComplexVector, HermitianOperator};
use crate::operators::{evaluate_box, projective_povm, MeasurementModel, PartyMeasurements};
use crate::witness::minimize_over_products;

const DEGENERACY_TOL: f64 = 1e-6;

/// `cos θ |0> + sin θ |1>`
pub fn e_from_theta(theta: f64) -> ComplexVector {
    ComplexVector::from_vec(vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)])
}

/// `(|0> - |1>)/√2`
pub fn default_e() -> ComplexVector {
    e_from_theta(-std::f64::consts::FRAC_PI_4)
}

/// The value of `θ` giving [`default_e`].
pub const DEFAULT_THETA: f64 = -std::f64::consts::FRAC_PI_4;

fn check_e(e: &ComplexVector) -> Result<ComplexVector> {
    if e.len() != 2 {
        return Err(Error::DimensionMismatch(format!("|e> must be a qubit vector, got dimension {}", e.len())));
    }
    let norm = e.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateBasis);
    }
    let e = e / c(norm, 0.0);
    let overlaps = [e[0].norm(), e[1].norm()];
    if overlaps.iter().any(|&o| o <= DEGENERACY_TOL || o >= 1.0 - DEGENERACY_TOL) {
        return Err(Error::DegenerateBasis);
    }
    Ok(e)
}

/// The unit vector orthogonal to `e`, phase fixed so its first nonzero
/// component is real positive.
pub fn orthogonal_complement(e: &ComplexVector) -> ComplexVector {
    let mut perp = ComplexVector::from_vec(vec![-e[1].conj(), e[0].conj()]);
    if let Some(pivot) = perp.iter().copied().find(|z| z.norm() > 1e-12) {
        let rotation = pivot.conj() / pivot.norm();
        perp *= rotation;
    }
    perp
}

#[derive(Debug, Clone)]
pub struct Upb {
    /// Local factors of each member state.
    pub factors: [[ComplexVector; 3]; 4],
    /// The four product vectors on `C^8`.
    pub states: [ComplexVector; 4],
    pub pi_upb: HermitianOperator,
    pub rho_upb: HermitianOperator,
}

/// Builds the basis, `Π_UPB = Σ |ψ_i><ψ_i|` and `ρ_UPB = (1 - Π_UPB)/4`.
pub fn build_upb(e: &ComplexVector) -> Result<Upb> {
    let e = check_e(e)?;
    let perp = orthogonal_complement(&e);
    let zero = basis_vector(2, 0);
    let one = basis_vector(2, 1);
    let factors = [
        [zero.clone(), zero.clone(), zero.clone()],
        [one.clone(), perp.clone(), e.clone()],
        [e.clone(), one.clone(), perp.clone()],
        [perp.clone(), e.clone(), one.clone()],
    ];
    let states = factors.clone().map(|f| kron_vectors(&f));
    let pi = states
        .iter()
        .fold(ComplexMatrix::zeros(8, 8), |acc, s| acc + projector(s));
    let pi_upb = HermitianOperator::from_hermitian_part(vec![2, 2, 2], pi)?;
    let identity = HermitianOperator::identity(vec![2, 2, 2]);
    let rho_upb = HermitianOperator::linear_combination(&[(0.25, &identity), (-0.25, &pi_upb)])?;
    Ok(Upb {
        factors,
        states,
        pi_upb,
        rho_upb,
    })
}

fn require_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::RangeViolation {
            name: "epsilon",
            value: epsilon,
            range: "(0, 1/2)",
        });
    }
    Ok(())
}

/// `ε = min over product states of <αβγ|Π_UPB|αβγ>`. A value outside
/// `(0, 1/2)` means the optimizer or the construction is broken.
pub fn compute_epsilon(pi_upb: &HermitianOperator, restarts: usize, seed: u64) -> Result<f64> {
    let r = minimize_over_products(pi_upb, restarts, seed)?;
    require_epsilon(r.value)?;
    Ok(r.value)
}

/// `W' = (Π_UPB - ε 1)/(4 - 8ε)`
pub fn build_witness(pi_upb: &HermitianOperator, epsilon: f64) -> Result<HermitianOperator> {
    require_epsilon(epsilon)?;
    Ok(pi_upb.shifted(-epsilon).scaled(1.0 / (4.0 - 8.0 * epsilon)))
}

/// `(1 - ε)/(1 - 2ε)`
pub fn beta_formula(epsilon: f64) -> Result<f64> {
    require_epsilon(epsilon)?;
    Ok((1.0 - epsilon) / (1.0 - 2.0 * epsilon))
}

/// `-ε / (4(1 - 2ε))`, the closed form of `tr(W' ρ_UPB)`.
pub fn witness_value_on_rho(epsilon: f64) -> f64 {
    -epsilon / (4.0 * (1.0 - 2.0 * epsilon))
}

/// Every party: setting 0 measures `{|0>, |1>}`, setting 1 measures
/// `{|e>, |e⊥>}`. Under this labeling the four Bell terms are the projectors
/// onto the four basis states, in order.
pub fn upb_measurements(e: &ComplexVector) -> Result<MeasurementModel> {
    let e = check_e(e)?;
    let perp = orthogonal_complement(&e);
    let settings = vec![
        projective_povm(&[basis_vector(2, 0), basis_vector(2, 1)])?,
        projective_povm(&[e, perp])?,
    ];
    MeasurementModel::new(vec![PartyMeasurements { dim: 2, settings }; 3])
}

#[derive(Debug, Clone)]
pub struct UpbModel {
    pub e_vector: ComplexVector,
    pub upb: Upb,
    pub epsilon: f64,
    pub w_prime: HermitianOperator,
    pub beta: f64,
    pub measurements: MeasurementModel,
}

impl UpbModel {
    /// Full construction; `ε` comes from `restarts` runs of the product-state minimizer.
    pub fn build(e: &ComplexVector, restarts: usize, seed: u64) -> Result<Self> {
        let upb = build_upb(e)?;
        let epsilon = compute_epsilon(&upb.pi_upb, restarts, seed)?;
        Self::with_epsilon(e, upb, epsilon)
    }

    pub fn with_epsilon(e: &ComplexVector, upb: Upb, epsilon: f64) -> Result<Self> {
        let w_prime = build_witness(&upb.pi_upb, epsilon)?;
        let beta = beta_formula(epsilon)?;
        let measurements = upb_measurements(e)?;
        Ok(Self {
            e_vector: check_e(e)?,
            upb,
            epsilon,
            w_prime,
            beta,
            measurements,
        })
    }

    /// `tr(W' ρ_UPB)` evaluated directly.
    pub fn witness_trace_on_rho(&self) -> f64 {
        crate::hilbert::trace_product(self.w_prime.matrix(), self.upb.rho_upb.matrix()).re
    }
}

/// `P(abc|xyz) = tr(W' Π_a^x ⊗ Π_b^y ⊗ Π_c^z)` under [`upb_measurements`].
pub fn gleason_box(model: &UpbModel) -> Result<CorrelationBox> {
    let evaluation = evaluate_box(&model.w_prime, &model.measurements)?;
    Ok(evaluation.correlations)
}

#[derive(Debug, Clone, Serialize)]
pub struct UpbSummary {
    pub epsilon: f64,
    pub beta_formula: f64,
    pub beta_direct: f64,
    pub witness_trace_on_rho: f64,
    pub classical_max: f64,
    pub gap: f64,
}

pub fn summarize(model: &UpbModel) -> Result<UpbSummary> {
    let b = gleason_box(model)?;
    let beta_direct = bell_beta(&b)?;
    let classical_max = crate::boxes::classical_max_beta();
    Ok(UpbSummary {
        epsilon: model.epsilon,
        beta_formula: model.beta,
        beta_direct,
        witness_trace_on_rho: model.witness_trace_on_rho(),
        classical_max,
        gap: beta_direct - classical_max,
    })
}
