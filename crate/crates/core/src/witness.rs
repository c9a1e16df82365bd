//! Minimization of `<α_1 ... α_N| A |α_1 ... α_N>` over product states.
//!
//! The optimizer cycles through the parties and replaces one local vector at a
//! time by the minimum eigenvector of `A` contracted with all other vectors.
//! Each update solves its one-party problem exactly, so the objective never
//! increases. Multi-start over Haar-random initial product states reduces the
//! risk of ending in a local minimum; [`grid_oracle_3qubit`] gives an
//! independent upper bound for three qubits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{c, eigh, kron_vectors, ComplexMatrix, ComplexVector, HermitianOperator, ONE};
use crate::sample;

/// Product-state values below `-VIOLATION_TOL` count as a violation.
pub const VIOLATION_TOL: f64 = 1e-8;
pub const DEFAULT_RESTARTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingOptions {
    /// Stop once a full cycle lowers the value by less than this.
    pub tolerance: f64,
    pub max_cycles: usize,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_cycles: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    #[serde(with = "vectors_repr")]
    locals: Vec<ComplexVector>,
}

mod vectors_repr {
    use super::*;
    use crate::hilbert::{vector_from_repr, vector_to_repr};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[ComplexVector], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(vector_to_repr).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexVector>, D::Error> {
        let raw = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(raw.iter().map(|v| vector_from_repr(v)).collect())
    }
}

impl ProductState {
    /// Every local vector must have unit norm within 1e-12.
    pub fn new(locals: Vec<ComplexVector>) -> Result<Self> {
        if let Some(bad) = locals.iter().find(|v| (v.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::DimensionMismatch(format!(
                "local vector has norm {}, expected 1",
                bad.norm()
            )));
        }
        Ok(Self { locals })
    }

    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, local_dims: &[usize]) -> Self {
        Self {
            locals: local_dims.iter().map(|&d| sample::haar_vector(rng, d)).collect(),
        }
    }

    pub fn locals(&self) -> &[ComplexVector] {
        &self.locals
    }

    pub fn local_dims(&self) -> Vec<usize> {
        self.locals.iter().map(|v| v.len()).collect()
    }

    pub fn to_vector(&self) -> ComplexVector {
        kron_vectors(&self.locals)
    }

    /// `<ψ|A|ψ>` for the product vector `ψ`.
    pub fn expectation(&self, a: &HermitianOperator) -> Result<f64> {
        if self.local_dims() != a.local_dims() {
            return Err(Error::DimensionMismatch(format!(
                "product state on {:?}, operator on {:?}",
                self.local_dims(),
                a.local_dims()
            )));
        }
        Ok(a.expectation(&self.to_vector()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationResult {
    pub value: f64,
    pub argmin: ProductState,
    pub restarts_used: usize,
    pub converged: bool,
    /// Full cycles run by the best restart.
    pub iterations: usize,
}

/// A single descent from a fixed starting point.
#[derive(Debug, Clone)]
pub struct Descent {
    pub value: f64,
    pub state: ProductState,
    pub converged: bool,
    pub cycles: usize,
    /// Objective at the start and after every single-party update.
    pub history: Vec<f64>,
}

/// Contracts `a` with every local vector except `party`'s: the returned matrix
/// `H` satisfies `<v|H|v> = <ψ(v)|a|ψ(v)>` with `v` in `party`'s slot.
pub fn contract_except(a: &HermitianOperator, state: &ProductState, party: usize) -> ComplexMatrix {
    let dims = a.local_dims();
    let n = a.dim();
    let dp = dims[party];
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    // weights[I] = Π_{q≠party} v_q[I_q]; the row side uses its conjugate.
    let weights: Vec<_> = (0..n)
        .map(|idx| {
            dims.iter().enumerate().fold(ONE, |acc, (q, &d)| {
                if q == party {
                    acc
                } else {
                    acc * state.locals[q][(idx / strides[q]) % d]
                }
            })
        })
        .collect();
    let m = a.matrix();
    let mut out = ComplexMatrix::zeros(dp, dp);
    for row in 0..n {
        let wr = weights[row].conj();
        if wr.norm_sqr() == 0.0 {
            continue;
        }
        let k = (row / strides[party]) % dp;
        for col in 0..n {
            let l = (col / strides[party]) % dp;
            out[(k, l)] += wr * m[(row, col)] * weights[col];
        }
    }
    (&out + out.adjoint()) * c(0.5, 0.0)
}

fn require_parties(a: &HermitianOperator) -> Result<()> {
    if a.n_parties() < 2 {
        return Err(Error::TooFewParties(a.n_parties()));
    }
    Ok(())
}

/// Alternating minimum-eigenvector descent from `start`.
pub fn descend(a: &HermitianOperator, start: ProductState, opts: AlternatingOptions) -> Result<Descent> {
    require_parties(a)?;
    let mut state = start;
    let mut value = state.expectation(a)?;
    let mut history = vec![value];
    let mut cycles = 0;
    let mut converged = false;
    while cycles < opts.max_cycles {
        let before = value;
        for party in 0..a.n_parties() {
            let local = contract_except(a, &state, party);
            let e = eigh(&local);
            state.locals[party] = e.vector(0);
            value = e.values[0];
            history.push(value);
        }
        cycles += 1;
        if before - value < opts.tolerance {
            converged = true;
            break;
        }
    }
    let value = state.expectation(a)?;
    Ok(Descent {
        value,
        state,
        converged,
        cycles,
        history,
    })
}

/// Best of `restarts` descents. Restart `k` starts from a Haar-random product
/// state drawn from stream `k` of `seed`, so the result does not depend on
/// scheduling.
pub fn minimize_over_products(a: &HermitianOperator, restarts: usize, seed: u64) -> Result<MinimizationResult> {
    minimize_over_products_with(a, restarts, seed, AlternatingOptions::default())
}

pub fn minimize_over_products_with(
    a: &HermitianOperator,
    restarts: usize,
    seed: u64,
    opts: AlternatingOptions,
) -> Result<MinimizationResult> {
    require_parties(a)?;
    let restarts = restarts.max(1);
    let runs = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let start = ProductState::random(&mut sample::rng_stream(seed, k as u64), a.local_dims());
            descend(a, start, opts).map(|d| (k, d))
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, best) = runs
        .into_iter()
        .min_by(|(i, x), (j, y)| x.value.total_cmp(&y.value).then(i.cmp(j)))
        .expect("at least one restart");
    Ok(MinimizationResult {
        value: best.value,
        argmin: best.state,
        restarts_used: restarts,
        converged: best.converged,
        iterations: best.cycles,
    })
}

/// Bloch vector `cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`.
pub fn bloch_vector(theta: f64, phi: f64) -> ComplexVector {
    let (s, co) = (theta / 2.0).sin_cos();
    ComplexVector::from_vec(vec![c(co, 0.0), c(phi.cos() * s, phi.sin() * s)])
}

/// Exhaustive upper bound on the product-state minimum of a three-qubit operator.
///
/// Parties 1 and 2 range over a `grid_points x grid_points` grid of Bloch
/// angles each (`θ` in `[0, π]` including both poles, `φ` in `[0, 2π)`);
/// party 3 is minimized exactly through the 2x2 contracted matrix.
pub fn grid_oracle_3qubit(a: &HermitianOperator, grid_points: usize) -> Result<f64> {
    if a.local_dims() != [2, 2, 2] {
        return Err(Error::WrongShape(format!(
            "grid oracle needs three qubits, got local dimensions {:?}",
            a.local_dims()
        )));
    }
    if grid_points < 2 {
        return Err(Error::WrongShape("grid oracle needs at least 2 points per angle".into()));
    }
    let g = grid_points;
    let mut points = Vec::with_capacity(g * g);
    for i in 0..g {
        let theta = std::f64::consts::PI * i as f64 / (g - 1) as f64;
        // At the poles φ only changes a global phase.
        let n_phi = if i == 0 || i == g - 1 { 1 } else { g };
        for j in 0..n_phi {
            points.push(bloch_vector(theta, 2.0 * std::f64::consts::PI * j as f64 / g as f64));
        }
    }
    // Second-party weights conj(v_j) v_j' as (|v0|², |v1|², conj(v0) v1).
    let second: Vec<(f64, f64, f64, f64)> = points
        .iter()
        .map(|v| {
            let x = v[0].conj() * v[1];
            (v[0].norm_sqr(), v[1].norm_sqr(), x.re, x.im)
        })
        .collect();
    let m = a.matrix();
    let best = points
        .par_iter()
        .map(|v1| {
            // B[(j,k),(j',k')] = Σ_{i,i'} conj(v1_i) v1_i' A[(i,j,k),(i',j',k')]
            let mut b = [[c(0.0, 0.0); 4]; 4];
            for (r, row) in b.iter_mut().enumerate() {
                for (s, entry) in row.iter_mut().enumerate() {
                    let mut acc = c(0.0, 0.0);
                    for i in 0..2 {
                        for ip in 0..2 {
                            acc += v1[i].conj() * v1[ip] * m[(4 * i + r, 4 * ip + s)];
                        }
                    }
                    *entry = acc;
                }
            }
            // M[k,k'] = c00 B[(0k),(0k')] + c11 B[(1k),(1k')] + c01 B[(0k),(1k')] + c10 B[(1k),(0k')]
            let (b00_00, b00_01, b01_01) = (b[0][0].re, b[0][1], b[1][1].re);
            let (b10_10, b10_11, b11_11) = (b[2][2].re, b[2][3], b[3][3].re);
            let (x00, x01, x11, y01) = (b[0][2], b[0][3], b[1][3], b[2][1]);
            let mut local_best = f64::INFINITY;
            for &(c00, c11, cr, ci) in &second {
                let c01 = c(cr, ci);
                let c10 = c01.conj();
                let m00 = c00 * b00_00 + c11 * b10_10 + 2.0 * (c01 * x00).re;
                let m11 = c00 * b01_01 + c11 * b11_11 + 2.0 * (c01 * x11).re;
                let m01 = b00_01 * c00 + b10_11 * c11 + c01 * x01 + c10 * y01;
                let half_sum = 0.5 * (m00 + m11);
                let half_diff = 0.5 * (m00 - m11);
                let lambda = half_sum - (half_diff * half_diff + m01.norm_sqr()).sqrt();
                if lambda < local_best {
                    local_best = lambda;
                }
            }
            local_best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessVerdict {
    /// No product state with negative value was found; heuristic.
    CertifiedNonnegativeOnProducts,
    /// A product state with value below `-VIOLATION_TOL` was found; rigorous.
    Violated,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessCertificate {
    pub verdict: WitnessVerdict,
    pub minimization: MinimizationResult,
}

/// Checks whether a unit-trace operator is nonnegative on product states.
pub fn certify_witness(w: &HermitianOperator, restarts: usize, seed: u64) -> Result<WitnessCertificate> {
    let trace = w.trace();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnitTrace { trace });
    }
    let minimization = minimize_over_products(w, restarts, seed)?;
    let verdict = if minimization.value < -VIOLATION_TOL {
        WitnessVerdict::Violated
    } else {
        WitnessVerdict::CertifiedNonnegativeOnProducts
    };
    Ok(WitnessCertificate { verdict, minimization })
}
