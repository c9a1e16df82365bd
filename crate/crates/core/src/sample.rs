//! Seeded random objects: Haar vectors, states, Hermitian operators, POVMs,
//! isometries. Every sampler takes an explicit RNG so callers control streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{c, eigh, ComplexMatrix, ComplexVector, HermitianOperator, C64};
use crate::operators::{MeasurementModel, PartyMeasurements, Povm};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    // Row-major fill so the stream layout does not depend on storage order.
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

/// Haar-uniform unit vector in `C^dim`.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexVector {
    loop {
        let v = ComplexVector::from_iterator(dim, (0..dim).map(|_| gaussian(rng)));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / c(norm, 0.0);
        }
    }
}

/// Random density matrix `A A† / tr(A A†)` with Gaussian `A`.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, local_dims: &[usize]) -> HermitianOperator {
    let n: usize = local_dims.iter().product();
    let a = gaussian_matrix(rng, n, n);
    let rho = &a * a.adjoint();
    let t = rho.trace().re;
    HermitianOperator::from_hermitian_part(local_dims.to_vec(), rho / c(t, 0.0))
        .expect("dimensions are consistent by construction")
}

/// Random Hermitian matrix with Gaussian entries.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, local_dims: &[usize]) -> HermitianOperator {
    let n: usize = local_dims.iter().product();
    let a = gaussian_matrix(rng, n, n);
    HermitianOperator::from_hermitian_part(local_dims.to_vec(), (&a + a.adjoint()) * c(0.5, 0.0))
        .expect("dimensions are consistent by construction")
}

/// Random Hermitian operator shifted along the identity to unit trace; generically indefinite.
pub fn unit_trace_hermitian<R: Rng + ?Sized>(rng: &mut R, local_dims: &[usize]) -> HermitianOperator {
    let h = hermitian(rng, local_dims);
    let n = h.dim() as f64;
    h.shifted((1.0 - h.trace()) / n)
}

/// Full-rank POVM: `P_k = A_k† A_k` normalized by `S^{-1/2}` with `S = Σ P_k`.
pub fn povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_outcomes: usize) -> Povm {
    let raw: Vec<ComplexMatrix> = (0..n_outcomes)
        .map(|_| {
            let a = gaussian_matrix(rng, dim, dim);
            a.adjoint() * a
        })
        .collect();
    let sum = raw.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, p| acc + p);
    let inv_sqrt = matrix_function(&sum, |x| 1.0 / x.sqrt());
    let elements = raw
        .iter()
        .map(|p| {
            HermitianOperator::from_hermitian_part(vec![dim], &inv_sqrt * p * &inv_sqrt)
                .expect("square by construction")
        })
        .collect();
    Povm::new(elements).expect("normalized positive elements form a POVM")
}

/// Random measurement model: `n_settings` random POVMs per party.
pub fn measurement_model<R: Rng + ?Sized>(
    rng: &mut R,
    local_dims: &[usize],
    n_settings: usize,
    n_outcomes: usize,
) -> MeasurementModel {
    let parties = local_dims
        .iter()
        .map(|&d| PartyMeasurements {
            dim: d,
            settings: (0..n_settings).map(|_| povm(rng, d, n_outcomes)).collect(),
        })
        .collect();
    MeasurementModel::new(parties).expect("sampled POVMs share one scenario")
}

/// `rows x cols` matrix with orthonormal columns (`rows >= cols`), via QR of a Gaussian matrix.
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols, "an isometry needs rows >= cols");
    let a = gaussian_matrix(rng, rows, cols);
    a.qr().q()
}

fn matrix_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let e = eigh(m);
    let n = m.nrows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (i, &lambda) in e.values.iter().enumerate() {
        let v = e.vectors.column(i);
        out += (v * v.adjoint()) * c(f(lambda), 0.0);
    }
    out
}
