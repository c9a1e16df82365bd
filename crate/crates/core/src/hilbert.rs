//! Dense complex linear algebra shared by every other module.
//!
//! Operators live on a tensor product of small local spaces, so everything here
//! is dense and sized for total dimensions up to a few hundred. Eigensolves are
//! delegated to `nalgebra`'s Hermitian eigensolver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Max absolute entry deviation allowed between a Hermitian operator and its adjoint.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of `tr(M_i M~_j)` from `delta_ij`.
pub const DUAL_TOL: f64 = 1e-10;
/// Smallest accepted ratio of extreme singular values of a Gram matrix.
pub const GRAM_RCOND: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a matrix from real row-major rows.
pub fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn pauli_x() -> ComplexMatrix {
    real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    real_matrix(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// Computational basis vector `|index>` in dimension `dim`.
pub fn basis_vector(dim: usize, index: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[index] = ONE;
    v
}

/// `|v><v|`
pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(ComplexMatrix::from_element(1, 1, ONE), |acc, f| acc.kronecker(f))
}

pub fn kron_vectors<'a, I>(factors: I) -> ComplexVector
where
    I: IntoIterator<Item = &'a ComplexVector>,
{
    factors
        .into_iter()
        .fold(ComplexVector::from_element(1, ONE), |acc, f| acc.kronecker(f))
}

/// Largest `|a_ij - conj(a_ji)|`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn max_abs_entry(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// A Hermitian operator on `C^{d_1} ⊗ ... ⊗ C^{d_N}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct HermitianOperator {
    local_dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Validates shape and Hermiticity (within [`HERMITIAN_TOL`]).
    pub fn new(local_dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        Self::check_shape(&local_dims, &matrix)?;
        let deviation = hermitian_deviation(&matrix);
        if !(deviation <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { local_dims, matrix })
    }

    /// Replaces `matrix` by its Hermitian part. Used for operators assembled
    /// from Hermitian pieces, where the anti-Hermitian part is pure rounding.
    pub fn from_hermitian_part(local_dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        Self::check_shape(&local_dims, &matrix)?;
        let matrix = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        Ok(Self { local_dims, matrix })
    }

    /// Operator on a single local space.
    pub fn local(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(vec![matrix.nrows()], matrix)
    }

    pub fn identity(local_dims: Vec<usize>) -> Self {
        let n = local_dims.iter().product();
        Self {
            local_dims,
            matrix: ComplexMatrix::identity(n, n),
        }
    }

    /// `|v><v|` on the given local structure.
    pub fn from_projector(local_dims: Vec<usize>, v: &ComplexVector) -> Result<Self> {
        Self::from_hermitian_part(local_dims, projector(v))
    }

    fn check_shape(local_dims: &[usize], matrix: &ComplexMatrix) -> Result<()> {
        if local_dims.is_empty() || local_dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "local dimensions must be positive, got {local_dims:?}"
            )));
        }
        let side: usize = local_dims.iter().product();
        if matrix.nrows() != side || matrix.ncols() != side {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, local dimensions {local_dims:?} need side {side}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(())
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn n_parties(&self) -> usize {
        self.local_dims.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `<v|A|v>`; real for Hermitian `A`.
    pub fn expectation(&self, v: &ComplexVector) -> f64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    pub fn kron(&self, other: &HermitianOperator) -> HermitianOperator {
        let mut local_dims = self.local_dims.clone();
        local_dims.extend_from_slice(&other.local_dims);
        Self {
            local_dims,
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn scaled(&self, factor: f64) -> HermitianOperator {
        Self {
            local_dims: self.local_dims.clone(),
            matrix: &self.matrix * c(factor, 0.0),
        }
    }

    /// `self + t·1`
    pub fn shifted(&self, t: f64) -> HermitianOperator {
        let n = self.dim();
        Self {
            local_dims: self.local_dims.clone(),
            matrix: &self.matrix + ComplexMatrix::identity(n, n) * c(t, 0.0),
        }
    }

    /// Real linear combination `Σ w_k A_k` of operators with identical local structure.
    pub fn linear_combination(terms: &[(f64, &HermitianOperator)]) -> Result<HermitianOperator> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::DimensionMismatch("empty linear combination".into()))?;
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, op) in terms {
            if op.local_dims != first.local_dims {
                return Err(Error::DimensionMismatch(format!(
                    "local dimensions {:?} vs {:?}",
                    op.local_dims, first.local_dims
                )));
            }
            acc += &op.matrix * c(*w, 0.0);
        }
        Ok(Self {
            local_dims: first.local_dims.clone(),
            matrix: acc,
        })
    }

    pub fn eig(&self) -> HermitianEigen {
        eigh(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().values[0]
    }
}

/// Hilbert–Schmidt pairing `tr(a b)`.
pub fn hs_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operators of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(trace_product(&a.matrix, &b.matrix).re)
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, i: usize) -> ComplexVector {
        self.vectors.column(i).into_owned()
    }

    /// `Σ λ_i v_i v_i†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &lambda) in self.values.iter().enumerate() {
            let v = self.vectors.column(i);
            out += (v * v.adjoint()) * c(lambda, 0.0);
        }
        out
    }
}

pub fn eig_hermitian(a: &HermitianOperator) -> HermitianEigen {
    a.eig()
}

/// Eigendecomposition of a raw matrix, rejecting non-Hermitian input.
pub fn eig_hermitian_matrix(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let deviation = hermitian_deviation(m);
    if !(deviation <= HERMITIAN_TOL * m.nrows().max(1) as f64 * max_abs_entry(m).max(1.0)) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(eigh(m))
}

/// Eigensolve of the Hermitian part of `m`. Eigenvectors get a deterministic
/// phase: the first component of largest magnitude is made real positive.
pub(crate) fn eigh(m: &ComplexMatrix) -> HermitianEigen {
    let n = m.nrows();
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let decomposition = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        decomposition.eigenvalues[i]
            .partial_cmp(&decomposition.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| decomposition.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = decomposition.eigenvectors.column(src).into_owned();
        fix_phase(&mut v);
        vectors.set_column(dst, &v);
    }
    HermitianEigen { values, vectors }
}

pub(crate) fn fix_phase(v: &mut ComplexVector) {
    let largest = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if largest == 0.0 {
        return;
    }
    if let Some(pivot) = v.iter().find(|z| z.norm() >= largest - 1e-12) {
        let rotation = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= rotation;
        }
    }
}

/// Real Gram matrix `G_ij = tr(M_i M_j)` of Hermitian operators.
pub fn gram_matrix(basis: &[HermitianOperator]) -> DMatrix<f64> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = trace_product(&basis[i].matrix, &basis[j].matrix).re;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// The dual set `{M~_j}` with `tr(M_i M~_j) = delta_ij`, each `M~_j` in the real
/// span of the inputs: `M~_j = Σ_i (G^-1)_{ji} M_i`.
pub fn solve_dual(basis: &[HermitianOperator]) -> Result<Vec<HermitianOperator>> {
    let first = basis
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty basis".into()))?;
    if let Some(bad) = basis.iter().find(|m| m.local_dims != first.local_dims) {
        return Err(Error::DimensionMismatch(format!(
            "basis mixes local dimensions {:?} and {:?}",
            first.local_dims, bad.local_dims
        )));
    }
    let g = gram_matrix(basis);
    let singular = g.clone().svd(false, false).singular_values;
    let largest = singular.max();
    let smallest = singular.min();
    let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    if !(ratio >= GRAM_RCOND) {
        return Err(Error::GramSingular { ratio });
    }
    let inverse = match g.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => return Err(Error::GramSingular { ratio }),
    };
    basis
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let terms: Vec<(f64, &HermitianOperator)> = basis
                .iter()
                .enumerate()
                .map(|(i, m)| (inverse[(j, i)], m))
                .collect();
            let combo = HermitianOperator::linear_combination(&terms)?;
            HermitianOperator::from_hermitian_part(combo.local_dims, combo.matrix)
        })
        .collect()
}

/// Row-major `[re, im]` encoding of a complex matrix.
pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_repr(m: &ComplexMatrix) -> MatrixRepr {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_repr(rows: &MatrixRepr) -> Result<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("matrix rows have unequal lengths".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::DimensionMismatch("matrix has non-finite entries".into()));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_to_repr(v: &ComplexVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_repr(v: &[[f64; 2]]) -> ComplexVector {
    ComplexVector::from_iterator(v.len(), v.iter().map(|p| c(p[0], p[1])))
}

/// JSON shape: `{ "local_dims": [...], "matrix": [[[re, im], ...], ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorRepr {
    pub local_dims: Vec<usize>,
    pub matrix: MatrixRepr,
}

impl From<HermitianOperator> for OperatorRepr {
    fn from(op: HermitianOperator) -> Self {
        Self {
            matrix: matrix_to_repr(&op.matrix),
            local_dims: op.local_dims,
        }
    }
}

impl TryFrom<OperatorRepr> for HermitianOperator {
    type Error = Error;

    fn try_from(repr: OperatorRepr) -> Result<Self> {
        HermitianOperator::new(repr.local_dims, matrix_from_repr(&repr.matrix)?)
    }
}
