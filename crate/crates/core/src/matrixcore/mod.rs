//! Hermitian matrices, matrix tuples, and the metrics on tuple space.
//!
//! A tuple (A_1, …, A_n) of k×k Hermitian matrices carries three distances:
//!
//! * the operator norm `max_i ‖A_i − B_i‖`,
//! * the trace norm `sqrt(Σ_i τ_k((A_i − B_i)²))` induced by the normalized
//!   trace τ_k = Tr/k, and
//! * the unitary-orbit trace norm `min_W ‖A − W B W*‖₂` over W ∈ U(k).
//!
//! The first two are exact; the orbit distance is computed by a multi-start
//! Riemannian descent and is an upper bound on the true minimum.

mod io;
mod orbit;
mod random;
mod units;

pub use io::{read_tuple, write_tuple};
pub use orbit::{
    fit_szarek_constant, orbit_distance, sorted_spectrum_distance, szarek_log_bound, OrbitOpts,
};
pub use random::{gue_hermitian, haar_unitary};
pub use units::{align_matrix_units, canonical_unit, hermitian_unit_basis, unit_defect, AlignOpts};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver failed to converge")]
    ConvergenceFailure,
    #[error("matrix is not unitary (‖U*U − I‖ = {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("unit count {got} is not a perfect square of the block count {n}")]
    BadUnitCount { got: usize, n: usize },
    #[error("block count {n} does not divide the dimension {k}")]
    NotDivisible { n: usize, k: usize },
    #[error("matrix-unit defect {defect:.3e} exceeds the threshold {threshold:.3e}")]
    DefectTooLarge { defect: f64, threshold: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad tuple file: {0}")]
    BadFormat(String),
}

/// k×k Hermitian matrix. Construction symmetrizes, so the stored entries
/// satisfy `entries[i][j] == conj(entries[j][i])` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Symmetrize an arbitrary square complex matrix into (M + M*)/2.
    pub fn new(mat: DMatrix<C64>) -> Result<Self, MatrixError> {
        if mat.nrows() != mat.ncols() {
            return Err(MatrixError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(MatrixError::NonFinite);
        }
        let sym = (&mat + mat.adjoint()).scale(0.5);
        Ok(Self { mat: sym })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let k = diag.len();
        let mut m = DMatrix::<C64>::zeros(k, k);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        Self { mat: m }
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            mat: DMatrix::zeros(k, k),
        }
    }

    pub fn identity(k: usize) -> Self {
        Self {
            mat: DMatrix::identity(k, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    /// Largest absolute eigenvalue; equals the operator norm.
    pub fn op_norm(&self) -> f64 {
        self.mat
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0, |acc, l| acc.max(l.abs()))
    }

    /// Normalized trace τ_k = Tr/k (real for Hermitian input).
    pub fn normalized_trace(&self) -> f64 {
        self.mat.trace().re / self.dim() as f64
    }

    /// Trace norm sqrt(τ_k(A*A)).
    pub fn trace_norm(&self) -> f64 {
        (self.mat.norm_squared() / self.dim() as f64).sqrt()
    }

    /// Conjugate by a unitary: U A U*.
    pub fn conjugate(&self, u: &UnitaryMatrix) -> Self {
        Self {
            mat: u.matrix() * &self.mat * u.matrix().adjoint(),
        }
    }

    /// Eigenvalues in ascending order with a matching orthonormal
    /// eigenvector matrix (columns).
    pub fn eig(&self) -> Result<(Vec<f64>, DMatrix<C64>), MatrixError> {
        eig_hermitian(&self.mat)
    }

    /// Ascending eigenvalues only.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.mat.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Clamp the spectrum to [lo, hi], keeping the eigenbasis.
    pub fn clamp_spectrum(&self, lo: f64, hi: f64) -> Result<Self, MatrixError> {
        let (ev, v) = self.eig()?;
        if ev.iter().all(|l| *l >= lo && *l <= hi) {
            return Ok(self.clone());
        }
        let clamped: Vec<f64> = ev.iter().map(|l| l.clamp(lo, hi)).collect();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            clamped.len(),
            clamped.iter().map(|l| C64::new(*l, 0.0)),
        ));
        Ok(Self {
            mat: &v * d * v.adjoint(),
        })
    }
}

/// Ordered tuple of n Hermitian matrices sharing one dimension k.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    k: usize,
    mats: Vec<HermitianMatrix>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<HermitianMatrix>) -> Result<Self, MatrixError> {
        let k = match mats.first() {
            Some(m) => m.dim(),
            None => {
                return Err(MatrixError::DimensionMismatch {
                    expected: 1,
                    got: 0,
                })
            }
        };
        for m in &mats {
            if m.dim() != k {
                return Err(MatrixError::DimensionMismatch {
                    expected: k,
                    got: m.dim(),
                });
            }
        }
        Ok(Self { k, mats })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn mats(&self) -> &[HermitianMatrix] {
        &self.mats
    }

    pub fn get(&self, i: usize) -> &HermitianMatrix {
        &self.mats[i]
    }

    /// max_i ‖A_i‖.
    pub fn op_norm(&self) -> f64 {
        self.mats.iter().fold(0.0, |acc, m| acc.max(m.op_norm()))
    }

    /// sqrt(Σ_i τ_k(A_i²)).
    pub fn trace_norm(&self) -> f64 {
        self.mats
            .iter()
            .map(|m| m.trace_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Operator-norm distance max_i ‖A_i − B_i‖.
    pub fn op_distance(&self, other: &Self) -> Result<f64, MatrixError> {
        self.check_shape(other)?;
        let mut d = 0.0f64;
        for (a, b) in self.mats.iter().zip(other.mats.iter()) {
            d = d.max(operator_norm(&(a.matrix() - b.matrix()))?);
        }
        Ok(d)
    }

    /// Trace-norm distance ‖A − B‖₂.
    pub fn trace_distance(&self, other: &Self) -> Result<f64, MatrixError> {
        self.check_shape(other)?;
        let k = self.k as f64;
        let mut s = 0.0;
        for (a, b) in self.mats.iter().zip(other.mats.iter()) {
            s += (a.matrix() - b.matrix()).norm_squared() / k;
        }
        Ok(s.sqrt())
    }

    /// Simultaneous conjugation (U A_1 U*, …, U A_n U*).
    pub fn conjugate(&self, u: &UnitaryMatrix) -> Self {
        Self {
            k: self.k,
            mats: self.mats.iter().map(|m| m.conjugate(u)).collect(),
        }
    }

    fn check_shape(&self, other: &Self) -> Result<(), MatrixError> {
        if self.k != other.k {
            return Err(MatrixError::DimensionMismatch {
                expected: self.k,
                got: other.k,
            });
        }
        if self.mats.len() != other.mats.len() {
            return Err(MatrixError::DimensionMismatch {
                expected: self.mats.len(),
                got: other.mats.len(),
            });
        }
        Ok(())
    }
}

/// k×k unitary matrix, checked to ‖U*U − I‖ ≤ 1e−10 on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    mat: DMatrix<C64>,
}

impl UnitaryMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self, MatrixError> {
        if mat.nrows() != mat.ncols() {
            return Err(MatrixError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let k = mat.nrows();
        let defect = operator_norm(&(mat.adjoint() * &mat - DMatrix::<C64>::identity(k, k)))?;
        if defect > 1e-10 {
            return Err(MatrixError::NotUnitary { defect });
        }
        Ok(Self { mat })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            mat: DMatrix::identity(k, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }
}

/// Largest singular value of an arbitrary complex matrix.
pub fn operator_norm(m: &DMatrix<C64>) -> Result<f64, MatrixError> {
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(MatrixError::NonFinite);
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(m.singular_values().max())
}

/// max of the operator norms of the tuple entries.
pub fn tuple_op_norm(t: &MatrixTuple) -> f64 {
    t.op_norm()
}

/// Trace norm of the tuple under the normalized trace; ‖(I_k)‖₂ = 1 for
/// every k.
pub fn tuple_trace_norm(t: &MatrixTuple) -> f64 {
    t.trace_norm()
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unitary eigenvector matrix.
pub fn eig_hermitian(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>), MatrixError> {
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(MatrixError::NonFinite);
    }
    let k = m.nrows();
    let se = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(MatrixError::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(k, k);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok((eigenvalues, vectors))
}

/// Direct sum A ⊕ B of square complex matrices.
pub fn direct_sum(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ka, kb) = (a.nrows(), b.nrows());
    let mut out = DMatrix::<C64>::zeros(ka + kb, ka + kb);
    out.view_mut((0, 0), (ka, ka)).copy_from(a);
    out.view_mut((ka, ka), (kb, kb)).copy_from(b);
    out
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(entries: &[(f64, f64)], k: usize) -> DMatrix<C64> {
        DMatrix::from_row_slice(
            k,
            k,
            &entries
                .iter()
                .map(|(re, im)| C64::new(*re, *im))
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn operator_norm_diagonal() {
        let m = HermitianMatrix::from_real_diagonal(&[1.0, -2.0]);
        assert_eq!(m.op_norm(), 2.0);
    }

    #[test]
    fn operator_norm_zero() {
        assert_eq!(HermitianMatrix::zeros(3).op_norm(), 0.0);
    }

    #[test]
    fn operator_norm_nilpotent() {
        // [[0,1],[0,0]] has singular values {1, 0}.
        let m = cm(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)], 2);
        assert!((operator_norm(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_rejects_nan() {
        let m = cm(&[(f64::NAN, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)], 2);
        assert!(matches!(operator_norm(&m), Err(MatrixError::NonFinite)));
    }

    #[test]
    fn tuple_norms() {
        let t = MatrixTuple::new(vec![
            HermitianMatrix::from_real_diagonal(&[1.0, 0.0]),
            HermitianMatrix::from_real_diagonal(&[0.0, 3.0]),
        ])
        .unwrap();
        assert_eq!(tuple_op_norm(&t), 3.0);

        let single_zero = MatrixTuple::new(vec![HermitianMatrix::zeros(4)]).unwrap();
        assert_eq!(tuple_op_norm(&single_zero), 0.0);

        let pair = MatrixTuple::new(vec![
            HermitianMatrix::identity(2),
            HermitianMatrix::new(DMatrix::identity(2, 2).scale(2.0)).unwrap(),
        ])
        .unwrap();
        assert_eq!(tuple_op_norm(&pair), 2.0);
    }

    #[test]
    fn trace_norm_normalization() {
        for k in [1usize, 2, 5, 8] {
            let t = MatrixTuple::new(vec![HermitianMatrix::identity(k)]).unwrap();
            assert!((tuple_trace_norm(&t) - 1.0).abs() < 1e-14, "k={k}");
        }
        // diag(3,0,0,0) at k=4: sqrt(9/4) = 1.5.
        let t = MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(&[
            3.0, 0.0, 0.0, 0.0,
        ])])
        .unwrap();
        assert!((tuple_trace_norm(&t) - 1.5).abs() < 1e-14);
        // (A, A) doubles the square.
        let a = HermitianMatrix::from_real_diagonal(&[1.0, -0.5, 0.25]);
        let one = MatrixTuple::new(vec![a.clone()]).unwrap();
        let two = MatrixTuple::new(vec![a.clone(), a]).unwrap();
        assert!((tuple_trace_norm(&two) - 2f64.sqrt() * tuple_trace_norm(&one)).abs() < 1e-14);
    }

    #[test]
    fn trace_norm_dominated_by_op_norm() {
        // ‖t‖₂ ≤ sqrt(n)·‖t‖ since τ_k is contractive.
        let mut rng_seed = 11u64;
        for n in 1..4usize {
            for k in [2usize, 3, 5] {
                let mats: Vec<HermitianMatrix> = (0..n)
                    .map(|i| {
                        rng_seed += 1;
                        gue_hermitian(k, rng_seed + i as u64, 1.0)
                    })
                    .collect();
                let t = MatrixTuple::new(mats).unwrap();
                assert!(tuple_trace_norm(&t) <= (n as f64).sqrt() * tuple_op_norm(&t) + 1e-12);
            }
        }
    }

    #[test]
    fn eig_sorted_and_reconstructs() {
        let m = HermitianMatrix::from_real_diagonal(&[2.0, 1.0]);
        let (ev, v) = m.eig().unwrap();
        assert_eq!(ev, vec![1.0, 2.0]);
        // Column swap of the identity, up to phase.
        assert!((v[(0, 1)].norm() - 1.0).abs() < 1e-12);
        assert!((v[(1, 0)].norm() - 1.0).abs() < 1e-12);

        let pauli_x = HermitianMatrix::new(cm(
            &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)],
            2,
        ))
        .unwrap();
        let (ev, _) = pauli_x.eig().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_random_reconstruction_residual() {
        let m = gue_hermitian(8, 7, 1.0);
        let (ev, v) = m.eig().unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            8,
            ev.iter().map(|l| C64::new(*l, 0.0)),
        ));
        let recon = &v * d * v.adjoint();
        let scale = m.op_norm().max(1e-300);
        assert!(operator_norm(&(recon - m.matrix())).unwrap() <= 1e-9 * scale);
        assert!(
            operator_norm(&(v.adjoint() * &v - DMatrix::<C64>::identity(8, 8))).unwrap() <= 1e-10
        );
    }

    #[test]
    fn tuple_shape_checks() {
        let a = MatrixTuple::new(vec![HermitianMatrix::zeros(2)]).unwrap();
        let b = MatrixTuple::new(vec![HermitianMatrix::zeros(3)]).unwrap();
        assert!(a.op_distance(&b).is_err());
    }
}
