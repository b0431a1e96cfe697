//! Alignment of approximate matrix units.
//!
//! Given n² matrices E_st ∈ M_k(ℂ) approximately satisfying the matrix-unit
//! relations, `align_matrix_units` produces a unitary W conjugating the
//! family close to the canonical units I_{k/n} ⊗ e_st. The construction:
//! spectral truncation of (E_11 + E_11*)/2 at 1/2 yields the range basis of
//! the first diagonal unit; the partial isometries E_t1 transport that basis
//! into the other diagonal ranges; a polar decomposition orthonormalizes the
//! assembled frame.

use nalgebra::DMatrix;

use super::{eig_hermitian, operator_norm, MatrixError, UnitaryMatrix};
use crate::C64;

/// Threshold settings for the alignment.
#[derive(Debug, Clone)]
pub struct AlignOpts {
    /// Maximal accepted relation defect of the input family.
    pub defect_threshold: f64,
}

impl Default for AlignOpts {
    fn default() -> Self {
        Self {
            defect_threshold: 0.25,
        }
    }
}

/// Canonical unit I_m ⊗ e_st at dimension m·n, with blocks indexed
/// (block, slot) so that entry ((a,i),(b,j)) = δ_ab δ_is δ_jt.
pub fn canonical_unit(m: usize, n: usize, s: usize, t: usize) -> DMatrix<C64> {
    let k = m * n;
    let mut out = DMatrix::<C64>::zeros(k, k);
    for a in 0..m {
        out[(a * n + s, a * n + t)] = C64::new(1.0, 0.0);
    }
    out
}

/// Self-adjoint basis of M_n with n² elements: the diagonal units e_ss, the
/// symmetric combinations e_st + e_ts, and the antisymmetric combinations
/// i·(e_st − e_ts) for s < t. Raw units are recovered by
/// e_st = (sym − i·asym)/2.
pub fn hermitian_unit_basis(n: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(n * n);
    for s in 0..n {
        let mut m = DMatrix::<C64>::zeros(n, n);
        m[(s, s)] = C64::new(1.0, 0.0);
        out.push(m);
    }
    for s in 0..n {
        for t in (s + 1)..n {
            let mut sym = DMatrix::<C64>::zeros(n, n);
            sym[(s, t)] = C64::new(1.0, 0.0);
            sym[(t, s)] = C64::new(1.0, 0.0);
            out.push(sym);
            let mut asym = DMatrix::<C64>::zeros(n, n);
            asym[(s, t)] = C64::new(0.0, 1.0);
            asym[(t, s)] = C64::new(0.0, -1.0);
            out.push(asym);
        }
    }
    out
}

/// Max deviation of the family from the matrix-unit relations:
/// products E_{s1t1}E_{s2t2} − δ_{t1s2}E_{s1t2}, the adjoint relation
/// E_st* = E_ts, and the partition of identity Σ E_ss = I.
pub fn unit_defect(units: &[DMatrix<C64>], n: usize) -> Result<f64, MatrixError> {
    if units.len() != n * n {
        return Err(MatrixError::BadUnitCount {
            got: units.len(),
            n,
        });
    }
    let k = units[0].nrows();
    let e = |s: usize, t: usize| &units[s * n + t];
    let mut defect = 0.0f64;
    for s1 in 0..n {
        for t1 in 0..n {
            defect = defect.max(operator_norm(&(e(s1, t1).adjoint() - e(t1, s1)))?);
            for s2 in 0..n {
                for t2 in 0..n {
                    let mut prod = e(s1, t1) * e(s2, t2);
                    if t1 == s2 {
                        prod -= e(s1, t2);
                    }
                    defect = defect.max(operator_norm(&prod)?);
                }
            }
        }
    }
    let mut sum = DMatrix::<C64>::zeros(k, k);
    for s in 0..n {
        sum += e(s, s);
    }
    defect = defect.max(operator_norm(&(sum - DMatrix::<C64>::identity(k, k)))?);
    Ok(defect)
}

fn polar_unitary(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    svd.u.expect("requested") * svd.v_t.expect("requested")
}

/// Align approximate matrix units to the canonical family. The units are
/// indexed (s, t) row-major: units[s·n + t] ≈ E_st. Returns the conjugating
/// unitary and the residual Σ_{s,t} ‖W* E_st W − I_{k/n} ⊗ e_st‖.
pub fn align_matrix_units(
    units: &[DMatrix<C64>],
    n: usize,
    opts: &AlignOpts,
) -> Result<(UnitaryMatrix, f64), MatrixError> {
    if units.len() != n * n {
        return Err(MatrixError::BadUnitCount {
            got: units.len(),
            n,
        });
    }
    let k = units[0].nrows();
    let defect = unit_defect(units, n)?;
    if defect > opts.defect_threshold {
        return Err(MatrixError::DefectTooLarge {
            defect,
            threshold: opts.defect_threshold,
        });
    }
    if k % n != 0 {
        return Err(MatrixError::NotDivisible { n, k });
    }
    let m = k / n;
    let e = |s: usize, t: usize| &units[s * n + t];

    // Range basis of the first diagonal unit via spectral truncation at 1/2.
    let h = (e(0, 0) + e(0, 0).adjoint()).scale(0.5);
    let (ev, vecs) = eig_hermitian(&h)?;
    let above: usize = ev.iter().filter(|l| **l > 0.5).count();
    if above != m {
        return Err(MatrixError::DefectTooLarge {
            defect: defect.max(0.5),
            threshold: opts.defect_threshold,
        });
    }
    // Columns k−m..k hold the eigenvectors with eigenvalue > 1/2.
    let basis: Vec<nalgebra::DVector<C64>> = (k - m..k).map(|j| vecs.column(j).into()).collect();

    let mut frame = DMatrix::<C64>::zeros(k, k);
    for (a, v) in basis.iter().enumerate() {
        for t in 0..n {
            let col = if t == 0 { v.clone() } else { e(t, 0) * v };
            frame.set_column(a * n + t, &col);
        }
    }
    let w = polar_unitary(&frame);

    let mut residual = 0.0;
    for s in 0..n {
        for t in 0..n {
            let target = canonical_unit(m, n, s, t);
            residual += operator_norm(&(w.adjoint() * e(s, t) * &w - target))?;
        }
    }
    let w = UnitaryMatrix::new(w)?;
    Ok((w, residual))
}
