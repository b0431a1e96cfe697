//! Microstate composition: orthogonal sums, free-product padding, and
//! recovery of base microstates from amplified ones.

use nalgebra::DMatrix;

use super::{Microstate, MicrostateError};
use crate::matrixcore::{
    align_matrix_units, direct_sum, haar_unitary, kron, operator_norm, AlignOpts,
    HermitianMatrix, MatrixTuple, UnitaryMatrix,
};
use crate::C64;

/// Orthogonal sum of two microstates: the (n+m)-tuple
/// (A_1⊕0, …, A_n⊕0, 0⊕B_1, …, 0⊕B_m) at dimension k₁+k₂.
pub fn compose_direct_sum(a: &Microstate, b: &Microstate) -> Result<MatrixTuple, MicrostateError> {
    let (k1, k2) = (a.tuple.dim(), b.tuple.dim());
    let mut mats = Vec::with_capacity(a.tuple.len() + b.tuple.len());
    for m in a.tuple.mats() {
        mats.push(HermitianMatrix::new(direct_sum(
            m.matrix(),
            &DMatrix::zeros(k2, k2),
        ))?);
    }
    for m in b.tuple.mats() {
        mats.push(HermitianMatrix::new(direct_sum(
            &DMatrix::zeros(k1, k1),
            m.matrix(),
        ))?);
    }
    Ok(MatrixTuple::new(mats)?)
}

/// Pad a joint free-product microstate with independent per-factor blocks:
/// the i-th generator of the first factor becomes base_i ⊕ A_i^{(1)} ⊕ … ⊕
/// A_i^{(q)}, and similarly for the second factor with the B blocks. The
/// base carries n_left + n_right generators; every block pair must share a
/// dimension. Block-diagonal norms are maxima of block norms, so the
/// one-sided defect of the output never exceeds the worst constituent's.
pub fn compose_free_product(
    base: &MatrixTuple,
    n_left: usize,
    blocks_left: &[Microstate],
    blocks_right: &[Microstate],
) -> Result<MatrixTuple, MicrostateError> {
    let n_right = base
        .len()
        .checked_sub(n_left)
        .ok_or_else(|| MicrostateError::LayoutMismatch("base shorter than n_left".into()))?;
    if blocks_left.len() != blocks_right.len() {
        return Err(MicrostateError::LayoutMismatch(format!(
            "{} left blocks vs {} right blocks",
            blocks_left.len(),
            blocks_right.len()
        )));
    }
    for (i, (bl, br)) in blocks_left.iter().zip(blocks_right.iter()).enumerate() {
        if bl.tuple.len() != n_left {
            return Err(MicrostateError::LayoutMismatch(format!(
                "left block {i} has {} generators, expected {n_left}",
                bl.tuple.len()
            )));
        }
        if br.tuple.len() != n_right {
            return Err(MicrostateError::LayoutMismatch(format!(
                "right block {i} has {} generators, expected {n_right}",
                br.tuple.len()
            )));
        }
        if bl.tuple.dim() != br.tuple.dim() {
            return Err(MicrostateError::LayoutMismatch(format!(
                "block {i} dimensions differ: {} vs {}",
                bl.tuple.dim(),
                br.tuple.dim()
            )));
        }
    }
    let mut mats = Vec::with_capacity(base.len());
    for i in 0..n_left {
        let mut acc = base.get(i).matrix().clone();
        for bl in blocks_left {
            acc = direct_sum(&acc, bl.tuple.get(i).matrix());
        }
        mats.push(HermitianMatrix::new(acc)?);
    }
    for j in 0..n_right {
        let mut acc = base.get(n_left + j).matrix().clone();
        for br in blocks_right {
            acc = direct_sum(&acc, br.tuple.get(j).matrix());
        }
        mats.push(HermitianMatrix::new(acc)?);
    }
    Ok(MatrixTuple::new(mats)?)
}

/// Block-repeat two factor models to a common size and put them in general
/// position with a Haar rotation of the second family. Used both by the
/// free-product target estimator and the MF model builder.
pub(crate) fn rotated_pair_model(
    left: &MatrixTuple,
    right: &MatrixTuple,
    size: usize,
    seed: u64,
) -> Result<MatrixTuple, MicrostateError> {
    let lrep = block_repeat(left, size)?;
    let rrep = block_repeat(right, size)?;
    let u = haar_unitary(size, seed);
    let mut mats = lrep.mats().to_vec();
    mats.extend(rrep.conjugate(&u).mats().iter().cloned());
    Ok(MatrixTuple::new(mats)?)
}

/// Tile a model along the diagonal to reach `size`; requires divisibility.
pub(crate) fn block_repeat(model: &MatrixTuple, size: usize) -> Result<MatrixTuple, MicrostateError> {
    let k0 = model.dim();
    if size % k0 != 0 {
        return Err(MicrostateError::LayoutMismatch(format!(
            "size {size} is not a multiple of the model dimension {k0}"
        )));
    }
    let reps = size / k0;
    let eye = DMatrix::<C64>::identity(reps, reps);
    let mats: Vec<HermitianMatrix> = model
        .mats()
        .iter()
        .map(|m| HermitianMatrix::new(kron(&eye, m.matrix())).expect("finite"))
        .collect();
    Ok(MatrixTuple::new(mats)?)
}

/// Result of compressing an amplified tuple back to the base algebra.
#[derive(Debug, Clone)]
pub struct CompressedTuple {
    /// Recovered base tuple at dimension k/n.
    pub base: MatrixTuple,
    /// Unitary aligning the trailing unit candidates to canonical form.
    pub witness: UnitaryMatrix,
    /// Σ ‖W*E_stW − I⊗e_st‖ over the aligned units.
    pub unit_residual: f64,
    /// Per-generator extraction residual ‖W*A_iW − B_i⊗I_n‖.
    pub extraction_residuals: Vec<f64>,
}

/// Recover base-algebra microstates from amplified ones: the tuple carries
/// m base images followed by the n² self-adjoint unit combinations. The
/// units are aligned to canonical form; each base image is conjugated and
/// its (1,1) block corner in the slot refinement is extracted.
pub fn compress_by_matrix_units(
    t: &MatrixTuple,
    n: usize,
    opts: &AlignOpts,
) -> Result<CompressedTuple, MicrostateError> {
    let unit_count = n * n;
    let m = t
        .len()
        .checked_sub(unit_count)
        .ok_or_else(|| MicrostateError::LayoutMismatch(format!(
            "tuple has {} entries, needs at least the n² = {unit_count} unit candidates",
            t.len()
        )))?;
    let k = t.dim();
    // Rebuild the raw units e_st from the self-adjoint combinations.
    let sa: Vec<&HermitianMatrix> = t.mats()[m..].iter().collect();
    let mut raw: Vec<DMatrix<C64>> = vec![DMatrix::zeros(k, k); unit_count];
    for s in 0..n {
        raw[s * n + s] = sa[s].matrix().clone();
    }
    let mut pos = 0;
    for s in 0..n {
        for tt in (s + 1)..n {
            let sym = sa[n + 2 * pos].matrix();
            let asym = sa[n + 2 * pos + 1].matrix();
            let i = C64::new(0.0, 1.0);
            let mut e_st = DMatrix::<C64>::zeros(k, k);
            let mut e_ts = DMatrix::<C64>::zeros(k, k);
            for (dst, (a, b)) in e_st.iter_mut().zip(sym.iter().zip(asym.iter())) {
                *dst = (a - i * b) * 0.5;
            }
            for (dst, (a, b)) in e_ts.iter_mut().zip(sym.iter().zip(asym.iter())) {
                *dst = (a + i * b) * 0.5;
            }
            raw[s * n + tt] = e_st;
            raw[tt * n + s] = e_ts;
            pos += 1;
        }
    }
    let (witness, unit_residual) = align_matrix_units(&raw, n, opts)?;
    let kk = k / n;
    let mut base_mats = Vec::with_capacity(m);
    let mut extraction_residuals = Vec::with_capacity(m);
    let eye_n = DMatrix::<C64>::identity(n, n);
    for i in 0..m {
        let c = witness.matrix().adjoint() * t.get(i).matrix() * witness.matrix();
        let mut b = DMatrix::<C64>::zeros(kk, kk);
        for a in 0..kk {
            for bb in 0..kk {
                b[(a, bb)] = c[(a * n, bb * n)];
            }
        }
        let b = (b.clone() + b.adjoint()).scale(0.5);
        extraction_residuals.push(operator_norm(&(c - kron(&b, &eye_n)))?);
        base_mats.push(HermitianMatrix::new(b)?);
    }
    Ok(CompressedTuple {
        base: MatrixTuple::new(base_mats)?,
        witness,
        unit_residual,
        extraction_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::gue_hermitian;
    use crate::microstates::{MicrostateParams, Presentation};
    use crate::ncpoly::default_battery;

    fn ms(tuple: MatrixTuple) -> Microstate {
        let battery = default_battery(tuple.len(), 1).unwrap();
        let k = tuple.dim();
        Microstate {
            tuple,
            defect: 0.0,
            params: MicrostateParams::new(k, 1e-6, 10.0, battery),
        }
    }

    #[test]
    fn direct_sum_blocks_and_spectra() {
        let a = ms(MatrixTuple::new(vec![gue_hermitian(3, 1, 1.0)]).unwrap());
        let b = ms(MatrixTuple::new(vec![gue_hermitian(2, 2, 1.0)]).unwrap());
        let sum = compose_direct_sum(&a, &b).unwrap();
        assert_eq!(sum.dim(), 5);
        assert_eq!(sum.len(), 2);
        // Eigenvalues of A⊕0 are eig(A) plus padded zeros.
        let mut expected = a.tuple.get(0).eigenvalues();
        expected.extend([0.0, 0.0]);
        expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let got = sum.get(0).eigenvalues();
        for (e, g) in expected.iter().zip(got.iter()) {
            assert!((e - g).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_sum_of_scalars() {
        let a = ms(MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(&[2.0])]).unwrap());
        let b = ms(MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(&[-1.0])]).unwrap());
        let sum = compose_direct_sum(&a, &b).unwrap();
        assert_eq!(sum.dim(), 2);
        assert_eq!(sum.get(0).matrix()[(0, 0)].re, 2.0);
        assert_eq!(sum.get(0).matrix()[(1, 1)].re, 0.0);
        assert_eq!(sum.get(1).matrix()[(1, 1)].re, -1.0);
    }

    #[test]
    fn free_product_padding_zero_blocks_is_identity() {
        let base = MatrixTuple::new(vec![gue_hermitian(4, 3, 1.0), gue_hermitian(4, 4, 1.0)])
            .unwrap();
        let out = compose_free_product(&base, 1, &[], &[]).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn free_product_padding_preserves_norms_with_repeated_blocks() {
        let x = gue_hermitian(3, 5, 1.0);
        let y = gue_hermitian(3, 6, 1.0);
        let base = MatrixTuple::new(vec![x.clone(), y.clone()]).unwrap();
        let bl = ms(MatrixTuple::new(vec![x.clone()]).unwrap());
        let br = ms(MatrixTuple::new(vec![y.clone()]).unwrap());
        let out = compose_free_product(&base, 1, &[bl], &[br]).unwrap();
        assert_eq!(out.dim(), 6);
        assert!((out.get(0).op_norm() - x.op_norm()).abs() < 1e-12);
        assert!((out.get(1).op_norm() - y.op_norm()).abs() < 1e-12);
    }

    #[test]
    fn free_product_layout_mismatch() {
        let base = MatrixTuple::new(vec![gue_hermitian(2, 1, 1.0), gue_hermitian(2, 2, 1.0)])
            .unwrap();
        let bl = ms(MatrixTuple::new(vec![gue_hermitian(2, 3, 1.0)]).unwrap());
        assert!(compose_free_product(&base, 1, &[bl], &[]).is_err());
    }

    #[test]
    fn compress_recovers_exact_amplification() {
        // Amplified tuple: base ⊗ I_2 plus the unit combinations.
        let base = Presentation::MatrixModel {
            tuple: MatrixTuple::new(vec![gue_hermitian(3, 7, 1.0)]).unwrap(),
        };
        let p = Presentation::Amplification {
            base: Box::new(base.clone()),
            n: 2,
        };
        let model = p.resolve_model().unwrap();
        assert_eq!(model.dim(), 6);
        let out = compress_by_matrix_units(&model, 2, &AlignOpts::default()).unwrap();
        assert!(out.unit_residual <= 1e-9, "units {}", out.unit_residual);
        let max_extract = out
            .extraction_residuals
            .iter()
            .fold(0.0f64, |a, r| a.max(*r));
        assert!(max_extract <= 1e-9, "extract {max_extract}");
        // Base recovered up to the aligning unitary: compare spectra.
        let want = base.resolve_model().unwrap().get(0).eigenvalues();
        let got = out.base.get(0).eigenvalues();
        for (w, g) in want.iter().zip(got.iter()) {
            assert!((w - g).abs() < 1e-9);
        }
    }

    #[test]
    fn compress_handles_conjugated_and_perturbed_input() {
        let base = Presentation::MatrixModel {
            tuple: MatrixTuple::new(vec![gue_hermitian(2, 9, 1.0)]).unwrap(),
        };
        let p = Presentation::Amplification {
            base: Box::new(base),
            n: 2,
        };
        let model = p.resolve_model().unwrap();
        let u = haar_unitary(4, 11);
        let rotated = model.conjugate(&u);
        let out = compress_by_matrix_units(&rotated, 2, &AlignOpts::default()).unwrap();
        assert!(out.unit_residual <= 1e-8);
        assert!(out.extraction_residuals.iter().all(|r| *r <= 1e-8));

        // Entry-wise perturbation at 1e−4 keeps residuals below 1e−2.
        let mats: Vec<HermitianMatrix> = rotated
            .mats()
            .iter()
            .enumerate()
            .map(|(i, mref)| {
                let noise = gue_hermitian(4, 100 + i as u64, 1.0);
                HermitianMatrix::new(mref.matrix() + noise.matrix().scale(1e-4)).unwrap()
            })
            .collect();
        let noisy = MatrixTuple::new(mats).unwrap();
        let out = compress_by_matrix_units(&noisy, 2, &AlignOpts::default()).unwrap();
        assert!(out.unit_residual <= 1e-2, "units {}", out.unit_residual);
        assert!(out.extraction_residuals.iter().all(|r| *r <= 1e-2));
    }
}
