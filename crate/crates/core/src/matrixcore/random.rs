//! Seeded random matrix sources: Haar unitaries and GUE Hermitian matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{HermitianMatrix, UnitaryMatrix};
use crate::C64;

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary, deterministic in the seed.
///
/// Complex Ginibre followed by QR; the R diagonal phases are absorbed into Q
/// so the distribution is exactly Haar rather than QR-convention biased.
pub fn haar_unitary(k: usize, seed: u64) -> UnitaryMatrix {
    assert!(k >= 1, "dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<C64>::from_fn(k, k, |_, _| complex_gaussian(&mut rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { C64::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..k {
            u[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(u).expect("QR factor is unitary")
}

/// GUE Hermitian matrix with entry variance scale²/k, deterministic in the
/// seed. The limiting spectral radius is 2·scale.
pub fn gue_hermitian(k: usize, seed: u64, scale: f64) -> HermitianMatrix {
    assert!(k >= 1, "dimension must be positive");
    assert!(scale > 0.0, "scale must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = scale / (k as f64).sqrt();
    let mut m = DMatrix::<C64>::zeros(k, k);
    for i in 0..k {
        let d: f64 = rng.sample(StandardNormal);
        m[(i, i)] = C64::new(sigma * d, 0.0);
        for j in (i + 1)..k {
            let z = complex_gaussian(&mut rng) * sigma;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianMatrix::new(m).expect("finite by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::operator_norm;
    use nalgebra::DMatrix;

    #[test]
    fn haar_scalar_has_unit_modulus() {
        let u = haar_unitary(1, 3);
        assert!((u.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_deterministic_in_seed() {
        let a = haar_unitary(5, 42);
        let b = haar_unitary(5, 42);
        assert_eq!(a.matrix(), b.matrix());
        let c = haar_unitary(5, 43);
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn haar_column_entry_uniformity() {
        // E|U_00|² = 1/k for Haar; 10_000 samples at k=4.
        let k = 4;
        let mut acc = 0.0;
        for seed in 0..10_000u64 {
            let u = haar_unitary(k, seed);
            acc += u.matrix()[(0, 0)].norm_sqr();
        }
        let mean = acc / 10_000.0;
        assert!((mean - 0.25).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn haar_unitarity() {
        for k in [2usize, 4, 9] {
            let u = haar_unitary(k, 7);
            let defect =
                operator_norm(&(u.matrix().adjoint() * u.matrix() - DMatrix::identity(k, k)))
                    .unwrap();
            assert!(defect <= 1e-10);
        }
    }

    #[test]
    fn gue_scalar_is_real_gaussian() {
        let m = gue_hermitian(1, 9, 1.0);
        assert_eq!(m.matrix()[(0, 0)].im, 0.0);
    }

    #[test]
    fn gue_deterministic_in_seed() {
        assert_eq!(
            gue_hermitian(6, 11, 0.5).matrix(),
            gue_hermitian(6, 11, 0.5).matrix()
        );
    }

    #[test]
    fn gue_spectral_radius_near_semicircle_edge() {
        let m = gue_hermitian(200, 123, 1.0);
        let r = m.op_norm();
        assert!((r - 2.0).abs() < 0.15, "spectral radius = {r}");
    }
}
