//! Microstate samplers.
//!
//! `sample_exact_spectrum` builds zero-defect representatives for single
//! generators with prescribed eigenvalue multiplicities. `sample_penalty`
//! is the constructive nonemptiness searcher: gradient descent on the
//! squared membership defect from a GUE start, with the spectrum clipped to
//! [−R, R] after every step. `exact_witness` produces zero-defect
//! representatives directly from resolvable presentations when the
//! dimension is compatible.

use nalgebra::DMatrix;

use super::{
    membership_defect, target_norms, Microstate, MicrostateError, MicrostateParams, Presentation,
};
use crate::matrixcore::{gue_hermitian, haar_unitary, kron, HermitianMatrix, MatrixTuple};
use crate::ncpoly::TupleEvaluator;
use crate::C64;

/// Haar-conjugated diagonal with the prescribed spectrum multiplicities.
/// The membership defect against any battery depends only on the spectrum
/// and is ≤ 1e−10.
pub fn sample_exact_spectrum(
    points: &[f64],
    multiplicities: &[usize],
    k: usize,
    seed: u64,
    params: &MicrostateParams,
) -> Result<Microstate, MicrostateError> {
    if multiplicities.len() != points.len()
        || multiplicities.iter().any(|m| *m == 0)
        || multiplicities.iter().sum::<usize>() != k
    {
        return Err(MicrostateError::BadMultiplicities {
            multiplicities: multiplicities.to_vec(),
            k,
        });
    }
    let mut diag = Vec::with_capacity(k);
    for (p, m) in points.iter().zip(multiplicities.iter()) {
        diag.extend(std::iter::repeat(*p).take(*m));
    }
    let u = haar_unitary(k, seed);
    let tuple = MatrixTuple::new(vec![
        HermitianMatrix::from_real_diagonal(&diag).conjugate(&u)
    ])?;
    let presentation = Presentation::Spectrum {
        points: points.to_vec(),
    };
    let targets = target_norms(&presentation, &params.battery)?;
    let (defect, _) = membership_defect(&tuple, &targets.values, params)?;
    Ok(Microstate {
        tuple,
        defect,
        params: params.clone(),
    })
}

/// Balanced-as-possible exact representative at dimension k, when the
/// presentation admits one: all spectrum points present, resolved models
/// tensored up to multiples, orthogonal sums composed blockwise. Free
/// products get per-factor representatives in general position (a Haar
/// rotation on the right factor); their mixed-word defect is not zero and
/// must be measured by the caller.
pub fn exact_witness(p: &Presentation, k: usize, seed: u64) -> Option<MatrixTuple> {
    match p {
        Presentation::Spectrum { points } => {
            let n = points.len();
            if k < n {
                return None;
            }
            let mut diag = Vec::with_capacity(k);
            for (i, pt) in points.iter().enumerate() {
                let m = k / n + usize::from(i < k % n);
                diag.extend(std::iter::repeat(*pt).take(m));
            }
            MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(&diag)]).ok()
        }
        Presentation::FreeProduct { left, right } => {
            let lw = exact_witness(left, k, seed)?;
            let rw = exact_witness(right, k, seed.wrapping_add(1))?;
            let u = haar_unitary(k, seed.wrapping_add(2));
            let mut mats = lw.mats().to_vec();
            mats.extend(rw.conjugate(&u).mats().iter().cloned());
            MatrixTuple::new(mats).ok()
        }
        Presentation::DirectSum { left, right } => {
            let lm = left.resolve_model()?;
            let rm = right.resolve_model()?;
            let total = lm.dim() + rm.dim();
            if total == 0 || k < total {
                return None;
            }
            // Split k proportionally to the resolved model dimensions.
            let k1 = ((k * lm.dim()) as f64 / total as f64).round() as usize;
            let k1 = k1.clamp(lm.dim(), k - rm.dim());
            let k2 = k - k1;
            let lw = exact_witness(left, k1, seed)?;
            let rw = exact_witness(right, k2, seed.wrapping_add(3))?;
            let mut mats = Vec::new();
            for m in lw.mats() {
                mats.push(
                    HermitianMatrix::new(crate::matrixcore::direct_sum(
                        m.matrix(),
                        &DMatrix::zeros(k2, k2),
                    ))
                    .ok()?,
                );
            }
            for m in rw.mats() {
                mats.push(
                    HermitianMatrix::new(crate::matrixcore::direct_sum(
                        &DMatrix::zeros(k1, k1),
                        m.matrix(),
                    ))
                    .ok()?,
                );
            }
            MatrixTuple::new(mats).ok()
        }
        _ => {
            let model = p.resolve_model()?;
            let k0 = model.dim();
            if k % k0 != 0 {
                return None;
            }
            let reps = k / k0;
            let eye = DMatrix::<C64>::identity(reps, reps);
            let mats: Vec<HermitianMatrix> = model
                .mats()
                .iter()
                .map(|m| HermitianMatrix::new(kron(m.matrix(), &eye)).expect("finite"))
                .collect();
            MatrixTuple::new(mats).ok()
        }
    }
}

/// Options for the penalty sampler.
#[derive(Debug, Clone)]
pub struct PenaltyOpts {
    /// Initial step size for the descent.
    pub step: f64,
    /// GUE start scale relative to the radius.
    pub start_scale: f64,
}

impl Default for PenaltyOpts {
    fn default() -> Self {
        Self {
            step: 0.05,
            start_scale: 0.5,
        }
    }
}

/// Gradient-based minimization of the squared membership defect from a GUE
/// start, with spectral clipping to [−R, R] each step. Returns the best
/// iterate with its defect; the defect may exceed ε and the caller decides
/// what to do with it.
pub fn sample_penalty(
    p: &Presentation,
    params: &MicrostateParams,
    seed: u64,
    iters: usize,
) -> Result<Microstate, MicrostateError> {
    let targets = target_norms(p, &params.battery)?;
    let n = p.generator_count();
    let k = params.k;
    let scale = (params.radius * PenaltyOpts::default().start_scale).max(0.1);
    let mats: Vec<HermitianMatrix> = (0..n)
        .map(|i| gue_hermitian(k, seed.wrapping_add(i as u64), scale))
        .collect();
    let mut current = MatrixTuple::new(mats)?;
    let mut current_obj = penalty_objective(&current, &targets.values, params)?;
    let mut best = current.clone();
    let (mut best_defect, _) = membership_defect(&current, &targets.values, params)?;
    let mut step = PenaltyOpts::default().step;

    'outer: for _ in 0..iters {
        let grads = penalty_gradient(&current, &targets.values, params)?;
        let grad_norm: f64 = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        if grad_norm <= 1e-14 {
            break;
        }
        let mut t = step;
        for _ in 0..30 {
            let proposal_mats: Result<Vec<HermitianMatrix>, MicrostateError> = current
                .mats()
                .iter()
                .zip(grads.iter())
                .map(|(a, g)| {
                    let moved = a.matrix() - g.scale(t);
                    Ok(HermitianMatrix::new(moved)?
                        .clamp_spectrum(-params.radius, params.radius)?)
                })
                .collect();
            let proposal = MatrixTuple::new(proposal_mats?)?;
            let obj = penalty_objective(&proposal, &targets.values, params)?;
            if obj < current_obj {
                current = proposal;
                current_obj = obj;
                step = t * 1.5;
                let (defect, _) = membership_defect(&current, &targets.values, params)?;
                if defect < best_defect {
                    best_defect = defect;
                    best = current.clone();
                }
                continue 'outer;
            }
            t *= 0.5;
            if t < 1e-18 {
                break 'outer;
            }
        }
        break;
    }
    Ok(Microstate {
        tuple: best,
        defect: best_defect,
        params: params.clone(),
    })
}

fn penalty_objective(
    t: &MatrixTuple,
    targets: &[f64],
    params: &MicrostateParams,
) -> Result<f64, MicrostateError> {
    let mut ev = TupleEvaluator::new(t);
    let mut obj = 0.0;
    for (poly, target) in params.battery.polys().iter().zip(targets.iter()) {
        let m = ev.eval_poly(poly)?;
        let norm = crate::matrixcore::operator_norm(&m)?;
        obj += (norm - target) * (norm - target);
    }
    Ok(obj)
}

/// Gradient of Σ_j (‖P_j(t)‖ − τ_j)² with respect to each Hermitian entry.
/// Uses the top singular pair of each polynomial value and the product rule
/// over letter positions.
fn penalty_gradient(
    t: &MatrixTuple,
    targets: &[f64],
    params: &MicrostateParams,
) -> Result<Vec<DMatrix<C64>>, MicrostateError> {
    let k = t.dim();
    let n = t.len();
    let mut ev = TupleEvaluator::new(t);
    let mut grads = vec![DMatrix::<C64>::zeros(k, k); n];
    for (poly, target) in params.battery.polys().iter().zip(targets.iter()) {
        let m = ev.eval_poly(poly)?;
        let svd = m.clone().svd(true, true);
        let sigma = svd.singular_values.max();
        let residual = sigma - target;
        if residual == 0.0 {
            continue;
        }
        // Average the rank-one subgradients over all singular pairs within
        // a residual-sized window of the top. Near the optimum several
        // singular values tie at the maximum and the pure top-pair
        // subgradient zigzags between them.
        let window = (sigma * 1e-12).max(residual.abs() * 0.5);
        let active: Vec<usize> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s >= sigma - window)
            .map(|(i, _)| i)
            .collect();
        let weight = 1.0 / active.len() as f64;
        let mut vu = DMatrix::<C64>::zeros(k, k);
        for idx in active {
            let u1 = svd.u.as_ref().expect("requested").column(idx).into_owned();
            let v1 = svd
                .v_t
                .as_ref()
                .expect("requested")
                .row(idx)
                .adjoint()
                .into_owned();
            vu += (&v1 * u1.adjoint()).scale(weight);
        }
        // dσ = Re tr(dA · Σ_w μ_w Σ_{positions of A} post·v₁u₁*·pre).
        for (word, coeff) in poly.terms() {
            for (pos, letter) in word.0.iter().enumerate() {
                let i = *letter as usize;
                let pre = ev.word_value(&crate::ncpoly::Word(word.0[..pos].to_vec()))?;
                let post = ev.word_value(&crate::ncpoly::Word(word.0[pos + 1..].to_vec()))?;
                let chunk = (&post * &vu * &pre).scale(2.0 * residual);
                let chunk = scale_complex(chunk, *coeff);
                grads[i] += chunk;
            }
        }
    }
    // Project onto Hermitian directions.
    for g in grads.iter_mut() {
        let herm = (g.clone() + g.adjoint()).scale(0.5);
        *g = herm;
    }
    Ok(grads)
}

fn scale_complex(mut m: DMatrix<C64>, c: C64) -> DMatrix<C64> {
    for e in m.iter_mut() {
        *e *= c;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::default_battery;

    fn spectrum01() -> Presentation {
        Presentation::Spectrum {
            points: vec![0.0, 1.0],
        }
    }

    #[test]
    fn exact_spectrum_eigenvalues() {
        let p = spectrum01();
        let battery = p.recommended_battery(3).unwrap();
        let params = MicrostateParams::new(4, 1e-8, p.default_radius(), battery);
        let ms = sample_exact_spectrum(&[0.0, 1.0], &[2, 2], 4, 5, &params).unwrap();
        let ev = ms.tuple.get(0).eigenvalues();
        assert!((ev[0]).abs() < 1e-12 && (ev[1]).abs() < 1e-12);
        assert!((ev[2] - 1.0).abs() < 1e-12 && (ev[3] - 1.0).abs() < 1e-12);
        assert!(ms.defect <= 1e-10, "defect = {}", ms.defect);
    }

    #[test]
    fn exact_spectrum_single_point_is_scalar() {
        let p = Presentation::Spectrum { points: vec![2.5] };
        let battery = p.recommended_battery(2).unwrap();
        let params = MicrostateParams::new(3, 1e-8, p.default_radius(), battery);
        let ms = sample_exact_spectrum(&[2.5], &[3], 3, 1, &params).unwrap();
        let m = ms.tuple.get(0).matrix();
        let scalar = DMatrix::<C64>::identity(3, 3).scale(2.5);
        assert!(crate::matrixcore::operator_norm(&(m - scalar)).unwrap() < 1e-12);
    }

    #[test]
    fn exact_spectrum_defect_stays_small_at_higher_degree() {
        // Every battery degree ≤ 6 and every multiplicity vector at k = 6.
        let p = spectrum01();
        for degree in 1..=6usize {
            let battery = p.recommended_battery(degree).unwrap();
            let k = 6usize;
            for m1 in 1..k {
                let mults = vec![m1, k - m1];
                let params =
                    MicrostateParams::new(k, 1e-8, p.default_radius(), battery.clone());
                let ms = sample_exact_spectrum(&[0.0, 1.0], &mults, k, 9, &params).unwrap();
                assert!(
                    ms.defect <= 1e-10,
                    "degree {degree}, mults {mults:?}: defect = {}",
                    ms.defect
                );
            }
        }
    }

    #[test]
    fn bad_multiplicities_rejected() {
        let p = spectrum01();
        let battery = p.recommended_battery(2).unwrap();
        let params = MicrostateParams::new(4, 1e-8, p.default_radius(), battery);
        assert!(matches!(
            sample_exact_spectrum(&[0.0, 1.0], &[2, 3], 4, 0, &params),
            Err(MicrostateError::BadMultiplicities { .. })
        ));
        assert!(matches!(
            sample_exact_spectrum(&[0.0, 1.0], &[4, 0], 4, 0, &params),
            Err(MicrostateError::BadMultiplicities { .. })
        ));
    }

    #[test]
    fn penalty_sampler_reaches_spectrum_microstates() {
        let p = spectrum01();
        let battery = p.recommended_battery(3).unwrap();
        let params = MicrostateParams::new(8, 1e-6, p.default_radius(), battery);
        let ms = sample_penalty(&p, &params, 7, 500).unwrap();
        assert!(ms.defect <= 1e-6, "defect = {}", ms.defect);
    }

    #[test]
    fn penalty_sampler_cannot_satisfy_contradiction() {
        // Identity target 2 is impossible: defect ≥ 1 always.
        let battery = default_battery(1, 1).unwrap();
        let p = Presentation::NormTable {
            battery: battery.clone(),
            targets: vec![2.0, 1.0],
            radius: 2.0,
        };
        let params = MicrostateParams::new(3, 0.05, 2.0, battery);
        let ms = sample_penalty(&p, &params, 3, 200).unwrap();
        assert!(ms.defect >= 1.0 - 1e-9, "defect = {}", ms.defect);
    }

    #[test]
    fn witness_for_models_needs_divisibility() {
        let p = Presentation::Amplification {
            base: Box::new(Presentation::MatrixModel {
                tuple: MatrixTuple::new(vec![HermitianMatrix::identity(1)]).unwrap(),
            }),
            n: 2,
        };
        assert!(exact_witness(&p, 6, 0).is_some());
        assert!(exact_witness(&p, 5, 0).is_none());
    }
}
