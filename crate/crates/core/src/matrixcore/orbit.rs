//! Unitary-orbit distance between matrix tuples.
//!
//! `orbit_distance` computes min over W ∈ U(k) of ‖a − W b W*‖₂ by
//! multi-start Riemannian gradient descent with Cayley retraction. The
//! returned value is an upper bound on the true minimum: the problem is
//! nonconvex and only the achieved witness is certified. For single
//! matrices the exact minimum is the ℓ² distance of the ascending spectra
//! (`sorted_spectrum_distance`), which serves as the oracle.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{haar_unitary, MatrixError, MatrixTuple, UnitaryMatrix};
use crate::C64;

/// Options for the orbit-distance search.
#[derive(Debug, Clone)]
pub struct OrbitOpts {
    /// Number of descent starts: one spectral-alignment warm start, one
    /// identity start, and Haar-random starts for the rest.
    pub restarts: usize,
    /// Convergence threshold on the Riemannian gradient norm of the squared
    /// distance.
    pub tolerance: f64,
    /// Iteration cap per start.
    pub max_iters: usize,
    /// Seed for the Haar starts.
    pub seed: u64,
}

impl Default for OrbitOpts {
    fn default() -> Self {
        Self {
            restarts: 8,
            tolerance: 1e-10,
            max_iters: 500,
            seed: 0,
        }
    }
}

/// ℓ² distance of ascending spectra under the normalized trace:
/// sqrt((1/k)·Σ (λ_i(a) − λ_i(b))²). Equals min_W ‖a − W b W*‖₂ for single
/// Hermitian matrices.
pub fn sorted_spectrum_distance(
    a: &super::HermitianMatrix,
    b: &super::HermitianMatrix,
) -> Result<f64, MatrixError> {
    if a.dim() != b.dim() {
        return Err(MatrixError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let la = a.eigenvalues();
    let lb = b.eigenvalues();
    let k = a.dim() as f64;
    Ok((la
        .iter()
        .zip(lb.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / k)
        .sqrt())
}

/// Natural-log cardinality bound for a delta-net of U(k): a net of radius
/// delta has at most (c/delta)^{k²} elements, i.e. log count ≤ k²·log(c/delta).
/// The constant c is a free parameter; see `fit_szarek_constant`.
pub fn szarek_log_bound(k: usize, delta: f64, c: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    assert!(c >= 1.0, "constant must be at least 1");
    (k * k) as f64 * (c / delta).ln()
}

/// Empirical net constant: builds greedy delta-nets over Haar samples of
/// U(k) in operator norm and inverts the (c/delta)^{k²} count model.
/// Returns the fitted c together with the per-delta (count, c) table.
pub fn fit_szarek_constant(
    k: usize,
    deltas: &[f64],
    samples: usize,
    seed: u64,
) -> (f64, Vec<(f64, usize, f64)>) {
    let us: Vec<UnitaryMatrix> = (0..samples)
        .map(|i| haar_unitary(k, seed.wrapping_add(i as u64)))
        .collect();
    let mut table = Vec::new();
    let mut best = 1.0f64;
    for &delta in deltas {
        let mut centers: Vec<usize> = Vec::new();
        for i in 0..us.len() {
            let covered = centers.iter().any(|&c| {
                super::operator_norm(&(us[i].matrix() - us[c].matrix())).unwrap() <= delta
            });
            if !covered {
                centers.push(i);
            }
        }
        let count = centers.len().max(1);
        let c_hat = delta * ((count as f64).ln() / (k * k) as f64).exp();
        best = best.max(c_hat);
        table.push((delta, count, c_hat));
    }
    (best, table)
}

struct Objective<'a> {
    a: &'a MatrixTuple,
    b: &'a MatrixTuple,
    k: usize,
    /// (1/k)·Σ (‖a_i‖_F² + ‖b_i‖_F²), the W-independent part of dist².
    constant: f64,
}

impl<'a> Objective<'a> {
    fn new(a: &'a MatrixTuple, b: &'a MatrixTuple) -> Self {
        let k = a.dim();
        let constant = a
            .mats()
            .iter()
            .zip(b.mats().iter())
            .map(|(x, y)| x.matrix().norm_squared() + y.matrix().norm_squared())
            .sum::<f64>()
            / k as f64;
        Self { a, b, k, constant }
    }

    /// g(W) = Σ Re tr(a_i W b_i W*); dist² = constant − (2/k)·g.
    fn overlap(&self, w: &DMatrix<C64>) -> f64 {
        let mut g = 0.0;
        for (x, y) in self.a.mats().iter().zip(self.b.mats().iter()) {
            let wbw = w * y.matrix() * w.adjoint();
            g += x
                .matrix()
                .iter()
                .zip(wbw.iter())
                .map(|(p, q)| (p.conj() * q).re)
                .sum::<f64>();
        }
        g
    }

    fn dist_sq(&self, g: f64) -> f64 {
        (self.constant - 2.0 / self.k as f64 * g).max(0.0)
    }

    /// Riemannian gradient (skew-Hermitian) of the squared distance at W.
    fn riemannian_grad(&self, w: &DMatrix<C64>) -> DMatrix<C64> {
        let mut euclid = DMatrix::<C64>::zeros(self.k, self.k);
        for (x, y) in self.a.mats().iter().zip(self.b.mats().iter()) {
            euclid += x.matrix() * w * y.matrix();
        }
        // grad f = −(4/k)·Σ a_i W b_i projected to the tangent space.
        euclid.scale_mut(-4.0 / self.k as f64);
        let gwt = &euclid * w.adjoint();
        (&gwt - gwt.adjoint()).scale(0.5)
    }
}

/// Cayley retraction: (I − A/2)⁻¹(I + A/2) for skew-Hermitian A, applied on
/// the left of W.
fn cayley_step(w: &DMatrix<C64>, dir: &DMatrix<C64>, tau: f64) -> Option<DMatrix<C64>> {
    let k = w.nrows();
    let half = dir.scale(tau * 0.5);
    let lhs = DMatrix::<C64>::identity(k, k) - &half;
    let rhs = (DMatrix::<C64>::identity(k, k) + &half) * w;
    lhs.lu().solve(&rhs)
}

fn polar_unitary(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    u * vt
}

fn descend(obj: &Objective, start: DMatrix<C64>, opts: &OrbitOpts) -> (f64, DMatrix<C64>) {
    let mut w = start;
    let mut g = obj.overlap(&w);
    let mut tau = 1.0;
    for iter in 0..opts.max_iters {
        let grad = obj.riemannian_grad(&w);
        let grad_norm_sq = grad.norm_squared();
        if grad_norm_sq.sqrt() <= opts.tolerance {
            break;
        }
        // Descent direction is −grad; Armijo on the squared distance.
        let dir = -&grad;
        let f_cur = obj.dist_sq(g);
        let mut accepted = false;
        let mut t = tau;
        for _ in 0..50 {
            if let Some(cand) = cayley_step(&w, &dir, t) {
                let g_cand = obj.overlap(&cand);
                let f_cand = obj.dist_sq(g_cand);
                if f_cand <= f_cur - 1e-4 * t * grad_norm_sq {
                    w = cand;
                    g = g_cand;
                    tau = t * 1.5;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if iter % 64 == 63 {
            w = polar_unitary(&w);
            g = obj.overlap(&w);
        }
    }
    w = polar_unitary(&w);
    g = obj.overlap(&w);
    (obj.dist_sq(g).sqrt(), w)
}

/// Spectral-alignment start: map the eigenbasis of Σ b_i onto that of Σ a_i,
/// both sorted ascending. Exact for single matrices.
fn alignment_start(a: &MatrixTuple, b: &MatrixTuple) -> Result<DMatrix<C64>, MatrixError> {
    let k = a.dim();
    let sum = |t: &MatrixTuple| {
        let mut s = DMatrix::<C64>::zeros(k, k);
        for m in t.mats() {
            s += m.matrix();
        }
        s
    };
    let (_, va) = super::eig_hermitian(&sum(a))?;
    let (_, vb) = super::eig_hermitian(&sum(b))?;
    Ok(va * vb.adjoint())
}

/// min_W ‖a − W b W*‖₂ by multi-start Riemannian descent; returns the best
/// distance found and its witness. Ties between restarts are broken by the
/// lowest restart index, so the result is deterministic.
pub fn orbit_distance(
    a: &MatrixTuple,
    b: &MatrixTuple,
    opts: &OrbitOpts,
) -> Result<(f64, UnitaryMatrix), MatrixError> {
    if a.dim() != b.dim() {
        return Err(MatrixError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.len() != b.len() {
        return Err(MatrixError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let k = a.dim();
    let obj = Objective::new(a, b);
    let restarts = opts.restarts.max(1);
    let starts: Vec<DMatrix<C64>> = (0..restarts)
        .map(|r| match r {
            0 => alignment_start(a, b).unwrap_or_else(|_| DMatrix::identity(k, k)),
            1 => DMatrix::identity(k, k),
            _ => haar_unitary(k, opts.seed.wrapping_add(r as u64))
                .matrix()
                .clone(),
        })
        .collect();
    let results: Vec<(f64, usize, DMatrix<C64>)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(idx, s)| {
            let (d, w) = descend(&obj, s, opts);
            (d, idx, w)
        })
        .collect();
    let best = results
        .into_iter()
        .min_by(|x, y| (x.0, x.1).partial_cmp(&(y.0, y.1)).unwrap())
        .expect("at least one restart");
    let witness = UnitaryMatrix::new(polar_unitary(&best.2)).expect("polar factor is unitary");
    Ok((best.0, witness))
}
