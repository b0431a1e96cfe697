//! Matrix-model verification for presentations.
//!
//! A presentation is matricially approximable when it admits a sequence of
//! Hermitian tuples whose polynomial norms converge to the targets. This
//! module checks that convergence on explicit model sequences, certifies
//! the nonemptiness of microstate spaces across dimensions, and builds
//! free-product model sequences by block repetition plus an independent
//! Haar rotation, validated against the exact two-projection oracle where
//! that oracle applies.

mod oracle;

pub use oracle::{two_projection_oracle, two_projection_oracle_with_tol, OracleValue};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::matrixcore::{operator_norm, HermitianMatrix, MatrixError, MatrixTuple};
use crate::microstates::{
    exact_witness, membership_defect, sample_penalty, target_norms, MicrostateError,
    MicrostateParams, Presentation,
};
use crate::ncpoly::{PolyBattery, PolyError, TupleEvaluator};
use crate::C64;

#[derive(Debug, Error)]
pub enum MfError {
    #[error("polynomial has {got} indeterminates; the oracle handles at most 2")]
    WrongArity { got: usize },
    #[error("model sizes must be strictly increasing and shape-consistent: {0}")]
    BadModelSequence(String),
    #[error("no size in the request is a common multiple of the factor model dimensions")]
    SizeIncompatible,
    #[error("rank {target} cannot hold the {needed} requested vectors")]
    RankTooSmall { target: usize, needed: usize },
    #[error(transparent)]
    Micro(#[from] MicrostateError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Explicit matrix models of a presentation at increasing dimensions.
#[derive(Debug, Clone)]
pub struct ModelSequence {
    pub models: Vec<(usize, MatrixTuple)>,
    pub presentation: Presentation,
}

impl ModelSequence {
    pub fn new(
        models: Vec<(usize, MatrixTuple)>,
        presentation: Presentation,
    ) -> Result<Self, MfError> {
        if models.is_empty() {
            return Err(MfError::BadModelSequence("no models".into()));
        }
        let gens = presentation.generator_count();
        let mut last = 0usize;
        for (k, t) in &models {
            if *k <= last {
                return Err(MfError::BadModelSequence(format!(
                    "sizes must increase strictly, got {k} after {last}"
                )));
            }
            last = *k;
            if t.dim() != *k {
                return Err(MfError::BadModelSequence(format!(
                    "tuple dimension {} does not match declared size {k}",
                    t.dim()
                )));
            }
            if t.len() != gens {
                return Err(MfError::BadModelSequence(format!(
                    "tuple has {} generators, presentation has {gens}",
                    t.len()
                )));
            }
        }
        Ok(Self {
            models,
            presentation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Improving,
    Flat,
    Worsening,
}

/// Per-polynomial deviations |‖P(A^{(k)})‖ − target| along a model
/// sequence.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// per_poly[j] lists (k, deviation) rows for battery polynomial j.
    pub per_poly: Vec<Vec<(usize, f64)>>,
    /// Worst deviation at the final size.
    pub max_final: f64,
    pub trend: Trend,
    /// Targets carried an uncertainty flag (estimated free products).
    pub uncertain_targets: bool,
}

/// Check norm convergence of a model sequence against its presentation's
/// targets. The trend compares the worst deviation over the last third of
/// the sizes with the first third.
pub fn check_norm_convergence(
    ms: &ModelSequence,
    battery: &PolyBattery,
) -> Result<ConvergenceReport, MfError> {
    let targets = target_norms(&ms.presentation, battery)?;
    let mut per_poly = vec![Vec::with_capacity(ms.models.len()); battery.len()];
    let mut per_k_worst = Vec::with_capacity(ms.models.len());
    for (k, tuple) in &ms.models {
        let mut ev = TupleEvaluator::new(tuple);
        let mut worst = 0.0f64;
        for (j, poly) in battery.polys().iter().enumerate() {
            let dev = (operator_norm(&ev.eval_poly(poly)?)? - targets.values[j]).abs();
            per_poly[j].push((*k, dev));
            worst = worst.max(dev);
        }
        per_k_worst.push(worst);
    }
    let max_final = *per_k_worst.last().unwrap();
    let third = (per_k_worst.len() / 3).max(1);
    let head: f64 =
        per_k_worst[..third].iter().copied().fold(0.0, f64::max);
    let tail: f64 = per_k_worst[per_k_worst.len() - third..]
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let trend = if tail < 0.9 * head - 1e-15 {
        Trend::Improving
    } else if tail > 1.1 * head + 1e-15 {
        Trend::Worsening
    } else {
        Trend::Flat
    };
    Ok(ConvergenceReport {
        per_poly,
        max_final,
        trend,
        uncertain_targets: targets.uncertain,
    })
}

/// Per-dimension nonemptiness certificate.
#[derive(Debug, Clone)]
pub struct ApproxReport {
    /// (k, best defect, pass) rows.
    pub per_k: Vec<(usize, f64, bool)>,
    pub overall_pass: bool,
}

/// Certify the approximation property on a dimension list: for each k the
/// best witness defect must reach ε. Exact constructive witnesses are
/// tried first when the presentation admits them; the penalty sampler
/// searches from a GUE start otherwise (and its result is kept even when
/// it fails, so obstructions show up as quantified defects).
pub fn check_approximation_property(
    p: &Presentation,
    k_list: &[usize],
    epsilon: f64,
    battery: &PolyBattery,
    seed: u64,
    iters: usize,
) -> Result<ApproxReport, MfError> {
    let radius = p.default_radius();
    let mut per_k = Vec::with_capacity(k_list.len());
    let mut overall = true;
    for (i, &k) in k_list.iter().enumerate() {
        let params = MicrostateParams::new(k, epsilon, radius, battery.clone());
        let targets = target_norms(p, battery)?;
        let mut best = f64::INFINITY;
        if let Some(w) = exact_witness(p, k, seed.wrapping_add(i as u64)) {
            let (d, _) = membership_defect(&w, &targets.values, &params)?;
            best = best.min(d);
        }
        if best > epsilon {
            let sampled = sample_penalty(p, &params, seed.wrapping_add(1000 + i as u64), iters)?;
            best = best.min(sampled.defect);
        }
        let pass = best <= epsilon;
        overall &= pass;
        per_k.push((k, best, pass));
    }
    Ok(ApproxReport {
        per_k,
        overall_pass: overall,
    })
}

/// Build a free-product model sequence from factor sequences: at each
/// target size both factor models are tiled along the diagonal to that
/// size and the second family is conjugated by an independent Haar
/// unitary. seeds[i] drives the rotation at sizes[i].
pub fn build_free_product_model(
    a: &ModelSequence,
    b: &ModelSequence,
    sizes: &[usize],
    seeds: &[u64],
) -> Result<ModelSequence, MfError> {
    if sizes.is_empty() || seeds.len() != sizes.len() {
        return Err(MfError::BadModelSequence(
            "need one seed per requested size".into(),
        ));
    }
    let mut models = Vec::with_capacity(sizes.len());
    for (i, &t) in sizes.iter().enumerate() {
        // Largest factor models that divide the target size.
        let pick = |ms: &ModelSequence| {
            ms.models
                .iter()
                .rev()
                .find(|(k, _)| t % *k == 0)
                .map(|(_, tup)| tup.clone())
        };
        let am = pick(a).ok_or(MfError::SizeIncompatible)?;
        let bm = pick(b).ok_or(MfError::SizeIncompatible)?;
        let tuple = crate::microstates::rotated_pair_model(&am, &bm, t, seeds[i])?;
        models.push((t, tuple));
    }
    ModelSequence::new(
        models,
        Presentation::FreeProduct {
            left: Box::new(a.presentation.clone()),
            right: Box::new(b.presentation.clone()),
        },
    )
}

/// Result of a finite-rank compression.
#[derive(Debug, Clone)]
pub struct Compression {
    /// Compressed tuple V*A_iV at the target rank.
    pub compressed: MatrixTuple,
    /// Orthonormal basis of the projection range (k × rank).
    pub basis: DMatrix<C64>,
    /// Per supplied vector: max over generators of ‖pA_ipξ − A_iξ‖.
    pub vector_defects: Vec<f64>,
    /// Per battery polynomial: |‖P(compressed)‖ − ‖P(t)‖|, when a battery
    /// was supplied.
    pub battery_defects: Vec<f64>,
}

/// Compress a tuple to a finite-rank corner containing the supplied
/// vectors. The projection is the span of all words of length ≤ degree in
/// the tuple applied to the vectors, truncated breadth-first at the target
/// rank, so the vector defects vanish whenever degree ≥ 1 words fit.
pub fn quasidiagonal_compress(
    t: &MatrixTuple,
    target_rank: usize,
    vectors: &[DVector<C64>],
    degree: usize,
    battery: Option<&PolyBattery>,
) -> Result<Compression, MfError> {
    let k = t.dim();
    let target_rank = target_rank.min(k);
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(target_rank);
    let add = |basis: &mut Vec<DVector<C64>>, v: &DVector<C64>| -> bool {
        if basis.len() >= target_rank {
            return false;
        }
        let mut w = v.clone();
        for b in basis.iter() {
            let overlap = b.dotc(&w);
            w -= b.scale_complex(overlap);
        }
        let n = w.norm();
        if n > 1e-10 {
            basis.push(w.unscale(n));
            true
        } else {
            false
        }
    };

    let mut frontier: Vec<DVector<C64>> = Vec::new();
    for v in vectors {
        let before = basis.len();
        let added = add(&mut basis, v);
        if !added && basis.len() == before && basis.len() >= target_rank {
            return Err(MfError::RankTooSmall {
                target: target_rank,
                needed: vectors.len(),
            });
        }
        frontier.push(v.clone());
    }
    'grow: for _ in 0..degree {
        let mut next = Vec::new();
        for v in &frontier {
            for m in t.mats() {
                let image = m.matrix() * v;
                if add(&mut basis, &image) {
                    next.push(image);
                }
                if basis.len() >= target_rank {
                    break 'grow;
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    // Deterministic completion with standard basis vectors.
    let mut idx = 0;
    while basis.len() < target_rank && idx < k {
        let mut v = DVector::<C64>::zeros(k);
        v[idx] = C64::new(1.0, 0.0);
        add(&mut basis, &v);
        idx += 1;
    }
    let rank = basis.len();
    let mut vmat = DMatrix::<C64>::zeros(k, rank);
    for (j, b) in basis.iter().enumerate() {
        vmat.set_column(j, b);
    }

    let compressed_mats: Result<Vec<HermitianMatrix>, MatrixError> = t
        .mats()
        .iter()
        .map(|m| HermitianMatrix::new(vmat.adjoint() * m.matrix() * &vmat))
        .collect();
    let compressed = MatrixTuple::new(compressed_mats?)?;

    let proj = &vmat * vmat.adjoint();
    let mut vector_defects = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut worst = 0.0f64;
        for m in t.mats() {
            let exact = m.matrix() * v;
            let compressedv = &proj * m.matrix() * (&proj * v);
            worst = worst.max((compressedv - exact).norm());
        }
        vector_defects.push(worst);
    }

    let mut battery_defects = Vec::new();
    if let Some(batt) = battery {
        let mut ev_full = TupleEvaluator::new(t);
        let mut ev_comp = TupleEvaluator::new(&compressed);
        for poly in batt.polys() {
            let full = operator_norm(&ev_full.eval_poly(poly)?)?;
            let comp = operator_norm(&ev_comp.eval_poly(poly)?)?;
            battery_defects.push((full - comp).abs());
        }
    }
    Ok(Compression {
        compressed,
        basis: vmat,
        vector_defects,
        battery_defects,
    })
}

trait ScaleComplexVec {
    fn scale_complex(&self, c: C64) -> Self;
}

impl ScaleComplexVec for DVector<C64> {
    fn scale_complex(&self, c: C64) -> Self {
        let mut out = self.clone();
        for e in out.iter_mut() {
            *e *= c;
        }
        out
    }
}
