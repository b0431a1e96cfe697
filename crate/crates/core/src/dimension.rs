//! Estimators for the covering-growth exponents of microstate spaces.
//!
//! The limiting quantities (k → ∞, ω → 0, battery → everything) are not
//! directly computable. The estimators here work on the exact-constraint
//! core of each microstate space:
//!
//! * the covering exponent normalized by −k²·log ω is estimated by the
//!   real rank of conjugation tangent maps on exact representatives,
//!   maximized over eigenvalue-multiplicity strata (`delta_top_exponent`);
//! * the orbit-ball exponent normalized by k² is estimated through orbit
//!   stratum counts plus the moduli dimension left over after quotienting
//!   by simultaneous conjugation (`ktop2_exponent`);
//! * the tracial variant constrains strata by moment data
//!   (`k2_tracial_exponent`), and its supremum over a supplied trace list
//!   is the orbit dimension capacity (`orbit_capacity`).
//!
//! Exact rank arithmetic reproduces the closed-form values for point
//! spectra, matrix algebras, amplifications, free products and orthogonal
//! sums; everything else is finite-k evidence with per-k trend tables, and
//! reports say which route produced each number.

use nalgebra::DMatrix;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::covering::{binomial, brute_force_cover, CoveringError, Metric};
use crate::matrixcore::{sorted_spectrum_distance, MatrixError, MatrixTuple};
use crate::microstates::{
    exact_witness, membership_defect, target_norms, MicrostateError, MicrostateParams,
    Presentation,
};
use crate::ncpoly::{PolyError, TupleEvaluator, Word};
use crate::C64;

#[derive(Debug, Error)]
pub enum DimensionError {
    #[error("tuple is not an exact-constraint representative (defect {defect:.3e})")]
    NotExact { defect: f64 },
    #[error("estimator does not support this presentation: {0}")]
    UnsupportedPresentation(String),
    #[error("moment data is inconsistent: {0}")]
    InconsistentMoments(String),
    #[error("no dimension in the list is reachable by brute force or tangent analysis")]
    InfeasibleScale,
    #[error("dimension list is empty")]
    EmptyKList,
    #[error("trace list is empty")]
    NoTraces,
    #[error(transparent)]
    Micro(#[from] MicrostateError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Covering(#[from] CoveringError),
}

/// Which conjugation tangent space to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentMode {
    /// One anti-Hermitian direction acting on every generator at once:
    /// H ↦ ([H, A_1], …, [H, A_n]).
    SimultaneousConjugation,
    /// Independent directions per generator: Σ_i rank(H_i ↦ [H_i, A_i]).
    /// Valid for free products and orthogonal sums of point spectra, where
    /// the exact variety is a product of per-factor orbits.
    IndependentConjugation,
}

#[derive(Debug, Clone)]
pub struct TangentModel {
    pub mode: TangentMode,
    pub presentation: Presentation,
}

/// Rank with its spectral-gap diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct TangentRank {
    pub rank: usize,
    /// Ratio of the largest dropped to smallest kept singular value; a
    /// value above 1e−6 means the rank threshold was not a clean gap.
    pub ambiguous: bool,
    pub gap_ratio: f64,
}

const RANK_REL_THRESHOLD: f64 = 1e-8;
const EXACTNESS_TOLERANCE: f64 = 1e-8;

/// Real rank of the conjugation tangent map at an exact representative.
pub fn tangent_rank(t: &MatrixTuple, model: &TangentModel) -> Result<usize, DimensionError> {
    tangent_rank_detailed(t, model).map(|r| r.rank)
}

pub fn tangent_rank_detailed(
    t: &MatrixTuple,
    model: &TangentModel,
) -> Result<TangentRank, DimensionError> {
    let defect = exactness_defect(&model.presentation, t)?;
    if defect > EXACTNESS_TOLERANCE {
        return Err(DimensionError::NotExact { defect });
    }
    match model.mode {
        TangentMode::SimultaneousConjugation => Ok(simultaneous_rank(t.mats())),
        TangentMode::IndependentConjugation => {
            let mut total = 0usize;
            let mut ambiguous = false;
            let mut gap = 0.0f64;
            for m in t.mats() {
                let r = simultaneous_rank(std::slice::from_ref(m));
                total += r.rank;
                ambiguous |= r.ambiguous;
                gap = gap.max(r.gap_ratio);
            }
            Ok(TangentRank {
                rank: total,
                ambiguous,
                gap_ratio: gap,
            })
        }
    }
}

/// Membership defect of the tuple against the presentation's targets; free
/// products are checked factor-wise since their exact core is the product
/// of the factor varieties.
fn exactness_defect(p: &Presentation, t: &MatrixTuple) -> Result<f64, DimensionError> {
    match p {
        Presentation::FreeProduct { left, right } => {
            let nl = left.generator_count();
            let lt = MatrixTuple::new(t.mats()[..nl].to_vec()).map_err(MicrostateError::from)?;
            let rt = MatrixTuple::new(t.mats()[nl..].to_vec()).map_err(MicrostateError::from)?;
            Ok(exactness_defect(left, &lt)?.max(exactness_defect(right, &rt)?))
        }
        _ => {
            let battery = p.recommended_battery(2)?;
            let targets = target_norms(p, &battery)?;
            let params =
                MicrostateParams::new(t.dim(), EXACTNESS_TOLERANCE, p.default_radius(), battery);
            let (d, _) = membership_defect(t, &targets.values, &params)?;
            Ok(d)
        }
    }
}

/// Rank of H ↦ ([H, A_1], …, [H, A_n]) over anti-Hermitian H, via singular
/// values of the realified map.
fn simultaneous_rank(mats: &[crate::matrixcore::HermitianMatrix]) -> TangentRank {
    let k = mats[0].dim();
    let n = mats.len();
    let dom = k * k;
    let cod = n * k * k;
    let mut m = DMatrix::<f64>::zeros(cod, dom);
    let mut col = 0usize;
    let write_image = |m: &mut DMatrix<f64>, col: usize, images: &[DMatrix<C64>]| {
        for (i, img) in images.iter().enumerate() {
            let base = i * k * k;
            let mut row = 0usize;
            for j in 0..k {
                m[(base + row, col)] = img[(j, j)].re;
                row += 1;
            }
            for j in 0..k {
                for l in (j + 1)..k {
                    m[(base + row, col)] = img[(j, l)].re;
                    row += 1;
                    m[(base + row, col)] = img[(j, l)].im;
                    row += 1;
                }
            }
        }
    };
    // Basis of anti-Hermitian directions: i·E_jj, (E_jl − E_lj),
    // i·(E_jl + E_lj).
    let commutators = |h: &DMatrix<C64>| -> Vec<DMatrix<C64>> {
        mats.iter()
            .map(|a| h * a.matrix() - a.matrix() * h)
            .collect()
    };
    for j in 0..k {
        let mut h = DMatrix::<C64>::zeros(k, k);
        h[(j, j)] = C64::new(0.0, 1.0);
        write_image(&mut m, col, &commutators(&h));
        col += 1;
    }
    for j in 0..k {
        for l in (j + 1)..k {
            let mut h = DMatrix::<C64>::zeros(k, k);
            h[(j, l)] = C64::new(1.0, 0.0);
            h[(l, j)] = C64::new(-1.0, 0.0);
            write_image(&mut m, col, &commutators(&h));
            col += 1;
            let mut h = DMatrix::<C64>::zeros(k, k);
            h[(j, l)] = C64::new(0.0, 1.0);
            h[(l, j)] = C64::new(0.0, 1.0);
            write_image(&mut m, col, &commutators(&h));
            col += 1;
        }
    }
    debug_assert_eq!(col, dom);
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return TangentRank {
            rank: 0,
            ambiguous: false,
            gap_ratio: 0.0,
        };
    }
    let threshold = RANK_REL_THRESHOLD * top;
    let mut kept_min = f64::INFINITY;
    let mut dropped_max = 0.0f64;
    let mut rank = 0usize;
    for s in sv.iter() {
        if *s > threshold {
            rank += 1;
            kept_min = kept_min.min(*s);
        } else {
            dropped_max = dropped_max.max(*s);
        }
    }
    let gap_ratio = if rank == 0 || kept_min == 0.0 {
        0.0
    } else {
        dropped_max / kept_min
    };
    TangentRank {
        rank,
        ambiguous: gap_ratio > 1e-6,
        gap_ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionMode {
    DeltaTop,
    KTop2,
    K2Tracial,
    OrbitCapacity,
}

impl DimensionMode {
    pub fn name(&self) -> &'static str {
        match self {
            DimensionMode::DeltaTop => "delta_top",
            DimensionMode::KTop2 => "ktop2",
            DimensionMode::K2Tracial => "k2_tracial",
            DimensionMode::OrbitCapacity => "orbit_capacity",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DimensionRow {
    pub k: usize,
    /// Exponent value at this dimension; −∞ marks an empty stratum set.
    pub value: f64,
    pub diagnostics: String,
}

#[derive(Debug, Clone)]
pub struct DimensionReport {
    pub mode: DimensionMode,
    pub rows: Vec<DimensionRow>,
    /// Value at the largest dimension with a nonempty stratum set; −∞ when
    /// every tested dimension came up empty.
    pub estimate: f64,
    pub method: String,
}

impl DimensionReport {
    fn from_rows(mode: DimensionMode, rows: Vec<DimensionRow>, method: &str) -> Self {
        let estimate = rows
            .iter()
            .rev()
            .find(|r| r.value.is_finite())
            .map(|r| r.value)
            .unwrap_or(f64::NEG_INFINITY);
        Self {
            mode,
            rows,
            estimate,
            method: method.to_string(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode.name(),
            "method": self.method,
            "estimate": if self.estimate.is_finite() { serde_json::json!(self.estimate) } else { serde_json::json!("-inf") },
            "columns": ["k", "value", "diagnostics"],
            "rows": self.rows.iter().map(|r| {
                serde_json::json!([r.k, if r.value.is_finite() { serde_json::json!(r.value) } else { serde_json::json!("-inf") }, r.diagnostics])
            }).collect::<Vec<_>>(),
        })
    }

    /// Aligned text table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "mode: {}\nmethod: {}\nestimate: {}\n",
            self.mode.name(),
            self.method,
            if self.estimate.is_finite() {
                format!("{:.12}", self.estimate)
            } else {
                "-inf".into()
            }
        ));
        out.push_str(&format!("{:>6}  {:>18}  diagnostics\n", "k", "value"));
        for r in &self.rows {
            let v = if r.value.is_finite() {
                format!("{:.12}", r.value)
            } else {
                "-inf".into()
            };
            out.push_str(&format!("{:>6}  {:>18}  {}\n", r.k, v, r.diagnostics));
        }
        out
    }
}

/// All vectors of `parts` positive integers summing to k.
fn compositions(k: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            if k >= 1 {
                prefix.push(k);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for first in 1..=(k + 1 - parts) {
            prefix.push(first);
            rec(k - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts >= 1 && k >= parts {
        rec(k, parts, &mut Vec::new(), &mut out);
    }
    out
}

/// All vectors of `parts` nonnegative integers summing to k.
fn weak_compositions(k: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=k {
            prefix.push(first);
            rec(k - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts >= 1 {
        rec(k, parts, &mut Vec::new(), &mut out);
    }
    out
}

/// Largest conjugation-tangent rank over the exact variety of the
/// presentation at dimension k, with the maximizing stratum description.
/// Returns None when the variety is empty at this dimension.
fn max_variety_rank(p: &Presentation, k: usize) -> Result<Option<(usize, String)>, DimensionError> {
    match p {
        Presentation::Spectrum { points } => {
            let n = points.len();
            if k < n {
                return Ok(None);
            }
            let mut best: Option<(usize, String)> = None;
            for mults in compositions(k, n) {
                let rank = if k <= 20 {
                    let mut diag = Vec::with_capacity(k);
                    for (pt, m) in points.iter().zip(mults.iter()) {
                        diag.extend(std::iter::repeat(*pt).take(*m));
                    }
                    let t = MatrixTuple::new(vec![
                        crate::matrixcore::HermitianMatrix::from_real_diagonal(&diag),
                    ])
                    .map_err(MicrostateError::from)?;
                    simultaneous_rank(t.mats()).rank
                } else {
                    // Closed form k² − Σ m_i² (stabilizer is Π U(m_i)).
                    k * k - mults.iter().map(|m| m * m).sum::<usize>()
                };
                if best.as_ref().map_or(true, |(r, _)| rank > *r) {
                    best = Some((rank, format!("stratum {mults:?}")));
                }
            }
            Ok(best)
        }
        Presentation::FreeProduct { left, right } => {
            let l = max_variety_rank(left, k)?;
            let r = max_variety_rank(right, k)?;
            match (l, r) {
                (Some((rl, dl)), Some((rr, dr))) => {
                    Ok(Some((rl + rr, format!("left {dl}; right {dr}"))))
                }
                _ => Ok(None),
            }
        }
        Presentation::DirectSum { left, right } => {
            // Enumerate splits; within each split compose per-leg exact
            // witnesses stratum by stratum and take the simultaneous rank.
            let mut best: Option<(usize, String)> = None;
            for (k1, k2, lt, rt, label) in direct_sum_strata(left, right, k)? {
                let mut mats = Vec::new();
                for m in lt.mats() {
                    mats.push(
                        crate::matrixcore::HermitianMatrix::new(crate::matrixcore::direct_sum(
                            m.matrix(),
                            &DMatrix::zeros(k2, k2),
                        ))
                        .map_err(MicrostateError::from)?,
                    );
                }
                for m in rt.mats() {
                    mats.push(
                        crate::matrixcore::HermitianMatrix::new(crate::matrixcore::direct_sum(
                            &DMatrix::zeros(k1, k1),
                            m.matrix(),
                        ))
                        .map_err(MicrostateError::from)?,
                    );
                }
                let t = MatrixTuple::new(mats).map_err(MicrostateError::from)?;
                let rank = simultaneous_rank(t.mats()).rank;
                if best.as_ref().map_or(true, |(r, _)| rank > *r) {
                    best = Some((rank, label));
                }
            }
            Ok(best)
        }
        Presentation::NormTable { .. } => Err(DimensionError::UnsupportedPresentation(
            "norm tables have no exact-constraint variety".into(),
        )),
        _ => {
            // Resolvable models: one orbit at compatible dimensions.
            match exact_witness(p, k, 0) {
                Some(t) => Ok(Some((
                    simultaneous_rank(t.mats()).rank,
                    "amplified model orbit".into(),
                ))),
                None => Ok(None),
            }
        }
    }
}

type SplitStratum = (usize, usize, MatrixTuple, MatrixTuple, String);

/// Exact per-split strata of an orthogonal sum of point-spectrum legs (or
/// resolvable models): every split size and every per-leg multiplicity
/// vector. Capped to keep the enumeration tame.
fn direct_sum_strata(
    left: &Presentation,
    right: &Presentation,
    k: usize,
) -> Result<Vec<SplitStratum>, DimensionError> {
    let leg_strata = |p: &Presentation, kk: usize| -> Result<Vec<(MatrixTuple, String)>, DimensionError> {
        match p {
            Presentation::Spectrum { points } => {
                let mut out = Vec::new();
                for mults in compositions(kk, points.len()) {
                    let mut diag = Vec::with_capacity(kk);
                    for (pt, m) in points.iter().zip(mults.iter()) {
                        diag.extend(std::iter::repeat(*pt).take(*m));
                    }
                    out.push((
                        MatrixTuple::new(vec![
                            crate::matrixcore::HermitianMatrix::from_real_diagonal(&diag),
                        ])
                        .map_err(MicrostateError::from)?,
                        format!("{mults:?}"),
                    ));
                }
                Ok(out)
            }
            _ => match exact_witness(p, kk, 0) {
                Some(t) => Ok(vec![(t, format!("model at {kk}"))]),
                None => Ok(vec![]),
            },
        }
    };
    let mut out = Vec::new();
    for k1 in 1..k {
        let k2 = k - k1;
        let ls = leg_strata(left, k1)?;
        if ls.is_empty() {
            continue;
        }
        let rs = leg_strata(right, k2)?;
        for (lt, dl) in &ls {
            for (rt, dr) in &rs {
                out.push((
                    k1,
                    k2,
                    lt.clone(),
                    rt.clone(),
                    format!("split ({k1},{k2}); left {dl}; right {dr}"),
                ));
                if out.len() > 5000 {
                    return Err(DimensionError::UnsupportedPresentation(
                        "orthogonal-sum stratum enumeration exceeds the cap".into(),
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Topological free entropy dimension estimator: per dimension, the
/// covering exponent is the maximal tangent rank over exact strata divided
/// by k². The free-product route sums per-factor ranks before dividing, so
/// the additivity is exact integer arithmetic.
pub fn delta_top_exponent(
    p: &Presentation,
    k_list: &[usize],
) -> Result<DimensionReport, DimensionError> {
    if k_list.is_empty() {
        return Err(DimensionError::EmptyKList);
    }
    let mode_label = match p {
        Presentation::FreeProduct { .. } => "independent-conjugation tangent rank over strata",
        _ => "simultaneous-conjugation tangent rank over strata",
    };
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let (value, mut diag) = match max_variety_rank(p, k)? {
            Some((rank, stratum)) => {
                let v = rank as f64 / (k * k) as f64;
                (v, format!("rank {rank}; {stratum}"))
            }
            None => (f64::NEG_INFINITY, "empty variety".to_string()),
        };
        // Brute-force slope cross-check at tiny dimensions for spectra.
        if k <= 2 {
            if let Presentation::Spectrum { .. } = p {
                let omegas = [0.4, 0.2];
                let mut logs = Vec::new();
                for w in omegas {
                    let est = brute_force_cover(p, k, w, 0.05, Metric::OpNorm, 0.1)?;
                    logs.push(est.log_upper);
                }
                let slope = (logs[1] - logs[0]) / ((1.0 / omegas[1]).ln() - (1.0 / omegas[0]).ln())
                    / (k * k) as f64;
                diag.push_str(&format!("; brute-force slope {slope:.3}"));
            }
        }
        rows.push(DimensionRow {
            k,
            value,
            diagnostics: diag,
        });
    }
    Ok(DimensionReport::from_rows(
        DimensionMode::DeltaTop,
        rows,
        mode_label,
    ))
}

/// Orbit strata of the exact variety at dimension k.
fn variety_stratum_count(p: &Presentation, k: usize) -> Result<u128, DimensionError> {
    match p {
        Presentation::Spectrum { points } => {
            if k < points.len() {
                Ok(0)
            } else {
                Ok(binomial(k as u128 - 1, points.len() as u128 - 1))
            }
        }
        Presentation::FreeProduct { left, right } => Ok(variety_stratum_count(left, k)?
            .saturating_mul(variety_stratum_count(right, k)?)),
        Presentation::DirectSum { left, right } => {
            let mut acc: u128 = 0;
            for k1 in 1..k {
                acc = acc.saturating_add(
                    variety_stratum_count(left, k1)?
                        .saturating_mul(variety_stratum_count(right, k - k1)?),
                );
            }
            Ok(acc)
        }
        Presentation::NormTable { .. } => Err(DimensionError::UnsupportedPresentation(
            "norm tables have no exact-constraint variety".into(),
        )),
        _ => match p.resolve_model() {
            Some(model) => Ok(u128::from(k % model.dim() == 0)),
            None => Err(DimensionError::UnsupportedPresentation(
                "no resolvable model".into(),
            )),
        },
    }
}

/// Leftover moduli after quotienting the exact variety by simultaneous
/// conjugation: variety dimension minus generic joint orbit dimension.
/// Zero for single orbits and stratified single-generator varieties;
/// positive for free products, whose orbit covering then grows like
/// (1/ω)^moduli — the divergence responsible for infinite orbit dimension
/// whenever the free entropy dimension exceeds 1.
fn moduli_dimension(p: &Presentation, k: usize) -> Result<usize, DimensionError> {
    match p {
        Presentation::FreeProduct { .. } => {
            let indep = match max_variety_rank(p, k)? {
                Some((r, _)) => r,
                None => return Ok(0),
            };
            let witness =
                exact_witness(p, k, 17).ok_or_else(|| DimensionError::UnsupportedPresentation(
                    "no exact witness for the free product at this dimension".into(),
                ))?;
            let joint = simultaneous_rank(witness.mats()).rank;
            Ok(indep.saturating_sub(joint))
        }
        _ => Ok(0),
    }
}

/// Topological orbit dimension estimator: log orbit-covering counts of the
/// exact variety normalized by k². For stratified varieties the count at
/// scale ω is (number of strata)·(1/ω)^moduli; single-generator and
/// finite-dimensional presentations have zero moduli and the value decays
/// like log(strata)/k².
pub fn ktop2_exponent(
    p: &Presentation,
    k_list: &[usize],
) -> Result<DimensionReport, DimensionError> {
    if k_list.is_empty() {
        return Err(DimensionError::EmptyKList);
    }
    let omega_grid: [f64; 3] = [1e-1, 1e-2, 1e-3];
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let count = variety_stratum_count(p, k)?;
        if count == 0 {
            rows.push(DimensionRow {
                k,
                value: f64::NEG_INFINITY,
                diagnostics: "empty variety".into(),
            });
            continue;
        }
        let md = moduli_dimension(p, k)?;
        let k2 = (k * k) as f64;
        if md == 0 {
            rows.push(DimensionRow {
                k,
                value: (count as f64).ln() / k2,
                diagnostics: format!("strata {count}; moduli 0"),
            });
        } else {
            let per_omega: Vec<f64> = omega_grid
                .iter()
                .map(|w| ((count as f64).ln() + md as f64 * (1.0 / w).ln()) / k2)
                .collect();
            rows.push(DimensionRow {
                k,
                value: *per_omega.last().unwrap(),
                diagnostics: format!(
                    "strata {count}; moduli {md}; DIVERGENT as omega→0; values at {omega_grid:?}: {per_omega:?}"
                ),
            });
        }
    }
    Ok(DimensionReport::from_rows(
        DimensionMode::KTop2,
        rows,
        "orbit stratum count with conjugation moduli",
    ))
}

/// Trace moments indexed by words of bounded length. The empty word has
/// moment 1; the trace property makes a word and its reversal agree, and
/// construction symmetrizes accordingly.
#[derive(Debug, Clone)]
pub struct TraceSpec {
    moments: BTreeMap<Word, f64>,
    pub degree: usize,
}

impl TraceSpec {
    pub fn new(
        raw: impl IntoIterator<Item = (Word, f64)>,
        degree: usize,
    ) -> Result<Self, DimensionError> {
        let mut moments: BTreeMap<Word, f64> = BTreeMap::new();
        moments.insert(Word::identity(), 1.0);
        for (w, v) in raw {
            if w.len() > degree {
                return Err(DimensionError::InconsistentMoments(format!(
                    "word of length {} exceeds the declared degree {degree}",
                    w.len()
                )));
            }
            if w.is_empty() && (v - 1.0).abs() > 1e-12 {
                return Err(DimensionError::InconsistentMoments(
                    "the empty word must have moment 1".into(),
                ));
            }
            let rev = w.reversed();
            if let Some(old) = moments.get(&rev) {
                if (old - v).abs() > 1e-9 && !rev.is_empty() {
                    return Err(DimensionError::InconsistentMoments(format!(
                        "word and reversal disagree: {old} vs {v}"
                    )));
                }
            }
            moments.insert(rev, v);
            moments.insert(w, v);
        }
        Ok(Self { moments, degree })
    }

    /// Single-generator trace Σ w_i δ_{λ_i} with the corresponding power
    /// moments up to the degree.
    pub fn from_spectrum_weights(
        points: &[f64],
        weights: &[f64],
        degree: usize,
    ) -> Result<Self, DimensionError> {
        if points.len() != weights.len()
            || weights.iter().any(|w| *w < 0.0)
            || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(DimensionError::InconsistentMoments(
                "weights must be a probability vector over the points".into(),
            ));
        }
        let mut raw = Vec::new();
        for q in 1..=degree {
            let m: f64 = points
                .iter()
                .zip(weights.iter())
                .map(|(p, w)| w * p.powi(q as i32))
                .sum();
            raw.push((Word(vec![0u16; q]), m));
        }
        Self::new(raw, degree)
    }

    pub fn moment(&self, w: &Word) -> Option<f64> {
        self.moments.get(w).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = (&Word, &f64)> {
        self.moments.iter()
    }

    /// Hankel positivity of the single-letter power moments; a necessary
    /// consistency condition for single generators.
    pub fn hankel_consistent(&self) -> bool {
        let half = self.degree / 2;
        let moment = |q: usize| -> f64 {
            if q == 0 {
                1.0
            } else {
                self.moments
                    .get(&Word(vec![0u16; q]))
                    .copied()
                    .unwrap_or(0.0)
            }
        };
        let h = DMatrix::<f64>::from_fn(half + 1, half + 1, |i, j| moment(i + j));
        h.symmetric_eigenvalues().iter().all(|l| *l >= -1e-9)
    }
}

/// Max over stored words of |τ_k(word(t)) − target|.
pub fn moment_defect(t: &MatrixTuple, ts: &TraceSpec) -> Result<f64, DimensionError> {
    let mut ev = TupleEvaluator::new(t);
    let k = t.dim() as f64;
    let mut worst = 0.0f64;
    for (w, target) in ts.words() {
        let m = ev.word_value(w)?;
        let tau = m.trace().re / k;
        worst = worst.max((tau - target).abs());
    }
    Ok(worst)
}

/// Tracial orbit dimension estimator: orbit-net counts of moment-matched
/// exact strata, log-normalized by k². Spectrum presentations enumerate
/// weak multiplicity vectors over their points (tracial microstates need
/// not realize every point); model presentations contribute their single
/// orbit when the model moments match.
pub fn k2_tracial_exponent(
    p: &Presentation,
    ts: &TraceSpec,
    k_list: &[usize],
    omega: f64,
) -> Result<DimensionReport, DimensionError> {
    if k_list.is_empty() {
        return Err(DimensionError::EmptyKList);
    }
    if !ts.hankel_consistent() {
        return Err(DimensionError::InconsistentMoments(
            "Hankel matrix of power moments is not positive semidefinite".into(),
        ));
    }
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let admission = 0.75 * admission_scale(p) / k as f64;
        let reps = admitted_representatives(p, ts, k, admission)?;
        if reps.is_empty() {
            rows.push(DimensionRow {
                k,
                value: f64::NEG_INFINITY,
                diagnostics: "no moment-matched stratum".into(),
            });
            continue;
        }
        // Orbit net over the representatives (single generators use the
        // exact sorted-spectrum metric).
        let count = orbit_net_count(&reps, omega)?;
        rows.push(DimensionRow {
            k,
            value: (count as f64).ln() / (k * k) as f64,
            diagnostics: format!(
                "admitted strata {}; orbit net {count} at omega {omega}; one-sided orbit distances",
                reps.len()
            ),
        });
    }
    Ok(DimensionReport::from_rows(
        DimensionMode::K2Tracial,
        rows,
        "moment-matched stratum orbit nets",
    ))
}

fn admission_scale(p: &Presentation) -> f64 {
    p.norm_hint().max(1.0)
}

fn admitted_representatives(
    p: &Presentation,
    ts: &TraceSpec,
    k: usize,
    admission: f64,
) -> Result<Vec<MatrixTuple>, DimensionError> {
    match p {
        Presentation::Spectrum { points } => {
            let mut out = Vec::new();
            for mults in weak_compositions(k, points.len()) {
                let mut diag = Vec::with_capacity(k);
                for (pt, m) in points.iter().zip(mults.iter()) {
                    diag.extend(std::iter::repeat(*pt).take(*m));
                }
                let t = MatrixTuple::new(vec![
                    crate::matrixcore::HermitianMatrix::from_real_diagonal(&diag),
                ])
                .map_err(MicrostateError::from)?;
                if moment_defect(&t, ts)? < admission {
                    out.push(t);
                }
            }
            Ok(out)
        }
        _ => match exact_witness(p, k, 0) {
            Some(t) => {
                if moment_defect(&t, ts)? < admission {
                    Ok(vec![t])
                } else {
                    Ok(vec![])
                }
            }
            None => Ok(vec![]),
        },
    }
}

fn orbit_net_count(reps: &[MatrixTuple], omega: f64) -> Result<usize, DimensionError> {
    let n = reps.len();
    let single = reps[0].len() == 1;
    let mut covered = vec![false; n];
    let mut count = 0usize;
    let opts = crate::matrixcore::OrbitOpts::default();
    for i in 0..n {
        if covered[i] {
            continue;
        }
        count += 1;
        covered[i] = true;
        for j in (i + 1)..n {
            if covered[j] {
                continue;
            }
            let d = if single {
                sorted_spectrum_distance(reps[i].get(0), reps[j].get(0))?
            } else {
                crate::matrixcore::orbit_distance(&reps[i], &reps[j], &opts)?.0
            };
            if d <= omega {
                covered[j] = true;
            }
        }
    }
    Ok(count)
}

/// Orbit dimension capacity: supremum of the tracial orbit dimension over
/// the supplied trace list, realized as a max with the argmax recorded.
pub fn orbit_capacity(
    p: &Presentation,
    traces: &[TraceSpec],
    k_list: &[usize],
    omega: f64,
) -> Result<DimensionReport, DimensionError> {
    if traces.is_empty() {
        return Err(DimensionError::NoTraces);
    }
    let mut best: Option<(usize, DimensionReport)> = None;
    for (i, ts) in traces.iter().enumerate() {
        let report = k2_tracial_exponent(p, ts, k_list, omega)?;
        let better = match &best {
            None => true,
            Some((_, b)) => report.estimate > b.estimate,
        };
        if better {
            best = Some((i, report));
        }
    }
    let (argmax, inner) = best.expect("nonempty traces");
    Ok(DimensionReport {
        mode: DimensionMode::OrbitCapacity,
        rows: inner.rows,
        estimate: inner.estimate,
        method: format!("max over {} traces; argmax trace index {argmax}", traces.len()),
    })
}

/// Fit of the stability lower-bound model: log ν∞ ≥ K²·(log C + α·log(1/ω))
/// along dimensions K = q·k0 and a scale grid.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub alpha: f64,
    pub log_c: f64,
    /// (q, omega, log count) rows.
    pub rows: Vec<(usize, f64, f64)>,
    /// Counts grow monotonically as ω shrinks, per dimension.
    pub monotone_ok: bool,
}

/// Probe the stability growth model on brute-force-able sizes (k ≤ 2) or
/// through the tangent-rank route, fitting (α, log C) by least squares over
/// the (q, ω) grid.
pub fn stability_probe(
    p: &Presentation,
    k0: usize,
    k_multiples: &[usize],
    omega_grid: &[f64],
) -> Result<StabilityReport, DimensionError> {
    if k_multiples.is_empty() || omega_grid.is_empty() {
        return Err(DimensionError::EmptyKList);
    }
    let mut rows = Vec::new();
    let mut monotone_ok = true;
    for &q in k_multiples {
        let k = q * k0;
        let mut last = f64::NEG_INFINITY;
        for &w in omega_grid {
            let log_count = if k <= 2 {
                brute_force_cover(p, k, w, 0.05, Metric::OpNorm, 0.1)?.log_upper
            } else {
                match max_variety_rank(p, k)? {
                    Some((rank, _)) => {
                        let strata = variety_stratum_count(p, k)? as f64;
                        strata.max(1.0).ln() + rank as f64 * (1.0 / w).ln()
                    }
                    None => return Err(DimensionError::InfeasibleScale),
                }
            };
            if log_count < last - 1e-9 {
                monotone_ok = false;
            }
            last = log_count;
            rows.push((q, w, log_count));
        }
    }
    // Least squares y = log_c + alpha·x with y = log ν/K², x = log(1/ω).
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|(q, w, ln)| {
            let kk = (q * k0) as f64;
            ((1.0 / w).ln(), ln / (kk * kk))
        })
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let alpha = if denom.abs() < 1e-12 {
        0.0
    } else {
        (n * sxy - sx * sy) / denom
    };
    let log_c = (sy - alpha * sx) / n;
    Ok(StabilityReport {
        alpha,
        log_c,
        rows,
        monotone_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::{haar_unitary, HermitianMatrix};

    fn spectrum(points: &[f64]) -> Presentation {
        Presentation::Spectrum {
            points: points.to_vec(),
        }
    }

    fn m2_model() -> Presentation {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        let b = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        ))
        .unwrap();
        Presentation::MatrixModel {
            tuple: MatrixTuple::new(vec![a, b]).unwrap(),
        }
    }

    #[test]
    fn rank_closed_form_for_two_point_spectra() {
        // rank = k² − m₁² − m₂² exactly, across all strata at k = 4 and a
        // Haar-conjugated representative.
        for (m1, m2) in [(1usize, 3usize), (2, 2), (3, 1)] {
            let k = m1 + m2;
            let mut diag = vec![0.0; m1];
            diag.extend(vec![1.0; m2]);
            let u = haar_unitary(k, 3);
            let t = MatrixTuple::new(vec![
                HermitianMatrix::from_real_diagonal(&diag).conjugate(&u),
            ])
            .unwrap();
            let model = TangentModel {
                mode: TangentMode::SimultaneousConjugation,
                presentation: spectrum(&[0.0, 1.0]),
            };
            let r = tangent_rank(&t, &model).unwrap();
            assert_eq!(r, k * k - m1 * m1 - m2 * m2);
        }
    }

    #[test]
    fn rank_of_scalar_is_zero() {
        let t = MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(&[2.0, 2.0, 2.0])])
            .unwrap();
        let model = TangentModel {
            mode: TangentMode::SimultaneousConjugation,
            presentation: spectrum(&[2.0]),
        };
        assert_eq!(tangent_rank(&t, &model).unwrap(), 0);
    }

    #[test]
    fn independent_rank_sums_factors() {
        // Balanced two-point pair at k = 8: 2·(64 − 32) = 64.
        let p = Presentation::FreeProduct {
            left: Box::new(spectrum(&[0.0, 1.0])),
            right: Box::new(spectrum(&[0.0, 1.0])),
        };
        let t = exact_witness(&p, 8, 1).unwrap();
        let model = TangentModel {
            mode: TangentMode::IndependentConjugation,
            presentation: p,
        };
        assert_eq!(tangent_rank(&t, &model).unwrap(), 64);
    }

    #[test]
    fn non_exact_tuple_rejected() {
        let t = MatrixTuple::new(vec![crate::matrixcore::gue_hermitian(4, 5, 1.0)]).unwrap();
        let model = TangentModel {
            mode: TangentMode::SimultaneousConjugation,
            presentation: spectrum(&[0.0, 1.0]),
        };
        assert!(matches!(
            tangent_rank(&t, &model),
            Err(DimensionError::NotExact { .. })
        ));
    }

    #[test]
    fn exhaustive_stratum_maximization_is_balanced() {
        // Balanced (or near-balanced) multiplicities maximize the rank.
        for k in 2..=12usize {
            for n in 2..=4usize {
                if k < n {
                    continue;
                }
                let mut best_rank = 0;
                let mut best_spread = usize::MAX;
                for mults in compositions(k, n) {
                    let rank = k * k - mults.iter().map(|m| m * m).sum::<usize>();
                    let spread = mults.iter().max().unwrap() - mults.iter().min().unwrap();
                    if rank > best_rank {
                        best_rank = rank;
                        best_spread = spread;
                    } else if rank == best_rank {
                        best_spread = best_spread.min(spread);
                    }
                }
                assert!(best_spread <= 1, "k={k} n={n}: spread {best_spread}");
            }
        }
    }

    #[test]
    fn delta_top_two_point_spectrum_half() {
        let report = delta_top_exponent(&spectrum(&[0.0, 1.0]), &[8, 12, 16]).unwrap();
        for row in &report.rows {
            assert_eq!(row.value, 0.5, "k={}", row.k);
        }
        assert_eq!(report.estimate, 0.5);
    }

    #[test]
    fn delta_top_single_point_zero() {
        let report = delta_top_exponent(&spectrum(&[1.5]), &[4, 6]).unwrap();
        assert_eq!(report.estimate, 0.0);
    }

    #[test]
    fn delta_top_free_product_additive() {
        let fp = Presentation::FreeProduct {
            left: Box::new(spectrum(&[0.0, 1.0])),
            right: Box::new(spectrum(&[0.0, 1.0])),
        };
        let report = delta_top_exponent(&fp, &[8, 12]).unwrap();
        assert_eq!(report.estimate, 1.0);

        let fp2 = Presentation::FreeProduct {
            left: Box::new(spectrum(&[0.0, 1.0])),
            right: Box::new(spectrum(&[0.0, 1.0, 2.0])),
        };
        let report = delta_top_exponent(&fp2, &[6, 12]).unwrap();
        assert_eq!(report.estimate, 7.0 / 6.0);
        for row in &report.rows {
            assert_eq!(row.value, 7.0 / 6.0, "k={}", row.k);
        }
    }

    #[test]
    fn delta_top_matrix_model_three_quarters() {
        let report = delta_top_exponent(&m2_model(), &[4, 8]).unwrap();
        assert_eq!(report.estimate, 0.75);
        for row in &report.rows {
            assert_eq!(row.value, 0.75);
        }
        // Amplification form of the same algebra.
        let amp = Presentation::Amplification {
            base: Box::new(Presentation::MatrixModel {
                tuple: MatrixTuple::new(vec![HermitianMatrix::identity(1)]).unwrap(),
            }),
            n: 2,
        };
        let report = delta_top_exponent(&amp, &[4, 8]).unwrap();
        assert_eq!(report.estimate, 0.75);
    }

    #[test]
    fn delta_top_direct_sum_matches_dimension_formula() {
        // Legs with invertible generators: x ⊕ 0 and 0 ⊕ y generate all of
        // C² ⊕ C² = C⁴, complex dimension 4 → 1 − 1/4 at k divisible by 4.
        let ds = Presentation::DirectSum {
            left: Box::new(spectrum(&[1.0, 2.0])),
            right: Box::new(spectrum(&[1.0, 2.0])),
        };
        let report = delta_top_exponent(&ds, &[8]).unwrap();
        assert_eq!(report.estimate, 0.75);

        // With 0 in both leg spectra the kernels merge with the opposite
        // summands: the two generators only generate C³, so the exponent
        // maximum at k = 8 is (64 − (3² + 3² + 2²))/64.
        let ds0 = Presentation::DirectSum {
            left: Box::new(spectrum(&[0.0, 1.0])),
            right: Box::new(spectrum(&[0.0, 1.0])),
        };
        let report = delta_top_exponent(&ds0, &[8]).unwrap();
        assert_eq!(report.estimate, 42.0 / 64.0);
    }

    #[test]
    fn ktop2_spectrum_decay() {
        let report = ktop2_exponent(&spectrum(&[0.0, 1.0]), &[20]).unwrap();
        let expected = 19.0f64.ln() / 400.0;
        assert_eq!(report.estimate, expected);
    }

    #[test]
    fn ktop2_model_single_orbit() {
        let report = ktop2_exponent(&m2_model(), &[2, 4, 6]).unwrap();
        assert_eq!(report.estimate, 0.0);
        // Odd k has no representation: empty variety.
        let report = ktop2_exponent(&m2_model(), &[3]).unwrap();
        assert_eq!(report.estimate, f64::NEG_INFINITY);
    }

    #[test]
    fn ktop2_trend_nonincreasing() {
        let ks: Vec<usize> = (10..=40).collect();
        let report = ktop2_exponent(&spectrum(&[0.0, 1.0]), &ks).unwrap();
        for w in report.rows.windows(2) {
            assert!(w[1].value <= w[0].value + 1e-15);
        }
    }

    #[test]
    fn ktop2_free_product_moduli_divergence() {
        let fp2 = Presentation::FreeProduct {
            left: Box::new(spectrum(&[0.0, 1.0])),
            right: Box::new(spectrum(&[0.0, 1.0, 2.0])),
        };
        let report = ktop2_exponent(&fp2, &[12]).unwrap();
        assert!(report.rows[0].diagnostics.contains("DIVERGENT"));
        // moduli = (72 + 96) − (144 − 1) = 25 at k = 12.
        assert!(report.rows[0].diagnostics.contains("moduli 25"));
        assert!(report.estimate > 7.0 / 6.0 - 0.05);
    }

    #[test]
    fn moment_defect_basics() {
        let ts = TraceSpec::from_spectrum_weights(&[1.0], &[1.0], 3).unwrap();
        let t = MatrixTuple::new(vec![HermitianMatrix::identity(4)]).unwrap();
        assert!(moment_defect(&t, &ts).unwrap() <= 1e-15);
        let zero = MatrixTuple::new(vec![HermitianMatrix::zeros(4)]).unwrap();
        assert_eq!(moment_defect(&zero, &ts).unwrap(), 1.0);
    }

    #[test]
    fn moment_defect_of_matched_diagonal() {
        let ts = TraceSpec::from_spectrum_weights(&[0.0, 1.0], &[0.5, 0.5], 4).unwrap();
        let t = exact_witness(&spectrum(&[0.0, 1.0]), 6, 0).unwrap();
        assert!(moment_defect(&t, &ts).unwrap() <= 1e-12);
        let t = exact_witness(&spectrum(&[0.0, 1.0]), 7, 0).unwrap();
        // Off-balance discretization error ~ 1/k.
        assert!(moment_defect(&t, &ts).unwrap() <= 1.0 / 7.0 + 1e-12);
    }

    #[test]
    fn tracial_point_mass_collapses() {
        let ts = TraceSpec::from_spectrum_weights(&[0.0, 1.0], &[1.0, 0.0], 3).unwrap();
        let report = k2_tracial_exponent(&spectrum(&[0.0, 1.0]), &ts, &[6], 0.05).unwrap();
        assert_eq!(report.estimate, 0.0); // single stratum (k, 0)
    }

    #[test]
    fn tracial_balanced_collapse() {
        let ts = TraceSpec::from_spectrum_weights(&[0.0, 1.0], &[0.5, 0.5], 4).unwrap();
        let report = k2_tracial_exponent(&spectrum(&[0.0, 1.0]), &ts, &[6], 0.05).unwrap();
        assert!(report.estimate <= 0.1, "estimate {}", report.estimate);
    }

    #[test]
    fn tracial_monotone_in_moment_degree() {
        // Fewer moment constraints admit more strata: three-point spectrum
        // where first-moment-only admits off-balance strata that degree-4
        // moments exclude.
        let points = [0.0, 1.0, 2.0];
        let weights = [0.25, 0.5, 0.25];
        let m1 = TraceSpec::from_spectrum_weights(&points, &weights, 1).unwrap();
        let m4 = TraceSpec::from_spectrum_weights(&points, &weights, 4).unwrap();
        let p = spectrum(&points);
        let r1 = k2_tracial_exponent(&p, &m1, &[4], 0.05).unwrap();
        let r4 = k2_tracial_exponent(&p, &m4, &[4], 0.05).unwrap();
        assert!(
            r1.estimate >= r4.estimate,
            "{} < {}",
            r1.estimate,
            r4.estimate
        );
        assert!(r1.estimate > r4.estimate, "expected a strict drop");
    }

    #[test]
    fn inconsistent_moments_rejected() {
        // Second moment below the square of the first violates Hankel
        // positivity.
        let ts = TraceSpec::new(
            [
                (Word(vec![0]), 1.0),
                (Word(vec![0, 0]), 0.5),
            ],
            2,
        )
        .unwrap();
        assert!(!ts.hankel_consistent());
        assert!(matches!(
            k2_tracial_exponent(&spectrum(&[0.0, 1.0]), &ts, &[4], 0.05),
            Err(DimensionError::InconsistentMoments(_))
        ));
    }

    #[test]
    fn capacity_takes_max_over_traces() {
        let p = spectrum(&[0.0, 1.0]);
        let collapse = TraceSpec::from_spectrum_weights(&[0.0, 1.0], &[1.0, 0.0], 2).unwrap();
        let spread = TraceSpec::from_spectrum_weights(&[0.0, 1.0], &[0.5, 0.5], 1).unwrap();
        let single = orbit_capacity(&p, &[spread.clone()], &[6], 0.05).unwrap();
        let expect = k2_tracial_exponent(&p, &spread, &[6], 0.05).unwrap();
        assert_eq!(single.estimate, expect.estimate);
        let dup = orbit_capacity(&p, &[spread.clone(), spread.clone()], &[6], 0.05).unwrap();
        assert_eq!(dup.estimate, single.estimate);
        let both = orbit_capacity(&p, &[collapse, spread], &[6], 0.05).unwrap();
        assert!(both.estimate >= single.estimate);
        assert!(both.method.contains("argmax"));
    }

    #[test]
    fn stability_probe_two_point_spectrum() {
        let report = stability_probe(
            &spectrum(&[0.0, 1.0]),
            2,
            &[1],
            &[0.4, 0.3, 0.2],
        )
        .unwrap();
        assert!(
            report.alpha >= 0.3 && report.alpha <= 0.7,
            "alpha = {}",
            report.alpha
        );
        assert!(report.monotone_ok);
        assert_eq!(report.rows.len(), 3);
    }

    #[test]
    fn stability_probe_single_point_flat() {
        let report = stability_probe(&spectrum(&[0.5]), 2, &[1], &[0.4, 0.2]).unwrap();
        assert!(report.alpha.abs() <= 0.05, "alpha = {}", report.alpha);
    }

    #[test]
    fn report_json_shape() {
        let report = delta_top_exponent(&spectrum(&[0.0, 1.0]), &[4]).unwrap();
        let v = report.to_json();
        assert_eq!(v["mode"], "delta_top");
        assert!(v["rows"].as_array().unwrap().len() == 1);
        let table = report.render_table();
        assert!(table.contains("estimate"));
    }
}
