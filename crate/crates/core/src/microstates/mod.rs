//! Presentations of generator families and their norm-microstate spaces.
//!
//! A presentation describes target generators x_1,…,x_n of a unital
//! C*-algebra, either concretely (a point spectrum, an explicit matrix
//! model, a tensor amplification, orthogonal sums) or abstractly (a table
//! of polynomial norms, a unital full free product). A k-dimensional
//! microstate for the presentation is a Hermitian tuple whose polynomial
//! norms match the targets within ε and whose operator norm stays below the
//! cutoff radius R; `membership_defect` measures the worst violation and
//! `semi_membership_defect` its one-sided variant, where norms may
//! undershoot the targets arbitrarily but overshoot by at most ε.

mod compose;
mod json;
mod sample;

pub use compose::{
    compose_direct_sum, compose_free_product, compress_by_matrix_units, CompressedTuple,
};
pub(crate) use compose::rotated_pair_model;
pub use json::{load_presentation, presentation_from_json, presentation_to_json, save_presentation};
pub use sample::{exact_witness, sample_exact_spectrum, sample_penalty, PenaltyOpts};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::matrixcore::{
    hermitian_unit_basis, kron, operator_norm, HermitianMatrix, MatrixError, MatrixTuple,
};
use crate::ncpoly::{default_battery_with_cap, NcPolynomial, PolyBattery, PolyError, TupleEvaluator};
use crate::C64;

/// Weight applied to radius violations inside the membership defect.
pub const RADIUS_PENALTY: f64 = 1e6;

#[derive(Debug, Error)]
pub enum MicrostateError {
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
    #[error("operation requires a {expected} presentation")]
    WrongKind { expected: &'static str },
    #[error("battery/target length mismatch: {batteries} polynomials vs {targets} targets")]
    TargetMismatch { batteries: usize, targets: usize },
    #[error("battery is not a prefix of the stored norm table battery")]
    BatteryNotPrefix,
    #[error("no certified oracle or model route for these free-product factors")]
    OracleUnavailable,
    #[error("multiplicities {multiplicities:?} do not fit dimension {k}")]
    BadMultiplicities { multiplicities: Vec<usize>, k: usize },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("presence projection needs 1 ≤ n ≤ {len}, got {n}")]
    BadPresenceArity { n: usize, len: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("bad presentation file: {0}")]
    BadFile(String),
}

/// Description of the target generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Presentation {
    /// Single self-adjoint generator with the given (strictly increasing)
    /// point spectrum.
    Spectrum { points: Vec<f64> },
    /// Generators of a finite-dimensional algebra given explicitly.
    MatrixModel { tuple: MatrixTuple },
    /// Abstract generators known only through polynomial norms.
    NormTable {
        battery: PolyBattery,
        targets: Vec<f64>,
        radius: f64,
    },
    /// Unital full free product; generators are concatenated, left first.
    FreeProduct {
        left: Box<Presentation>,
        right: Box<Presentation>,
    },
    /// Orthogonal sum; generators are x_i ⊕ 0 then 0 ⊕ y_j, with the
    /// ambient identity 1 ⊕ 1.
    DirectSum {
        left: Box<Presentation>,
        right: Box<Presentation>,
    },
    /// base ⊗ M_n(ℂ); generators are base ⊗ I_n followed by the n²
    /// self-adjoint matrix-unit combinations I ⊗ u.
    Amplification { base: Box<Presentation>, n: usize },
}

impl Presentation {
    pub fn generator_count(&self) -> usize {
        match self {
            Presentation::Spectrum { .. } => 1,
            Presentation::MatrixModel { tuple } => tuple.len(),
            Presentation::NormTable { battery, .. } => battery.num_indeterminates(),
            Presentation::FreeProduct { left, right } | Presentation::DirectSum { left, right } => {
                left.generator_count() + right.generator_count()
            }
            Presentation::Amplification { base, n } => base.generator_count() + n * n,
        }
    }

    pub fn validate(&self) -> Result<(), MicrostateError> {
        match self {
            Presentation::Spectrum { points } => {
                if points.is_empty() {
                    return Err(MicrostateError::InvalidPresentation(
                        "spectrum needs at least one point".into(),
                    ));
                }
                if points.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(MicrostateError::InvalidPresentation(
                        "spectrum points must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            Presentation::MatrixModel { .. } => Ok(()),
            Presentation::NormTable {
                battery,
                targets,
                radius,
            } => {
                if battery.len() != targets.len() {
                    return Err(MicrostateError::TargetMismatch {
                        batteries: battery.len(),
                        targets: targets.len(),
                    });
                }
                if targets.iter().any(|t| *t < 0.0) {
                    return Err(MicrostateError::InvalidPresentation(
                        "norm targets must be nonnegative".into(),
                    ));
                }
                let mut letter_max = 0.0f64;
                for (p, t) in battery.polys().iter().zip(targets.iter()) {
                    if p.is_identity() && *t != 1.0 {
                        return Err(MicrostateError::InvalidPresentation(
                            "the identity polynomial must have target 1".into(),
                        ));
                    }
                    if p.degree() == 1 && p.num_terms() == 1 {
                        letter_max = letter_max.max(*t);
                    }
                }
                if *radius <= letter_max {
                    return Err(MicrostateError::InvalidPresentation(format!(
                        "radius {radius} must exceed the largest degree-1 target {letter_max}"
                    )));
                }
                Ok(())
            }
            Presentation::FreeProduct { left, right } | Presentation::DirectSum { left, right } => {
                left.validate()?;
                right.validate()
            }
            Presentation::Amplification { base, n } => {
                if *n == 0 {
                    return Err(MicrostateError::InvalidPresentation(
                        "amplification order must be positive".into(),
                    ));
                }
                base.validate()
            }
        }
    }

    /// Upper bound on the generator norms, used for the default radius.
    pub fn norm_hint(&self) -> f64 {
        match self {
            Presentation::Spectrum { points } => {
                points.iter().fold(0.0f64, |a, p| a.max(p.abs()))
            }
            Presentation::MatrixModel { tuple } => tuple.op_norm(),
            Presentation::NormTable { radius, .. } => *radius,
            Presentation::FreeProduct { left, right } | Presentation::DirectSum { left, right } => {
                left.norm_hint().max(right.norm_hint())
            }
            Presentation::Amplification { base, .. } => base.norm_hint().max(1.0),
        }
    }

    /// Any radius above the generator norms yields the same microstate
    /// theory, so the default adds one to the norm hint.
    pub fn default_radius(&self) -> f64 {
        self.norm_hint() + 1.0
    }

    /// Explicit finite-dimensional model of the presented generators, when
    /// one exists: spectra become diagonal matrices, orthogonal sums become
    /// block diagonals, amplifications tensor with matrix units. Free
    /// products are infinite dimensional in general and return None.
    pub fn resolve_model(&self) -> Option<MatrixTuple> {
        match self {
            Presentation::Spectrum { points } => Some(
                MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(points)]).ok()?,
            ),
            Presentation::MatrixModel { tuple } => Some(tuple.clone()),
            Presentation::NormTable { .. } | Presentation::FreeProduct { .. } => None,
            Presentation::DirectSum { left, right } => {
                let lm = left.resolve_model()?;
                let rm = right.resolve_model()?;
                let (kl, kr) = (lm.dim(), rm.dim());
                let mut mats = Vec::new();
                for m in lm.mats() {
                    mats.push(
                        HermitianMatrix::new(crate::matrixcore::direct_sum(
                            m.matrix(),
                            &DMatrix::zeros(kr, kr),
                        ))
                        .ok()?,
                    );
                }
                for m in rm.mats() {
                    mats.push(
                        HermitianMatrix::new(crate::matrixcore::direct_sum(
                            &DMatrix::zeros(kl, kl),
                            m.matrix(),
                        ))
                        .ok()?,
                    );
                }
                MatrixTuple::new(mats).ok()
            }
            Presentation::Amplification { base, n } => {
                let bm = base.resolve_model()?;
                let k0 = bm.dim();
                let eye_n = DMatrix::<C64>::identity(*n, *n);
                let eye_k0 = DMatrix::<C64>::identity(k0, k0);
                let mut mats = Vec::new();
                for m in bm.mats() {
                    mats.push(HermitianMatrix::new(kron(m.matrix(), &eye_n)).ok()?);
                }
                for u in hermitian_unit_basis(*n) {
                    mats.push(HermitianMatrix::new(kron(&eye_k0, &u)).ok()?);
                }
                MatrixTuple::new(mats).ok()
            }
        }
    }

    /// Battery tailored to the presentation: plain words plus the relation
    /// polynomials that pin down its structure (spectrum annihilators,
    /// matrix-unit relations, base/unit commutation).
    pub fn recommended_battery(&self, degree: usize) -> Result<PolyBattery, MicrostateError> {
        let n = self.generator_count();
        let degree = degree.max(1);
        let mut polys = word_battery_polys(n, degree)?;
        self.push_relations(&mut polys, 0, n)?;
        Ok(PolyBattery::new(polys, &format!("recommended(d={degree})"))?)
    }

    /// Append relation polynomials, with this presentation's letters
    /// occupying indices offset..offset+generator_count() of an
    /// `total`-letter alphabet.
    fn push_relations(
        &self,
        polys: &mut Vec<NcPolynomial>,
        offset: usize,
        total: usize,
    ) -> Result<(), MicrostateError> {
        match self {
            Presentation::Spectrum { points } => {
                polys.push(annihilator_poly(points, offset, total));
                Ok(())
            }
            Presentation::MatrixModel { .. } | Presentation::NormTable { .. } => Ok(()),
            Presentation::FreeProduct { left, right } | Presentation::DirectSum { left, right } => {
                left.push_relations(polys, offset, total)?;
                right.push_relations(polys, offset + left.generator_count(), total)
            }
            Presentation::Amplification { base, n } => {
                let m = base.generator_count();
                let units = RawUnits::new(offset + m, *n, total);
                // Products e_{s1t1} e_{s2t2} = δ_{t1 s2} e_{s1 t2}.
                for s1 in 0..*n {
                    for t1 in 0..*n {
                        for s2 in 0..*n {
                            for t2 in 0..*n {
                                let mut rel = units.e(s1, t1).mul(&units.e(s2, t2));
                                if t1 == s2 {
                                    rel = rel.sub(&units.e(s1, t2));
                                }
                                if !rel.is_zero() {
                                    polys.push(rel);
                                }
                            }
                        }
                    }
                }
                // Partition of identity Σ e_ss = 1.
                let mut sum = NcPolynomial::zero(total);
                for s in 0..*n {
                    sum = sum.add(&units.e(s, s));
                }
                polys.push(sum.sub(&NcPolynomial::one(total)));
                // Base generators commute with the units.
                for i in 0..m {
                    let x = NcPolynomial::letter(offset + i, total);
                    for s in 0..*n {
                        for t in 0..*n {
                            let e = units.e(s, t);
                            polys.push(x.mul(&e).sub(&e.mul(&x)));
                        }
                    }
                }
                base.push_relations(polys, offset, total)
            }
        }
    }
}

/// Raw matrix units expressed as polynomials in the self-adjoint unit
/// letters: e_ss is a letter, and for s < t the pair (sym, asym) of letters
/// gives e_st = (sym + i·asym)/2.
struct RawUnits {
    offset: usize,
    n: usize,
    total: usize,
}

impl RawUnits {
    fn new(offset: usize, n: usize, total: usize) -> Self {
        Self { offset, n, total }
    }

    fn pair_base(&self, s: usize, t: usize) -> usize {
        // Letters: n diagonal units, then (sym, asym) pairs for s < t in
        // row-major order.
        debug_assert!(s < t);
        let mut pos = 0;
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if (a, b) == (s, t) {
                    return self.offset + self.n + 2 * pos;
                }
                pos += 1;
            }
        }
        unreachable!("pair out of range");
    }

    fn e(&self, s: usize, t: usize) -> NcPolynomial {
        let total = self.total;
        if s == t {
            NcPolynomial::letter(self.offset + s, total)
        } else if s < t {
            let sym = NcPolynomial::letter(self.pair_base(s, t), total);
            let asym = NcPolynomial::letter(self.pair_base(s, t) + 1, total);
            sym.add(&asym.scale(C64::new(0.0, -1.0)))
                .scale(C64::new(0.5, 0.0))
        } else {
            let sym = NcPolynomial::letter(self.pair_base(t, s), total);
            let asym = NcPolynomial::letter(self.pair_base(t, s) + 1, total);
            sym.add(&asym.scale(C64::new(0.0, 1.0)))
                .scale(C64::new(0.5, 0.0))
        }
    }
}

/// Π_i (X − λ_i) for the letter at `offset` in a `total`-letter alphabet.
fn annihilator_poly(points: &[f64], offset: usize, total: usize) -> NcPolynomial {
    let x = NcPolynomial::letter(offset, total);
    let mut prod = NcPolynomial::one(total);
    for lambda in points {
        prod = prod.mul(&x.sub(&NcPolynomial::constant(C64::new(*lambda, 0.0), total)));
    }
    prod
}

fn word_battery_polys(n: usize, degree: usize) -> Result<Vec<NcPolynomial>, MicrostateError> {
    // Shrink the degree until the word count fits a generous cap; the
    // battery invariant (identity and degree-1 words) survives any shrink
    // to degree ≥ 1.
    let mut d = degree;
    loop {
        match default_battery_with_cap(n, d, 4000) {
            Ok(b) => return Ok(b.polys().to_vec()),
            Err(PolyError::BatteryTooLarge { .. }) if d > 1 => d -= 1,
            Err(e) => return Err(e.into()),
        }
    }
}

/// Microstate space parameters: dimension, tolerance, cutoff radius, and
/// the polynomial battery.
#[derive(Debug, Clone)]
pub struct MicrostateParams {
    pub k: usize,
    pub epsilon: f64,
    pub radius: f64,
    pub battery: PolyBattery,
}

impl MicrostateParams {
    pub fn new(k: usize, epsilon: f64, radius: f64, battery: PolyBattery) -> Self {
        assert!(radius > 0.0 && !battery.is_empty());
        Self {
            k,
            epsilon,
            radius,
            battery,
        }
    }
}

/// A sampled approximate representation with its recomputed defect.
#[derive(Debug, Clone)]
pub struct Microstate {
    pub tuple: MatrixTuple,
    pub defect: f64,
    pub params: MicrostateParams,
}

/// Target norms for a battery, with a flag for estimated (uncertified)
/// values.
#[derive(Debug, Clone)]
pub struct Targets {
    pub values: Vec<f64>,
    pub uncertain: bool,
}

/// Comparison values ‖P_j(x_1,…,x_n)‖ for microstate membership.
///
/// Concrete presentations evaluate in their resolved model; norm tables
/// return stored targets; free products use the exact two-projection oracle
/// when both factors are spectra with at most two points (after affine
/// reparametrization to projections), and otherwise fall back to a
/// random-rotation model sequence whose values are flagged uncertain.
pub fn target_norms(p: &Presentation, battery: &PolyBattery) -> Result<Targets, MicrostateError> {
    if battery.num_indeterminates() != p.generator_count() {
        return Err(MicrostateError::LayoutMismatch(format!(
            "battery has {} letters, presentation has {} generators",
            battery.num_indeterminates(),
            p.generator_count()
        )));
    }
    if let Presentation::NormTable {
        battery: stored,
        targets,
        ..
    } = p
    {
        if !stored.has_prefix(battery) {
            return Err(MicrostateError::BatteryNotPrefix);
        }
        return Ok(Targets {
            values: targets[..battery.len()].to_vec(),
            uncertain: false,
        });
    }
    if let Some(model) = p.resolve_model() {
        let mut ev = TupleEvaluator::new(&model);
        let mut values = Vec::with_capacity(battery.len());
        for poly in battery.polys() {
            values.push(operator_norm(&ev.eval_poly(poly)?)?);
        }
        return Ok(Targets {
            values,
            uncertain: false,
        });
    }
    match p {
        Presentation::FreeProduct { left, right } => {
            free_product_targets(left, right, battery)
        }
        _ => Err(MicrostateError::OracleUnavailable),
    }
}

/// Spectrum factor classified for the two-projection oracle.
enum ProjectionLeg {
    /// One-point spectrum: the generator is the scalar α.
    Scalar(f64),
    /// Two-point spectrum {α, β}: the generator is α + (β−α)·p for a
    /// projection p.
    TwoPoint { base: f64, gap: f64 },
}

fn classify_leg(p: &Presentation) -> Option<ProjectionLeg> {
    match p {
        Presentation::Spectrum { points } if points.len() == 1 => {
            Some(ProjectionLeg::Scalar(points[0]))
        }
        Presentation::Spectrum { points } if points.len() == 2 => Some(ProjectionLeg::TwoPoint {
            base: points[0],
            gap: points[1] - points[0],
        }),
        _ => None,
    }
}

fn free_product_targets(
    left: &Presentation,
    right: &Presentation,
    battery: &PolyBattery,
) -> Result<Targets, MicrostateError> {
    if let (Some(l), Some(r)) = (classify_leg(left), classify_leg(right)) {
        // Affine reparametrization onto the universal two-projection
        // algebra: X_left → α₁ + gap₁·Y1, X_right → α₂ + gap₂·Y2.
        let sub = |leg: &ProjectionLeg, letter: usize| match leg {
            ProjectionLeg::Scalar(a) => NcPolynomial::constant(C64::new(*a, 0.0), 2),
            ProjectionLeg::TwoPoint { base, gap } => {
                NcPolynomial::constant(C64::new(*base, 0.0), 2)
                    .add(&NcPolynomial::letter(letter, 2).scale(C64::new(*gap, 0.0)))
            }
        };
        let subs = [sub(&l, 0), sub(&r, 1)];
        let mut values = Vec::with_capacity(battery.len());
        for poly in battery.polys() {
            let reparam = poly.substitute(&subs)?;
            let out = crate::mfcheck::two_projection_oracle(&reparam)
                .map_err(|_| MicrostateError::OracleUnavailable)?;
            values.push(out.value);
        }
        return Ok(Targets {
            values,
            uncertain: false,
        });
    }
    // Uncertified route: a short random-rotation model sequence.
    let lm = left
        .resolve_model()
        .ok_or(MicrostateError::OracleUnavailable)?;
    let rm = right
        .resolve_model()
        .ok_or(MicrostateError::OracleUnavailable)?;
    let lcm = num_lcm(lm.dim(), rm.dim());
    let sizes = [lcm * (48 / lcm + 1), lcm * (96 / lcm + 1)];
    let mut values = vec![0.0f64; battery.len()];
    for seed in 0..3u64 {
        let t = compose::rotated_pair_model(&lm, &rm, sizes[1], seed)?;
        let mut ev = TupleEvaluator::new(&t);
        for (j, poly) in battery.polys().iter().enumerate() {
            values[j] = values[j].max(operator_norm(&ev.eval_poly(poly)?)?);
        }
    }
    Ok(Targets {
        values,
        uncertain: true,
    })
}

fn num_gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

pub(crate) fn num_lcm(a: usize, b: usize) -> usize {
    a / num_gcd(a, b) * b
}

/// Worst two-sided norm deviation over the battery, plus a heavy penalty
/// for exceeding the cutoff radius. The tuple is a microstate iff the
/// defect is at most ε. Returns the index of the worst polynomial.
pub fn membership_defect(
    t: &MatrixTuple,
    targets: &[f64],
    params: &MicrostateParams,
) -> Result<(f64, usize), MicrostateError> {
    if targets.len() != params.battery.len() {
        return Err(MicrostateError::TargetMismatch {
            batteries: params.battery.len(),
            targets: targets.len(),
        });
    }
    let mut ev = TupleEvaluator::new(t);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_idx = 0;
    for (j, poly) in params.battery.polys().iter().enumerate() {
        let norm = operator_norm(&ev.eval_poly(poly)?)?;
        let dev = (norm - targets[j]).abs();
        if dev > worst {
            worst = dev;
            worst_idx = j;
        }
    }
    let radius_violation = (t.op_norm() - params.radius).max(0.0) * RADIUS_PENALTY;
    Ok((worst.max(radius_violation), worst_idx))
}

/// One-sided defect max_j max(0, ‖P_j(t)‖ − target_j); never exceeds the
/// two-sided defect.
pub fn semi_membership_defect(
    t: &MatrixTuple,
    targets: &[f64],
    params: &MicrostateParams,
) -> Result<f64, MicrostateError> {
    if targets.len() != params.battery.len() {
        return Err(MicrostateError::TargetMismatch {
            batteries: params.battery.len(),
            targets: targets.len(),
        });
    }
    let mut ev = TupleEvaluator::new(t);
    let mut worst = 0.0f64;
    for (j, poly) in params.battery.polys().iter().enumerate() {
        let norm = operator_norm(&ev.eval_poly(poly)?)?;
        worst = worst.max(norm - targets[j]);
    }
    let radius_violation = (t.op_norm() - params.radius).max(0.0) * RADIUS_PENALTY;
    Ok(worst.max(radius_violation))
}

/// Presence projection (A_1,…,A_n,B_1,…,B_m) → (A_1,…,A_n).
pub fn project_presence(joint: &MatrixTuple, n: usize) -> Result<MatrixTuple, MicrostateError> {
    if n == 0 || n > joint.len() {
        return Err(MicrostateError::BadPresenceArity { n, len: joint.len() });
    }
    Ok(MatrixTuple::new(joint.mats()[..n].to_vec())?)
}
