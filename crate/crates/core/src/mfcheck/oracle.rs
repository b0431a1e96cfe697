//! Exact operator norms in the universal C*-algebra generated by two
//! projections.
//!
//! Every irreducible representation of that algebra is either one of the
//! four characters (p, q) ∈ {0,1}² or a 2×2 representation
//! p = diag(1,0), q(θ) = [[cos²θ, cosθsinθ],[cosθsinθ, sin²θ]] for
//! 0 < θ < π/2, so the universal norm of a polynomial w(p, q) is the
//! supremum of ‖w‖ over the characters and the θ-family.
//!
//! With φ = 2θ and z = e^{iφ}, the entries of q are Laurent polynomials in
//! z, hence so is every word in (p, q). The trace T(φ) and determinant
//! modulus D(φ) of w*w are computed exactly as Laurent polynomials, and the
//! largest eigenvalue (T + √(T²−4D))/2 is maximized by branch-and-bound
//! with interval bounds from the coefficient-sum Lipschitz estimates
//! |p'(φ)| ≤ Σ|j|·|c_j|. The certification is self-regulating: nearly
//! constant functions have nearly zero Lipschitz bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::ncpoly::NcPolynomial;
use crate::C64;

use super::MfError;

/// Certified oracle output.
#[derive(Debug, Clone, Copy)]
pub struct OracleValue {
    /// Best norm found (a lower bound on the universal norm).
    pub value: f64,
    /// Certified gap: the universal norm is ≤ value + certified_error.
    pub certified_error: f64,
}

/// Scalar Laurent polynomial Σ c_j z^j with a dense coefficient window.
#[derive(Debug, Clone)]
struct Laurent {
    min_deg: i64,
    coeffs: Vec<C64>,
}

impl Laurent {
    fn zero() -> Self {
        Laurent {
            min_deg: 0,
            coeffs: vec![],
        }
    }

    fn constant(c: C64) -> Self {
        Laurent {
            min_deg: 0,
            coeffs: vec![c],
        }
    }

    fn get(&self, j: i64) -> C64 {
        let idx = j - self.min_deg;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    fn max_deg(&self) -> i64 {
        self.min_deg + self.coeffs.len() as i64 - 1
    }

    fn add(&self, other: &Laurent) -> Laurent {
        if self.coeffs.is_empty() {
            return other.clone();
        }
        if other.coeffs.is_empty() {
            return self.clone();
        }
        let lo = self.min_deg.min(other.min_deg);
        let hi = self.max_deg().max(other.max_deg());
        let mut coeffs = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let j = lo + i as i64;
            *c = self.get(j) + other.get(j);
        }
        Laurent { min_deg: lo, coeffs }
    }

    fn mul(&self, other: &Laurent) -> Laurent {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Laurent::zero();
        }
        let lo = self.min_deg + other.min_deg;
        let mut coeffs =
            vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Laurent { min_deg: lo, coeffs }
    }

    fn scale(&self, c: C64) -> Laurent {
        Laurent {
            min_deg: self.min_deg,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// p*(z) on the unit circle: Σ conj(c_j) z^{−j}.
    fn conj_reflect(&self) -> Laurent {
        let mut coeffs: Vec<C64> = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        let min_deg = -self.max_deg();
        while coeffs.len() > 1 && coeffs.last() == Some(&C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Laurent { min_deg, coeffs }
    }

    /// Evaluate at z = e^{iφ}; for real-on-circle polynomials the imaginary
    /// part is rounding noise and is dropped by the caller.
    fn eval(&self, phi: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = self.min_deg + i as i64;
            let angle = phi * j as f64;
            acc += c * C64::new(angle.cos(), angle.sin());
        }
        acc
    }

    /// Global derivative bound Σ |j|·|c_j| on the circle.
    fn lipschitz(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| ((self.min_deg + i as i64).abs() as f64) * c.norm())
            .sum()
    }

    fn coeff_abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

/// 2×2 matrix with Laurent-polynomial entries, row-major.
#[derive(Debug, Clone)]
struct Mat2Laurent {
    e: [Laurent; 4],
}

impl Mat2Laurent {
    fn identity() -> Self {
        Mat2Laurent {
            e: [
                Laurent::constant(C64::new(1.0, 0.0)),
                Laurent::zero(),
                Laurent::zero(),
                Laurent::constant(C64::new(1.0, 0.0)),
            ],
        }
    }

    fn zero() -> Self {
        Mat2Laurent {
            e: [
                Laurent::zero(),
                Laurent::zero(),
                Laurent::zero(),
                Laurent::zero(),
            ],
        }
    }

    /// p = diag(1, 0), constant in φ.
    fn projection_p() -> Self {
        Mat2Laurent {
            e: [
                Laurent::constant(C64::new(1.0, 0.0)),
                Laurent::zero(),
                Laurent::zero(),
                Laurent::zero(),
            ],
        }
    }

    /// q(φ) = (I + σ₃cosφ + σ₁sinφ)/2 as a Laurent polynomial in z = e^{iφ}:
    /// q = I/2 + (σ₃ − iσ₁)/4 · z + (σ₃ + iσ₁)/4 · z^{−1}.
    fn projection_q() -> Self {
        let half = C64::new(0.5, 0.0);
        let quarter = C64::new(0.25, 0.0);
        let iq = C64::new(0.0, 0.25);
        // entries (0,0), (0,1), (1,0), (1,1)
        let mk = |zc: C64, c0: C64, zb: C64| Laurent {
            min_deg: -1,
            coeffs: vec![zb, c0, zc],
        };
        Mat2Laurent {
            e: [
                mk(quarter, half, quarter),
                mk(-iq, C64::new(0.0, 0.0), iq),
                mk(-iq, C64::new(0.0, 0.0), iq),
                mk(-quarter, half, -quarter),
            ],
        }
    }

    fn add(&self, other: &Mat2Laurent) -> Mat2Laurent {
        Mat2Laurent {
            e: [
                self.e[0].add(&other.e[0]),
                self.e[1].add(&other.e[1]),
                self.e[2].add(&other.e[2]),
                self.e[3].add(&other.e[3]),
            ],
        }
    }

    fn mul(&self, other: &Mat2Laurent) -> Mat2Laurent {
        let a = &self.e;
        let b = &other.e;
        Mat2Laurent {
            e: [
                a[0].mul(&b[0]).add(&a[1].mul(&b[2])),
                a[0].mul(&b[1]).add(&a[1].mul(&b[3])),
                a[2].mul(&b[0]).add(&a[3].mul(&b[2])),
                a[2].mul(&b[1]).add(&a[3].mul(&b[3])),
            ],
        }
    }

    fn scale(&self, c: C64) -> Mat2Laurent {
        Mat2Laurent {
            e: [
                self.e[0].scale(c),
                self.e[1].scale(c),
                self.e[2].scale(c),
                self.e[3].scale(c),
            ],
        }
    }

    /// Adjoint on the circle: entry (i,j) ← conj-reflect of entry (j,i).
    fn adjoint(&self) -> Mat2Laurent {
        Mat2Laurent {
            e: [
                self.e[0].conj_reflect(),
                self.e[2].conj_reflect(),
                self.e[1].conj_reflect(),
                self.e[3].conj_reflect(),
            ],
        }
    }

    fn trace_of_gram(&self) -> Laurent {
        let adj = self.adjoint();
        let mut acc = Laurent::zero();
        // tr(W*W) = Σ_{i} (W*W)_{ii} = Σ_{i,l} (W*)_{il} W_{li}.
        acc = acc.add(&adj.e[0].mul(&self.e[0]));
        acc = acc.add(&adj.e[1].mul(&self.e[2]));
        acc = acc.add(&adj.e[2].mul(&self.e[1]));
        acc = acc.add(&adj.e[3].mul(&self.e[3]));
        acc
    }

    fn det(&self) -> Laurent {
        self.e[0]
            .mul(&self.e[3])
            .add(&self.e[1].mul(&self.e[2]).scale(C64::new(-1.0, 0.0)))
    }
}

/// Evaluate the polynomial into the θ-family as a 2×2 Laurent matrix.
fn to_laurent(w: &NcPolynomial) -> Mat2Laurent {
    let p = Mat2Laurent::projection_p();
    let q = Mat2Laurent::projection_q();
    let mut acc = Mat2Laurent::zero();
    for (word, coeff) in w.terms() {
        let mut prod = Mat2Laurent::identity();
        for letter in &word.0 {
            prod = prod.mul(if *letter == 0 { &p } else { &q });
        }
        acc = acc.add(&prod.scale(*coeff));
    }
    acc
}

#[derive(Debug)]
struct Segment {
    lo: f64,
    hi: f64,
    /// Upper bound on f² over the segment.
    ub: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.ub == other.ub
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.partial_cmp(&other.ub).unwrap_or(Ordering::Equal)
    }
}

/// Universal norm of a polynomial in two projections, certified to the
/// requested absolute tolerance (reported in `certified_error`; the
/// iteration cap makes very flat near-degenerate maxima return a slightly
/// larger certified gap instead of spinning).
pub fn two_projection_oracle_with_tol(
    w: &NcPolynomial,
    tol: f64,
) -> Result<OracleValue, MfError> {
    if w.num_indeterminates() > 2 {
        return Err(MfError::WrongArity {
            got: w.num_indeterminates(),
        });
    }
    // Characters: (p, q) ∈ {0,1}².
    let mut best = 0.0f64;
    for p in [0.0, 1.0] {
        for q in [0.0, 1.0] {
            let v = w
                .eval_scalars(&[C64::new(p, 0.0), C64::new(q, 0.0)])
                .expect("arity checked")
                .norm();
            best = best.max(v);
        }
    }

    let wl = to_laurent(w);
    let t = wl.trace_of_gram();
    let d = wl.det();
    let dd = d.conj_reflect().mul(&d);
    let e = t.mul(&t).add(&dd.scale(C64::new(-4.0, 0.0)));

    let lt = t.lipschitz();
    let le = e.lipschitz();
    // Floating-point slack for the certified bound.
    let fp_slack = 1e-13 * (1.0 + t.coeff_abs_sum() + e.coeff_abs_sum());

    let f2_at = |phi: f64| -> f64 {
        let tv = t.eval(phi).re;
        let ev = e.eval(phi).re.max(0.0);
        0.5 * (tv + ev.sqrt())
    };
    let ub_on = |center: f64, radius: f64| -> f64 {
        let tv = t.eval(center).re + lt * radius;
        let ev = (e.eval(center).re + le * radius).max(0.0);
        0.5 * (tv + ev.sqrt()) + fp_slack
    };

    // Symmetry: φ and −φ give unitarily equivalent representations, so
    // [0, π] suffices.
    let initial = 64usize;
    let mut heap = BinaryHeap::new();
    let width = std::f64::consts::PI / initial as f64;
    for i in 0..initial {
        let lo = i as f64 * width;
        let hi = lo + width;
        let mid = 0.5 * (lo + hi);
        best = best.max(f2_at(mid).max(0.0).sqrt());
        heap.push(Segment {
            lo,
            hi,
            ub: ub_on(mid, 0.5 * width),
        });
    }
    best = best.max(f2_at(0.0).max(0.0).sqrt());
    best = best.max(f2_at(std::f64::consts::PI).max(0.0).sqrt());

    for _ in 0..2_000_000usize {
        let ub_f = match heap.peek() {
            Some(s) => s.ub.max(0.0).sqrt(),
            None => break,
        };
        if ub_f - best <= tol {
            break;
        }
        let seg = heap.pop().unwrap();
        let mid = 0.5 * (seg.lo + seg.hi);
        for (lo, hi) in [(seg.lo, mid), (mid, seg.hi)] {
            let c = 0.5 * (lo + hi);
            best = best.max(f2_at(c).max(0.0).sqrt());
            let ub = ub_on(c, 0.5 * (hi - lo));
            if ub.max(0.0).sqrt() > best + tol {
                heap.push(Segment { lo, hi, ub });
            }
        }
    }
    let certified = heap
        .peek()
        .map(|s| (s.ub.max(0.0).sqrt() - best).max(0.0))
        .unwrap_or(0.0);
    Ok(OracleValue {
        value: best,
        certified_error: certified,
    })
}

/// Universal two-projection norm at the default 1e−9 certification.
pub fn two_projection_oracle(w: &NcPolynomial) -> Result<OracleValue, MfError> {
    two_projection_oracle_with_tol(w, 1e-9)
}
