//! Noncommutative polynomials over self-adjoint indeterminates.
//!
//! Words are finite sequences of indeterminate indices; the empty word is
//! the multiplicative identity. A polynomial is a finite complex linear
//! combination of words in canonical (graded lexicographic) order, so equal
//! polynomials compare equal bit-wise. Since the evaluated generators are
//! self-adjoint, adjoint-free words suffice and the adjoint of a polynomial
//! is word reversal plus coefficient conjugation.

mod parse;

pub use parse::parse_poly;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::matrixcore::MatrixTuple;
use crate::C64;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown indeterminate X{index} (declared count {arity}) at position {position}")]
    UnknownIndeterminate {
        index: usize,
        arity: usize,
        position: usize,
    },
    #[error("battery would have {size} polynomials, exceeding the cap {cap}")]
    BatteryTooLarge { size: u128, cap: usize },
    #[error("polynomial uses {needed} indeterminates but {got} values were supplied")]
    ArityMismatch { needed: usize, got: usize },
    #[error("invalid battery: {0}")]
    BatteryInvalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Word in the indeterminates; indices are stored 0-based, the textual form
/// X1…Xn is 1-based. The empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letter(i: usize) -> Self {
        Word(vec![i as u16])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        let mut v = self.0.clone();
        v.reverse();
        Word(v)
    }

    pub fn max_letter(&self) -> Option<usize> {
        self.0.iter().max().map(|m| *m as usize)
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Graded lexicographic: first by length, then letter-wise.
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Noncommutative polynomial with complex coefficients in canonical form:
/// no zero coefficients, terms ordered graded-lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct NcPolynomial {
    terms: BTreeMap<Word, C64>,
    num_indeterminates: usize,
}

impl NcPolynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            terms: BTreeMap::new(),
            num_indeterminates: n,
        }
    }

    pub fn one(n: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Word::identity(), C64::new(1.0, 0.0));
        Self {
            terms,
            num_indeterminates: n,
        }
    }

    pub fn constant(c: C64, n: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Word::identity(), c);
        p
    }

    /// The 0-based indeterminate i as a polynomial.
    pub fn letter(i: usize, n: usize) -> Self {
        assert!(i < n, "letter index out of range");
        let mut terms = BTreeMap::new();
        terms.insert(Word::letter(i), C64::new(1.0, 0.0));
        Self {
            terms,
            num_indeterminates: n,
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, C64)>>(terms: I, n: usize) -> Self {
        let mut p = Self::zero(n);
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    pub fn num_indeterminates(&self) -> usize {
        self.num_indeterminates
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, w: &Word) -> C64 {
        self.terms.get(w).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.terms.len() == 1 && self.coefficient(&Word::identity()) == C64::new(1.0, 0.0)
    }

    fn add_term(&mut self, w: Word, c: C64) {
        use std::collections::btree_map::Entry;
        if c == C64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == C64::new(0.0, 0.0) {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut p = Self::zero(self.num_indeterminates);
        for (w, a) in &self.terms {
            p.add_term(w.clone(), *a * c);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.num_indeterminates.max(other.num_indeterminates);
        let mut p = Self::zero(n);
        for (w, c) in &self.terms {
            p.add_term(w.clone(), *c);
        }
        for (w, c) in &other.terms {
            p.add_term(w.clone(), *c);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.num_indeterminates.max(other.num_indeterminates);
        let mut p = Self::zero(n);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                p.add_term(w1.concat(w2), c1 * c2);
            }
        }
        p
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(self.num_indeterminates);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Word reversal plus coefficient conjugation; on Hermitian tuples this
    /// evaluates to the conjugate transpose of the original.
    pub fn adjoint(&self) -> Self {
        let mut p = Self::zero(self.num_indeterminates);
        for (w, c) in &self.terms {
            p.add_term(w.reversed(), c.conj());
        }
        p
    }

    /// Substitute polynomials for the letters: letter i is replaced by
    /// subs[i]. All substitutes must share an indeterminate count.
    pub fn substitute(&self, subs: &[NcPolynomial]) -> Result<Self, PolyError> {
        if subs.len() < self.num_indeterminates {
            return Err(PolyError::ArityMismatch {
                needed: self.num_indeterminates,
                got: subs.len(),
            });
        }
        let n = subs.iter().map(|s| s.num_indeterminates).max().unwrap_or(0);
        let mut out = Self::zero(n);
        for (w, c) in &self.terms {
            let mut prod = Self::constant(*c, n);
            for l in &w.0 {
                prod = prod.mul(&subs[*l as usize]);
            }
            out = out.add(&prod);
        }
        Ok(out)
    }

    /// Evaluate at complex scalar values (all letters commute here since
    /// scalars commute).
    pub fn eval_scalars(&self, values: &[C64]) -> Result<C64, PolyError> {
        if values.len() < self.num_indeterminates {
            return Err(PolyError::ArityMismatch {
                needed: self.num_indeterminates,
                got: values.len(),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (w, c) in &self.terms {
            let mut prod = *c;
            for l in &w.0 {
                prod *= values[*l as usize];
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// Evaluate on a matrix tuple; the identity polynomial evaluates to the
    /// identity matrix.
    pub fn evaluate(&self, t: &MatrixTuple) -> Result<DMatrix<C64>, PolyError> {
        let mut ev = TupleEvaluator::new(t);
        ev.eval_poly(self)
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let word_str = if w.is_empty() {
                "1".to_string()
            } else {
                w.0.iter()
                    .map(|l| format!("X{}", l + 1))
                    .collect::<Vec<_>>()
                    .join("*")
            };
            if c.im == 0.0 {
                if c.re == 1.0 && !w.is_empty() {
                    write!(f, "{word_str}")?;
                } else if w.is_empty() {
                    write!(f, "{}", c.re)?;
                } else {
                    write!(f, "{}*{word_str}", c.re)?;
                }
            } else {
                let coeff = if c.im < 0.0 {
                    format!("({}-{}i)", c.re, -c.im)
                } else {
                    format!("({}+{}i)", c.re, c.im)
                };
                if w.is_empty() {
                    write!(f, "{coeff}")?;
                } else {
                    write!(f, "{coeff}*{word_str}")?;
                }
            }
        }
        Ok(())
    }
}

/// Word-value cache for repeated polynomial evaluation on one tuple. Each
/// word costs one matrix product on top of its longest proper prefix.
pub struct TupleEvaluator<'a> {
    tuple: &'a MatrixTuple,
    cache: HashMap<Word, DMatrix<C64>>,
}

impl<'a> TupleEvaluator<'a> {
    pub fn new(tuple: &'a MatrixTuple) -> Self {
        Self {
            tuple,
            cache: HashMap::new(),
        }
    }

    pub fn tuple(&self) -> &MatrixTuple {
        self.tuple
    }

    pub fn word_value(&mut self, w: &Word) -> Result<DMatrix<C64>, PolyError> {
        if let Some(m) = self.cache.get(w) {
            return Ok(m.clone());
        }
        let k = self.tuple.dim();
        let value = if w.is_empty() {
            DMatrix::identity(k, k)
        } else {
            let last = *w.0.last().unwrap() as usize;
            if last >= self.tuple.len() {
                return Err(PolyError::ArityMismatch {
                    needed: last + 1,
                    got: self.tuple.len(),
                });
            }
            let prefix = Word(w.0[..w.len() - 1].to_vec());
            let head = self.word_value(&prefix)?;
            head * self.tuple.get(last).matrix()
        };
        self.cache.insert(w.clone(), value.clone());
        Ok(value)
    }

    pub fn eval_poly(&mut self, p: &NcPolynomial) -> Result<DMatrix<C64>, PolyError> {
        if p.num_indeterminates > self.tuple.len() {
            return Err(PolyError::ArityMismatch {
                needed: p.num_indeterminates,
                got: self.tuple.len(),
            });
        }
        let k = self.tuple.dim();
        let mut acc = DMatrix::<C64>::zeros(k, k);
        for (w, c) in &p.terms {
            let m = self.word_value(w)?;
            acc += m.scale_complex(*c);
        }
        Ok(acc)
    }
}

trait ScaleComplex {
    fn scale_complex(self, c: C64) -> Self;
}

impl ScaleComplex for DMatrix<C64> {
    fn scale_complex(mut self, c: C64) -> Self {
        for e in self.iter_mut() {
            *e *= c;
        }
        self
    }
}

/// Finite ordered collection of polynomials used to test microstate
/// membership. Contains the identity and all degree-1 words.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBattery {
    polys: Vec<NcPolynomial>,
    degree_bound: usize,
    label: String,
}

pub const DEFAULT_BATTERY_CAP: usize = 10_000;

impl PolyBattery {
    pub fn new(polys: Vec<NcPolynomial>, label: &str) -> Result<Self, PolyError> {
        if polys.is_empty() {
            return Err(PolyError::BatteryInvalid("battery is empty".into()));
        }
        let n = polys[0].num_indeterminates;
        if polys.iter().any(|p| p.num_indeterminates != n) {
            return Err(PolyError::BatteryInvalid(
                "mixed indeterminate counts".into(),
            ));
        }
        if !polys.iter().any(|p| p.is_identity()) {
            return Err(PolyError::BatteryInvalid(
                "battery must contain the identity polynomial".into(),
            ));
        }
        for i in 0..n {
            let letter = NcPolynomial::letter(i, n);
            if !polys.iter().any(|p| *p == letter) {
                return Err(PolyError::BatteryInvalid(format!(
                    "battery must contain the degree-1 word X{}",
                    i + 1
                )));
            }
        }
        let degree_bound = polys.iter().map(NcPolynomial::degree).max().unwrap_or(0);
        Ok(Self {
            polys,
            degree_bound,
            label: label.to_string(),
        })
    }

    pub fn polys(&self) -> &[NcPolynomial] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn num_indeterminates(&self) -> usize {
        self.polys[0].num_indeterminates
    }

    /// True when `prefix` lists the same polynomials as the start of this
    /// battery.
    pub fn has_prefix(&self, prefix: &PolyBattery) -> bool {
        prefix.polys.len() <= self.polys.len()
            && prefix
                .polys
                .iter()
                .zip(self.polys.iter())
                .all(|(a, b)| a == b)
    }

    /// Polynomials whose words only use the first `n` letters, with their
    /// original indices. Used for presence projections.
    pub fn restrict_to_first(&self, n: usize) -> Vec<(usize, NcPolynomial)> {
        self.polys
            .iter()
            .enumerate()
            .filter(|(_, p)| p.terms.keys().all(|w| w.max_letter().map_or(true, |m| m < n)))
            .map(|(i, p)| {
                let mut q = NcPolynomial::zero(n);
                for (w, c) in &p.terms {
                    q.add_term(w.clone(), *c);
                }
                (i, q)
            })
            .collect()
    }
}

/// All words of length ≤ d with coefficient 1 (including the identity) in
/// graded lexicographic order; size Σ_{q=0}^{d} n^q.
pub fn default_battery(n: usize, d: usize) -> Result<PolyBattery, PolyError> {
    default_battery_with_cap(n, d, DEFAULT_BATTERY_CAP)
}

pub fn default_battery_with_cap(n: usize, d: usize, cap: usize) -> Result<PolyBattery, PolyError> {
    assert!(n >= 1 && d >= 1, "need n ≥ 1 and d ≥ 1");
    let mut size: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..=d {
        size += power;
        power = power.saturating_mul(n as u128);
        if size > cap as u128 {
            return Err(PolyError::BatteryTooLarge { size, cap });
        }
    }
    let mut polys = Vec::with_capacity(size as usize);
    polys.push(NcPolynomial::one(n));
    let mut current: Vec<Word> = vec![Word::identity()];
    for _ in 1..=d {
        let mut next = Vec::with_capacity(current.len() * n);
        for w in &current {
            for l in 0..n {
                let mut v = w.0.clone();
                v.push(l as u16);
                next.push(Word(v));
            }
        }
        for w in &next {
            polys.push(NcPolynomial::from_terms(
                [(w.clone(), C64::new(1.0, 0.0))],
                n,
            ));
        }
        current = next;
    }
    PolyBattery::new(polys, &format!("words(n={n},d={d})"))
}

/// Battery files are UTF-8 text, one expression per line, `#` comments.
pub fn read_battery(path: &std::path::Path, n: usize, label: &str) -> Result<PolyBattery, PolyError> {
    let text = std::fs::read_to_string(path)?;
    let mut polys = Vec::new();
    for line in text.lines() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        polys.push(parse_poly(line, n)?);
    }
    PolyBattery::new(polys, label)
}

pub fn write_battery(path: &std::path::Path, battery: &PolyBattery) -> Result<(), PolyError> {
    let mut text = String::new();
    for p in battery.polys() {
        text.push_str(&p.to_string());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::{gue_hermitian, operator_norm, HermitianMatrix};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn word_order_is_graded_lex() {
        let e = Word::identity();
        let x1 = Word(vec![0]);
        let x2 = Word(vec![1]);
        let x1x1 = Word(vec![0, 0]);
        let x1x2 = Word(vec![0, 1]);
        let x2x1 = Word(vec![1, 0]);
        let mut v = vec![x2x1.clone(), x1x2.clone(), e.clone(), x2.clone(), x1x1.clone(), x1.clone()];
        v.sort();
        assert_eq!(v, vec![e, x1, x2, x1x1, x1x2, x2x1]);
    }

    #[test]
    fn adjoint_conjugates_and_reverses() {
        let p = NcPolynomial::from_terms([(Word(vec![0, 1]), c(0.0, 1.0))], 2);
        let q = p.adjoint();
        assert_eq!(q.coefficient(&Word(vec![1, 0])), c(0.0, -1.0));
        // X1 is self-adjoint; palindromic words are fixed.
        let x1 = NcPolynomial::letter(0, 2);
        assert_eq!(x1.adjoint(), x1);
        let pal = NcPolynomial::from_terms([(Word(vec![0, 1, 0]), c(1.0, 0.0))], 2);
        assert_eq!(pal.adjoint(), pal);
    }

    #[test]
    fn adjoint_matches_conjugate_transpose_on_hermitian_tuples() {
        let t = MatrixTuple::new(vec![gue_hermitian(4, 3, 1.0), gue_hermitian(4, 4, 1.0)])
            .unwrap();
        let p = NcPolynomial::from_terms(
            [
                (Word(vec![0, 1]), c(0.5, 2.0)),
                (Word(vec![1, 1, 0]), c(-1.0, 0.25)),
                (Word::identity(), c(0.0, 1.0)),
            ],
            2,
        );
        let lhs = p.adjoint().evaluate(&t).unwrap();
        let rhs = p.evaluate(&t).unwrap().adjoint();
        assert!(operator_norm(&(lhs - rhs)).unwrap() <= 1e-10);
    }

    #[test]
    fn evaluate_monomial_and_identity() {
        let t = MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(&[1.0, 2.0])])
            .unwrap();
        let sq = NcPolynomial::letter(0, 1).pow(2);
        let v = sq.evaluate(&t).unwrap();
        assert_eq!(v[(0, 0)], c(1.0, 0.0));
        assert_eq!(v[(1, 1)], c(4.0, 0.0));

        let t3 = MatrixTuple::new(vec![HermitianMatrix::from_real_diagonal(&[0.3, -1.0, 2.0])])
            .unwrap();
        let one = NcPolynomial::one(1);
        assert_eq!(one.evaluate(&t3).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn evaluate_commutator() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        let b = HermitianMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap();
        let t = MatrixTuple::new(vec![a, b]).unwrap();
        let x1 = NcPolynomial::letter(0, 2);
        let x2 = NcPolynomial::letter(1, 2);
        let comm = x1.mul(&x2).sub(&x2.mul(&x1));
        let v = comm.evaluate(&t).unwrap();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(2.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0)],
        );
        assert!(operator_norm(&(v - expected)).unwrap() <= 1e-14);
    }

    #[test]
    fn ring_homomorphism_on_random_tuples() {
        let t = MatrixTuple::new(vec![gue_hermitian(3, 8, 1.0), gue_hermitian(3, 9, 1.0)])
            .unwrap();
        let p = NcPolynomial::from_terms(
            [(Word(vec![0]), c(1.0, 0.5)), (Word(vec![1, 0]), c(-0.25, 0.0))],
            2,
        );
        let q = NcPolynomial::from_terms(
            [(Word::identity(), c(2.0, 0.0)), (Word(vec![1]), c(0.0, -1.0))],
            2,
        );
        let prod = p.mul(&q).evaluate(&t).unwrap();
        let sep = p.evaluate(&t).unwrap() * q.evaluate(&t).unwrap();
        let scale = 1.0 + operator_norm(&sep).unwrap();
        assert!(operator_norm(&(prod - sep)).unwrap() / scale <= 1e-10);

        let sum = p.add(&q).evaluate(&t).unwrap();
        let sep = p.evaluate(&t).unwrap() + q.evaluate(&t).unwrap();
        assert!(operator_norm(&(sum - sep)).unwrap() / scale <= 1e-10);
    }

    #[test]
    fn default_battery_sizes() {
        let b = default_battery(1, 3).unwrap();
        assert_eq!(b.len(), 4); // 1, X1, X1², X1³
        assert_eq!(b.degree_bound(), 3);

        let b = default_battery(2, 2).unwrap();
        assert_eq!(b.len(), 7); // 1 + 2 + 4

        // Σ_{q=0}^{8} 3^q = 9841 is under the default cap, so this returns.
        let b = default_battery(3, 8).unwrap();
        assert_eq!(b.len(), 9841);

        assert!(matches!(
            default_battery(3, 9),
            Err(PolyError::BatteryTooLarge { .. })
        ));
    }

    #[test]
    fn battery_requires_identity_and_letters() {
        let n = 2;
        let missing = vec![NcPolynomial::one(n), NcPolynomial::letter(0, n)];
        assert!(PolyBattery::new(missing, "bad").is_err());
        let ok = vec![
            NcPolynomial::one(n),
            NcPolynomial::letter(0, n),
            NcPolynomial::letter(1, n),
        ];
        assert!(PolyBattery::new(ok, "ok").is_ok());
    }

    #[test]
    fn substitution_composes() {
        // p(X1) = X1², substitute X1 → X1 + X2.
        let p = NcPolynomial::letter(0, 1).pow(2);
        let sum = NcPolynomial::letter(0, 2).add(&NcPolynomial::letter(1, 2));
        let q = p.substitute(&[sum]).unwrap();
        assert_eq!(q.num_terms(), 4);
        for w in [
            Word(vec![0, 0]),
            Word(vec![0, 1]),
            Word(vec![1, 0]),
            Word(vec![1, 1]),
        ] {
            assert_eq!(q.coefficient(&w), c(1.0, 0.0));
        }
    }
}
