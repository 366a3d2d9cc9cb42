//! Real linear combinations of words and of word tuples.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::covariance::StepFunction;
use crate::error::{Error, Result};
use crate::time::Time;

use super::letters::{LetterId, Word};

/// Finite real combination of words. Zero coefficients are never stored and
/// all degree-one words are merged into a single letter, so `X(h) + X(k)`
/// and `X(h + k)` compare equal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Element {
    terms: BTreeMap<Word, f64>,
}

impl Element {
    pub fn zero() -> Element {
        Element::default()
    }

    pub fn one() -> Element {
        Element::scalar(1.0)
    }

    pub fn scalar(c: f64) -> Element {
        Element::from_word(Word::unit(), c)
    }

    pub fn from_word(w: Word, c: f64) -> Element {
        let mut e = Element::zero();
        e.add_term(w, c);
        e.canonical()
    }

    /// `X(h)`.
    pub fn letter(h: &StepFunction) -> Element {
        match LetterId::from_step(h) {
            None => Element::zero(),
            Some((c, id)) => Element::from_word(Word::from_letters([id]), c),
        }
    }

    /// `X_t = X(1_[0,t))`; `X_0 = 0`.
    pub fn atom(t: Time) -> Element {
        Element::letter(&StepFunction::up_to(t))
    }

    /// `X_{a,b} = X(1_[a,b))`.
    pub fn increment(a: Time, b: Time) -> Result<Element> {
        Ok(Element::letter(&StepFunction::indicator(a, b)?))
    }

    pub(crate) fn from_terms(terms: impl IntoIterator<Item = (Word, f64)>) -> Element {
        let mut e = Element::zero();
        for (w, c) in terms {
            e.add_term(w, c);
        }
        e.canonical()
    }

    fn add_term(&mut self, w: Word, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(w).or_insert(0.0);
        *slot += c;
    }

    /// Drops zeros and merges the linear part into one letter.
    fn canonical(mut self) -> Element {
        self.terms.retain(|_, c| *c != 0.0);
        let linear: Vec<(Word, f64)> = self
            .terms
            .iter()
            .filter(|(w, _)| w.len() == 1)
            .map(|(w, &c)| (w.clone(), c))
            .collect();
        if linear.len() > 1 {
            let mut h = StepFunction::zero();
            for (w, c) in &linear {
                self.terms.remove(w);
                h = h.add(&w.letters()[0].label().scale(*c));
            }
            if let Some((c, id)) = LetterId::from_step(&h) {
                self.terms.insert(Word::from_letters([id]), c);
            }
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.terms.iter().map(|(w, &c)| (w, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &Word) -> f64 {
        self.terms.get(w).copied().unwrap_or(0.0)
    }

    /// Length of the longest word (0 for scalars and for zero).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn scale(&self, c: f64) -> Element {
        if c == 0.0 {
            return Element::zero();
        }
        Element::from_terms(self.terms().map(|(w, v)| (w.clone(), v * c)))
    }

    pub fn star(&self) -> Element {
        Element::from_terms(self.terms().map(|(w, c)| (w.reversed(), c)))
    }

    pub fn pow(&self, k: usize) -> Element {
        let mut acc = Element::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Largest absolute coefficient difference, with words missing on one
    /// side counted against zero.
    pub fn max_abs_diff(&self, other: &Element) -> f64 {
        (self - other).terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }

    /// Every letter label ends at or before `t`.
    pub fn supported_before(&self, t: Time) -> bool {
        self.terms
            .keys()
            .flat_map(|w| w.letters().iter())
            .all(|l| l.label().support_end() <= t)
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        Element::from_terms(self.terms().chain(rhs.terms()).map(|(w, c)| (w.clone(), c)))
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        Element::from_terms(
            self.terms()
                .map(|(w, c)| (w.clone(), c))
                .chain(rhs.terms().map(|(w, c)| (w.clone(), -c))),
        )
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(-1.0)
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        let mut out = Element::zero();
        for (a, ca) in self.terms() {
            for (b, cb) in rhs.terms() {
                out.add_term(a.concat(b), ca * cb);
            }
        }
        out.canonical()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{w}")?;
        }
        Ok(())
    }
}

/// Finite real combination of `K`-tuples of words, i.e. an element of the
/// `K`-fold algebraic tensor power.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorElement<const K: usize> {
    terms: BTreeMap<[Word; K], f64>,
}

pub type Tensor2 = TensorElement<2>;
pub type Tensor3 = TensorElement<3>;

impl<const K: usize> Default for TensorElement<K> {
    fn default() -> Self {
        TensorElement { terms: BTreeMap::new() }
    }
}

impl<const K: usize> TensorElement<K> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `1 ⊗ ... ⊗ 1`.
    pub fn unit() -> Self {
        Self::from_terms([(std::array::from_fn(|_| Word::unit()), 1.0)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ([Word; K], f64)>) -> Self {
        let mut map: BTreeMap<[Word; K], f64> = BTreeMap::new();
        for (k, c) in terms {
            if c != 0.0 {
                *map.entry(k).or_insert(0.0) += c;
            }
        }
        map.retain(|_, c| *c != 0.0);
        TensorElement { terms: map }
    }

    /// `e_1 ⊗ ... ⊗ e_K`, expanded multilinearly.
    pub fn product(slots: [&Element; K]) -> Self {
        let mut acc: Vec<(Vec<Word>, f64)> = vec![(Vec::new(), 1.0)];
        for e in slots {
            let mut next = Vec::with_capacity(acc.len() * e.len());
            for (ws, c) in &acc {
                for (w, d) in e.terms() {
                    let mut v = ws.clone();
                    v.push(w.clone());
                    next.push((v, c * d));
                }
            }
            acc = next;
        }
        Self::from_terms(acc.into_iter().map(|(v, c)| {
            let arr: [Word; K] = v.try_into().expect("K slots");
            (arr, c)
        }))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Word; K], f64)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_terms(self.terms().map(|(k, v)| (k.clone(), v * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms().chain(other.terms()).map(|(k, c)| (k.clone(), c)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Slot-wise product `(F_1 ⊗ F_2)(G_1 ⊗ G_2) = F_1 G_1 ⊗ F_2 G_2`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let k: [Word; K] = std::array::from_fn(|i| a[i].concat(&b[i]));
                out.push((k, ca * cb));
            }
        }
        Self::from_terms(out)
    }

    /// Slot-wise star.
    pub fn star(&self) -> Self {
        Self::from_terms(
            self.terms()
                .map(|(k, c)| (std::array::from_fn(|i| k[i].reversed()), c)),
        )
    }

    /// `e · (F_1 ⊗ ... )`: multiplies the first slot on the left.
    pub fn left_mul(&self, e: &Element) -> Self {
        let mut out = Vec::new();
        for (k, c) in self.terms() {
            for (w, d) in e.terms() {
                let mut nk = k.clone();
                nk[0] = w.concat(&k[0]);
                out.push((nk, c * d));
            }
        }
        Self::from_terms(out)
    }

    /// `(... ⊗ F_K) · e`: multiplies the last slot on the right.
    pub fn right_mul(&self, e: &Element) -> Self {
        let mut out = Vec::new();
        for (k, c) in self.terms() {
            for (w, d) in e.terms() {
                let mut nk = k.clone();
                nk[K - 1] = k[K - 1].concat(w);
                out.push((nk, c * d));
            }
        }
        Self::from_terms(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }
}

impl<const K: usize> fmt::Display for TensorElement<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*(")?;
            for (j, w) in k.iter().enumerate() {
                if j > 0 {
                    write!(f, " ⊗ ")?;
                }
                write!(f, "{w}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// `(F_1 ⊗ F_2) ♯ G = F_1 G F_2`.
pub fn sharp(bt: &Tensor2, g: &Element) -> Element {
    let mut out = Vec::new();
    for (k, c) in bt.terms() {
        for (w, d) in g.terms() {
            out.push((k[0].concat(w).concat(&k[1]), c * d));
        }
    }
    Element::from_terms(out)
}

pub fn star(e: &Element) -> Element {
    e.star()
}

pub fn star_tensor<const K: usize>(te: &TensorElement<K>) -> TensorElement<K> {
    te.star()
}

/// Highest admitted polynomial degree.
pub const MAX_DEGREE: usize = 12;

/// Real polynomial `a_0 + a_1 y + ... + a_d y^d`, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Polynomial> {
        let mut coeffs: Vec<f64> = coeffs.into();
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite polynomial coefficient".into()));
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::Resource(format!(
                "polynomial degree {} exceeds {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(Polynomial { coeffs })
    }

    pub fn constant(c: f64) -> Polynomial {
        Polynomial::new(vec![c]).expect("degree 0")
    }

    /// `y^k`.
    pub fn monomial(k: usize) -> Result<Polynomial> {
        let mut v = vec![0.0; k + 1];
        v[k] = 1.0;
        Polynomial::new(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &Element) -> Element {
        let mut acc = Element::zero();
        let mut pw = Element::one();
        for (k, &a) in self.coeffs.iter().enumerate() {
            if k > 0 {
                pw = &pw * x;
            }
            if a != 0.0 {
                acc = &acc + &pw.scale(a);
            }
        }
        acc
    }

    fn powers(&self, x: &Element) -> Vec<Element> {
        let mut out = vec![Element::one()];
        for _ in 1..self.coeffs.len().max(1) {
            let next = out.last().unwrap() * x;
            out.push(next);
        }
        out
    }

    /// `∂P(x) = sum_k a_k sum_{i<k} x^i ⊗ x^{k-1-i}`.
    pub fn derivative_tensor(&self, x: &Element) -> Tensor2 {
        let pw = self.powers(x);
        let mut out = Tensor2::zero();
        for (k, &a) in self.coeffs.iter().enumerate().skip(1) {
            if a == 0.0 {
                continue;
            }
            for i in 0..k {
                out = out.add(&Tensor2::product([&pw[i], &pw[k - 1 - i]]).scale(a));
            }
        }
        out
    }

    /// `∂²P(x) = sum_k a_k sum_{i+j<=k-2} x^i ⊗ x^j ⊗ x^{k-2-i-j}`.
    pub fn second_derivative_tensor(&self, x: &Element) -> Tensor3 {
        let pw = self.powers(x);
        let mut out = Tensor3::zero();
        for (k, &a) in self.coeffs.iter().enumerate().skip(2) {
            if a == 0.0 {
                continue;
            }
            for i in 0..=k - 2 {
                for j in 0..=k - 2 - i {
                    let t = Tensor3::product([&pw[i], &pw[j], &pw[k - 2 - i - j]]);
                    out = out.add(&t.scale(a));
                }
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    /// Prints in the grammar accepted by the CLI parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let mag = a.abs();
            if first {
                if a < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if a < 0.0 { '-' } else { '+' })?;
            }
            first = false;
            match (k, mag == 1.0) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "x")?,
                (1, false) => write!(f, "{mag}x")?,
                (_, true) => write!(f, "x^{k}")?,
                (_, false) => write!(f, "{mag}x^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u64, l: u32) -> Element {
        Element::atom(Time::dyadic(i, l).unwrap())
    }

    #[test]
    fn linear_part_merges() {
        let a = Time::dyadic(1, 2).unwrap();
        let b = Time::dyadic(3, 2).unwrap();
        let lhs = &Element::increment(Time::ZERO, a).unwrap() + &Element::increment(a, b).unwrap();
        assert_eq!(lhs, Element::atom(b));
        let z = &x(1, 1) - &x(1, 1);
        assert!(z.is_zero());
        assert!(Element::atom(Time::ZERO).is_zero());
        assert_eq!(&x(1, 1).scale(2.0) - &x(1, 1), x(1, 1));
    }

    #[test]
    fn star_reverses() {
        let e = &x(1, 2) * &x(3, 2);
        assert_eq!(e.star(), &x(3, 2) * &x(1, 2));
        assert_eq!(e.star().star(), e);
    }

    #[test]
    fn sharp_examples() {
        let (a, b, c) = (x(1, 2), x(2, 2), x(3, 2));
        assert_eq!(sharp(&Tensor2::unit(), &a), a);
        assert_eq!(sharp(&Tensor2::product([&a, &a]), &Element::one()), &a * &a);
        assert_eq!(sharp(&Tensor2::product([&a, &b]), &c), &(&a * &c) * &b);
    }

    #[test]
    fn tensor_derivative_examples() {
        let xt = x(1, 1);
        let id = Polynomial::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(id.derivative_tensor(&xt), Tensor2::unit());
        let sq = Polynomial::monomial(2).unwrap();
        let expect = Tensor2::product([&xt, &Element::one()]).add(&Tensor2::product([&Element::one(), &xt]));
        assert_eq!(sq.derivative_tensor(&xt), expect);
        assert_eq!(sq.second_derivative_tensor(&xt), Tensor3::unit());
        assert!(Polynomial::constant(4.0).derivative_tensor(&xt).is_zero());
        let cube = Polynomial::monomial(3).unwrap();
        // i+j <= 1: (0,0),(0,1),(1,0)
        assert_eq!(cube.second_derivative_tensor(&xt).len(), 3);
    }

    #[test]
    fn polynomial_limits_and_printing() {
        assert!(matches!(Polynomial::monomial(13), Err(Error::Resource(_))));
        let p = Polynomial::new(vec![3.0, -2.0, 0.0, 1.0]).unwrap();
        assert_eq!(p.to_string(), "3 - 2x + x^3");
        assert_eq!(p.degree(), 3);
        assert_eq!(Polynomial::new(vec![0.0, 0.0]).unwrap().to_string(), "0");
    }

    #[test]
    fn tensor_slot_ops() {
        let a = x(1, 2);
        let t = Tensor2::product([&a, &Element::one()]);
        assert_eq!(t.star(), t);
        assert_eq!(t.left_mul(&a), Tensor2::product([&(&a * &a), &Element::one()]));
        assert_eq!(t.right_mul(&a), Tensor2::product([&a, &a]));
        assert_eq!(t.mul(&t), Tensor2::product([&(&a * &a), &Element::one()]));
    }
}
