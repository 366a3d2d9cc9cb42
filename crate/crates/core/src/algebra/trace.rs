//! Exact traces through the non-crossing Wick formula.

use std::collections::HashMap;

use dashmap::DashMap;
use rayon::prelude::*;
use smallvec::SmallVec;

use crate::covariance::{step_inner_product, HurstParams};
use crate::error::{Error, Result};
use crate::pairings::{flat_pairings, DEFAULT_MAX_POINTS};

use super::element::{Element, Tensor3, TensorElement};
use super::letters::{LetterId, Word};

/// Hard ceiling on the configurable word length (stack buffers).
const MAX_LEN_CEILING: usize = 24;
const QUANTUM: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// First-letter pivot recursion over sub-intervals.
    #[default]
    Recursive,
    /// Explicit sum over all non-crossing pairings.
    Enumerate,
}

#[derive(Clone, Copy, Debug)]
pub struct TraceConfig {
    pub mode: TraceMode,
    /// Memoize recursive traces by their quantized Gram fingerprint.
    pub memo: bool,
    /// Neumaier summation for linear combinations.
    pub compensated: bool,
    pub max_word_len: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            mode: TraceMode::Recursive,
            memo: true,
            compensated: false,
            max_word_len: DEFAULT_MAX_POINTS,
        }
    }
}

/// Neumaier-compensated (or plain) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
    compensated: bool,
}

impl Accumulator {
    pub(crate) fn new(compensated: bool) -> Accumulator {
        Accumulator { sum: 0.0, comp: 0.0, compensated }
    }

    pub(crate) fn add(&mut self, x: f64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Square Gram block of the letters of one word, row-major; only the strict
/// upper triangle is filled.
struct SubGram {
    r: usize,
    g: SmallVec<[f64; 128]>,
}

impl SubGram {
    fn new(r: usize, entry: impl Fn(usize, usize) -> f64) -> SubGram {
        let mut g: SmallVec<[f64; 128]> = smallvec::smallvec![0.0; r * r];
        for p in 0..r {
            for q in p + 1..r {
                g[p * r + q] = entry(p, q);
            }
        }
        SubGram { r, g }
    }

    #[inline]
    fn at(&self, p: usize, q: usize) -> f64 {
        self.g[p * self.r + q]
    }

    fn fingerprint(&self) -> Option<Box<[i64]>> {
        let mut key = Vec::with_capacity(self.r * (self.r - 1) / 2 + 1);
        key.push(self.r as i64);
        for p in 0..self.r {
            for q in p + 1..self.r {
                let v = self.at(p, q) / QUANTUM;
                if v.abs() > 9e18 {
                    return None;
                }
                key.push(v.round() as i64);
            }
        }
        Some(key.into_boxed_slice())
    }

    /// `m[i][j]` = trace of letters `i..j`, pivoting on letter `i`.
    fn recursive(&self) -> f64 {
        let r = self.r;
        let w = r + 1;
        let mut m: SmallVec<[f64; 256]> = smallvec::smallvec![0.0; w * w];
        for i in 0..=r {
            m[i * w + i] = 1.0;
        }
        for len in (2..=r).step_by(2) {
            for i in 0..=r - len {
                let j = i + len;
                let mut s = 0.0;
                for k in (i + 1..j).step_by(2) {
                    s += self.at(i, k) * m[(i + 1) * w + k] * m[(k + 1) * w + j];
                }
                m[i * w + j] = s;
            }
        }
        m[r]
    }

    fn enumerate(&self, max_points: usize) -> Result<f64> {
        let flat = flat_pairings(self.r, max_points)?;
        let half = self.r / 2;
        if half == 0 {
            return Ok(1.0);
        }
        Ok(flat
            .chunks_exact(half)
            .map(|pairs| {
                pairs
                    .iter()
                    .map(|&(p, q)| self.at(p as usize, q as usize))
                    .product::<f64>()
            })
            .sum())
    }
}

/// Trace evaluator bound to one covariance. Caches letter inner products and,
/// optionally, whole-word traces; both caches tolerate concurrent inserts.
pub struct TraceEngine {
    params: HurstParams,
    config: TraceConfig,
    gram: DashMap<(LetterId, LetterId), f64>,
    memo: DashMap<Box<[i64]>, f64>,
}

impl TraceEngine {
    pub fn new(params: HurstParams) -> TraceEngine {
        TraceEngine::with_config(params, TraceConfig::default())
    }

    pub fn with_config(params: HurstParams, mut config: TraceConfig) -> TraceEngine {
        config.max_word_len = config.max_word_len.min(MAX_LEN_CEILING);
        TraceEngine { params, config, gram: DashMap::new(), memo: DashMap::new() }
    }

    pub fn params(&self) -> &HurstParams {
        &self.params
    }

    pub fn config(&self) -> &TraceConfig {
        &self.config
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// `<h_a, h_b>_H` for two interned letters.
    pub fn inner(&self, a: LetterId, b: LetterId) -> f64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        if let Some(v) = self.gram.get(&key) {
            return *v;
        }
        let v = step_inner_product(&self.params, &a.label(), &b.label());
        self.gram.insert(key, v);
        v
    }

    fn check_len(&self, r: usize) -> Result<()> {
        if r > self.config.max_word_len {
            return Err(Error::Resource(format!(
                "word of length {r} exceeds the cap of {} letters",
                self.config.max_word_len
            )));
        }
        Ok(())
    }

    fn trace_gram(&self, sub: &SubGram) -> Result<f64> {
        match self.config.mode {
            TraceMode::Enumerate => sub.enumerate(self.config.max_word_len),
            TraceMode::Recursive if !self.config.memo || sub.r <= 4 => Ok(sub.recursive()),
            TraceMode::Recursive => match sub.fingerprint() {
                None => Ok(sub.recursive()),
                Some(key) => {
                    if let Some(v) = self.memo.get(&key) {
                        return Ok(*v);
                    }
                    let v = sub.recursive();
                    self.memo.insert(key, v);
                    Ok(v)
                }
            },
        }
    }

    fn trace_unmemoized(&self, sub: &SubGram) -> Result<f64> {
        match self.config.mode {
            TraceMode::Enumerate => sub.enumerate(self.config.max_word_len),
            TraceMode::Recursive => Ok(sub.recursive()),
        }
    }

    /// `φ(w)`; zero for odd length.
    pub fn word_trace(&self, w: &Word) -> Result<f64> {
        let r = w.len();
        self.check_len(r)?;
        if r % 2 == 1 {
            return Ok(0.0);
        }
        if r == 0 {
            return Ok(1.0);
        }
        let l = w.letters();
        let sub = SubGram::new(r, |p, q| self.inner(l[p], l[q]));
        self.trace_gram(&sub)
    }

    pub fn element_trace(&self, e: &Element) -> Result<f64> {
        let mut acc = Accumulator::new(self.config.compensated);
        for (w, c) in e.terms() {
            acc.add(c * self.word_trace(w)?);
        }
        Ok(acc.value())
    }

    /// Multilinear extension of `F_1 ⊗ ... ⊗ F_K ↦ φ(F_1)⋯φ(F_K)`.
    pub fn tensor_trace<const K: usize>(&self, te: &TensorElement<K>) -> Result<f64> {
        let mut acc = Accumulator::new(self.config.compensated);
        for (k, c) in te.terms() {
            let mut v = c;
            for w in k {
                if v == 0.0 {
                    break;
                }
                v *= self.word_trace(w)?;
            }
            acc.add(v);
        }
        Ok(acc.value())
    }

    /// `F_1 ⊗ F_2 ⊗ F_3 ↦ φ(F_2) F_1 F_3`.
    pub fn contract_middle(&self, tt: &Tensor3) -> Result<Element> {
        let mut out = Vec::new();
        for (k, c) in tt.terms() {
            let m = self.word_trace(&k[1])?;
            if m != 0.0 {
                out.push((k[0].concat(&k[2]), c * m));
            }
        }
        Ok(Element::from_terms(out))
    }

    /// `φ(a b*)`.
    pub fn l2_inner(&self, a: &Element, b: &Element) -> Result<f64> {
        self.gram_expansion(a, b, false)
    }

    /// `φ(a a*)`.
    pub fn l2_norm_squared(&self, a: &Element) -> Result<f64> {
        self.gram_expansion(a, a, true)
    }

    pub fn l2_norm(&self, a: &Element) -> Result<f64> {
        Ok(self.l2_norm_squared(a)?.max(0.0).sqrt())
    }

    /// `φ((a a*)^r)^{1/(2r)}`.
    pub fn operator_norm_estimate(&self, a: &Element, r: usize) -> Result<f64> {
        if r == 0 {
            return Err(Error::Domain("operator norm estimate needs r >= 1".into()));
        }
        self.check_len(2 * r * a.degree())?;
        let aa = a * &a.star();
        let tr = self.element_trace(&aa.pow(r))?;
        Ok(tr.max(0.0).powf(1.0 / (2.0 * r as f64)))
    }

    /// `sum_{i,j} c_i d_j φ(w_i rev(v_j))` over a dense local Gram matrix of
    /// the distinct letters. With `symmetric`, only `i <= j` is visited.
    /// Bypasses the fingerprint memo: pair products rarely share a Gram block
    /// and the lookup costs more than the recursion.
    fn gram_expansion(&self, a: &Element, b: &Element, symmetric: bool) -> Result<f64> {
        let mut index: HashMap<LetterId, u32> = HashMap::new();
        let mut letters: Vec<LetterId> = Vec::new();
        let mut local = |e: &Element| -> Vec<(SmallVec<[u32; 12]>, f64)> {
            e.terms()
                .map(|(w, c)| {
                    let v = w
                        .letters()
                        .iter()
                        .map(|&l| {
                            *index.entry(l).or_insert_with(|| {
                                letters.push(l);
                                (letters.len() - 1) as u32
                            })
                        })
                        .collect();
                    (v, c)
                })
                .collect()
        };
        let wa = local(a);
        let wb = if symmetric { Vec::new() } else { local(b) };
        let wb = if symmetric { &wa } else { &wb };

        let n = letters.len();
        let labels: Vec<_> = letters.iter().map(|l| l.label()).collect();
        let gram: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|ix| {
                let (p, q) = (ix / n, ix % n);
                if p <= q {
                    step_inner_product(&self.params, &labels[p], &labels[q])
                } else {
                    0.0
                }
            })
            .collect();
        let g = |p: u32, q: u32| {
            let (p, q) = (p.min(q) as usize, p.max(q) as usize);
            gram[p * n + q]
        };

        let compensated = self.config.compensated;
        let rows: Vec<f64> = (0..wa.len())
            .into_par_iter()
            .map(|i| -> Result<f64> {
                let (u, cu) = &wa[i];
                let mut acc = Accumulator::new(compensated);
                let start = if symmetric { i } else { 0 };
                for (j, (v, cv)) in wb.iter().enumerate().skip(start) {
                    let r = u.len() + v.len();
                    if r % 2 == 1 {
                        continue;
                    }
                    let weight = if symmetric && j != i { 2.0 } else { 1.0 } * cu * cv;
                    if r == 0 {
                        acc.add(weight);
                        continue;
                    }
                    self.check_len(r)?;
                    let seq: SmallVec<[u32; MAX_LEN_CEILING]> =
                        u.iter().chain(v.iter().rev()).copied().collect();
                    let sub = SubGram::new(r, |p, q| g(seq[p], seq[q]));
                    acc.add(weight * self.trace_unmemoized(&sub)?);
                }
                Ok(acc.value())
            })
            .collect::<Result<_>>()?;
        let mut total = Accumulator::new(compensated);
        for r in rows {
            total.add(r);
        }
        Ok(total.value())
    }
}
