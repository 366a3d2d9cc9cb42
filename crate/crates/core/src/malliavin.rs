//! Malliavin derivative, partial derivatives and divergence on elementary
//! biprocesses, with residuals for the dual formula, the isometry and the
//! energy bound.

use std::collections::BTreeMap;

use crate::algebra::{Element, LetterId, Tensor2, TraceEngine, Word};
use crate::covariance::StepFunction;
use crate::error::Result;
use crate::time::Time;

type BiKey = ([Word; 2], LetterId);
type TriKey = ([Word; 3], LetterId, LetterId);

/// `sum_i c_i (F_i ⊗ G_i) h_i` with interned, normalized labels `h_i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepBiprocess {
    terms: BTreeMap<BiKey, f64>,
}

/// `sum_i c_i (A_i ⊗ B_i ⊗ C_i) h_i(s) k_i(t)`. The first label is inherited
/// from the biprocess, the second is the letter hit by the derivative.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepTriprocess {
    terms: BTreeMap<TriKey, f64>,
}

fn insert<K: Ord>(map: &mut BTreeMap<K, f64>, k: K, c: f64) {
    if c == 0.0 {
        return;
    }
    let slot = map.entry(k).or_insert(0.0);
    *slot += c;
}

impl StepBiprocess {
    pub fn zero() -> StepBiprocess {
        StepBiprocess::default()
    }

    /// `F h`.
    pub fn from_pair(f: &Tensor2, h: &StepFunction) -> StepBiprocess {
        let mut out = StepBiprocess::zero();
        out.push(f, h);
        out
    }

    /// Adds `F h`.
    pub fn push(&mut self, f: &Tensor2, h: &StepFunction) {
        if let Some((c, id)) = LetterId::from_step(h) {
            for (k, v) in f.terms() {
                insert(&mut self.terms, (k.clone(), id), c * v);
            }
        }
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub(crate) fn push_word_pair(&mut self, k: [Word; 2], label: LetterId, c: f64) {
        insert(&mut self.terms, (k, label), c);
    }

    fn finish(mut self) -> StepBiprocess {
        self.terms.retain(|_, c| *c != 0.0);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Word; 2], LetterId, f64)> {
        self.terms.iter().map(|((k, h), &c)| (k, *h, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: f64) -> StepBiprocess {
        let mut out = StepBiprocess::zero();
        for (k, v) in &self.terms {
            insert(&mut out.terms, k.clone(), v * c);
        }
        out.finish()
    }

    pub fn add(&self, other: &StepBiprocess) -> StepBiprocess {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            insert(&mut out.terms, k.clone(), *v);
        }
        out.finish()
    }

    /// Slot-wise star; labels unchanged.
    pub fn star(&self) -> StepBiprocess {
        let mut out = StepBiprocess::zero();
        for ((k, h), &c) in &self.terms {
            insert(&mut out.terms, ([k[0].reversed(), k[1].reversed()], *h), c);
        }
        out.finish()
    }

    /// `U · G`: `(F_1 ⊗ F_2) G = F_1 ⊗ F_2 G`.
    pub fn right_mul(&self, g: &Element) -> StepBiprocess {
        let mut out = StepBiprocess::zero();
        for ((k, h), &c) in &self.terms {
            for (w, d) in g.terms() {
                insert(&mut out.terms, ([k[0].clone(), k[1].concat(w)], *h), c * d);
            }
        }
        out.finish()
    }

    /// `G · U`: `G (F_1 ⊗ F_2) = G F_1 ⊗ F_2`.
    pub fn left_mul(&self, g: &Element) -> StepBiprocess {
        let mut out = StepBiprocess::zero();
        for ((k, h), &c) in &self.terms {
            for (w, d) in g.terms() {
                insert(&mut out.terms, ([w.concat(&k[0]), k[1].clone()], *h), c * d);
            }
        }
        out.finish()
    }

    /// Largest pointwise gap of the label functions attached to each word
    /// pair. Labels are linear, so `(F ⊗ G)(h + k)` and `(F ⊗ G)h + (F ⊗ G)k`
    /// compare equal.
    pub fn max_abs_diff(&self, other: &StepBiprocess) -> f64 {
        let diff = self.add(&other.scale(-1.0));
        let mut grouped: BTreeMap<&[Word; 2], Vec<(LetterId, f64)>> = BTreeMap::new();
        for ((k, h), &c) in &diff.terms {
            grouped.entry(k).or_default().push((*h, c));
        }
        grouped
            .values()
            .flat_map(|ls| {
                breakpoints(ls.iter().map(|(h, _)| *h))
                    .into_iter()
                    .map(move |x| ls.iter().map(|(h, c)| c * h.label().eval(x)).sum::<f64>().abs())
            })
            .fold(0.0, f64::max)
    }
}

impl StepTriprocess {
    pub fn terms(&self) -> impl Iterator<Item = (&[Word; 3], LetterId, LetterId, f64)> {
        self.terms.iter().map(|((k, h, l), &c)| (k, *h, *l, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &StepTriprocess) -> StepTriprocess {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            insert(&mut out.terms, k.clone(), *v);
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    /// Largest pointwise gap of the two-time label functions attached to each
    /// word triple.
    pub fn max_abs_diff(&self, other: &StepTriprocess) -> f64 {
        let diff = self.add(&other.scale(-1.0));
        let mut grouped: BTreeMap<&[Word; 3], Vec<(LetterId, LetterId, f64)>> = BTreeMap::new();
        for ((k, h, l), &c) in &diff.terms {
            grouped.entry(k).or_default().push((*h, *l, c));
        }
        let mut m = 0.0f64;
        for ls in grouped.values() {
            let xs = breakpoints(ls.iter().map(|t| t.0));
            let ys = breakpoints(ls.iter().map(|t| t.1));
            for &x in &xs {
                for &y in &ys {
                    let v: f64 = ls.iter().map(|(h, l, c)| c * h.label().eval(x) * l.label().eval(y)).sum();
                    m = m.max(v.abs());
                }
            }
        }
        m
    }

    pub fn scale(&self, c: f64) -> StepTriprocess {
        let mut out = StepTriprocess::default();
        for (k, v) in &self.terms {
            insert(&mut out.terms, k.clone(), v * c);
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }
}

/// Left endpoints of the pieces of every label, where the labels' values are
/// sampled.
fn breakpoints(labels: impl Iterator<Item = LetterId>) -> Vec<Time> {
    let mut xs: Vec<Time> = labels.flat_map(|h| h.label().pieces().iter().flat_map(|p| [p.start, p.end]).collect::<Vec<_>>()).collect();
    xs.sort();
    xs.dedup();
    xs
}

/// Splits of a word around each letter: `(prefix, letter, suffix)`.
fn splits(w: &Word) -> impl Iterator<Item = (Word, LetterId, Word)> + '_ {
    (0..w.len()).map(move |i| (w.slice(0, i), w.letters()[i], w.slice(i + 1, w.len())))
}

/// `D^X`: each letter `X(h_i)` of a word becomes the label `h_i` of
/// `prefix ⊗ suffix`.
pub fn derivative(e: &Element) -> StepBiprocess {
    let mut out = StepBiprocess::zero();
    for (w, c) in e.terms() {
        for (pre, l, suf) in splits(w) {
            insert(&mut out.terms, ([pre, suf], l), c);
        }
    }
    out.finish()
}

/// `D_1` (slot 1) or `D_2` (slot 2) of a biprocess.
pub fn partial_derivative(slot: u8, bp: &StepBiprocess) -> Result<StepTriprocess> {
    let mut out = StepTriprocess::default();
    for ((k, h), &c) in &bp.terms {
        match slot {
            1 => {
                for (pre, l, suf) in splits(&k[0]) {
                    insert(&mut out.terms, ([pre, suf, k[1].clone()], *h, l), c);
                }
            }
            2 => {
                for (pre, l, suf) in splits(&k[1]) {
                    insert(&mut out.terms, ([k[0].clone(), pre, suf], *h, l), c);
                }
            }
            _ => return crate::error::domain(format!("partial derivative slot {slot} not in {{1,2}}")),
        }
    }
    out.terms.retain(|_, c| *c != 0.0);
    Ok(out)
}

/// `δ^X(F h) = F ♯ X(h) - (Id × φ × Id)(<D^X F, h>_H)`, extended linearly.
pub fn divergence(engine: &TraceEngine, bp: &StepBiprocess) -> Result<Element> {
    let mut out: Vec<(Word, f64)> = Vec::new();
    for ((k, h), &c) in &bp.terms {
        out.push((k[0].concat(&Word::from_letters([*h])).concat(&k[1]), c));
        for (pre, l, suf) in splits(&k[0]) {
            let s = engine.inner(l, *h);
            if s != 0.0 {
                let t = engine.word_trace(&suf)?;
                out.push((pre.concat(&k[1]), -c * s * t));
            }
        }
        for (pre, l, suf) in splits(&k[1]) {
            let s = engine.inner(l, *h);
            if s != 0.0 {
                let t = engine.word_trace(&pre)?;
                out.push((k[0].concat(&suf), -c * s * t));
            }
        }
    }
    Ok(Element::from_terms(out))
}

/// `φ(w v*)`.
fn phi_pair(engine: &TraceEngine, w: &Word, v: &Word) -> Result<f64> {
    if (w.len() + v.len()) % 2 == 1 {
        return Ok(0.0);
    }
    engine.word_trace(&w.concat(&v.reversed()))
}

/// `(φ×φ)(<U; V*>_H)`.
pub fn l2_biprocess_inner(engine: &TraceEngine, u: &StepBiprocess, v: &StepBiprocess) -> Result<f64> {
    let mut acc = 0.0;
    for ((f, h), &cf) in &u.terms {
        for ((g, k), &cg) in &v.terms {
            let s = engine.inner(*h, *k);
            if s == 0.0 {
                continue;
            }
            let a = phi_pair(engine, &f[0], &g[0])?;
            if a == 0.0 {
                continue;
            }
            acc += cf * cg * s * a * phi_pair(engine, &f[1], &g[1])?;
        }
    }
    Ok(acc)
}

/// `sum_{a,b} c_a c_b w(a,b) (φ×φ×φ)(A_a · B_b*)`.
fn tri_pairing(
    engine: &TraceEngine,
    a: &StepTriprocess,
    b: &StepTriprocess,
    weight: impl Fn((LetterId, LetterId), (LetterId, LetterId)) -> f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for ((ka, ha, la), &ca) in &a.terms {
        for ((kb, hb, lb), &cb) in &b.terms {
            let w = weight((*ha, *la), (*hb, *lb));
            if w == 0.0 {
                continue;
            }
            let mut v = ca * cb * w;
            for i in 0..3 {
                v *= phi_pair(engine, &ka[i], &kb[i])?;
                if v == 0.0 {
                    break;
                }
            }
            acc += v;
        }
    }
    Ok(acc)
}

/// `|φ(Y δ(U)*) - (φ×φ)(<D^X Y; U*>_H)|`.
pub fn dual_residual(engine: &TraceEngine, y: &Element, bp: &StepBiprocess) -> Result<f64> {
    let lhs = engine.l2_inner(y, &divergence(engine, bp)?)?;
    let rhs = l2_biprocess_inner(engine, &derivative(y), bp)?;
    Ok((lhs - rhs).abs())
}

/// `(φ×φ×φ)(T_H(U, V))`.
pub fn isometry_trace_term(engine: &TraceEngine, u: &StepBiprocess, v: &StepBiprocess) -> Result<f64> {
    let cross = |du: &StepTriprocess, dv: &StepTriprocess| {
        // <D_i F, k>_H · <(D_j G)*, h>_H
        tri_pairing(engine, du, dv, |(h, l), (k, m)| engine.inner(l, k) * engine.inner(m, h))
    };
    let (d1u, d2u) = (partial_derivative(1, u)?, partial_derivative(2, u)?);
    let (d1v, d2v) = (partial_derivative(1, v)?, partial_derivative(2, v)?);
    Ok(cross(&d1u, &d2v)? + cross(&d2u, &d1v)?)
}

/// `|φ(δ(U) δ(V)*) - (φ×φ)(<U; V*>_H) - (φ×φ×φ)(T_H(U,V))|`.
pub fn isometry_residual(engine: &TraceEngine, u: &StepBiprocess, v: &StepBiprocess) -> Result<f64> {
    let lhs = engine.l2_inner(&divergence(engine, u)?, &divergence(engine, v)?)?;
    let rhs = l2_biprocess_inner(engine, u, v)? + isometry_trace_term(engine, u, v)?;
    Ok((lhs - rhs).abs())
}

/// `‖U‖_{D^{1,2}(H)}`.
pub fn d12_norm(engine: &TraceEngine, u: &StepBiprocess) -> Result<f64> {
    let mut sq = l2_biprocess_inner(engine, u, u)?;
    for slot in [1, 2] {
        let d = partial_derivative(slot, u)?;
        sq += tri_pairing(engine, &d, &d, |(h, k), (l, m)| engine.inner(h, l) * engine.inner(k, m))?;
    }
    Ok(sq.max(0.0).sqrt())
}

/// `‖U‖_{D^{1,2}} - ‖δ(U)‖_{L²}`; nonnegative when the energy bound holds.
pub fn energy_bound_slack(engine: &TraceEngine, u: &StepBiprocess) -> Result<f64> {
    Ok(d12_norm(engine, u)? - engine.l2_norm(&divergence(engine, u)?)?)
}
