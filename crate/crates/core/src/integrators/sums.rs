//! Partition sums and the correction integral.

use crate::algebra::{Element, LetterId, Polynomial, TraceEngine, Word};
use crate::covariance::{HurstParams, StepFunction};
use crate::error::{domain, Error, Result};
use crate::malliavin::{divergence, StepBiprocess};
use crate::time::Time;

use super::levy::LevyAreaOperator;
use super::partition::Partition;

type Terms = Vec<(Word, f64)>;
type PairTerms = Vec<(Word, Word, f64)>;
type TripleTerms = Vec<(Word, Word, Word, f64)>;

fn power(x: Option<LetterId>, k: usize) -> Option<Word> {
    match (x, k) {
        (_, 0) => Some(Word::unit()),
        (None, _) => None,
        (Some(l), k) => Some(Word::from_letters(std::iter::repeat_n(l, k))),
    }
}

/// Words of `P(X_t)`; `X_0 = 0` keeps only the constant.
pub(crate) fn poly_terms(p: &Polynomial, t: Time) -> Terms {
    let x = LetterId::atom(t);
    p.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0.0)
        .filter_map(|(k, &a)| power(x, k).map(|w| (w, a)))
        .collect()
}

/// Word pairs of `∂P(X_t)`.
pub(crate) fn dpoly_terms(p: &Polynomial, t: Time) -> PairTerms {
    let x = LetterId::atom(t);
    let mut out = Vec::new();
    for (k, &a) in p.coeffs().iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        for i in 0..k {
            if let (Some(l), Some(r)) = (power(x, i), power(x, k - 1 - i)) {
                out.push((l, r, a));
            }
        }
    }
    out
}

/// Word triples of `∂²P(X_t)`.
pub(crate) fn d2poly_terms(p: &Polynomial, t: Time) -> TripleTerms {
    let x = LetterId::atom(t);
    let mut out = Vec::new();
    for (k, &a) in p.coeffs().iter().enumerate().skip(2) {
        if a == 0.0 {
            continue;
        }
        for i in 0..=k - 2 {
            for j in 0..=k - 2 - i {
                if let (Some(u), Some(v), Some(w)) = (power(x, i), power(x, j), power(x, k - 2 - i - j)) {
                    out.push((u, v, w, a));
                }
            }
        }
    }
    out
}

fn increment_letter(a: Time, b: Time) -> Result<LetterId> {
    LetterId::from_step(&StepFunction::indicator(a, b)?)
        .map(|(_, l)| l)
        .ok_or_else(|| Error::Domain("degenerate cell".into()))
}

fn word3(a: &Word, b: &Word, c: &Word) -> Word {
    a.concat(b).concat(c)
}

/// `sum_i P(X_{r_i}) X_{r_i, r_{i+1}} Q(X_{r_i})`.
pub fn riemann_sum(p: &Polynomial, q: &Polynomial, part: &Partition) -> Result<Element> {
    let mut out = Vec::new();
    for (a, b) in part.cells() {
        let y = Word::from_letters([increment_letter(a, b)?]);
        let (pt, qt) = (poly_terms(p, a), poly_terms(q, a));
        for (wp, cp) in &pt {
            for (wq, cq) in &qt {
                out.push((word3(wp, &y, wq), cp * cq));
            }
        }
    }
    Ok(Element::from_terms(out))
}

/// Riemann sum of an arbitrary tensor-valued integrand `sum (a ⊗ b) ♯ dX`.
pub(crate) fn riemann_sum_tensor(integrand: impl Fn(Time) -> PairTerms, part: &Partition) -> Result<Element> {
    let mut out = Vec::new();
    for (a, b) in part.cells() {
        let y = Word::from_letters([increment_letter(a, b)?]);
        for (l, r, c) in integrand(a) {
            out.push((word3(&l, &y, &r), c));
        }
    }
    Ok(Element::from_terms(out))
}

/// The elementary biprocess `sum_i (P(X_{r_i}) ⊗ Q(X_{r_i})) 1_[r_i, r_{i+1})`.
pub fn step_biprocess(p: &Polynomial, q: &Polynomial, part: &Partition) -> Result<StepBiprocess> {
    step_biprocess_tensor(
        |a| {
            let (pt, qt) = (poly_terms(p, a), poly_terms(q, a));
            let mut v = Vec::new();
            for (wp, cp) in &pt {
                for (wq, cq) in &qt {
                    v.push((wp.clone(), wq.clone(), cp * cq));
                }
            }
            v
        },
        part,
    )
}

pub(crate) fn step_biprocess_tensor(integrand: impl Fn(Time) -> PairTerms, part: &Partition) -> Result<StepBiprocess> {
    let mut bp = StepBiprocess::zero();
    for (a, b) in part.cells() {
        let y = increment_letter(a, b)?;
        for (l, r, c) in integrand(a) {
            bp.push_word_pair([l, r], y, c);
        }
    }
    Ok(bp)
}

/// `δ^X` of the step biprocess of `P(X) ⊗ Q(X)` on `part`.
pub fn skorohod_sum(engine: &TraceEngine, p: &Polynomial, q: &Polynomial, part: &Partition) -> Result<Element> {
    divergence(engine, &step_biprocess(p, q, part)?)
}

/// Corrected Riemann sum with the Lévy area at `area_level`.
pub fn rough_sum(p: &Polynomial, q: &Polynomial, part: &Partition, area_level: u32) -> Result<Element> {
    let mut out = Vec::new();
    for (a, b) in part.cells() {
        let y = Word::from_letters([increment_letter(a, b)?]);
        let area = LevyAreaOperator::new(a, b, area_level)?;
        let (pt, qt) = (poly_terms(p, a), poly_terms(q, a));
        for (wp, cp) in &pt {
            for (wq, cq) in &qt {
                out.push((word3(wp, &y, wq), cp * cq));
            }
        }
        // (∂P ♯ 𝕏²) Q: l 𝕏²[r] Q
        for (l, r, c) in dpoly_terms(p, a) {
            for (wq, cq) in &qt {
                area.push_applied(&l, &[(r.clone(), 1.0)], wq, c * cq, &mut out);
            }
        }
        // P (𝕏^{2,*} ♯ ∂Q): P 𝕏²[l*]* r
        for (l, r, c) in dpoly_terms(q, a) {
            for (wp, cp) in &pt {
                area.push_applied_star(wp, &[(l.clone(), 1.0)], &r, c * cp, &mut out);
            }
        }
    }
    Ok(Element::from_terms(out))
}

/// Quadrature nodes and weights for `H ∫_s^t u^{2H-1} f(u) du`: the nodes are
/// cell midpoints of a uniform split of `[s,t]`, and each weight is the exact
/// `H ∫_cell u^{2H-1} du`, so a constant integrand is integrated exactly.
pub fn correction_nodes(params: &HurstParams, s: Time, t: Time, quad_points: usize) -> Result<Vec<(Time, f64)>> {
    if quad_points < 2 {
        return domain(format!("quad_points = {quad_points} must be at least 2"));
    }
    if s >= t {
        return domain(format!("empty interval [{s}, {t}]"));
    }
    let span = t.ticks() - s.ticks();
    let m = quad_points as u64;
    let edge = |k: u64| Time::from_ticks(s.ticks() + ((span as u128 * k as u128) / m as u128) as u64);
    let h2 = 2.0 * params.hurst();
    let horizon = params.horizon();
    let mut out = Vec::with_capacity(quad_points);
    for k in 0..m {
        let (a, b) = (edge(k)?, edge(k + 1)?);
        let w = 0.5 * (b.at(horizon).powf(h2) - a.at(horizon).powf(h2));
        out.push((a.midpoint(b), w));
    }
    Ok(out)
}

/// `H ∫_s^t u^{2H-1} (Id×φ×Id)[∂P(X_u) ⊗ Q(X_u) + P(X_u) ⊗ ∂Q(X_u)] du`.
pub fn correction_term(
    engine: &TraceEngine,
    p: &Polynomial,
    q: &Polynomial,
    s: Time,
    t: Time,
    quad_points: usize,
) -> Result<Element> {
    let mut out = Vec::new();
    for (u, w) in correction_nodes(engine.params(), s, t, quad_points)? {
        let (pt, qt) = (poly_terms(p, u), poly_terms(q, u));
        for (l, m, c) in dpoly_terms(p, u) {
            let phi = engine.word_trace(&m)?;
            if phi != 0.0 {
                for (wq, cq) in &qt {
                    out.push((l.concat(wq), w * c * phi * cq));
                }
            }
        }
        for (m, r, c) in dpoly_terms(q, u) {
            let phi = engine.word_trace(&m)?;
            if phi != 0.0 {
                for (wp, cp) in &pt {
                    out.push((wp.concat(&r), w * c * phi * cp));
                }
            }
        }
    }
    Ok(Element::from_terms(out))
}

/// The trace correction in the Itô formula for `P`, evaluated as the
/// first-order correction applied to each component of `∂P`. This equals
/// `2 H ∫_s^t u^{2H-1} (Id×φ×Id)(∂²P(X_u)) du` with `∂²P` summed over
/// `i + j <= k - 2`.
pub fn second_order_correction(
    engine: &TraceEngine,
    p: &Polynomial,
    s: Time,
    t: Time,
    quad_points: usize,
) -> Result<Element> {
    let mut out = Vec::new();
    for (u, w) in correction_nodes(engine.params(), s, t, quad_points)? {
        for (l, m, r, c) in d2poly_terms(p, u) {
            let phi = engine.word_trace(&m)?;
            if phi != 0.0 {
                out.push((l.concat(&r), 2.0 * w * c * phi));
            }
        }
    }
    Ok(Element::from_terms(out))
}
