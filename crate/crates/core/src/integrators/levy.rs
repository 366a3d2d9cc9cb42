//! Dyadic approximations of the product Lévy area.

use crate::algebra::{Element, LetterId, Tensor2, TraceEngine, Word};
use crate::covariance::StepFunction;
use crate::error::{domain, Result};
use crate::time::Time;

use super::report::{ConvergenceReport, FitTarget};

/// `𝕏^{2,n}_{s,t}[U] = sum_j c_j X(L_j) U X(R_j)`.
///
/// On a level-`n` cell `[t_j, t_{j+1}]` the piecewise-linear interpolant
/// integrates to `2^n ∫ X^{(n)}_{s,u} du = X_{s,t_j} + ½ X_{t_j,t_{j+1}}`, so
/// `L_j` is that single merged letter and `R_j` the cell increment.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyAreaOperator {
    s: Time,
    t: Time,
    level: u32,
    cells: Vec<(f64, LetterId, LetterId)>,
}

impl LevyAreaOperator {
    pub fn new(s: Time, t: Time, level: u32) -> Result<LevyAreaOperator> {
        let (Some(a), Some(b)) = (s.grid_index(level), t.grid_index(level)) else {
            return domain(format!("[{s}, {t}] is not aligned to the level-{level} dyadic grid"));
        };
        if a > b {
            return domain(format!("empty interval [{s}, {t}]"));
        }
        let mut cells = Vec::with_capacity((b - a) as usize);
        for i in a..b {
            let (lo, hi) = (Time::dyadic(i, level)?, Time::dyadic(i + 1, level)?);
            let left = StepFunction::from_terms([(s, lo, 1.0), (lo, hi, 0.5)])?;
            let (c, l) = LetterId::from_step(&left).expect("nonempty cell");
            let (_, r) = LetterId::from_step(&StepFunction::indicator(lo, hi)?).expect("nonempty cell");
            cells.push((c, l, r));
        }
        Ok(LevyAreaOperator { s, t, level, cells })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn interval(&self) -> (Time, Time) {
        (self.s, self.t)
    }

    pub fn cells(&self) -> &[(f64, LetterId, LetterId)] {
        &self.cells
    }

    /// `sum_j c_j X(L_j) ⊗ X(R_j)`, so that `𝕏²[U] = tensor ♯ U`.
    pub fn as_tensor(&self) -> Tensor2 {
        Tensor2::from_terms(
            self.cells
                .iter()
                .map(|&(c, l, r)| ([Word::from_letters([l]), Word::from_letters([r])], c)),
        )
    }

    fn check_adapted(&self, u: &Element) -> Result<()> {
        if !u.supported_before(self.s) {
            return domain(format!("integrand must be supported on [0, {}]", self.s));
        }
        Ok(())
    }

    /// Appends `left · 𝕏²[w] · right` for every word `w` of `u`.
    pub(crate) fn push_applied(&self, left: &Word, u: &[(Word, f64)], right: &Word, scale: f64, out: &mut Vec<(Word, f64)>) {
        for &(c, l, r) in &self.cells {
            for (w, cw) in u {
                let mut word = left.clone();
                word = word.concat(&Word::from_letters([l])).concat(w).concat(&Word::from_letters([r])).concat(right);
                out.push((word, scale * c * cw));
            }
        }
    }

    /// Appends `left · 𝕏²[w*]* · right = left · sum_j c_j R_j w L_j · right`.
    pub(crate) fn push_applied_star(&self, left: &Word, u: &[(Word, f64)], right: &Word, scale: f64, out: &mut Vec<(Word, f64)>) {
        for &(c, l, r) in &self.cells {
            for (w, cw) in u {
                let word = left.concat(&Word::from_letters([r])).concat(w).concat(&Word::from_letters([l])).concat(right);
                out.push((word, scale * c * cw));
            }
        }
    }

    /// `𝕏^{2,n}_{s,t}[U]`.
    pub fn apply(&self, u: &Element) -> Result<Element> {
        self.check_adapted(u)?;
        let terms: Vec<(Word, f64)> = u.terms().map(|(w, c)| (w.clone(), c)).collect();
        let mut out = Vec::new();
        self.push_applied(&Word::unit(), &terms, &Word::unit(), 1.0, &mut out);
        Ok(Element::from_terms(out))
    }

    /// `𝕏^{2,*}♯(U ⊗ V) = 𝕏²[U*]* V`.
    pub fn star_sharp(&self, u: &Element, v: &Element) -> Result<Element> {
        self.check_adapted(u)?;
        let terms: Vec<(Word, f64)> = u.terms().map(|(w, c)| (w.clone(), c)).collect();
        let mut out = Vec::new();
        for (wv, cv) in v.terms() {
            self.push_applied_star(&Word::unit(), &terms, wv, cv, &mut out);
        }
        Ok(Element::from_terms(out))
    }

    /// `(U ⊗ V)♯𝕏² = U 𝕏²[V]`.
    pub fn sharp(&self, u: &Element, v: &Element) -> Result<Element> {
        Ok(u * &self.apply(v)?)
    }
}

/// Stopping rule for [`levy_area`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AreaTarget {
    Fixed,
    /// Refine until consecutive levels differ by less than `tol` in `L²(φ)`.
    Converged { tol: f64, max_level: u32 },
}

/// `𝕏^{2,n}_{s,t}[U]` at level `n`, or the first iterate from level `n` on
/// whose Cauchy difference drops below the tolerance. A report is returned in
/// converged mode; its verdict records failure to converge by `max_level`.
pub fn levy_area(
    engine: &TraceEngine,
    n: u32,
    s: Time,
    t: Time,
    u: &Element,
    target: AreaTarget,
) -> Result<(Element, Option<ConvergenceReport>)> {
    let first = LevyAreaOperator::new(s, t, n)?.apply(u)?;
    let AreaTarget::Converged { tol, max_level } = target else {
        return Ok((first, None));
    };
    let mut report = ConvergenceReport::new("levy-area", FitTarget::Differences, tol);
    report.push(n, first.len(), engine.l2_norm(&first)?, f64::NAN);
    let mut prev = first;
    for m in n + 1..=max_level.max(n) {
        let cur = LevyAreaOperator::new(s, t, m)?.apply(u)?;
        let diff = engine.l2_norm(&(&cur - &prev))?;
        report.push(m, cur.len(), engine.l2_norm(&cur)?, diff);
        prev = cur;
        if diff < tol {
            break;
        }
    }
    report.conclude_cauchy();
    Ok((prev, Some(report)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::sharp;
    use crate::covariance::HurstParams;
    use proptest::prelude::*;

    fn t(i: u64, l: u32) -> Time {
        Time::dyadic(i, l).unwrap()
    }

    fn inc(a: Time, b: Time) -> Element {
        Element::increment(a, b).unwrap()
    }

    #[test]
    fn single_cell_reduces_to_half_yuy() {
        let (a, b) = (t(5, 4), t(6, 4));
        let u = &Element::atom(a) * &Element::atom(t(3, 4));
        let y = inc(a, b);
        let got = LevyAreaOperator::new(a, b, 4).unwrap().apply(&u).unwrap();
        assert_eq!(got, (&(&y * &u) * &y).scale(0.5));
    }

    #[test]
    fn cell_coefficient_matches_quadrature_of_interpolant() {
        // the interpolant on cell j is X_{s,t_j} + 2^n (u - t_j) Y_j; its cell
        // average weights Y_j by the mean of 2^n (u - t_j), i.e. 1/2
        let n = 3;
        let m = 1000;
        let avg: f64 = (0..m).map(|k| (k as f64 + 0.5) / m as f64).sum::<f64>() / m as f64;
        assert!((avg - 0.5).abs() < 1e-12);
        let op = LevyAreaOperator::new(t(2, n), t(6, n), n).unwrap();
        let (c, l, _) = op.cells()[2];
        let expect = StepFunction::from_terms([(t(2, n), t(4, n), 1.0), (t(4, n), t(5, n), avg)]).unwrap();
        assert_eq!(*l.label(), expect.scale(1.0 / c));
    }

    #[test]
    fn trace_is_half_at_h_half() {
        let e = TraceEngine::new(HurstParams::unit(0.5).unwrap());
        for n in 2..=8 {
            let (x, _) = levy_area(&e, n, Time::ZERO, Time::HORIZON, &Element::one(), AreaTarget::Fixed).unwrap();
            assert!((e.element_trace(&x).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn telescoping_and_level_difference() {
        let (s, tt) = (t(1, 2), t(2, 2));
        let u = &Element::atom(s) * &Element::atom(t(1, 3));
        let a = |m| LevyAreaOperator::new(s, tt, m).unwrap().apply(&u).unwrap();
        let (n, big) = (2u32, 6u32);
        let mut sum = a(n);
        for m in n..big {
            sum = &sum + &(&a(m + 1) - &a(m));
        }
        assert!(sum.max_abs_diff(&a(big)) < 1e-14);
        // one cell, one refinement: ½(Y' U Y'' - Y'' U Y')
        let mid = t(3, 3);
        let (y1, y2) = (inc(s, mid), inc(mid, tt));
        let expect = (&(&(&y1 * &u) * &y2) - &(&(&y2 * &u) * &y1)).scale(0.5);
        // letters differ (merged vs split), so compare in L²(φ); the squared
        // norm of an exact zero carries rounding at the 1e-16 scale
        let e = TraceEngine::new(HurstParams::unit(0.4).unwrap());
        let sq = e.l2_norm_squared(&(&(&a(3) - &a(2)) - &expect)).unwrap();
        assert!(sq.abs() < 1e-14, "{sq}");
    }

    #[test]
    fn adaptedness_and_alignment() {
        let op = LevyAreaOperator::new(t(1, 2), t(3, 2), 2).unwrap();
        assert!(op.apply(&Element::atom(t(3, 2))).is_err());
        assert!(LevyAreaOperator::new(t(1, 3), t(3, 2), 2).is_err());
        assert!(op.apply(&Element::atom(t(1, 2))).is_ok());
    }

    #[test]
    fn converged_mode_reports() {
        let e = TraceEngine::new(HurstParams::unit(0.45).unwrap());
        let target = AreaTarget::Converged { tol: 1e-9, max_level: 5 };
        let (_, rep) = levy_area(&e, 2, Time::ZERO, Time::HORIZON, &Element::one(), target).unwrap();
        let rep = rep.unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert!(!rep.pass);
        let target = AreaTarget::Converged { tol: 10.0, max_level: 5 };
        let (_, rep) = levy_area(&e, 2, Time::ZERO, Time::HORIZON, &Element::one(), target).unwrap();
        assert!(rep.unwrap().pass);
    }

    proptest! {
        #[test]
        fn bilinear_and_star_convention(i in 0u64..4, j in 0u64..4, c in -2.0f64..2.0, level in 2u32..5) {
            let s = t(4, 3);
            let tt = Time::HORIZON;
            let op = LevyAreaOperator::new(s, tt, level).unwrap();
            let u = &Element::atom(t(i + 1, 3)) * &Element::atom(t(j + 1, 3));
            let v = Element::atom(t(j, 3));
            let lin = op.apply(&(&u.scale(c) + &v)).unwrap();
            let sep = &op.apply(&u).unwrap().scale(c) + &op.apply(&v).unwrap();
            prop_assert!(lin.max_abs_diff(&sep) < 1e-12);
            let lhs = op.star_sharp(&u, &v).unwrap();
            let rhs = &op.apply(&u.star()).unwrap().star() * &v;
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(op.apply(&u).unwrap(), sharp(&op.as_tensor(), &u));
        }
    }
}
