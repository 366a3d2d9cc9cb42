//! Partition integrals, dyadic Lévy areas and the convergence experiments
//! built on them.

mod levy;
mod partition;
mod report;
mod sums;

use std::ops::RangeInclusive;

pub use levy::{levy_area, AreaTarget, LevyAreaOperator};
pub use partition::Partition;
pub use report::{fit_log2_slope, ConvergenceReport, FitTarget, ReportRow, CSV_HEADER};
pub use sums::{
    correction_nodes, correction_term, riemann_sum, rough_sum, second_order_correction, skorohod_sum,
    step_biprocess,
};

use crate::algebra::{Element, Polynomial, TraceEngine, Word};
use crate::error::{domain, Error, Result};
use crate::malliavin::divergence;
use crate::time::Time;

use sums::{dpoly_terms, poly_terms, riemann_sum_tensor, step_biprocess_tensor};

/// Default number of correction quadrature cells.
pub const DEFAULT_QUAD_POINTS: usize = 1024;
/// Quadrature doubling stops here even without meeting the tolerance.
pub const MAX_QUAD_POINTS: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralKind {
    Young,
    Rough,
    Skorohod,
}

impl IntegralKind {
    pub fn name(self) -> &'static str {
        match self {
            IntegralKind::Young => "young",
            IntegralKind::Rough => "rough",
            IntegralKind::Skorohod => "skorohod",
        }
    }
}

/// Rejects Hurst indices outside the regime of `kind`.
pub fn check_regime(params: &crate::covariance::HurstParams, kind: IntegralKind) -> Result<()> {
    let h = params.hurst();
    let (ok, need) = match kind {
        IntegralKind::Young => (params.is_young(), "H>1/2"),
        IntegralKind::Rough => (h > 1.0 / 3.0, "H>1/3"),
        IntegralKind::Skorohod => (params.is_skorohod_admissible(), "H>1/4"),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Regime(format!("{} requires {need}, got H={h}", kind.name())))
    }
}

fn check_levels(levels: &RangeInclusive<u32>) -> Result<()> {
    if levels.is_empty() || *levels.end() > 30 {
        return domain(format!("level range {}..={} is empty or too fine", levels.start(), levels.end()));
    }
    Ok(())
}

/// Options for the residual experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualOptions {
    /// Quadrature cells for the correction integral.
    pub quad_points: usize,
    /// When set, double `quad_points` until consecutive quadratures differ
    /// by less than this in `L²(φ)`.
    pub quad_tol: Option<f64>,
    /// Lévy areas are taken at partition level plus this.
    pub extra_area_levels: u32,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions { quad_points: DEFAULT_QUAD_POINTS, quad_tol: None, extra_area_levels: 0 }
    }
}

fn settle_quadrature(
    engine: &TraceEngine,
    opts: &ResidualOptions,
    report: &mut ConvergenceReport,
    make: impl Fn(usize) -> Result<Element>,
) -> Result<Element> {
    let mut m = opts.quad_points;
    let mut cur = make(m)?;
    if let Some(tol) = opts.quad_tol {
        loop {
            if 2 * m > MAX_QUAD_POINTS {
                report.note(format!("quadrature did not settle below {tol:e} by {m} points"));
                break;
            }
            let next = make(2 * m)?;
            let d = engine.l2_norm(&(&next - &cur))?;
            m *= 2;
            cur = next;
            if d < tol {
                report.note(format!("quadrature settled at {m} points (doubling change {d:e})"));
                break;
            }
        }
    }
    report.note(format!("quad_points={m}"));
    Ok(cur)
}

fn push_level(
    engine: &TraceEngine,
    report: &mut ConvergenceReport,
    level: u32,
    cur: &Element,
    prev: Option<&Element>,
) -> Result<()> {
    let diff = match prev {
        Some(p) => engine.l2_norm(&(cur - p))?,
        None => f64::NAN,
    };
    report.push(level, cur.len(), engine.l2_norm(cur)?, diff);
    Ok(())
}

/// Evaluates the `kind` partition sum over dyadic levels of `[s,t]`, reports
/// Cauchy differences, and returns the finest-level element.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    engine: &TraceEngine,
    kind: IntegralKind,
    p: &Polynomial,
    q: &Polynomial,
    s: Time,
    t: Time,
    tol: f64,
    levels: RangeInclusive<u32>,
) -> Result<(Element, ConvergenceReport)> {
    check_regime(engine.params(), kind)?;
    check_levels(&levels)?;
    let mut report = ConvergenceReport::new(format!("integrate-{}", kind.name()), FitTarget::Differences, tol);
    let mut prev: Option<Element> = None;
    for n in levels {
        let part = Partition::dyadic(s, t, n)?;
        let cur = match kind {
            IntegralKind::Young => riemann_sum(p, q, &part)?,
            IntegralKind::Rough => rough_sum(p, q, &part, n)?,
            IntegralKind::Skorohod => skorohod_sum(engine, p, q, &part)?,
        };
        push_level(engine, &mut report, n, &cur, prev.as_ref())?;
        prev = Some(cur);
    }
    report.conclude_cauchy();
    Ok((prev.expect("nonempty level range"), report))
}

/// `‖rough_sum_n − skorohod_sum_n − correction‖_{L²(φ)}` per level.
#[allow(clippy::too_many_arguments)]
pub fn ito_strato_residual(
    engine: &TraceEngine,
    p: &Polynomial,
    q: &Polynomial,
    s: Time,
    t: Time,
    levels: RangeInclusive<u32>,
    tol: f64,
    opts: &ResidualOptions,
) -> Result<ConvergenceReport> {
    check_regime(engine.params(), IntegralKind::Rough)?;
    check_levels(&levels)?;
    let mut report = ConvergenceReport::new("ito-strato", FitTarget::Values, tol);
    let corr = settle_quadrature(engine, opts, &mut report, |m| correction_term(engine, p, q, s, t, m))?;
    let mut prev: Option<Element> = None;
    for n in levels {
        let part = Partition::dyadic(s, t, n)?;
        let rough = rough_sum(p, q, &part, n + opts.extra_area_levels)?;
        let sk = skorohod_sum(engine, p, q, &part)?;
        let res = &(&rough - &sk) - &corr;
        push_level(engine, &mut report, n, &res, prev.as_ref())?;
        prev = Some(res);
    }
    report.conclude_residual();
    Ok(report)
}

/// `‖P(X_t) − P(X_s) − δ(∂P)_n − correction‖_{L²(φ)}` per level; see
/// [`second_order_correction`] for the correction.
pub fn ito_formula_residual(
    engine: &TraceEngine,
    p: &Polynomial,
    s: Time,
    t: Time,
    levels: RangeInclusive<u32>,
    tol: f64,
    opts: &ResidualOptions,
) -> Result<ConvergenceReport> {
    check_regime(engine.params(), IntegralKind::Rough)?;
    check_levels(&levels)?;
    let mut report = ConvergenceReport::new("ito-formula", FitTarget::Values, tol);
    let corr = settle_quadrature(engine, opts, &mut report, |m| second_order_correction(engine, p, s, t, m))?;
    let lhs = &p.eval(&Element::atom(t)) - &p.eval(&Element::atom(s));
    let mut prev: Option<Element> = None;
    for n in levels {
        let part = Partition::dyadic(s, t, n)?;
        let bp = step_biprocess_tensor(|u| dpoly_terms(p, u), &part)?;
        let res = &(&lhs - &divergence(engine, &bp)?) - &corr;
        push_level(engine, &mut report, n, &res, prev.as_ref())?;
        prev = Some(res);
    }
    report.conclude_residual();
    Ok(report)
}

/// `P(X_t) − P(X_s) − sum_i ∂P(X_{r_i}) ♯ X_{r_i, r_{i+1}}` per level.
pub fn young_rule_remainder(
    engine: &TraceEngine,
    p: &Polynomial,
    s: Time,
    t: Time,
    levels: RangeInclusive<u32>,
) -> Result<ConvergenceReport> {
    check_regime(engine.params(), IntegralKind::Young)?;
    check_levels(&levels)?;
    let mut report = ConvergenceReport::new("young-rule", FitTarget::Values, 0.0);
    let lhs = &p.eval(&Element::atom(t)) - &p.eval(&Element::atom(s));
    let mut prev: Option<Element> = None;
    for n in levels {
        let part = Partition::dyadic(s, t, n)?;
        let res = &lhs - &riemann_sum_tensor(|u| dpoly_terms(p, u), &part)?;
        push_level(engine, &mut report, n, &res, prev.as_ref())?;
        prev = Some(res);
    }
    report.conclude_residual();
    Ok(report)
}

/// How the Lévy area inside [`rough_case_decay`] is approximated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AreaRule {
    /// Area level = partition level + `k`.
    Fixed(u32),
    /// Refine the area level until the sum moves by less than `tol`, at most
    /// `max_extra` levels past the partition level.
    Cauchy { tol: f64, max_extra: u32 },
}

fn local_area_sum(
    engine: &TraceEngine,
    d: usize,
    d1: usize,
    d2: usize,
    n: u32,
    area_level: u32,
) -> Result<Element> {
    let part = Partition::dyadic(Time::ZERO, Time::HORIZON, n)?;
    let p = engine.params();
    let cell = (p.horizon() / (1u64 << n) as f64).powf(2.0 * p.hurst());
    let mut out = Vec::new();
    for (a, b) in part.cells() {
        let area = LevyAreaOperator::new(a, b, area_level)?;
        let pw = |k: usize| poly_terms(&Polynomial::monomial(k).expect("small degree"), a);
        let (l, u, r) = (pw(d1), pw(d), pw(d2));
        let (Some((l, _)), Some((r, _))) = (l.into_iter().next(), r.into_iter().next()) else {
            continue;
        };
        if u.is_empty() {
            continue;
        }
        area.push_applied(&l, &u, &r, 1.0, &mut out);
        let phi = engine.word_trace(&u[0].0)?;
        if phi != 0.0 {
            out.push((l.concat(&r), -0.5 * phi * cell));
        }
    }
    Ok(Element::from_terms(out))
}

/// `L²(φ)` norm per level `n` of
/// `sum_i X_{t_i}^{d1} { 𝕏²_{t_i,t_{i+1}}[X_{t_i}^d] − ½ φ(X_{t_i}^d) |t_{i+1}−t_i|^{2H} } X_{t_i}^{d2}`
/// over the dyadic partition of the horizon, with the fitted decay exponent.
pub fn rough_case_decay(
    engine: &TraceEngine,
    d: usize,
    d1: usize,
    d2: usize,
    levels: RangeInclusive<u32>,
    rule: AreaRule,
) -> Result<ConvergenceReport> {
    let params = engine.params();
    if !(params.is_rough()) {
        return Err(Error::Regime(format!("rough-case decay requires 1/3<H<=1/2, got H={}", params.hurst())));
    }
    check_levels(&levels)?;
    let mut report = ConvergenceReport::new(format!("rough-case d={d} d1={d1} d2={d2}"), FitTarget::Values, 0.0);
    let mut prev: Option<Element> = None;
    for n in levels {
        let (sum, used) = match rule {
            AreaRule::Fixed(k) => (local_area_sum(engine, d, d1, d2, n, n + k)?, n + k),
            AreaRule::Cauchy { tol, max_extra } => {
                let mut cur = local_area_sum(engine, d, d1, d2, n, n)?;
                let mut used = n;
                for m in n + 1..=n + max_extra {
                    let next = local_area_sum(engine, d, d1, d2, n, m)?;
                    let diff = engine.l2_norm(&(&next - &cur))?;
                    cur = next;
                    used = m;
                    if diff < tol {
                        break;
                    }
                }
                (cur, used)
            }
        };
        report.note(format!("level {n}: area level {used}"));
        push_level(engine, &mut report, n, &sum, prev.as_ref())?;
        prev = Some(sum);
    }
    let rate = report.fitted_rate();
    if rate < 0.0 {
        report.conclude(true, format!("decaying, fitted log2 slope {rate:.4}"));
    } else {
        report.conclude(false, format!("no decay, fitted log2 slope {rate:.4}"));
    }
    Ok(report)
}

/// `‖skorohod_sum − riemann_sum‖_{L²(φ)}` at level `n`; requires `H = 1/2`.
pub fn ito_identification_check(
    engine: &TraceEngine,
    p: &Polynomial,
    q: &Polynomial,
    s: Time,
    t: Time,
    n: u32,
) -> Result<f64> {
    if engine.params().hurst() != 0.5 {
        return Err(Error::Regime(format!(
            "Itô identification requires H=1/2, got H={}",
            engine.params().hurst()
        )));
    }
    let part = Partition::dyadic(s, t, n)?;
    let diff = &skorohod_sum(engine, p, q, &part)? - &riemann_sum(p, q, &part)?;
    engine.l2_norm(&diff)
}

/// Words of `X_t^k`, exposed for drivers that build sums by hand.
pub fn atom_power(t: Time, k: usize) -> Option<Word> {
    poly_terms(&Polynomial::monomial(k).ok()?, t).into_iter().next().map(|(w, _)| w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::HurstParams;

    fn poly(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec()).unwrap()
    }

    fn engine(h: f64) -> TraceEngine {
        TraceEngine::new(HurstParams::unit(h).unwrap())
    }

    const ONE: Time = Time::HORIZON;

    #[test]
    fn regime_guards() {
        let (x, one) = (poly(&[0.0, 1.0]), poly(&[1.0]));
        let e = engine(0.4);
        let err = integrate(&e, IntegralKind::Young, &x, &one, Time::ZERO, ONE, 1e-3, 2..=3).unwrap_err();
        assert!(err.to_string().contains("young requires H>1/2"), "{err}");
        assert!(integrate(&engine(0.3), IntegralKind::Rough, &x, &one, Time::ZERO, ONE, 1e-3, 2..=3).is_err());
        assert!(integrate(&engine(0.2), IntegralKind::Skorohod, &x, &one, Time::ZERO, ONE, 1e-3, 2..=3).is_err());
        assert!(ito_identification_check(&engine(0.6), &x, &one, Time::ZERO, ONE, 3).is_err());
        assert!(rough_case_decay(&engine(0.6), 0, 0, 0, 2..=4, AreaRule::Fixed(0)).is_err());
    }

    #[test]
    fn young_constant_integrand() {
        let one = poly(&[1.0]);
        let e = engine(0.7);
        let (el, rep) = integrate(&e, IntegralKind::Young, &one, &one, Time::ZERO, ONE, 1e-3, 2..=5).unwrap();
        assert_eq!(el, Element::atom(ONE));
        assert!(rep.rows[1..].iter().all(|r| r.diff_prev_l2 == 0.0));
        assert!(rep.pass);
    }

    #[test]
    fn skorohod_equals_ito_at_half() {
        let e = engine(0.5);
        for (p, q, n) in [(poly(&[0.0, 1.0]), poly(&[1.0]), 4), (poly(&[0.0, 0.0, 1.0]), poly(&[0.0, 1.0]), 6)] {
            assert!(ito_identification_check(&e, &p, &q, Time::ZERO, ONE, n).unwrap() < 1e-12);
        }
    }

    #[test]
    fn trivial_residuals_vanish() {
        let one = poly(&[1.0]);
        let e = engine(0.4);
        let opts = ResidualOptions { quad_points: 8, ..Default::default() };
        let rep = ito_strato_residual(&e, &one, &one, Time::ZERO, ONE, 2..=5, 1e-3, &opts).unwrap();
        assert!(rep.values().iter().all(|&v| v == 0.0));
        assert!(rep.pass);
        let rep = ito_formula_residual(&e, &poly(&[0.0, 1.0]), Time::ZERO, ONE, 2..=5, 1e-3, &opts).unwrap();
        assert!(rep.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn x_one_residual_at_half_is_exact() {
        // Σ(½Y² − ½Δ) has squared norm ¼·2^n·Δ² = 2^{-n}/4
        let e = engine(0.5);
        let opts = ResidualOptions { quad_points: 4, ..Default::default() };
        let rep = ito_strato_residual(&e, &poly(&[0.0, 1.0]), &poly(&[1.0]), Time::ZERO, ONE, 2..=6, 1e-3, &opts).unwrap();
        for r in &rep.rows {
            assert!((r.value_l2 - 0.5 * 2f64.powf(-(r.level as f64) / 2.0)).abs() < 1e-12);
        }
        assert!(rep.strictly_decreasing());
    }

    #[test]
    fn decay_at_half_matches_closed_form() {
        let e = engine(0.5);
        let rep = rough_case_decay(&e, 0, 0, 0, 2..=6, AreaRule::Fixed(0)).unwrap();
        for r in &rep.rows {
            assert!((r.value_l2 - 0.5 * 2f64.powf(-(r.level as f64) / 2.0)).abs() < 1e-12);
        }
        assert!(rep.pass);
    }

    #[test]
    fn young_rule_remainder_decays() {
        let e = engine(0.75);
        let rep = young_rule_remainder(&e, &poly(&[0.0, 0.0, 1.0]), Time::ZERO, ONE, 4..=9).unwrap();
        assert!(rep.fitted_rate() <= -(2.0 * 0.75 - 1.0), "{:?}", rep.rows);
    }
}
