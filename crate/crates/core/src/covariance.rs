//! Fractional covariance, the Cameron–Martin type inner product on step
//! functions, and 2D-variation / Hölder diagnostics of the covariance.

use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::time::Time;

/// Hurst index and horizon of the process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HurstParams {
    hurst: f64,
    horizon: f64,
}

impl HurstParams {
    pub fn new(hurst: f64, horizon: f64) -> Result<HurstParams> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return domain(format!("Hurst index {hurst} must lie in (0,1)"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("horizon {horizon} must be positive"));
        }
        Ok(HurstParams { hurst, horizon })
    }

    /// Unit horizon.
    pub fn unit(hurst: f64) -> Result<HurstParams> {
        HurstParams::new(hurst, 1.0)
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_young(&self) -> bool {
        self.hurst > 0.5
    }

    pub fn is_rough(&self) -> bool {
        self.hurst > 1.0 / 3.0 && self.hurst <= 0.5
    }

    pub fn is_skorohod_admissible(&self) -> bool {
        self.hurst > 0.25
    }

    /// `f_H(t) = |t|^{2H} / 2`.
    pub fn half_power(&self, t: f64) -> f64 {
        0.5 * t.abs().powf(2.0 * self.hurst)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= -1e-12 && t <= self.horizon * (1.0 + 1e-12)) {
            return domain(format!("time {t} outside [0, {}]", self.horizon));
        }
        Ok(())
    }
}

/// `R_H(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2`.
pub fn fbm_covariance(p: &HurstParams, s: f64, t: f64) -> Result<f64> {
    p.check_time(s)?;
    p.check_time(t)?;
    Ok(raw_covariance(p.hurst, s, t))
}

fn raw_covariance(h: f64, s: f64, t: f64) -> f64 {
    let e = 2.0 * h;
    0.5 * (s.abs().powf(e) + t.abs().powf(e) - (t - s).abs().powf(e))
}

/// Rectangular increment `<1_[a,b), 1_[c,d)>` written through `|.|^{2H}` of
/// the four cross differences; the `s^{2H}` terms cancel identically.
pub(crate) fn interval_product(h: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    let e = 2.0 * h;
    let pw = |x: f64| x.abs().powf(e);
    0.5 * (pw(b - c) + pw(a - d) - pw(b - d) - pw(a - c))
}

/// One constant piece `weight * 1_[start, end)` of a step function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub start: Time,
    pub end: Time,
    pub weight: f64,
}

/// Elementary function on `[0,T]` in canonical form: disjoint, sorted pieces
/// with nonzero weights and no two adjacent pieces sharing a weight.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct StepFunction {
    pieces: Vec<Piece>,
}

impl Eq for StepFunction {}

impl Hash for StepFunction {
    fn hash<S: Hasher>(&self, state: &mut S) {
        for p in &self.pieces {
            p.start.hash(state);
            p.end.hash(state);
            p.weight.to_bits().hash(state);
        }
    }
}

impl StepFunction {
    pub fn zero() -> StepFunction {
        StepFunction::default()
    }

    /// `1_[a,b)`; zero when `a == b`.
    pub fn indicator(a: Time, b: Time) -> Result<StepFunction> {
        StepFunction::from_terms([(a, b, 1.0)])
    }

    /// `1_[0,t)`, the label of the atom `X_t`.
    pub fn up_to(t: Time) -> StepFunction {
        StepFunction::from_terms([(Time::ZERO, t, 1.0)]).expect("0 <= t")
    }

    /// Canonical form of `sum_i alpha_i 1_[a_i, b_i)`.
    pub fn from_terms(terms: impl IntoIterator<Item = (Time, Time, f64)>) -> Result<StepFunction> {
        let mut events: Vec<(Time, f64)> = Vec::new();
        for (a, b, w) in terms {
            if a > b {
                return domain(format!("empty interval [{a}, {b})"));
            }
            if a == b || w == 0.0 {
                continue;
            }
            events.push((a, w));
            events.push((b, -w));
        }
        events.sort_by_key(|x| x.0);
        let mut pieces: Vec<Piece> = Vec::new();
        let mut level = 0.0;
        let mut i = 0;
        while i < events.len() {
            let t = events[i].0;
            while i < events.len() && events[i].0 == t {
                level += events[i].1;
                i += 1;
            }
            if i < events.len() {
                let next = events[i].0;
                let w = if level.abs() < 1e-300 { 0.0 } else { level };
                if w != 0.0 {
                    match pieces.last_mut() {
                        Some(last) if last.end == t && last.weight == w => last.end = next,
                        _ => pieces.push(Piece { start: t, end: next, weight: w }),
                    }
                }
            }
        }
        Ok(StepFunction { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Latest point of the support (zero for the zero function).
    pub fn support_end(&self) -> Time {
        self.pieces.last().map_or(Time::ZERO, |p| p.end)
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        if c == 0.0 {
            return StepFunction::zero();
        }
        StepFunction {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece { weight: p.weight * c, ..*p })
                .collect(),
        }
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        let terms = self
            .pieces
            .iter()
            .chain(other.pieces.iter())
            .map(|p| (p.start, p.end, p.weight));
        StepFunction::from_terms(terms).expect("canonical pieces are ordered")
    }

    /// Splits off the leading weight: `self = c * normalized` with the first
    /// piece of `normalized` carrying weight 1. Zero maps to `(0, zero)`.
    pub fn normalize(&self) -> (f64, StepFunction) {
        match self.pieces.first() {
            None => (0.0, StepFunction::zero()),
            Some(p) if p.weight == 1.0 => (1.0, self.clone()),
            Some(p) => {
                let c = p.weight;
                (c, self.scale(1.0 / c))
            }
        }
    }

    /// Value at absolute fraction `t` of the horizon.
    pub fn eval(&self, t: Time) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.start <= t && t < p.end)
            .map_or(0.0, |p| p.weight)
    }
}

/// `<h, k>_H`, the bilinear extension of `<1_[0,s), 1_[0,t)> = R_H(s,t)`.
pub fn step_inner_product(p: &HurstParams, h: &StepFunction, k: &StepFunction) -> f64 {
    let horizon = p.horizon;
    let mut acc = 0.0;
    for a in &h.pieces {
        for b in &k.pieces {
            acc += a.weight
                * b.weight
                * interval_product(
                    p.hurst,
                    a.start.at(horizon),
                    a.end.at(horizon),
                    b.start.at(horizon),
                    b.end.at(horizon),
                );
        }
    }
    acc
}

/// Grid of `2^level + 1` dyadic points of `[0,T]`.
pub fn dyadic_grid(p: &HurstParams, level: u32) -> Vec<f64> {
    let n = 1u64 << level;
    (0..=n).map(|i| p.horizon * i as f64 / n as f64).collect()
}

fn check_grid(p: &HurstParams, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return domain("grid needs at least two points");
    }
    for w in grid.windows(2) {
        if !(w[0] < w[1]) {
            return domain(format!("grid not strictly increasing at {} -> {}", w[0], w[1]));
        }
    }
    p.check_time(grid[0])?;
    p.check_time(grid[grid.len() - 1])
}

/// `(sum_{i,j} |R_H rectangle increment|^rho)^{1/rho}` over the cells of
/// `grid x grid`: a lower bound for the 2D `rho`-variation of `R_H`.
pub fn grid_two_d_variation(p: &HurstParams, rho: f64, grid: &[f64]) -> Result<f64> {
    if !(rho >= 1.0) {
        return domain(format!("rho = {rho} must be >= 1"));
    }
    check_grid(p, grid)?;
    let mut sum = 0.0;
    for a in grid.windows(2) {
        for b in grid.windows(2) {
            sum += interval_product(p.hurst, a[0], a[1], b[0], b[1]).abs().powf(rho);
        }
    }
    Ok(sum.powf(1.0 / rho))
}

/// Largest observed ratio `|R(t,u) - R(s,u)| / |t-s|^{2H}` over grid points.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderReport {
    pub max_ratio: f64,
    pub s: f64,
    pub t: f64,
    pub u: f64,
}

pub fn holder_report(p: &HurstParams, grid: &[f64]) -> Result<HolderReport> {
    check_grid(p, grid)?;
    let h = p.hurst;
    let mut best = HolderReport { max_ratio: 0.0, s: 0.0, t: 0.0, u: 0.0 };
    let cov: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| grid.iter().map(|&y| raw_covariance(h, x, y)).collect())
        .collect();
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let denom = (grid[j] - grid[i]).powf(2.0 * h);
            for (k, &u) in grid.iter().enumerate() {
                let ratio = (cov[j][k] - cov[i][k]).abs() / denom;
                if ratio > best.max_ratio {
                    best = HolderReport { max_ratio: ratio, s: grid[i], t: grid[j], u };
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn t(i: u64, level: u32) -> Time {
        Time::dyadic(i, level).unwrap()
    }

    #[test]
    fn covariance_examples() {
        let p = HurstParams::new(0.5, 2.0).unwrap();
        assert_abs_diff_eq!(fbm_covariance(&p, 1.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        for h in [0.2, 0.5, 0.8] {
            let p = HurstParams::new(h, 3.0).unwrap();
            assert_abs_diff_eq!(fbm_covariance(&p, 1.7, 1.7).unwrap(), 1.7f64.powf(2.0 * h), epsilon = 1e-14);
            assert_eq!(fbm_covariance(&p, 0.0, 2.5).unwrap(), 0.0);
            assert_eq!(fbm_covariance(&p, 0.3, 2.5).unwrap(), fbm_covariance(&p, 2.5, 0.3).unwrap());
        }
        assert!(fbm_covariance(&p, 2.5, 1.0).is_err());
        assert!(HurstParams::new(1.0, 1.0).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let p = HurstParams::unit(0.75).unwrap();
        let q = HurstParams::new(0.75, 2.0).unwrap();
        let h = StepFunction::indicator(t(0, 1), t(1, 1)).unwrap();
        let k = StepFunction::indicator(t(1, 1), t(2, 1)).unwrap();
        // [0,1) and [1,2) on horizon 2
        assert_abs_diff_eq!(
            step_inner_product(&q, &h, &k),
            0.5 * (2f64.powf(1.5) - 2.0),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(step_inner_product(&q, &h, &k), 0.414213562373095, epsilon = 1e-12);
        // f_H identity for <1_[0,a), 1_[a,b)>
        let a = t(3, 3);
        let b = t(7, 3);
        let lhs = step_inner_product(&p, &StepFunction::up_to(a), &StepFunction::indicator(a, b).unwrap());
        let (fa, fb) = (a.frac(), b.frac());
        let rhs = p.half_power(fb) - p.half_power(fa) - p.half_power(fb - fa);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
        // disjoint intervals are orthogonal at H = 1/2
        let half = HurstParams::new(0.5, 2.0).unwrap();
        assert_eq!(step_inner_product(&half, &h, &k), 0.0);
    }

    #[test]
    fn prefix_indicators_reproduce_covariance() {
        let p = HurstParams::new(0.3, 1.5).unwrap();
        let (s, u) = (t(5, 4), t(13, 4));
        let v = step_inner_product(&p, &StepFunction::up_to(s), &StepFunction::up_to(u));
        assert_abs_diff_eq!(v, fbm_covariance(&p, s.at(1.5), u.at(1.5)).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn canonical_form_merges_and_cancels() {
        let f = StepFunction::from_terms([(t(0, 2), t(1, 2), 1.0), (t(1, 2), t(3, 2), 1.0)]).unwrap();
        assert_eq!(f, StepFunction::indicator(t(0, 2), t(3, 2)).unwrap());
        let g = StepFunction::from_terms([(t(0, 2), t(2, 2), 2.0), (t(0, 2), t(2, 2), -2.0)]).unwrap();
        assert!(g.is_zero());
        assert!(StepFunction::indicator(t(2, 2), t(1, 2)).is_err());
        let (c, n) = f.scale(-3.0).normalize();
        assert_eq!(c, -3.0);
        assert_eq!(n, f);
    }

    #[test]
    fn variation_at_half_is_horizon() {
        let p = HurstParams::new(0.5, 1.0).unwrap();
        for level in 1..6 {
            let v = grid_two_d_variation(&p, 1.0, &dyadic_grid(&p, level)).unwrap();
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        assert!(grid_two_d_variation(&p, 1.0, &[0.0, 0.5, 0.5]).is_err());
        assert!(grid_two_d_variation(&p, 0.5, &[0.0, 0.5]).is_err());
    }

    #[test]
    fn variation_monotone_and_bounded_rough() {
        let p = HurstParams::unit(0.4).unwrap();
        let rho = 1.0 / 0.8;
        let vals: Vec<f64> = (4..=8)
            .map(|l| grid_two_d_variation(&p, rho, &dyadic_grid(&p, l)).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert!(vals[4] < 2.0);
    }

    #[test]
    fn holder_ratio_at_most_one_for_rough() {
        for h in [0.3, 0.4, 0.5] {
            let p = HurstParams::unit(h).unwrap();
            let r = holder_report(&p, &dyadic_grid(&p, 5)).unwrap();
            assert!(r.max_ratio <= 1.0 + 1e-9, "{r:?}");
        }
    }

    fn arb_step() -> impl Strategy<Value = StepFunction> {
        prop::collection::vec((0u64..16, 0u64..16, -2.0f64..2.0), 1..4).prop_map(|v| {
            StepFunction::from_terms(
                v.into_iter()
                    .map(|(a, b, w)| (t(a.min(b), 4), t(a.max(b), 4), w)),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn bilinear_and_symmetric(h1 in arb_step(), h2 in arb_step(), k in arb_step(),
                                  alpha in -3.0f64..3.0, hurst in 0.05f64..0.95) {
            let p = HurstParams::unit(hurst).unwrap();
            let lhs = step_inner_product(&p, &h1.scale(alpha).add(&h2), &k);
            let rhs = alpha * step_inner_product(&p, &h1, &k) + step_inner_product(&p, &h2, &k);
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let sym = step_inner_product(&p, &k, &h1) - step_inner_product(&p, &h1, &k);
            prop_assert!(sym.abs() < 1e-15);
        }

        #[test]
        fn gram_matrix_is_psd(fs in prop::collection::vec(arb_step(), 1..6), hurst in 0.05f64..0.95) {
            let p = HurstParams::unit(hurst).unwrap();
            let n = fs.len();
            let g = nalgebra::DMatrix::from_fn(n, n, |i, j| step_inner_product(&p, &fs[i], &fs[j]));
            let eig = g.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&e| e >= -1e-9));
        }
    }
}
