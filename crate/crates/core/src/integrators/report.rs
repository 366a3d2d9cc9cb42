//! Per-level convergence tables.

use std::fmt::Write as _;

use serde::Serialize;

/// Which column the decay rate is fitted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitTarget {
    /// Successive differences (Cauchy criterion).
    Differences,
    /// The values themselves (residuals that should vanish).
    Values,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub level: u32,
    pub term_count: usize,
    pub value_l2: f64,
    pub diff_prev_l2: f64,
    pub rate_log2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub kind: String,
    pub fit: FitTarget,
    pub tol: f64,
    pub rows: Vec<ReportRow>,
    pub pass: bool,
    pub verdict: String,
    pub notes: Vec<String>,
}

pub const CSV_HEADER: &str = "level,term_count,value_l2,diff_prev_l2,rate_log2";

/// Least-squares slope of `log2(y)` against `x`; NaN with fewer than three
/// usable points or any nonpositive `y`.
pub fn fit_log2_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 3 || points.iter().any(|&(_, y)| !(y > 0.0)) {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let ly = y.log2();
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

impl ConvergenceReport {
    pub fn new(kind: impl Into<String>, fit: FitTarget, tol: f64) -> ConvergenceReport {
        ConvergenceReport {
            kind: kind.into(),
            fit,
            tol,
            rows: Vec::new(),
            pass: false,
            verdict: "pending".into(),
            notes: Vec::new(),
        }
    }

    /// Appends a row; the rate column is refitted over all rows so far.
    pub fn push(&mut self, level: u32, term_count: usize, value_l2: f64, diff_prev_l2: f64) {
        self.rows.push(ReportRow { level, term_count, value_l2, diff_prev_l2, rate_log2: f64::NAN });
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| (r.level as f64, self.fit_column(r)))
            .filter(|p| !p.1.is_nan())
            .collect();
        self.rows.last_mut().unwrap().rate_log2 = fit_log2_slope(&pts);
    }

    fn fit_column(&self, r: &ReportRow) -> f64 {
        match self.fit {
            FitTarget::Differences => r.diff_prev_l2,
            FitTarget::Values => r.value_l2,
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn fitted_rate(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.rate_log2)
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value_l2).collect()
    }

    pub fn last_diff(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.diff_prev_l2)
    }

    /// Values strictly decreasing from row to row.
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].value_l2 < w[0].value_l2)
    }

    /// Values all below `eps`.
    pub fn identically_small(&self, eps: f64) -> bool {
        self.rows.iter().all(|r| r.value_l2.abs() <= eps)
    }

    pub(crate) fn conclude(&mut self, pass: bool, verdict: impl Into<String>) {
        self.pass = pass;
        self.verdict = verdict.into();
    }

    /// Pass iff the last Cauchy difference is below `tol`.
    pub(crate) fn conclude_cauchy(&mut self) {
        let d = self.last_diff();
        if d < self.tol {
            self.conclude(true, "converged");
        } else {
            self.conclude(false, format!("not converged: last difference {d:e} >= tol {:e}", self.tol));
        }
    }

    /// Pass iff residuals vanish identically or strictly decrease.
    pub(crate) fn conclude_residual(&mut self) {
        if self.identically_small(1e-12) {
            self.conclude(true, "vanishes identically");
        } else if self.strictly_decreasing() {
            self.conclude(true, "strictly decreasing");
        } else {
            self.conclude(false, "residuals not strictly decreasing");
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(s, "{},{},{:e},{:e},{}", r.level, r.term_count, r.value_l2, r.diff_prev_l2, r.rate_log2).unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_geometric_sequence() {
        let pts: Vec<_> = (4..10).map(|l| (l as f64, 3.0 * 2f64.powf(-0.5 * l as f64))).collect();
        assert!((fit_log2_slope(&pts) + 0.5).abs() < 1e-12);
        assert!(fit_log2_slope(&pts[..2]).is_nan());
        assert!(fit_log2_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_nan());
    }

    #[test]
    fn csv_shape() {
        let mut r = ConvergenceReport::new("t", FitTarget::Values, 1e-3);
        r.push(4, 10, 0.5, f64::NAN);
        r.push(5, 20, 0.25, 0.25);
        r.push(6, 40, 0.125, 0.125);
        let csv = r.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with("NaN,NaN"));
        assert!((r.fitted_rate() + 1.0).abs() < 1e-12);
        r.conclude_residual();
        assert!(r.pass);
    }
}
