//! Monte Carlo oracle: Hermitian matrices with fractional Brownian entries.
//!
//! As the dimension grows, normalized traces of words in the sampled
//! matrices approach the Wick-formula traces of the non-commutative process.
//! The oracle shares no code with the Wick engine beyond the covariance
//! kernel, so agreement is an independent check.

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::algebra::{LetterId, TraceEngine, Word};
use crate::covariance::{fbm_covariance, HurstParams};
use crate::error::{domain, Result};
use crate::time::Time;

type C64 = Complex<f64>;

/// One `d×d` Hermitian path sampled on a time grid.
#[derive(Clone, Debug)]
pub struct MatrixPathSample {
    dim: usize,
    times: Vec<Time>,
    matrices: Vec<DMatrix<C64>>,
    seed: u64,
    index: u64,
}

impl MatrixPathSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[Time] {
        &self.times
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Position in the sample stream of `seed`.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Matrix at grid time `t`, if `t` is on the grid.
    pub fn at(&self, t: Time) -> Option<&DMatrix<C64>> {
        self.times.iter().position(|&u| u == t).map(|i| &self.matrices[i])
    }

    pub fn matrices(&self) -> &[DMatrix<C64>] {
        &self.matrices
    }

    /// `max |A − A^†|` over the grid.
    pub fn hermitian_defect(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Real part of `tr(A_{t_1} ⋯ A_{t_r}) / d`; every time must be on the grid.
    pub fn normalized_word_trace(&self, word: &[Time]) -> Result<f64> {
        let mut mats = Vec::with_capacity(word.len());
        for &t in word {
            match self.at(t) {
                Some(m) => mats.push(m),
                None => return domain(format!("time {t} is not on the sampled grid")),
            }
        }
        let d = self.dim as f64;
        let Some((last, init)) = mats.split_last() else {
            return Ok(1.0);
        };
        let mut prod: Option<DMatrix<C64>> = None;
        for m in init {
            prod = Some(match prod {
                None => (*m).clone(),
                Some(p) => p * *m,
            });
        }
        let tr = match prod {
            None => last.trace(),
            // tr(PB) without forming PB.
            Some(p) => {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        acc += p[(i, j)] * last[(j, i)];
                    }
                }
                acc
            }
        };
        Ok(tr.re / d)
    }
}

/// Cholesky factor of `[R_H(t_i, t_j)]` over the nonzero grid times.
fn covariance_factor(p: &HurstParams, times: &[f64]) -> Result<DMatrix<f64>> {
    let m = times.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = fbm_covariance(p, times[i], times[j])?;
        }
    }
    match gram.cholesky() {
        Some(c) => Ok(c.l()),
        None => domain("covariance matrix of the time grid is not positive definite"),
    }
}

fn validate_grid(d: usize, times: &[Time]) -> Result<()> {
    if d == 0 {
        return domain("matrix dimension must be at least 1");
    }
    if times.is_empty() {
        return domain("time grid is empty");
    }
    for (i, a) in times.iter().enumerate() {
        if times[..i].contains(a) {
            return domain(format!("duplicate time {a} makes the covariance degenerate"));
        }
    }
    Ok(())
}

fn sample_with_factor(
    d: usize,
    times: &[Time],
    live: &[usize],
    factor: &DMatrix<f64>,
    seed: u64,
    index: u64,
) -> MatrixPathSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let m = live.len();
    let mut matrices = vec![DMatrix::<C64>::zeros(d, d); times.len()];
    let mut z = vec![0.0; m];
    let mut path = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        (0..m).map(|i| (0..=i).map(|k| factor[(i, k)] * z[k]).sum()).collect()
    };
    let diag_scale = 1.0 / (d as f64).sqrt();
    let off_scale = 1.0 / (2.0 * d as f64).sqrt();
    for a in 0..d {
        let x = path(&mut rng);
        for (slot, &g) in live.iter().enumerate() {
            matrices[g][(a, a)] = C64::new(x[slot] * diag_scale, 0.0);
        }
        for b in a + 1..d {
            let x = path(&mut rng);
            let y = path(&mut rng);
            for (slot, &g) in live.iter().enumerate() {
                let z = C64::new(x[slot] * off_scale, y[slot] * off_scale);
                matrices[g][(a, b)] = z;
                matrices[g][(b, a)] = z.conj();
            }
        }
    }
    MatrixPathSample { dim: d, times: times.to_vec(), matrices, seed, index }
}

struct Sampler {
    live: Vec<usize>,
    factor: DMatrix<f64>,
}

fn sampler(p: &HurstParams, times: &[Time]) -> Result<Sampler> {
    // Time zero carries the zero matrix and would make the Gram singular.
    let live: Vec<usize> = (0..times.len()).filter(|&i| times[i] != Time::ZERO).collect();
    let real: Vec<f64> = live.iter().map(|&i| times[i].at(p.horizon())).collect();
    let factor = if live.is_empty() { DMatrix::zeros(0, 0) } else { covariance_factor(p, &real)? };
    Ok(Sampler { live, factor })
}

/// Sample `0` of the stream for `seed`.
///
/// Off-diagonal entries are `(x + iy)/√(2d)` and diagonal entries `x/√d`,
/// with `x, y` independent standard fBm paths drawn through a Cholesky factor
/// of the grid covariance. Deterministic per `seed`.
pub fn sample_hermitian_fbm(d: usize, p: &HurstParams, times: &[Time], seed: u64) -> Result<MatrixPathSample> {
    validate_grid(d, times)?;
    let s = sampler(p, times)?;
    Ok(sample_with_factor(d, times, &s.live, &s.factor, seed, 0))
}

/// `count` independent samples; sample `i` uses ChaCha8 stream `i` of `seed`,
/// so the result does not depend on scheduling.
pub fn sample_paths(
    d: usize,
    p: &HurstParams,
    times: &[Time],
    seed: u64,
    count: usize,
) -> Result<Vec<MatrixPathSample>> {
    validate_grid(d, times)?;
    let s = sampler(p, times)?;
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| sample_with_factor(d, times, &s.live, &s.factor, seed, i))
        .collect())
}

/// Sample mean and standard error of a normalized word trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalTrace {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Mean of `tr(A_{t_1} ⋯ A_{t_r}) / d` over `samples`.
pub fn empirical_word_trace(samples: &[MatrixPathSample], word: &[Time]) -> Result<EmpiricalTrace> {
    if samples.is_empty() {
        return domain("no samples");
    }
    let values = samples
        .par_iter()
        .map(|s| s.normalized_word_trace(word))
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        f64::INFINITY
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok(EmpiricalTrace { mean, stderr, samples: values.len() })
}

/// Heuristic finite-dimension bias allowance `c / d²`.
pub fn bias_budget(d: usize, c: f64) -> f64 {
    c / (d as f64).powi(2)
}

/// Empirical trace against the Wick value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossCheck {
    pub empirical: EmpiricalTrace,
    pub wick: f64,
    /// `max(3·stderr, budget)`.
    pub allowance: f64,
    pub pass: bool,
}

/// Word of atoms `X_{t_1} ⋯ X_{t_r}`; zero atoms make the whole word vanish.
pub fn atom_word(word: &[Time]) -> Option<Word> {
    let letters: Option<Vec<LetterId>> = word.iter().map(|&t| LetterId::atom(t)).collect();
    letters.map(Word::from_letters)
}

/// Passes iff `|mean − wick| ≤ max(3·stderr, budget)`.
pub fn cross_check(
    engine: &TraceEngine,
    samples: &[MatrixPathSample],
    word: &[Time],
    budget: f64,
) -> Result<CrossCheck> {
    let empirical = empirical_word_trace(samples, word)?;
    let wick = match atom_word(word) {
        Some(w) => engine.word_trace(&w)?,
        None => 0.0,
    };
    let allowance = (3.0 * empirical.stderr).max(budget);
    let pass = (empirical.mean - wick).abs() <= allowance;
    Ok(CrossCheck { empirical, wick, allowance, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(x: f64) -> Time {
        Time::snap(x, 20).unwrap().0
    }

    #[test]
    fn hermitian_exactly() {
        let p = HurstParams::unit(0.4).unwrap();
        let s = sample_hermitian_fbm(7, &p, &[t(0.25), t(0.5), t(1.0)], 3).unwrap();
        assert_eq!(s.hermitian_defect(), 0.0);
    }

    #[test]
    fn seed_determinism() {
        let p = HurstParams::unit(0.7).unwrap();
        let grid = [t(0.5), t(1.0)];
        let a = sample_paths(5, &p, &grid, 11, 4).unwrap();
        let b = sample_paths(5, &p, &grid, 11, 4).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.matrices(), y.matrices());
        }
        let c = sample_paths(5, &p, &grid, 12, 1).unwrap();
        assert_ne!(a[0].matrices(), c[0].matrices());
        assert_eq!(sample_hermitian_fbm(5, &p, &grid, 11).unwrap().matrices(), a[0].matrices());
    }

    #[test]
    fn duplicate_times_rejected() {
        let p = HurstParams::unit(0.5).unwrap();
        assert!(sample_hermitian_fbm(3, &p, &[t(0.5), t(0.5)], 1).is_err());
        assert!(sample_hermitian_fbm(0, &p, &[t(0.5)], 1).is_err());
    }

    #[test]
    fn zero_time_is_zero_matrix() {
        let p = HurstParams::unit(0.5).unwrap();
        let s = sample_hermitian_fbm(4, &p, &[Time::ZERO, t(1.0)], 1).unwrap();
        assert!(s.at(Time::ZERO).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn scalar_variance_matches_fbm() {
        let p = HurstParams::unit(0.5).unwrap();
        let grid = [t(0.25), t(0.75)];
        let samples = sample_paths(1, &p, &grid, 5, 10_000).unwrap();
        for &u in &grid {
            let est = empirical_word_trace(&samples, &[u, u]).unwrap();
            // Variance of X_u^2 is 2u^2 for a Gaussian, so the stderr is known.
            let sigma = (2.0f64).sqrt() * u.frac() / 100.0;
            assert!((est.mean - u.frac()).abs() <= 3.0 * sigma, "{est:?}");
        }
    }

    #[test]
    fn odd_word_centered() {
        let p = HurstParams::unit(0.6).unwrap();
        let samples = sample_paths(16, &p, &[t(1.0)], 9, 400).unwrap();
        let e = TraceEngine::new(p);
        let c = cross_check(&e, &samples, &[t(1.0); 3], 0.0).unwrap();
        assert_eq!(c.wick, 0.0);
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn square_trace_near_one() {
        let p = HurstParams::unit(0.7).unwrap();
        let samples = sample_paths(64, &p, &[t(1.0)], 2, 1000).unwrap();
        let est = empirical_word_trace(&samples, &[t(1.0), t(1.0)]).unwrap();
        assert!((est.mean - 1.0).abs() < 0.05, "{est:?}");
    }

    #[test]
    fn covariance_word() {
        let p = HurstParams::unit(0.4).unwrap();
        let grid = [t(0.5), t(1.0)];
        let samples = sample_paths(32, &p, &grid, 4, 500).unwrap();
        let e = TraceEngine::new(p);
        let c = cross_check(&e, &samples, &grid, 0.05).unwrap();
        assert!((c.wick - fbm_covariance(&p, 0.5, 1.0).unwrap()).abs() < 1e-15);
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn off_grid_time_rejected() {
        let p = HurstParams::unit(0.4).unwrap();
        let s = sample_hermitian_fbm(2, &p, &[t(1.0)], 1).unwrap();
        assert!(s.normalized_word_trace(&[t(0.5)]).is_err());
        assert_eq!(s.normalized_word_trace(&[]).unwrap(), 1.0);
    }
}
