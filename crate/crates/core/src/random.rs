//! Seeded random inputs for the identity checks.
//!
//! Letters are atoms `X_t` or increments `X_{a,b}` with endpoints on the
//! level-3 dyadic grid, so every input stays exactly representable.

use rand::Rng;

use crate::algebra::{Element, Tensor2};
use crate::covariance::StepFunction;
use crate::malliavin::StepBiprocess;
use crate::time::Time;

const GRID_LEVEL: u32 = 3;
const GRID: u64 = 1 << GRID_LEVEL;

fn grid(i: u64) -> Time {
    Time::dyadic(i, GRID_LEVEL).expect("grid point within horizon")
}

fn interval<R: Rng>(rng: &mut R) -> (Time, Time) {
    let a = rng.gen_range(0..GRID);
    let b = rng.gen_range(a + 1..=GRID);
    (grid(a), grid(b))
}

/// A single letter: an atom or an increment.
pub fn letter<R: Rng>(rng: &mut R) -> Element {
    if rng.gen_bool(0.5) {
        Element::atom(grid(rng.gen_range(1..=GRID)))
    } else {
        let (a, b) = interval(rng);
        Element::increment(a, b).expect("nonempty interval")
    }
}

/// Sum of one to three words of length at most `max_deg`, coefficients in `[-2,2)`.
pub fn element<R: Rng>(rng: &mut R, max_deg: usize) -> Element {
    let mut e = Element::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let len = rng.gen_range(0..=max_deg);
        let w = (0..len).fold(Element::one(), |acc, _| &acc * &letter(rng));
        e = &e + &w.scale(rng.gen_range(-2.0..2.0));
    }
    e
}

/// Step function with one or two weighted indicators.
pub fn step<R: Rng>(rng: &mut R) -> StepFunction {
    let terms: Vec<(Time, Time, f64)> = (0..rng.gen_range(1..=2))
        .map(|_| {
            let (a, b) = interval(rng);
            (a, b, rng.gen_range(-2.0..2.0))
        })
        .collect();
    StepFunction::from_terms(terms).expect("valid intervals")
}

/// `sum_k (A_k ⊗ B_k) h_k` with one or two terms, `deg A_k + deg B_k <= max_deg`.
pub fn biprocess<R: Rng>(rng: &mut R, max_deg: usize) -> StepBiprocess {
    let mut bp = StepBiprocess::zero();
    for _ in 0..rng.gen_range(1..=2) {
        let da = rng.gen_range(0..=max_deg);
        let a = element(rng, da);
        let b = element(rng, max_deg - da);
        bp.push(&Tensor2::product([&a, &b]), &step(rng));
    }
    bp
}
