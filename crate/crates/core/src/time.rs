//! Exact dyadic time stamps.
//!
//! Times are stored as integer ticks of `T / 2^MAX_DEPTH`, so every point of a
//! dyadic partition up to level `MAX_DEPTH` is represented exactly and interval
//! endpoints compare without rounding.

use std::fmt;

use crate::error::{domain, Result};

/// Finest dyadic depth representable.
pub const MAX_DEPTH: u32 = 40;
const TICKS: u64 = 1 << MAX_DEPTH;

/// A point of `[0, T]`, expressed as a fraction of the horizon.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(u64);

impl Time {
    pub const ZERO: Time = Time(0);
    pub const HORIZON: Time = Time(TICKS);

    /// The dyadic point `i / 2^level` of the unit horizon.
    pub fn dyadic(i: u64, level: u32) -> Result<Time> {
        if level > MAX_DEPTH {
            return domain(format!("dyadic level {level} exceeds {MAX_DEPTH}"));
        }
        if i > (1u64 << level) {
            return domain(format!("dyadic index {i} beyond level {level} grid"));
        }
        Ok(Time(i << (MAX_DEPTH - level)))
    }

    pub fn from_ticks(ticks: u64) -> Result<Time> {
        if ticks > TICKS {
            return domain("time beyond horizon");
        }
        Ok(Time(ticks))
    }

    pub fn ticks(self) -> u64 {
        self.0
    }

    /// Nearest representable time to `frac` in `[0,1]`, snapped to `2^-depth`.
    /// Returns the snapped time and whether snapping moved the value.
    pub fn snap(frac: f64, depth: u32) -> Result<(Time, bool)> {
        if !(0.0..=1.0).contains(&frac) || frac.is_nan() {
            return domain(format!("time fraction {frac} outside [0,1]"));
        }
        let depth = depth.min(MAX_DEPTH);
        let scale = (1u64 << depth) as f64;
        let i = (frac * scale).round();
        let moved = (i / scale - frac).abs() > 1e-15;
        Ok((Time((i as u64) << (MAX_DEPTH - depth)), moved))
    }

    /// Fraction of the horizon in `[0,1]`.
    pub fn frac(self) -> f64 {
        self.0 as f64 / TICKS as f64
    }

    /// Absolute time for horizon `horizon`.
    pub fn at(self, horizon: f64) -> f64 {
        self.frac() * horizon
    }

    /// Whether this time lies on the level-`level` dyadic grid.
    pub fn is_aligned(self, level: u32) -> bool {
        level >= MAX_DEPTH || self.0 % (1u64 << (MAX_DEPTH - level)) == 0
    }

    /// Index on the level-`level` grid, if aligned.
    pub fn grid_index(self, level: u32) -> Option<u64> {
        self.is_aligned(level)
            .then(|| self.0 >> (MAX_DEPTH - level.min(MAX_DEPTH)))
    }

    /// Midpoint, rounded down to the tick grid.
    pub fn midpoint(self, other: Time) -> Time {
        Time((self.0 + other.0) / 2)
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.frac())
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.frac())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_points_are_exact() {
        let a = Time::dyadic(1, 1).unwrap();
        let b = Time::dyadic(512, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frac(), 0.5);
        assert!(a.is_aligned(1));
        assert!(!Time::dyadic(1, 3).unwrap().is_aligned(2));
        assert_eq!(Time::dyadic(3, 4).unwrap().grid_index(4), Some(3));
    }

    #[test]
    fn snapping_reports_movement() {
        let (t, moved) = Time::snap(0.25, 20).unwrap();
        assert_eq!(t, Time::dyadic(1, 2).unwrap());
        assert!(!moved);
        let (_, moved) = Time::snap(0.1, 20).unwrap();
        assert!(moved);
        assert!(Time::snap(1.5, 20).is_err());
    }
}
