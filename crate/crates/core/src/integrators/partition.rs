use crate::error::{domain, Result};
use crate::time::{Time, MAX_DEPTH};

/// Strictly increasing times `s = r_0 < ... < r_n = t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    points: Vec<Time>,
}

impl Partition {
    pub fn new(points: Vec<Time>) -> Result<Partition> {
        if points.len() < 2 {
            return domain("partition needs at least two points");
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return domain("partition points must be strictly increasing");
        }
        Ok(Partition { points })
    }

    /// Level-`level` dyadic points of the horizon lying in `[s,t]`.
    pub fn dyadic(s: Time, t: Time, level: u32) -> Result<Partition> {
        if level > MAX_DEPTH {
            return domain(format!("level {level} exceeds the time resolution {MAX_DEPTH}"));
        }
        let (Some(a), Some(b)) = (s.grid_index(level), t.grid_index(level)) else {
            return domain(format!("[{s}, {t}] is not aligned to the level-{level} dyadic grid"));
        };
        if a >= b {
            return domain(format!("empty interval [{s}, {t}]"));
        }
        Partition::new((a..=b).map(|i| Time::dyadic(i, level)).collect::<Result<_>>()?)
    }

    pub fn points(&self) -> &[Time] {
        &self.points
    }

    pub fn cells(&self) -> impl Iterator<Item = (Time, Time)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> Time {
        self.points[0]
    }

    pub fn end(&self) -> Time {
        *self.points.last().unwrap()
    }

    /// Largest spacing, as a fraction of the horizon.
    pub fn mesh(&self) -> f64 {
        self.cells().map(|(a, b)| b.frac() - a.frac()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_partitions() {
        let p = Partition::dyadic(Time::ZERO, Time::HORIZON, 3).unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(p.mesh(), 0.125);
        let q = Partition::dyadic(Time::dyadic(1, 2).unwrap(), Time::dyadic(3, 2).unwrap(), 4).unwrap();
        assert_eq!(q.len(), 8);
        assert!(Partition::dyadic(Time::dyadic(1, 3).unwrap(), Time::HORIZON, 2).is_err());
        assert!(Partition::new(vec![Time::HORIZON, Time::ZERO]).is_err());
    }
}
