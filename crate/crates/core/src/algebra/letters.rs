//! Hash-consed letter labels and words.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, RwLock};

use smallvec::SmallVec;

use crate::covariance::StepFunction;
use crate::time::Time;

/// Interned step function with leading weight 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LetterId(u32);

#[derive(Default)]
struct Interner {
    ids: HashMap<Arc<StepFunction>, LetterId>,
    labels: Vec<Arc<StepFunction>>,
}

static INTERNER: LazyLock<RwLock<Interner>> = LazyLock::new(|| RwLock::new(Interner::default()));

impl LetterId {
    /// Interns a normalized, nonzero label.
    fn intern(label: StepFunction) -> LetterId {
        debug_assert!(!label.is_zero());
        if let Some(&id) = INTERNER.read().unwrap().ids.get(&label) {
            return id;
        }
        let mut guard = INTERNER.write().unwrap();
        if let Some(&id) = guard.ids.get(&label) {
            return id;
        }
        let id = LetterId(u32::try_from(guard.labels.len()).expect("letter table overflow"));
        let label = Arc::new(label);
        guard.labels.push(label.clone());
        guard.ids.insert(label, id);
        id
    }

    /// Splits `h = c * label` with normalized `label`; `None` for `h = 0`.
    pub fn from_step(h: &StepFunction) -> Option<(f64, LetterId)> {
        if h.is_zero() {
            return None;
        }
        let (c, n) = h.normalize();
        Some((c, LetterId::intern(n)))
    }

    /// Label of `X_t`; `None` at `t = 0`.
    pub fn atom(t: Time) -> Option<LetterId> {
        LetterId::from_step(&StepFunction::up_to(t)).map(|(_, id)| id)
    }

    pub fn label(self) -> Arc<StepFunction> {
        INTERNER.read().unwrap().labels[self.0 as usize].clone()
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for LetterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = self.label();
        match label.pieces() {
            [p] if p.weight == 1.0 && p.start == Time::ZERO => write!(f, "X({})", p.end),
            [p] if p.weight == 1.0 => write!(f, "X({},{})", p.start, p.end),
            _ => write!(f, "X(h{})", self.0),
        }
    }
}

/// Ordered product of letters; the empty word is the unit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(SmallVec<[LetterId; 8]>);

impl Word {
    pub fn unit() -> Word {
        Word::default()
    }

    pub fn from_letters(letters: impl IntoIterator<Item = LetterId>) -> Word {
        Word(letters.into_iter().collect())
    }

    pub fn letters(&self) -> &[LetterId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn slice(&self, lo: usize, hi: usize) -> Word {
        Word(SmallVec::from_slice(&self.0[lo..hi]))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_canonical() {
        let t = Time::dyadic(3, 3).unwrap();
        let a = LetterId::atom(t).unwrap();
        let (c, b) = LetterId::from_step(&StepFunction::up_to(t).scale(-2.5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(c, -2.5);
        assert!(LetterId::atom(Time::ZERO).is_none());
        assert_eq!(*a.label(), StepFunction::up_to(t));
    }

    #[test]
    fn word_ops() {
        let a = LetterId::atom(Time::dyadic(1, 2).unwrap()).unwrap();
        let b = LetterId::atom(Time::dyadic(2, 2).unwrap()).unwrap();
        let w = Word::from_letters([a, b, b]);
        assert_eq!(w.reversed().letters(), &[b, b, a]);
        assert_eq!(w.concat(&Word::unit()), w);
        assert_eq!(w.slice(1, 3), Word::from_letters([b, b]));
        assert_eq!(Word::unit().to_string(), "1");
        assert_eq!(Word::from_letters([a]).to_string(), "X(0.25)");
    }
}
