//! Non-crossing pairings of `{1, ..., r}`.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, RwLock};

use crate::error::{Error, Result};

/// Largest ground set enumerated by default (Catalan(12) = 208012 pairings).
pub const DEFAULT_MAX_POINTS: usize = 24;

/// A perfect matching of `{1..r}` given as pairs `(p, q)` with `p < q`,
/// sorted by `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pairing {
    pairs: Vec<(u8, u8)>,
}

impl Pairing {
    /// Builds a pairing from arbitrary pairs, normalizing orientation and order.
    pub fn new(pairs: impl IntoIterator<Item = (u8, u8)>) -> Pairing {
        let mut pairs: Vec<(u8, u8)> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        Pairing { pairs }
    }

    pub fn pairs(&self) -> &[(u8, u8)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True if two pairs interleave as `p1 < p2 < q1 < q2`.
    pub fn is_crossing(&self) -> bool {
        self.pairs.iter().any(|&(p1, q1)| {
            self.pairs
                .iter()
                .any(|&(p2, q2)| p1 < p2 && p2 < q1 && q1 < q2)
        })
    }

    /// Product of `weight(p, q)` over the pairs (1-based indices).
    pub fn product(&self, mut weight: impl FnMut(usize, usize) -> f64) -> f64 {
        self.pairs
            .iter()
            .map(|&(p, q)| weight(p as usize, q as usize))
            .product()
    }
}

/// Catalan number by the convolution recurrence.
pub fn catalan(m: usize) -> u64 {
    let mut c = vec![0u64; m + 1];
    c[0] = 1;
    for n in 1..=m {
        c[n] = (0..n).map(|k| c[k] * c[n - 1 - k]).sum();
    }
    c[m]
}

/// All non-crossing pairings of `{1..r}` in lexicographic order of their
/// sorted pair lists, with the default size cap.
pub fn enumerate_nc_pairings(r: usize) -> Result<Vec<Pairing>> {
    enumerate_nc_pairings_capped(r, DEFAULT_MAX_POINTS)
}

pub fn enumerate_nc_pairings_capped(r: usize, max_points: usize) -> Result<Vec<Pairing>> {
    if r % 2 == 1 {
        return Err(Error::Domain(format!("cannot pair an odd number of points ({r})")));
    }
    if r > max_points {
        return Err(Error::Resource(format!(
            "{r} points exceeds the pairing cap of {max_points}"
        )));
    }
    Ok(build(1, r as u8)
        .into_iter()
        .map(|pairs| Pairing { pairs })
        .collect())
}

// Pairings of the consecutive block lo..=hi. Pairing `lo` with an even-offset
// partner `k` splits the block into the enclosed part and the remainder; the
// sorted pair list is then [(lo,k), inner.., outer..], so nesting the loops
// inner-major keeps lexicographic order.
fn build(lo: u8, hi: u8) -> Vec<Vec<(u8, u8)>> {
    if lo > hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut k = lo + 1;
    while k <= hi {
        let inner = build(lo + 1, k - 1);
        let outer = build(k + 1, hi);
        for a in &inner {
            for b in &outer {
                let mut p = Vec::with_capacity(1 + a.len() + b.len());
                p.push((lo, k));
                p.extend_from_slice(a);
                p.extend_from_slice(b);
                out.push(p);
            }
        }
        k += 2;
    }
    out
}

type FlatPairings = Arc<Vec<(u8, u8)>>;

static CACHE: LazyLock<RwLock<HashMap<usize, FlatPairings>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// Flattened, 0-based pairings of `{0..r}` (`r/2` pairs per pairing), cached.
pub(crate) fn flat_pairings(r: usize, max_points: usize) -> Result<FlatPairings> {
    if let Some(p) = CACHE.read().unwrap().get(&r) {
        return Ok(p.clone());
    }
    let list = enumerate_nc_pairings_capped(r, max_points)?;
    let flat: Vec<(u8, u8)> = list
        .iter()
        .flat_map(|p| p.pairs.iter().map(|&(a, b)| (a - 1, b - 1)))
        .collect();
    let flat = Arc::new(flat);
    CACHE.write().unwrap().insert(r, flat.clone());
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exhaustive oracle: every perfect matching, crossing ones filtered out.
    fn brute_force(r: usize) -> Vec<Pairing> {
        fn rec(rest: Vec<u8>, acc: Vec<(u8, u8)>, out: &mut Vec<Pairing>) {
            if rest.is_empty() {
                out.push(Pairing::new(acc));
                return;
            }
            let first = rest[0];
            for j in 1..rest.len() {
                let mut next = rest.clone();
                let partner = next.remove(j);
                next.remove(0);
                let mut acc2 = acc.clone();
                acc2.push((first, partner));
                rec(next, acc2, out);
            }
        }
        let mut all = Vec::new();
        rec((1..=r as u8).collect(), Vec::new(), &mut all);
        let mut nc: Vec<Pairing> = all.into_iter().filter(|p| !p.is_crossing()).collect();
        nc.sort();
        nc
    }

    #[test]
    fn two_points_single_pairing() {
        let p = enumerate_nc_pairings(2).unwrap();
        assert_eq!(p, vec![Pairing::new([(1, 2)])]);
    }

    #[test]
    fn four_points_excludes_crossing() {
        let p = enumerate_nc_pairings(4).unwrap();
        assert_eq!(
            p,
            vec![Pairing::new([(1, 2), (3, 4)]), Pairing::new([(1, 4), (2, 3)])]
        );
        assert!(Pairing::new([(1, 3), (2, 4)]).is_crossing());
    }

    #[test]
    fn matches_filtered_brute_force_in_order() {
        for r in (2..=12).step_by(2) {
            let fast = enumerate_nc_pairings(r).unwrap();
            assert_eq!(fast, brute_force(r), "r = {r}");
        }
        assert_eq!(enumerate_nc_pairings(8).unwrap().len(), 14);
    }

    #[test]
    fn counts_are_catalan() {
        for m in 1..=8 {
            let p = enumerate_nc_pairings(2 * m).unwrap();
            assert_eq!(p.len() as u64, catalan(m));
            assert!(p.iter().all(|x| !x.is_crossing()));
            let mut dedup = p.clone();
            dedup.dedup();
            assert_eq!(dedup.len(), p.len());
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(enumerate_nc_pairings(3), Err(Error::Domain(_))));
        assert!(matches!(enumerate_nc_pairings(26), Err(Error::Resource(_))));
        assert!(enumerate_nc_pairings(0).unwrap().len() == 1);
    }
}
