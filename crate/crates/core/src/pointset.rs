//! Finite unions of half-open rational intervals.

use std::cmp::Ordering;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::num::Rational;

/// Sorted, pairwise disjoint, non-adjacent half-open intervals `[a, b)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PointSet {
    parts: Vec<(Rational, Rational)>,
}

impl PointSet {
    #[must_use]
    pub fn empty() -> Self {
        Self::default()
    }

    /// `[a, b)`; empty when `b <= a`.
    #[must_use]
    pub fn interval(a: Rational, b: Rational) -> Self {
        if a < b {
            Self {
                parts: vec![(a, b)],
            }
        } else {
            Self::empty()
        }
    }

    /// Normalizes arbitrary (possibly overlapping, unsorted) intervals.
    #[must_use]
    pub fn from_intervals(mut v: Vec<(Rational, Rational)>) -> Self {
        v.retain(|(a, b)| a < b);
        v.sort_by(|x, y| x.0.cmp(&y.0));
        Self::from_sorted(v)
    }

    /// Intervals already sorted by left endpoint; overlaps are merged.
    #[must_use]
    pub fn from_sorted(v: Vec<(Rational, Rational)>) -> Self {
        let mut parts: Vec<(Rational, Rational)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            if a >= b {
                continue;
            }
            if let Some(last) = parts.last_mut() {
                debug_assert!(last.0 <= a);
                if a <= last.1 {
                    if b > last.1 {
                        last.1 = b;
                    }
                    continue;
                }
            }
            parts.push((a, b));
        }
        Self { parts }
    }

    #[must_use]
    pub fn components(&self) -> &[(Rational, Rational)] {
        &self.parts
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    #[must_use]
    pub fn measure(&self) -> Rational {
        self.parts
            .iter()
            .fold(Rational::zero(), |acc, (a, b)| acc + (b - a))
    }

    #[must_use]
    pub fn hull(&self) -> Option<(Rational, Rational)> {
        let first = self.parts.first()?;
        let last = self.parts.last()?;
        Some((first.0.clone(), last.1.clone()))
    }

    /// Index of the component containing `x`, if any.
    fn locate(&self, x: &Rational) -> Option<usize> {
        let i = self.parts.partition_point(|(a, _)| a <= x);
        (i > 0 && *x < self.parts[i - 1].1).then(|| i - 1)
    }

    #[must_use]
    pub fn contains_point(&self, x: &Rational) -> bool {
        self.locate(x).is_some()
    }

    #[must_use]
    pub fn union(&self, other: &Self) -> Self {
        let mut all = Vec::with_capacity(self.parts.len() + other.parts.len());
        let (mut i, mut k) = (0, 0);
        while i < self.parts.len() || k < other.parts.len() {
            let take_self = k >= other.parts.len()
                || (i < self.parts.len() && self.parts[i].0 <= other.parts[k].0);
            if take_self {
                all.push(self.parts[i].clone());
                i += 1;
            } else {
                all.push(other.parts[k].clone());
                k += 1;
            }
        }
        Self::from_sorted(all)
    }

    #[must_use]
    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut k) = (0, 0);
        while i < self.parts.len() && k < other.parts.len() {
            let (a0, a1) = &self.parts[i];
            let (b0, b1) = &other.parts[k];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                k += 1;
            }
        }
        Self { parts: out }
    }

    #[must_use]
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let mut k = 0;
        for (a, b) in &self.parts {
            let mut cur = a.clone();
            while k < other.parts.len() && other.parts[k].1 <= cur {
                k += 1;
            }
            let mut kk = k;
            while kk < other.parts.len() && other.parts[kk].0 < *b {
                let (c, d) = &other.parts[kk];
                if *c > cur {
                    out.push((cur.clone(), c.clone()));
                }
                if *d > cur {
                    cur = d.clone();
                }
                if cur >= *b {
                    break;
                }
                kk += 1;
            }
            if cur < *b {
                out.push((cur, b.clone()));
            }
        }
        Self::from_sorted(out)
    }

    /// `other ⊂ self`.
    #[must_use]
    pub fn contains_set(&self, other: &Self) -> bool {
        other.parts.iter().all(|(a, b)| match self.locate(a) {
            Some(i) => *b <= self.parts[i].1,
            None => false,
        })
    }

    #[must_use]
    pub fn intersects(&self, other: &Self) -> bool {
        let (mut i, mut k) = (0, 0);
        while i < self.parts.len() && k < other.parts.len() {
            let (a0, a1) = &self.parts[i];
            let (b0, b1) = &other.parts[k];
            if a0.max(b0) < a1.min(b1) {
                return true;
            }
            match a1.cmp(b1) {
                Ordering::Less => i += 1,
                _ => k += 1,
            }
        }
        false
    }

    #[must_use]
    pub fn clip(&self, lo: &Rational, hi: &Rational) -> Self {
        self.intersection(&Self::interval(lo.clone(), hi.clone()))
    }

    /// `|self ∩ [a, b)|` without materializing the intersection.
    #[must_use]
    pub fn measure_in(&self, a: &Rational, b: &Rational) -> Rational {
        let mut total = Rational::zero();
        let start = self.parts.partition_point(|(_, hi)| hi <= a);
        for (lo, hi) in &self.parts[start..] {
            if lo >= b {
                break;
            }
            let l = lo.max(a);
            let h = hi.min(b);
            if l < h {
                total += h - l;
            }
        }
        total
    }

    /// Image under `x ↦ s·x + t` with `s > 0`.
    #[must_use]
    pub fn affine(&self, s: &Rational, t: &Rational) -> Self {
        debug_assert!(*s > Rational::zero());
        Self {
            parts: self
                .parts
                .iter()
                .map(|(a, b)| (a * s + t, b * s + t))
                .collect(),
        }
    }
}

impl Serialize for PointSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        crate::json::rational_pair_vec::serialize(&self.parts, s)
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        crate::json::rational_pair_vec::deserialize(d).map(Self::from_intervals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat};

    fn ps(v: &[(i64, i64)]) -> PointSet {
        PointSet::from_intervals(v.iter().map(|&(a, b)| (int(a), int(b))).collect())
    }

    #[test]
    fn normalization_merges_touching() {
        let s = ps(&[(3, 4), (0, 1), (1, 2), (5, 5)]);
        assert_eq!(s.components(), &[(int(0), int(2)), (int(3), int(4))]);
        assert_eq!(s.measure(), int(3));
    }

    #[test]
    fn boolean_ops() {
        let a = ps(&[(0, 4), (6, 8)]);
        let b = ps(&[(2, 7)]);
        assert_eq!(a.intersection(&b), ps(&[(2, 4), (6, 7)]));
        assert_eq!(a.union(&b), ps(&[(0, 8)]));
        assert_eq!(a.difference(&b), ps(&[(0, 2), (7, 8)]));
        assert_eq!(b.difference(&a), ps(&[(4, 6)]));
        assert!(a.contains_set(&ps(&[(1, 3), (6, 7)])));
        assert!(!a.contains_set(&b));
        assert!(a.intersects(&b));
        assert!(!ps(&[(0, 1)]).intersects(&ps(&[(1, 2)])));
        assert_eq!(a.measure_in(&int(3), &int(7)), int(2));
        assert!(a.contains_point(&rat(7, 2)));
        assert!(!a.contains_point(&int(4)));
    }

    #[test]
    fn difference_with_many_holes() {
        let a = ps(&[(0, 10)]);
        let b = ps(&[(1, 2), (3, 4), (9, 12)]);
        assert_eq!(a.difference(&b), ps(&[(0, 1), (2, 3), (4, 9)]));
    }
}
