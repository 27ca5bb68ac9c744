//! Dyadic intervals, shifted grids and finite collections.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{floor, int, is_dyadic, pow2, shl, Quad2, Rational};
use crate::pointset::PointSet;
use crate::step::StepFunction;

/// `Δ_j^m = [(j−1)·2^{−m}, j·2^{−m})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub m: i32,
    pub j: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    IInsideJ,
    JInsideI,
    Disjoint,
}

/// `⌈j / 2^s⌉` for `s ≥ 0`.
fn ceil_shift(j: i64, s: u32) -> i64 {
    if s >= 64 {
        return i64::from(j > 0);
    }
    let d = 1i128 << s;
    ((i128::from(j) + d - 1) >> s) as i64
}

impl DyadicInterval {
    #[must_use]
    pub const fn new(m: i32, j: i64) -> Self {
        Self { m, j }
    }

    #[must_use]
    pub fn left(&self) -> Rational {
        shl(&int(self.j - 1), -i64::from(self.m))
    }

    #[must_use]
    pub fn right(&self) -> Rational {
        shl(&int(self.j), -i64::from(self.m))
    }

    #[must_use]
    pub fn length(&self) -> Rational {
        pow2(-i64::from(self.m))
    }

    #[must_use]
    pub fn parent(&self) -> Self {
        Self::new(self.m - 1, ceil_shift(self.j, 1))
    }

    #[must_use]
    pub fn children(&self) -> (Self, Self) {
        (
            Self::new(self.m + 1, 2 * self.j - 1),
            Self::new(self.m + 1, 2 * self.j),
        )
    }

    /// The dyadic interval of scale `m2 ≤ m` containing `self`.
    #[must_use]
    pub fn ancestor(&self, m2: i32) -> Option<Self> {
        (m2 <= self.m).then(|| Self::new(m2, ceil_shift(self.j, (self.m - m2) as u32)))
    }

    /// `other ⊂ self` (equality included).
    #[must_use]
    pub fn contains(&self, other: &Self) -> bool {
        other.ancestor(self.m) == Some(*self)
    }

    #[must_use]
    pub fn relation(&self, other: &Self) -> Relation {
        if self == other {
            Relation::Equal
        } else if other.contains(self) {
            Relation::IInsideJ
        } else if self.contains(other) {
            Relation::JInsideI
        } else {
            Relation::Disjoint
        }
    }

    #[must_use]
    pub fn contains_point(&self, x: &Rational) -> bool {
        self.left() <= *x && *x < self.right()
    }

    /// Endpoints in units of `2^{−scale}`; `scale ≥ m` is required.
    pub fn units(&self, scale: i32) -> Result<(i128, i128)> {
        let s = scale - self.m;
        if s < 0 {
            return Err(Error::invalid("unit scale coarser than interval"));
        }
        let overflow = || {
            Error::Range(format!(
                "interval ({}, {}) at scale {scale}",
                self.m, self.j
            ))
        };
        if s >= 126 {
            return Err(overflow());
        }
        let f = 1i128 << s;
        let lo = i128::from(self.j - 1).checked_mul(f).ok_or_else(overflow)?;
        let hi = i128::from(self.j).checked_mul(f).ok_or_else(overflow)?;
        Ok((lo, hi))
    }

    #[must_use]
    pub fn as_pointset(&self) -> PointSet {
        PointSet::interval(self.left(), self.right())
    }
}

/// Order by left endpoint, then by scale ascending.
#[must_use]
pub fn canonical_cmp(a: &DyadicInterval, b: &DyadicInterval) -> Ordering {
    let m = a.m.max(b.m);
    let fast = match (a.units(m), b.units(m)) {
        (Ok(x), Ok(y)) => Some(x.0.cmp(&y.0)),
        _ => None,
    };
    fast.unwrap_or_else(|| a.left().cmp(&b.left()))
        .then(a.m.cmp(&b.m))
        .then(a.j.cmp(&b.j))
}

/// `τ + 𝒟_m`: cells `[τ + (j−1)2^{−m}, τ + j·2^{−m})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftedGrid {
    pub m: i32,
    #[serde(with = "crate::json::rational")]
    pub tau: Rational,
}

impl ShiftedGrid {
    pub fn new(m: i32, tau: Rational) -> Result<Self> {
        if !is_dyadic(&tau) {
            return Err(Error::invalid(format!("grid shift {tau} is not dyadic")));
        }
        Ok(Self { m, tau })
    }

    /// Shift without the dyadic requirement; the tree machinery uses
    /// shifts such as `1/992` that are not dyadic rationals.
    #[must_use]
    pub fn with_any_shift(m: i32, tau: Rational) -> Self {
        Self { m, tau }
    }

    #[must_use]
    pub fn cell(&self, j: i64) -> (Rational, Rational) {
        let w = -i64::from(self.m);
        (shl(&int(j - 1), w) + &self.tau, shl(&int(j), w) + &self.tau)
    }

    /// Index of the cell containing `x`.
    pub fn index_of(&self, x: &Rational) -> Result<i64> {
        let u = shl(&(x - &self.tau), i64::from(self.m));
        (floor(&u) + BigInt::one())
            .to_i64()
            .ok_or_else(|| Error::Range(format!("cell index of {x} at scale {}", self.m)))
    }

    #[must_use]
    pub fn same_partition(&self, other: &Self) -> bool {
        self.m == other.m
            && shl(&(&self.tau - &other.tau), i64::from(self.m))
                .denom()
                .is_one()
    }
}

/// Finite sequence of dyadic intervals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CollectionRepr", into = "CollectionRepr")]
pub struct IntervalCollection {
    items: Vec<DyadicInterval>,
    distinct: bool,
}

#[derive(Serialize, Deserialize)]
struct CollectionRepr {
    intervals: Vec<DyadicInterval>,
    #[serde(default)]
    distinct: bool,
}

impl TryFrom<CollectionRepr> for IntervalCollection {
    type Error = Error;
    fn try_from(r: CollectionRepr) -> Result<Self> {
        Self::new(r.intervals, r.distinct)
    }
}

impl From<IntervalCollection> for CollectionRepr {
    fn from(c: IntervalCollection) -> Self {
        Self {
            intervals: c.items,
            distinct: c.distinct,
        }
    }
}

impl IntervalCollection {
    pub fn new(items: Vec<DyadicInterval>, distinct: bool) -> Result<Self> {
        let c = Self { items, distinct };
        if distinct && c.has_duplicates() {
            return Err(Error::invalid(
                "duplicate interval in a distinct collection",
            ));
        }
        Ok(c)
    }

    /// Duplicates permitted.
    #[must_use]
    pub fn multiset(items: Vec<DyadicInterval>) -> Self {
        Self {
            items,
            distinct: false,
        }
    }

    #[must_use]
    pub fn empty() -> Self {
        Self::multiset(Vec::new())
    }

    #[must_use]
    pub fn items(&self) -> &[DyadicInterval] {
        &self.items
    }

    #[must_use]
    pub fn into_items(self) -> Vec<DyadicInterval> {
        self.items
    }

    #[must_use]
    pub fn distinct(&self) -> bool {
        self.distinct
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[must_use]
    pub fn has_duplicates(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.items.len());
        !self.items.iter().all(|i| seen.insert(*i))
    }

    #[must_use]
    pub fn max_scale(&self) -> Option<i32> {
        self.items.iter().map(|i| i.m).max()
    }

    #[must_use]
    pub fn canonical(&self) -> Self {
        let mut items = self.items.clone();
        items.sort_by(canonical_cmp);
        Self {
            items,
            distinct: self.distinct,
        }
    }

    /// Same multiset of intervals.
    #[must_use]
    pub fn same_multiset(&self, other: &Self) -> bool {
        let mut a = self.items.clone();
        let mut b = other.items.clone();
        a.sort();
        b.sort();
        a == b
    }

    #[must_use]
    pub fn union_set(&self) -> PointSet {
        let mut v: Vec<_> = self.items.iter().map(|i| (i.left(), i.right())).collect();
        v.sort();
        PointSet::from_sorted(v)
    }
}

/// Maximal runs of constant coverage count, in units of `2^{−scale}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub lo: i128,
    pub hi: i128,
    pub count: u64,
}

/// Integer coordinates for a collection: every endpoint is a multiple of
/// `2^{−scale}` where `scale` is the finest scale present.
#[derive(Clone, Debug)]
pub struct UnitFrame {
    pub scale: i32,
}

impl UnitFrame {
    pub fn for_items(items: &[DyadicInterval]) -> Result<Self> {
        let scale = items
            .iter()
            .map(|i| i.m)
            .max()
            .ok_or(Error::EmptyCollection)?;
        Ok(Self { scale })
    }

    pub fn units(&self, i: &DyadicInterval) -> Result<(i128, i128)> {
        i.units(self.scale)
    }

    #[must_use]
    pub fn to_rational(&self, u: i128) -> Rational {
        let n = Rational::from_integer(u.into());
        shl(&n, -i64::from(self.scale))
    }

    /// Runs with positive count, sorted, adjacent runs have different counts.
    pub fn runs(&self, items: &[DyadicInterval]) -> Result<Vec<Run>> {
        let mut ev: Vec<(i128, i64)> = Vec::with_capacity(items.len() * 2);
        for i in items {
            let (lo, hi) = self.units(i)?;
            ev.push((lo, 1));
            ev.push((hi, -1));
        }
        ev.sort_unstable();
        let mut out: Vec<Run> = Vec::new();
        let mut count: i64 = 0;
        let mut k = 0;
        while k < ev.len() {
            let x = ev[k].0;
            while k < ev.len() && ev[k].0 == x {
                count += ev[k].1;
                k += 1;
            }
            if k < ev.len() && count > 0 {
                let nx = ev[k].0;
                match out.last_mut() {
                    Some(r) if r.hi == x && r.count == count as u64 => r.hi = nx,
                    _ => out.push(Run {
                        lo: x,
                        hi: nx,
                        count: count as u64,
                    }),
                }
            }
        }
        Ok(out)
    }

    /// Runs of the union (count ignored, touching runs merged).
    pub fn union_runs(&self, items: &[DyadicInterval]) -> Result<Vec<(i128, i128)>> {
        let mut out: Vec<(i128, i128)> = Vec::new();
        for r in self.runs(items)? {
            match out.last_mut() {
                Some(last) if last.1 == r.lo => last.1 = r.hi,
                _ => out.push((r.lo, r.hi)),
            }
        }
        Ok(out)
    }

    #[must_use]
    pub fn runs_to_pointset(&self, runs: impl IntoIterator<Item = (i128, i128)>) -> PointSet {
        PointSet::from_sorted(
            runs.into_iter()
                .map(|(a, b)| (self.to_rational(a), self.to_rational(b)))
                .collect(),
        )
    }
}

/// `S(x) = Σ_{Δ∈U} 1_Δ(x)`, multiplicity counted.
pub fn indicator_sum(u: &IntervalCollection) -> Result<StepFunction> {
    if u.is_empty() {
        return Ok(StepFunction::zero());
    }
    let frame = UnitFrame::for_items(u.items())?;
    let runs = frame.runs(u.items())?;
    let mut bps: Vec<Rational> = Vec::with_capacity(runs.len() * 2);
    let mut vals: Vec<Quad2> = Vec::with_capacity(runs.len() * 2);
    for r in &runs {
        let lo = frame.to_rational(r.lo);
        match bps.last() {
            Some(last) if *last == lo => {}
            Some(_) => {
                vals.push(Quad2::zero());
                bps.push(lo);
            }
            None => bps.push(lo),
        }
        vals.push(Quad2::from_int(r.count as i64));
        bps.push(frame.to_rational(r.hi));
    }
    StepFunction::new(bps, vals)
}

/// Maximal dyadic intervals inside `∪U`, ordered by left endpoint.
pub fn dmax(u: &IntervalCollection) -> Result<IntervalCollection> {
    let frame = UnitFrame::for_items(u.items())?;
    let mut out = Vec::new();
    for (a, b) in frame.union_runs(u.items())? {
        let mut p = a;
        while p < b {
            // largest aligned block starting at p that fits in [p, b)
            let mut t = if p == 0 {
                126
            } else {
                p.trailing_zeros().min(126)
            };
            while t > 0 && (b - p) < (1i128 << t) {
                t -= 1;
            }
            let m = frame.scale - t as i32;
            let j = (p >> t) + 1;
            let j = i64::try_from(j).map_err(|_| Error::Range("dmax index".into()))?;
            out.push(DyadicInterval::new(m, j));
            p += 1i128 << t;
        }
    }
    IntervalCollection::new(out, true)
}

/// Members of `U` that properly contain no other member, with multiplicity.
pub fn dmin(u: &IntervalCollection) -> Result<IntervalCollection> {
    if u.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let keys: HashSet<DyadicInterval> = u.items().iter().copied().collect();
    let scales: BTreeSet<i32> = keys.iter().map(|i| i.m).collect();
    let mut has_below: HashSet<DyadicInterval> = HashSet::new();
    for i in &keys {
        for &m2 in scales.range(..i.m) {
            let a = i.ancestor(m2).expect("coarser scale");
            if keys.contains(&a) {
                has_below.insert(a);
            }
        }
    }
    let mut out: Vec<DyadicInterval> = u
        .items()
        .iter()
        .copied()
        .filter(|i| !has_below.contains(i))
        .collect();
    out.sort_by(canonical_cmp);
    IntervalCollection::new(out, u.distinct())
}

/// Lookup of "is this interval inside some member" over a fixed family.
pub struct ContainmentIndex {
    keys: HashMap<DyadicInterval, usize>,
    scales: Vec<i32>,
}

impl ContainmentIndex {
    #[must_use]
    pub fn new(items: &[DyadicInterval]) -> Self {
        let mut keys = HashMap::new();
        for i in items {
            *keys.entry(*i).or_insert(0) += 1;
        }
        let scales: BTreeSet<i32> = items.iter().map(|i| i.m).collect();
        Self {
            keys,
            scales: scales.into_iter().collect(),
        }
    }

    /// Member containing `i` (equality included), if any.
    #[must_use]
    pub fn container(&self, i: &DyadicInterval) -> Option<DyadicInterval> {
        self.scales
            .iter()
            .take_while(|&&m| m <= i.m)
            .filter_map(|&m| i.ancestor(m))
            .find(|a| self.keys.contains_key(a))
    }

    /// Members containing `i`, multiplicity counted.
    #[must_use]
    pub fn count_containing(&self, i: &DyadicInterval) -> usize {
        self.scales
            .iter()
            .take_while(|&&m| m <= i.m)
            .filter_map(|&m| i.ancestor(m))
            .map(|a| self.keys.get(&a).copied().unwrap_or(0))
            .sum()
    }
}

/// `U ⋐ V`: every member of `U` lies in a minimal member of `V`.
pub fn nested_in(u: &IntervalCollection, v: &IntervalCollection) -> Result<bool> {
    let mins = dmin(v)?;
    let idx = ContainmentIndex::new(mins.items());
    Ok(u.items().iter().all(|i| idx.container(i).is_some()))
}

/// Shorthand used by tests and fixtures: `[a, b)` must be dyadic.
pub fn from_endpoints(a: &Rational, b: &Rational) -> Result<DyadicInterval> {
    let len = b - a;
    let m = crate::num::exact_log2(&len)
        .ok_or_else(|| Error::invalid(format!("[{a}, {b}) is not dyadic")))?;
    let m = -m;
    let j = shl(a, m) + Rational::one();
    if !j.denom().is_one() {
        return Err(Error::invalid(format!("[{a}, {b}) is not aligned")));
    }
    let j = j
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::Range("index".into()))?;
    let m = i32::try_from(m).map_err(|_| Error::Range("scale".into()))?;
    Ok(DyadicInterval::new(m, j))
}
