//! Stopping-time decompositions of dyadic collections and the Haar-side
//! norm bound.
//!
//! Everything here runs on integer unit coordinates (`UnitFrame`), so all
//! comparisons are exact and fast. Rationals appear only at the output.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{
    canonical_cmp, dmin, nested_in, DyadicInterval, IntervalCollection, Run, UnitFrame,
};
use crate::num::{ceil_log2, int, pow2, shl, Quad2, Rational};
use crate::pointset::PointSet;
use crate::step::StepFunction;

/// Constant in `‖Σ c_Δ 1_Δ‖² ≤ 12·max(2, ⌈log₂N⌉)·Σ c_Δ²|Δ|`.
///
/// Even/odd layers are each almost orthogonal (factor 3 each, so 6 after
/// `(a+b)² ≤ 2a² + 2b²`), and every layer has overlap at most `2n`.
pub const HAAR_CONSTANT: u64 = 12;

#[must_use]
pub fn log_factor(n_terms: usize) -> u64 {
    u64::from(ceil_log2(n_terms as u64)).max(2)
}

fn check_card(u: &IntervalCollection, n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if n < 64 && u.len() as u128 > 1u128 << n {
        return Err(Error::pre(format!("card(U) = {} exceeds 2^{n}", u.len())));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// `min S ≥ l` on `I`.
    pub premise: bool,
    /// `!premise || card ≥ 2^l − 1`.
    pub holds: bool,
    pub min_coverage: u64,
    pub card: usize,
    #[serde(with = "crate::json::rational")]
    pub witness: Rational,
}

/// If `Σ 1_Δ ≥ l` on all of `I`, then `card(U) ≥ 2^l − 1` (distinct
/// intervals; `l` copies of `I` already cover it `l` times).
pub fn coverage_card_check(
    u: &IntervalCollection,
    i: &DyadicInterval,
    l: u32,
) -> Result<CoverageReport> {
    if l == 0 {
        return Err(Error::pre("l must be positive"));
    }
    if u.has_duplicates() {
        return Err(Error::pre(
            "duplicate intervals: the count bound needs distinct intervals",
        ));
    }
    if let Some(bad) = u.items().iter().find(|d| !i.contains(d)) {
        return Err(Error::pre(format!(
            "interval ({}, {}) not contained in I",
            bad.m, bad.j
        )));
    }
    let scale = u.max_scale().unwrap_or(i.m).max(i.m);
    let frame = UnitFrame { scale };
    let (lo, hi) = frame.units(i)?;
    let runs = frame.runs(u.items())?;
    let mut min = u64::MAX;
    let mut witness = lo;
    let mut pos = lo;
    for r in &runs {
        if r.lo > pos {
            min = 0;
            witness = pos;
            break;
        }
        if r.count < min {
            min = r.count;
            witness = r.lo;
        }
        pos = r.hi;
    }
    if pos < hi && min > 0 {
        min = 0;
        witness = pos;
    }
    let premise = min >= u64::from(l);
    let need = if l >= 64 { u128::MAX } else { (1u128 << l) - 1 };
    let holds = !premise || u.len() as u128 >= need;
    Ok(CoverageReport {
        premise,
        holds,
        min_coverage: min,
        card: u.len(),
        witness: frame.to_rational(witness),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitResult {
    pub accepted: IntervalCollection,
    pub rejected: IntervalCollection,
    pub level: u64,
    pub saturation: PointSet,
}

/// Outcome of the exact property checks on a split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitChecks {
    pub multiset_partition: bool,
    /// `indicator_sum(accepted) ≤ 2n`.
    pub overlap_bounded: bool,
    /// `rejected ⋐ accepted`.
    pub rejected_nested: bool,
    pub rejected_in_saturation: bool,
    /// `|{S = 2n}| ≤ 2^{1−n}|{S ≠ 0}|`.
    pub saturation_small: bool,
    /// The input had no repeated interval. The saturation bound is only a
    /// theorem in that case.
    pub distinct_input: bool,
}

impl SplitChecks {
    #[must_use]
    pub fn all_hold(&self) -> bool {
        self.multiset_partition
            && self.overlap_bounded
            && self.rejected_nested
            && self.rejected_in_saturation
            && (self.saturation_small || !self.distinct_input)
    }
}

/// Accepted counts keyed by interval, with the set of scales present.
#[derive(Default)]
struct AcceptedIndex {
    counts: HashMap<DyadicInterval, u64>,
    scales: BTreeSet<i32>,
}

impl AcceptedIndex {
    fn containing(&self, i: &DyadicInterval) -> u64 {
        self.scales
            .range(..=i.m)
            .filter_map(|&m| i.ancestor(m))
            .map(|a| self.counts.get(&a).copied().unwrap_or(0))
            .sum()
    }

    fn insert(&mut self, i: DyadicInterval) {
        *self.counts.entry(i).or_insert(0) += 1;
        self.scales.insert(i.m);
    }
}

/// Largest-first stopping time at level `2n`.
///
/// Intervals are visited by decreasing length with ties broken by ascending
/// `(m, j)`; one is accepted iff fewer than `2n` accepted intervals already
/// contain it.
pub fn split_level(u: &IntervalCollection, n: u32) -> Result<SplitResult> {
    check_card(u, n)?;
    let level = 2 * u64::from(n);
    let mut order: Vec<DyadicInterval> = u.items().to_vec();
    order.sort();
    let mut idx = AcceptedIndex::default();
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for i in order {
        if idx.containing(&i) < level {
            idx.insert(i);
            accepted.push(i);
        } else {
            rejected.push(i);
        }
    }
    accepted.sort_by(canonical_cmp);
    rejected.sort_by(canonical_cmp);
    let saturation = if accepted.is_empty() {
        PointSet::empty()
    } else {
        let frame = UnitFrame::for_items(&accepted)?;
        let runs = frame.runs(&accepted)?;
        frame.runs_to_pointset(
            runs.iter()
                .filter(|r| r.count == level)
                .map(|r| (r.lo, r.hi)),
        )
    };
    Ok(SplitResult {
        accepted: IntervalCollection::new(accepted, u.distinct())?,
        rejected: IntervalCollection::new(rejected, u.distinct())?,
        level,
        saturation,
    })
}

fn level_runs(runs: &[Run], level: u64) -> Vec<(i128, i128)> {
    runs.iter()
        .filter(|r| r.count == level)
        .map(|r| (r.lo, r.hi))
        .collect()
}

fn covered_by(runs: &[(i128, i128)], lo: i128, hi: i128) -> bool {
    // runs are disjoint and sorted, but touching runs are not merged
    let mut k = runs.partition_point(|r| r.1 <= lo);
    let mut pos = lo;
    while pos < hi {
        match runs.get(k) {
            Some(&(a, b)) if a <= pos => {
                pos = b;
                k += 1;
            }
            _ => return false,
        }
    }
    true
}

fn measure_in(runs: &[(i128, i128)], lo: i128, hi: i128) -> i128 {
    let k = runs.partition_point(|r| r.1 <= lo);
    runs[k..]
        .iter()
        .take_while(|r| r.0 < hi)
        .map(|&(a, b)| b.min(hi) - a.max(lo))
        .sum()
}

/// `a·2^{n−1} ≤ b` exactly.
fn small_fraction(a: i128, b: i128, n: u32) -> bool {
    (BigInt::from(a) << (n - 1) as usize) <= BigInt::from(b)
}

impl SplitResult {
    /// Verifies every documented property against the original input.
    pub fn check(&self, input: &IntervalCollection, n: u32) -> Result<SplitChecks> {
        let level = self.level;
        let mut both = self.accepted.items().to_vec();
        both.extend_from_slice(self.rejected.items());
        let multiset_partition = IntervalCollection::multiset(both).same_multiset(input);
        if input.is_empty() {
            return Ok(SplitChecks {
                multiset_partition,
                overlap_bounded: true,
                rejected_nested: true,
                rejected_in_saturation: true,
                saturation_small: true,
                distinct_input: true,
            });
        }
        let frame = UnitFrame::for_items(input.items())?;
        let runs = frame.runs(self.accepted.items())?;
        let overlap_bounded = runs.iter().all(|r| r.count <= level);
        let sat = level_runs(&runs, level);
        let rejected_nested =
            self.rejected.is_empty() || nested_in(&self.rejected, &self.accepted)?;
        let mut rejected_in_saturation = true;
        for r in self.rejected.items() {
            let (lo, hi) = frame.units(r)?;
            if !covered_by(&sat, lo, hi) {
                rejected_in_saturation = false;
                break;
            }
        }
        let sat_measure: i128 = sat.iter().map(|(a, b)| b - a).sum();
        let support: i128 = runs.iter().map(|r| r.hi - r.lo).sum();
        Ok(SplitChecks {
            multiset_partition,
            overlap_bounded,
            rejected_nested,
            rejected_in_saturation,
            saturation_small: small_fraction(sat_measure, support, n),
            distinct_input: !input.has_duplicates(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredDecomposition {
    pub layers: Vec<IntervalCollection>,
    pub level: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerChecks {
    pub partition: bool,
    /// Each layer's overlap is at most `2n`.
    pub overlap_bounded: bool,
    /// `U_k ⋐ U_{k−1}`.
    pub nested: bool,
    /// `∪U_k ⊂ {S_{k−1} = 2n}`.
    pub inside_saturation: bool,
    /// `|{S_k = 2n} ∩ J| ≤ 2^{1−n}|J|` for `J ∈ dmin(U_{k−1})`.
    pub local_saturation_small: bool,
    /// `Σ_k S_k = S` pointwise.
    pub telescoping: bool,
    pub distinct_input: bool,
}

impl LayerChecks {
    #[must_use]
    pub fn all_hold(&self) -> bool {
        self.partition
            && self.overlap_bounded
            && self.nested
            && self.inside_saturation
            && self.telescoping
            && (self.local_saturation_small || !self.distinct_input)
    }
}

/// Repeats [`split_level`] on the rejected remainder until nothing is left.
pub fn iterate_decomposition(u: &IntervalCollection, n: u32) -> Result<LayeredDecomposition> {
    check_card(u, n)?;
    let mut layers = Vec::new();
    let mut rest = u.clone();
    let mut level = 2 * u64::from(n);
    while !rest.is_empty() {
        let s = split_level(&rest, n)?;
        level = s.level;
        if s.accepted.is_empty() {
            return Err(Error::Violation("stopping time accepted nothing".into()));
        }
        layers.push(s.accepted);
        rest = s.rejected;
    }
    Ok(LayeredDecomposition { layers, level })
}

impl LayeredDecomposition {
    pub fn check(&self, input: &IntervalCollection, n: u32) -> Result<LayerChecks> {
        let all: Vec<DyadicInterval> = self
            .layers
            .iter()
            .flat_map(|l| l.items().iter().copied())
            .collect();
        let partition = IntervalCollection::multiset(all.clone()).same_multiset(input);
        let distinct_input = !input.has_duplicates();
        if input.is_empty() {
            return Ok(LayerChecks {
                partition: self.layers.is_empty(),
                overlap_bounded: true,
                nested: true,
                inside_saturation: true,
                local_saturation_small: true,
                telescoping: true,
                distinct_input,
            });
        }
        let frame = UnitFrame::for_items(input.items())?;
        let level = self.level;
        let mut overlap_bounded = true;
        let mut nested = true;
        let mut inside_saturation = true;
        let mut local_saturation_small = true;
        let mut prev_sat: Option<Vec<(i128, i128)>> = None;
        for (k, layer) in self.layers.iter().enumerate() {
            let runs = frame.runs(layer.items())?;
            overlap_bounded &= runs.iter().all(|r| r.count <= level);
            let sat = level_runs(&runs, level);
            if k > 0 {
                let prev = &self.layers[k - 1];
                nested &= nested_in(layer, prev)?;
                let ps = prev_sat.as_ref().expect("set for k > 0");
                for i in layer.items() {
                    let (lo, hi) = frame.units(i)?;
                    if !covered_by(ps, lo, hi) {
                        inside_saturation = false;
                    }
                }
                for j in dmin(prev)?.items() {
                    let (lo, hi) = frame.units(j)?;
                    if !small_fraction(measure_in(&sat, lo, hi), hi - lo, n) {
                        local_saturation_small = false;
                    }
                }
            }
            prev_sat = Some(sat);
        }
        // Σ_k S_k against S, compared as exact step functions
        let total = {
            let mut pieces = Vec::with_capacity(all.len());
            for layer in &self.layers {
                for r in frame.runs(layer.items())? {
                    pieces.push((
                        frame.to_rational(r.lo),
                        frame.to_rational(r.hi),
                        Quad2::from_int(r.count as i64),
                    ));
                }
            }
            StepFunction::sum_pieces(&pieces)?.simplify()
        };
        let direct = crate::interval::indicator_sum(input)?.simplify();
        Ok(LayerChecks {
            partition,
            overlap_bounded,
            nested,
            inside_saturation,
            local_saturation_small,
            telescoping: total == direct,
            distinct_input,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum HypothesisFailure {
    /// `E_{k+1} ⊄ E_k`.
    NotNested { k: usize },
    /// `supp f_k ⊄ E_k`.
    SupportOutside { k: usize },
    /// `‖f_k‖²_{E_{m+1}} > ½‖f_k‖²_{E_m}`.
    NoDecay { k: usize, m: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthoReport {
    pub failure: Option<HypothesisFailure>,
    pub lhs_sq: Quad2,
    /// `Σ ‖f_k‖²`.
    pub sum_sq: Quad2,
    /// `3·Σ ‖f_k‖²`.
    pub rhs_sq: Quad2,
    pub bound_ok: bool,
    /// `(3 + 2√2)·Σ ‖f_k‖²`.
    pub rhs_safe_sq: Quad2,
    pub safe_bound_ok: bool,
}

/// `1 + 2·Σ_{d≥1} 2^{−d/2} = 3 + 2√2`.
///
/// Halving of squared norms only gives `|⟨f_k, f_m⟩| ≤ 2^{(k−m)/2}‖f_k‖‖f_m‖`,
/// so this is the constant the decay hypothesis supports. With decay
/// `1/4` per step the same sum gives exactly `3`.
#[must_use]
pub fn ortho_safe_constant() -> Quad2 {
    Quad2::new(int(3), int(2))
}

/// `f_k = 2^{k/2}·1_[0,2^{−k})`, `E_k = [0,2^{−k})`: every hypothesis holds
/// with equality, and `‖Σf_k‖² > 3Σ‖f_k‖²` from `N = 5` on.
#[must_use]
pub fn geometric_extremal_family(n: usize) -> (Vec<StepFunction>, Vec<PointSet>) {
    let f = (1..=n as i64)
        .map(|k| {
            StepFunction::constant(Rational::zero(), pow2(-k), Quad2::pow2_half(k))
                .expect("nonempty piece")
        })
        .collect();
    let e = (1..=n as i64)
        .map(|k| PointSet::interval(Rational::zero(), pow2(-k)))
        .collect();
    (f, e)
}

impl OrthoReport {
    #[must_use]
    pub fn hypotheses_hold(&self) -> bool {
        self.failure.is_none()
    }
}

/// Indices in the report are 1-based.
pub fn almost_orthogonality_check(f: &[StepFunction], e: &[PointSet]) -> Result<OrthoReport> {
    if f.len() != e.len() {
        return Err(Error::pre("f and E differ in length"));
    }
    if f.is_empty() {
        return Err(Error::pre("need at least one function"));
    }
    let n = f.len();
    let mut failure = None;
    for k in 0..n - 1 {
        if !e[k].contains_set(&e[k + 1]) {
            failure = Some(HypothesisFailure::NotNested { k: k + 1 });
            break;
        }
    }
    if failure.is_none() {
        failure = (0..n)
            .find(|&k| !e[k].contains_set(&f[k].support()))
            .map(|k| HypothesisFailure::SupportOutside { k: k + 1 });
    }
    if failure.is_none() {
        let half = Rational::new(One::one(), int(2).to_integer());
        'outer: for k in 0..n {
            let mut prev = f[k].l2_norm_sq_on(&e[k]);
            for m in k..n - 1 {
                let next = f[k].l2_norm_sq_on(&e[m + 1]);
                if next > prev.scale(&half) {
                    failure = Some(HypothesisFailure::NoDecay { k: k + 1, m: m + 1 });
                    break 'outer;
                }
                prev = next;
            }
        }
    }
    let pieces: Vec<_> = f
        .iter()
        .flat_map(|g| {
            g.pieces()
                .map(|(a, b, v)| (a.clone(), b.clone(), v.clone()))
        })
        .collect();
    let lhs_sq = StepFunction::sum_pieces(&pieces)?.l2_norm_sq();
    let sum_sq: Quad2 = f.iter().map(StepFunction::l2_norm_sq).sum();
    let rhs_sq = sum_sq.scale(&int(3));
    let rhs_safe_sq = &sum_sq * &ortho_safe_constant();
    Ok(OrthoReport {
        failure,
        bound_ok: lhs_sq <= rhs_sq,
        safe_bound_ok: lhs_sq <= rhs_safe_sq,
        lhs_sq,
        sum_sq,
        rhs_sq,
        rhs_safe_sq,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarReport {
    pub n_terms: usize,
    pub log_factor: u64,
    #[serde(with = "crate::json::rational")]
    pub lhs_sq: Rational,
    #[serde(with = "crate::json::rational")]
    pub rhs_base: Rational,
    pub bound_ok: bool,
}

impl HaarReport {
    #[must_use]
    pub fn bound(&self) -> Rational {
        &self.rhs_base * int((HAAR_CONSTANT * self.log_factor) as i64)
    }

    #[must_use]
    pub fn ratio(&self) -> Option<Rational> {
        (!self.rhs_base.is_zero()).then(|| &self.lhs_sq / &self.rhs_base)
    }
}

/// `‖Σ c_Δ 1_Δ‖²` by an exact sweep, without the `N ≥ 2` and distinctness
/// preconditions.
pub fn weighted_indicator_norm_sq(items: &[DyadicInterval], c: &[Rational]) -> Result<Rational> {
    if items.len() != c.len() {
        return Err(Error::pre("one coefficient per interval"));
    }
    if items.is_empty() {
        return Ok(Rational::zero());
    }
    let frame = UnitFrame::for_items(items)?;
    let mut ev: Vec<(i128, usize, bool)> = Vec::with_capacity(2 * items.len());
    for (k, i) in items.iter().enumerate() {
        let (lo, hi) = frame.units(i)?;
        ev.push((lo, k, true));
        ev.push((hi, k, false));
    }
    ev.sort_unstable_by_key(|e| e.0);
    let mut total = Rational::zero();
    let mut acc = Rational::zero();
    let mut k = 0;
    while k < ev.len() {
        let x = ev[k].0;
        while k < ev.len() && ev[k].0 == x {
            let (_, idx, open) = ev[k];
            if open {
                acc += &c[idx];
            } else {
                acc -= &c[idx];
            }
            k += 1;
        }
        if k < ev.len() && !acc.is_zero() {
            let len = ev[k].0 - x;
            total += &acc * &acc * Rational::from_integer(len.into());
        }
    }
    Ok(shl(&total, -i64::from(frame.scale)))
}

/// `‖Σ c_Δ 1_Δ‖² ≤ 12·max(2, ⌈log₂N⌉)·Σ c_Δ²|Δ|` for distinct intervals.
pub fn haar_bound_report(u: &IntervalCollection, c: &[Rational]) -> Result<HaarReport> {
    if u.len() < 2 {
        return Err(Error::pre("need N ≥ 2 intervals"));
    }
    if c.len() != u.len() {
        return Err(Error::pre("one coefficient per interval"));
    }
    if u.has_duplicates() {
        return Err(Error::pre(
            "duplicate intervals: the bound is false with repetition",
        ));
    }
    if c.iter().any(|x| *x <= Rational::zero()) {
        return Err(Error::pre("coefficients must be positive"));
    }
    let lhs_sq = weighted_indicator_norm_sq(u.items(), c)?;
    let rhs_base = u
        .items()
        .iter()
        .zip(c)
        .fold(Rational::zero(), |acc, (i, x)| {
            acc + x * x * pow2(-i64::from(i.m))
        });
    let log_factor = log_factor(u.len());
    let bound = &rhs_base * int((HAAR_CONSTANT * log_factor) as i64);
    Ok(HaarReport {
        n_terms: u.len(),
        log_factor,
        bound_ok: lhs_sq <= bound,
        lhs_sq,
        rhs_base,
    })
}

/// All dyadic subintervals of `[0,1)` with scale `0..=depth`.
#[must_use]
pub fn full_tree(depth: u32) -> IntervalCollection {
    let mut v = Vec::new();
    for m in 0..=depth as i32 {
        for j in 1..=(1i64 << m) {
            v.push(DyadicInterval::new(m, j));
        }
    }
    IntervalCollection::new(v, true).expect("distinct by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::indicator_sum;
    use crate::num::rat;

    fn d(m: i32, j: i64) -> DyadicInterval {
        DyadicInterval::new(m, j)
    }

    fn chain(len: i32) -> IntervalCollection {
        IntervalCollection::new((0..len).map(|i| d(i, 1)).collect(), true).unwrap()
    }

    #[test]
    fn chain_split() {
        let u = chain(10);
        let s = split_level(&u, 4).unwrap();
        assert_eq!(s.level, 8);
        assert_eq!(s.accepted.len(), 8);
        assert_eq!(s.rejected.items(), &[d(8, 1), d(9, 1)]);
        assert_eq!(s.saturation, PointSet::interval(rat(0, 1), rat(1, 128)));
        let c = s.check(&u, 4).unwrap();
        assert!(c.all_hold() && c.saturation_small, "{c:?}");
    }

    #[test]
    fn complete_tree_not_saturated() {
        let u = full_tree(3);
        assert_eq!(u.len(), 15);
        let s = split_level(&u, 4).unwrap();
        assert!(s.rejected.is_empty());
        let sum = indicator_sum(&u).unwrap().simplify();
        assert_eq!(sum.values(), &[Quad2::from_int(4)]);
    }

    #[test]
    fn single_interval() {
        let u = IntervalCollection::new(vec![d(0, 1)], true).unwrap();
        let s = split_level(&u, 1).unwrap();
        assert_eq!(s.accepted, u);
        assert!(s.rejected.is_empty());
    }

    #[test]
    fn oversize_is_precondition() {
        let u = chain(5);
        assert!(matches!(split_level(&u, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn chain_layers() {
        let u = chain(10);
        let l = iterate_decomposition(&u, 4).unwrap();
        assert_eq!(l.layers.len(), 2);
        assert_eq!(l.layers[0].len(), 8);
        assert_eq!(l.layers[1].items(), &[d(8, 1), d(9, 1)]);
        assert!(l.check(&u, 4).unwrap().all_hold());
    }

    #[test]
    fn repeated_interval_breaks_saturation_bound() {
        // 2n copies of [0,1) with n = 2: card 4 ≤ 2^2, S ≡ 4 on [0,1),
        // so |{S = 4}| = 1 > 2^{-1}. Multiplicity is outside the lemma.
        let u = IntervalCollection::multiset(vec![d(0, 1); 4]);
        let s = split_level(&u, 2).unwrap();
        let c = s.check(&u, 2).unwrap();
        assert!(!c.saturation_small);
        assert!(!c.distinct_input);
        assert!(c.all_hold());
    }

    #[test]
    fn coverage_minimal_construction() {
        let u = full_tree(1);
        let r = coverage_card_check(&u, &d(0, 1), 2).unwrap();
        assert!(r.premise && r.holds);
        assert_eq!(r.card, 3);
        let one = IntervalCollection::new(vec![d(0, 1)], true).unwrap();
        let r = coverage_card_check(&one, &d(0, 1), 1).unwrap();
        assert!(r.premise && r.holds && r.card == 1);
        let bad = IntervalCollection::new(vec![d(0, 2)], true).unwrap();
        assert!(coverage_card_check(&bad, &d(0, 1), 1).is_err());
        let twice = IntervalCollection::multiset(vec![d(0, 1), d(0, 1)]);
        assert!(matches!(
            coverage_card_check(&twice, &d(0, 1), 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn coverage_finds_gap() {
        let u = IntervalCollection::new(vec![d(2, 1), d(2, 3)], true).unwrap();
        let r = coverage_card_check(&u, &d(0, 1), 1).unwrap();
        assert_eq!(r.min_coverage, 0);
        assert_eq!(r.witness, rat(1, 4));
        assert!(!r.premise && r.holds);
    }

    #[test]
    fn geometric_family_needs_the_larger_constant() {
        let (f, e) = geometric_extremal_family(4);
        let r = almost_orthogonality_check(&f, &e).unwrap();
        assert!(r.hypotheses_hold() && r.bound_ok);
        let (f, e) = geometric_extremal_family(5);
        let r = almost_orthogonality_check(&f, &e).unwrap();
        assert!(r.hypotheses_hold(), "{:?}", r.failure);
        assert!(!r.bound_ok);
        assert!(r.safe_bound_ok);
        let (f, e) = geometric_extremal_family(40);
        let r = almost_orthogonality_check(&f, &e).unwrap();
        assert!(r.hypotheses_hold() && r.safe_bound_ok && !r.bound_ok);

        // with E_k twice as long, f_k already lives inside E_{k+1}
        let (f, _) = geometric_extremal_family(5);
        let wide: Vec<_> = (1..=5)
            .map(|k| PointSet::interval(rat(0, 1), pow2(1 - k)))
            .collect();
        let r = almost_orthogonality_check(&f, &wide).unwrap();
        assert_eq!(r.failure, Some(HypothesisFailure::NoDecay { k: 1, m: 1 }));
    }

    #[test]
    fn single_function_orthogonality() {
        let f = vec![StepFunction::indicator(rat(0, 1), rat(1, 1)).unwrap()];
        let e = vec![PointSet::interval(rat(0, 1), rat(1, 1))];
        let r = almost_orthogonality_check(&f, &e).unwrap();
        assert_eq!(r.lhs_sq, Quad2::one());
        assert_eq!(r.rhs_sq, Quad2::from_int(3));
        assert!(r.bound_ok);
    }

    #[test]
    fn full_tree_sharpness() {
        for n in 2..=6 {
            let u = full_tree(n);
            let c = vec![Rational::one(); u.len()];
            let r = haar_bound_report(&u, &c).unwrap();
            assert_eq!(r.lhs_sq, int(i64::from(n + 1) * i64::from(n + 1)));
            assert_eq!(r.rhs_base, int(i64::from(n + 1)));
            assert!(r.bound_ok);
        }
    }

    #[test]
    fn haar_rejects_bad_input() {
        let u = IntervalCollection::multiset(vec![d(0, 1), d(0, 1)]);
        assert!(haar_bound_report(&u, &[int(1), int(1)]).is_err());
        let u = IntervalCollection::new(vec![d(0, 1), d(1, 1)], true).unwrap();
        assert!(haar_bound_report(&u, &[int(1), int(0)]).is_err());
        let r = haar_bound_report(
            &IntervalCollection::new(vec![d(1, 1), d(1, 2)], true).unwrap(),
            &[rat(3, 1), rat(1, 7)],
        )
        .unwrap();
        assert_eq!(r.lhs_sq, r.rhs_base);
    }
}
