//! Piecewise-constant functions with rational breakpoints and `Q(√2)` values.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{Quad2, Rational};
use crate::pointset::PointSet;

/// Refinements above this many pieces are refused.
pub const MAX_PIECES: usize = 10_000_000;

/// `values[i]` is taken on `[breakpoints[i], breakpoints[i+1])`; zero outside.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "StepRepr", into = "StepRepr")]
pub struct StepFunction {
    breakpoints: Vec<Rational>,
    values: Vec<Quad2>,
}

#[derive(Serialize, Deserialize)]
struct StepRepr {
    #[serde(with = "crate::json::rational_vec")]
    breakpoints: Vec<Rational>,
    values: Vec<Quad2>,
}

impl TryFrom<StepRepr> for StepFunction {
    type Error = Error;
    fn try_from(r: StepRepr) -> Result<Self> {
        Self::new(r.breakpoints, r.values)
    }
}

impl From<StepFunction> for StepRepr {
    fn from(f: StepFunction) -> Self {
        Self {
            breakpoints: f.breakpoints,
            values: f.values,
        }
    }
}

impl StepFunction {
    pub fn new(breakpoints: Vec<Rational>, values: Vec<Quad2>) -> Result<Self> {
        if breakpoints.is_empty() && values.is_empty() {
            return Ok(Self::zero());
        }
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::invalid(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    #[must_use]
    pub fn zero() -> Self {
        Self::default()
    }

    /// `v·1_[a,b)`.
    pub fn constant(a: Rational, b: Rational, v: Quad2) -> Result<Self> {
        Self::new(vec![a, b], vec![v])
    }

    pub fn indicator(a: Rational, b: Rational) -> Result<Self> {
        Self::constant(a, b, Quad2::one())
    }

    /// Sum of arbitrarily overlapping pieces `(a, b, v)` meaning `v·1_[a,b)`.
    ///
    /// Difference array over the sorted endpoint set, so the cost is
    /// `O(P log P)` in the number of pieces.
    pub fn sum_pieces(pieces: &[(Rational, Rational, Quad2)]) -> Result<Self> {
        let mut pts: Vec<Rational> = Vec::with_capacity(2 * pieces.len());
        for (a, b, _) in pieces {
            if a < b {
                pts.push(a.clone());
                pts.push(b.clone());
            }
        }
        pts.sort();
        pts.dedup();
        if pts.len() > MAX_PIECES {
            return Err(Error::Resource(format!(
                "refinement of {} pieces exceeds {MAX_PIECES}",
                pts.len()
            )));
        }
        if pts.len() < 2 {
            return Ok(Self::zero());
        }
        let mut diff = vec![Quad2::zero(); pts.len()];
        for (a, b, v) in pieces {
            if a >= b || v.is_zero() {
                continue;
            }
            let ia = pts.binary_search(a).expect("endpoint present");
            let ib = pts.binary_search(b).expect("endpoint present");
            diff[ia] += v;
            diff[ib] -= v;
        }
        let mut values = Vec::with_capacity(pts.len() - 1);
        let mut acc = Quad2::zero();
        for d in &diff[..pts.len() - 1] {
            acc += d;
            values.push(acc.clone());
        }
        Self::new(pts, values)
    }

    #[must_use]
    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    #[must_use]
    pub fn values(&self) -> &[Quad2] {
        &self.values
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Quad2::is_zero)
    }

    pub fn pieces(&self) -> impl Iterator<Item = (&Rational, &Rational, &Quad2)> {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (&self.breakpoints[i], &self.breakpoints[i + 1], v))
    }

    #[must_use]
    pub fn eval(&self, x: &Rational) -> Quad2 {
        let i = self.breakpoints.partition_point(|b| b <= x);
        if i == 0 || i >= self.breakpoints.len() {
            Quad2::zero()
        } else {
            self.values[i - 1].clone()
        }
    }

    #[must_use]
    pub fn integral(&self) -> Quad2 {
        self.pieces().map(|(a, b, v)| v.scale(&(b - a))).sum()
    }

    #[must_use]
    pub fn l1_norm(&self) -> Quad2 {
        self.pieces().map(|(a, b, v)| v.abs().scale(&(b - a))).sum()
    }

    #[must_use]
    pub fn l2_norm_sq(&self) -> Quad2 {
        self.pieces()
            .map(|(a, b, v)| v.square().scale(&(b - a)))
            .sum()
    }

    /// `∫_E f²`.
    #[must_use]
    pub fn l2_norm_sq_on(&self, e: &PointSet) -> Quad2 {
        self.pieces()
            .filter(|(_, _, v)| !v.is_zero())
            .map(|(a, b, v)| v.square().scale(&e.measure_in(a, b)))
            .sum()
    }

    /// Pointwise combination on the common refinement.
    #[must_use]
    pub fn zip_with(&self, other: &Self, f: impl Fn(&Quad2, &Quad2) -> Quad2) -> Self {
        let mut pts: Vec<Rational> =
            Vec::with_capacity(self.breakpoints.len() + other.breakpoints.len());
        let (mut i, mut k) = (0, 0);
        while i < self.breakpoints.len() || k < other.breakpoints.len() {
            let next = match (self.breakpoints.get(i), other.breakpoints.get(k)) {
                (Some(a), Some(b)) if a == b => {
                    i += 1;
                    k += 1;
                    a.clone()
                }
                (Some(a), Some(b)) if a < b => {
                    i += 1;
                    a.clone()
                }
                (Some(a), None) => {
                    i += 1;
                    a.clone()
                }
                (_, Some(b)) => {
                    k += 1;
                    b.clone()
                }
                (None, None) => unreachable!(),
            };
            pts.push(next);
        }
        if pts.len() < 2 {
            return Self::zero();
        }
        let zero = Quad2::zero();
        let mut values = Vec::with_capacity(pts.len() - 1);
        let (mut ia, mut ib) = (0usize, 0usize);
        for w in pts.windows(2) {
            let x = &w[0];
            while ia < self.breakpoints.len() && self.breakpoints[ia] <= *x {
                ia += 1;
            }
            while ib < other.breakpoints.len() && other.breakpoints[ib] <= *x {
                ib += 1;
            }
            let va = if ia == 0 || ia >= self.breakpoints.len() {
                &zero
            } else {
                &self.values[ia - 1]
            };
            let vb = if ib == 0 || ib >= other.breakpoints.len() {
                &zero
            } else {
                &other.values[ib - 1]
            };
            values.push(f(va, vb));
        }
        Self {
            breakpoints: pts,
            values,
        }
    }

    #[must_use]
    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    #[must_use]
    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    #[must_use]
    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `∫ f·g`.
    #[must_use]
    pub fn inner(&self, other: &Self) -> Quad2 {
        self.mul(other).integral()
    }

    #[must_use]
    pub fn scale(&self, s: &Quad2) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    #[must_use]
    pub fn abs(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(Quad2::abs).collect(),
        }
    }

    fn set_where(&self, keep: impl Fn(&Quad2) -> bool) -> PointSet {
        PointSet::from_sorted(
            self.pieces()
                .filter(|(_, _, v)| keep(v))
                .map(|(a, b, _)| (a.clone(), b.clone()))
                .collect(),
        )
    }

    #[must_use]
    pub fn support(&self) -> PointSet {
        self.set_where(|v| !v.is_zero())
    }

    #[must_use]
    pub fn positive_set(&self) -> PointSet {
        self.set_where(Quad2::is_positive)
    }

    #[must_use]
    pub fn negative_set(&self) -> PointSet {
        self.set_where(Quad2::is_negative)
    }

    /// Merge equal neighbours and drop zero pieces at both ends.
    #[must_use]
    pub fn simplify(&self) -> Self {
        let mut bps: Vec<Rational> = Vec::new();
        let mut vals: Vec<Quad2> = Vec::new();
        for (a, b, v) in self.pieces() {
            match vals.last() {
                Some(last) if last == v => {
                    *bps.last_mut().expect("nonempty") = b.clone();
                }
                _ => {
                    if bps.is_empty() {
                        bps.push(a.clone());
                    }
                    vals.push(v.clone());
                    bps.push(b.clone());
                }
            }
        }
        while vals.first().is_some_and(Quad2::is_zero) {
            vals.remove(0);
            bps.remove(0);
        }
        while vals.last().is_some_and(Quad2::is_zero) {
            vals.pop();
            bps.pop();
        }
        if vals.is_empty() {
            return Self::zero();
        }
        Self {
            breakpoints: bps,
            values: vals,
        }
    }

    /// Maximum of the values, zero included when the function vanishes somewhere.
    #[must_use]
    pub fn max_value(&self) -> Quad2 {
        self.values.iter().cloned().fold(Quad2::zero(), Quad2::max)
    }

    #[must_use]
    pub fn support_hull(&self) -> Option<(Rational, Rational)> {
        self.support().hull()
    }

    /// Lebesgue measure of `{f = v}` inside the finite support window.
    #[must_use]
    pub fn level_measure(&self, v: &Quad2) -> Rational {
        self.pieces()
            .filter(|(_, _, x)| *x == v)
            .fold(Rational::zero(), |acc, (a, b, _)| acc + (b - a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat};

    fn q(n: i64) -> Quad2 {
        Quad2::from_int(n)
    }

    #[test]
    fn norms_of_basic_functions() {
        let f = StepFunction::indicator(int(0), int(1)).unwrap();
        assert_eq!(f.l1_norm(), q(1));
        assert_eq!(f.l2_norm_sq(), q(1));

        let g = StepFunction::constant(int(0), rat(1, 2), Quad2::sqrt2()).unwrap();
        assert_eq!(g.l1_norm(), Quad2::new(int(0), rat(1, 2)));
        assert_eq!(g.l2_norm_sq(), q(1));

        let h = StepFunction::new(vec![int(0), rat(1, 2), int(1)], vec![q(1), q(-1)]).unwrap();
        assert_eq!(h.l1_norm(), q(1));
        assert_eq!(h.l2_norm_sq(), q(1));
        assert_eq!(h.integral(), q(0));
    }

    #[test]
    fn sum_pieces_matches_pairwise_add() {
        let pieces = vec![
            (int(0), int(2), q(1)),
            (int(1), int(3), q(2)),
            (rat(1, 2), int(1), Quad2::sqrt2()),
        ];
        let s = StepFunction::sum_pieces(&pieces).unwrap();
        let mut t = StepFunction::zero();
        for (a, b, v) in &pieces {
            t = t.add(&StepFunction::constant(a.clone(), b.clone(), v.clone()).unwrap());
        }
        assert_eq!(s.simplify(), t.simplify());
        assert_eq!(s.eval(&rat(3, 4)), Quad2::new(int(1), int(1)));
        assert_eq!(s.eval(&int(3)), q(0));
    }

    #[test]
    fn rejects_malformed() {
        assert!(StepFunction::new(vec![int(1), int(0)], vec![q(1)]).is_err());
        assert!(StepFunction::new(vec![int(0), int(1)], vec![]).is_err());
        assert!(StepFunction::new(vec![int(0)], vec![]).is_err());
    }

    #[test]
    fn restricted_norm() {
        let f = StepFunction::constant(int(0), int(4), q(3)).unwrap();
        let e = PointSet::from_intervals(vec![(int(1), int(2)), (int(3), int(5))]);
        assert_eq!(f.l2_norm_sq_on(&e), q(18));
    }
}
