//! Piecewise-linear functions `2^{h/2}·y(x)` with rational breakpoints and
//! rational node values.
//!
//! Pieces are half-open `[x0, x1)` and may leave gaps (value zero there).
//! Functions are identified up to null sets: jump discontinuities created by
//! truncation are represented by adjacent pieces.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{int, shl, Quad2, Rational};
use crate::pointset::PointSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinPiece {
    #[serde(with = "crate::json::rational")]
    pub x0: Rational,
    #[serde(with = "crate::json::rational")]
    pub x1: Rational,
    #[serde(with = "crate::json::rational")]
    pub y0: Rational,
    #[serde(with = "crate::json::rational")]
    pub y1: Rational,
}

impl LinPiece {
    #[must_use]
    pub fn new(x0: Rational, x1: Rational, y0: Rational, y1: Rational) -> Self {
        Self { x0, x1, y0, y1 }
    }

    #[must_use]
    pub fn len(&self) -> Rational {
        &self.x1 - &self.x0
    }

    #[must_use]
    pub fn slope(&self) -> Rational {
        (&self.y1 - &self.y0) / self.len()
    }

    /// Value of the line at `x` (no range check).
    #[must_use]
    pub fn at(&self, x: &Rational) -> Rational {
        &self.y0 + self.slope() * (x - &self.x0)
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.y0.is_zero() && self.y1.is_zero()
    }

    /// Sub-piece on `[a, b) ⊂ [x0, x1)`.
    #[must_use]
    pub fn restrict(&self, a: &Rational, b: &Rational) -> Self {
        Self::new(a.clone(), b.clone(), self.at(a), self.at(b))
    }

    /// Points strictly inside the piece where the line equals `level`.
    fn crossings(&self, level: &Rational, out: &mut Vec<Rational>) {
        let d0 = &self.y0 - level;
        let d1 = &self.y1 - level;
        if (d0.is_positive() && d1.is_negative()) || (d0.is_negative() && d1.is_positive()) {
            let t = &d0 / (&d0 - &d1);
            out.push(&self.x0 + t * self.len());
        }
    }

    /// Split at interior points where `y` equals any of `levels`.
    fn split_at_levels(&self, levels: &[Rational]) -> Vec<Self> {
        let mut cuts = Vec::new();
        for l in levels {
            self.crossings(l, &mut cuts);
        }
        cuts.sort();
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len() + 1);
        let mut a = self.x0.clone();
        for c in cuts {
            out.push(self.restrict(&a, &c));
            a = c;
        }
        out.push(self.restrict(&a, &self.x1));
        out
    }

    #[must_use]
    pub fn mid_value(&self) -> Rational {
        (&self.y0 + &self.y1) / int(2)
    }

    /// `∫|y|` over the piece.
    #[must_use]
    pub fn abs_integral(&self) -> Rational {
        self.split_at_levels(&[Rational::zero()])
            .iter()
            .map(|p| p.len() * p.mid_value().abs())
            .fold(Rational::zero(), |a, b| a + b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PwLinear {
    /// The function is `2^{half_exp/2}·y`.
    pub half_exp: i64,
    pieces: Vec<LinPiece>,
}

impl PwLinear {
    pub fn new(half_exp: i64, pieces: Vec<LinPiece>) -> Result<Self> {
        if pieces.iter().any(|p| p.x0 >= p.x1) {
            return Err(Error::invalid("empty linear piece"));
        }
        if pieces.windows(2).any(|w| w[0].x1 > w[1].x0) {
            return Err(Error::invalid("linear pieces overlap or are unsorted"));
        }
        Ok(Self { half_exp, pieces })
    }

    /// Graph through `(x_i, y_i)`; repeated abscissae encode jumps.
    pub fn from_nodes(half_exp: i64, xs: &[Rational], ys: &[Rational]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::invalid("need at least two nodes, one value each"));
        }
        if xs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("node abscissae must be nondecreasing"));
        }
        let pieces = (0..xs.len() - 1)
            .filter(|&i| xs[i] < xs[i + 1])
            .map(|i| {
                LinPiece::new(
                    xs[i].clone(),
                    xs[i + 1].clone(),
                    ys[i].clone(),
                    ys[i + 1].clone(),
                )
            })
            .collect();
        Self::new(half_exp, pieces)
    }

    #[must_use]
    pub fn zero() -> Self {
        Self::default()
    }

    #[must_use]
    pub fn pieces(&self) -> &[LinPiece] {
        &self.pieces
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(LinPiece::is_zero)
    }

    #[must_use]
    pub fn scale_factor(&self) -> Quad2 {
        Quad2::pow2_half(self.half_exp)
    }

    /// Sum of possibly overlapping pieces sharing one exponent.
    #[must_use]
    pub fn sum_pieces(half_exp: i64, pieces: &[LinPiece]) -> Self {
        // each piece adds the line A + S·x on [x0, x1)
        let mut events: Vec<(Rational, Rational, Rational)> = Vec::with_capacity(2 * pieces.len());
        for p in pieces {
            let s = p.slope();
            let a = &p.y0 - &s * &p.x0;
            events.push((p.x1.clone(), -a.clone(), -s.clone()));
            events.push((p.x0.clone(), a, s));
        }
        events.sort_by(|u, v| u.0.cmp(&v.0));
        let mut out = Vec::new();
        let (mut a, mut s) = (Rational::zero(), Rational::zero());
        let mut i = 0;
        while i < events.len() {
            let x = events[i].0.clone();
            while i < events.len() && events[i].0 == x {
                a += &events[i].1;
                s += &events[i].2;
                i += 1;
            }
            if i < events.len() && !(a.is_zero() && s.is_zero()) {
                let x1 = events[i].0.clone();
                let y0 = &a + &s * &x;
                let y1 = &a + &s * &x1;
                out.push(LinPiece::new(x, x1, y0, y1));
            }
        }
        Self {
            half_exp,
            pieces: out,
        }
    }

    /// The piece whose half-open domain contains `x`.
    #[must_use]
    pub fn piece_containing(&self, x: &Rational) -> Option<&LinPiece> {
        self.piece_at(x)
    }

    fn piece_at(&self, x: &Rational) -> Option<&LinPiece> {
        let i = self.pieces.partition_point(|p| p.x0 <= *x);
        (i > 0 && *x < self.pieces[i - 1].x1).then(|| &self.pieces[i - 1])
    }

    /// `y(x)`, without the `2^{h/2}` factor.
    #[must_use]
    pub fn eval_y(&self, x: &Rational) -> Rational {
        self.piece_at(x).map_or_else(Rational::zero, |p| p.at(x))
    }

    #[must_use]
    pub fn eval(&self, x: &Rational) -> Quad2 {
        self.scale_factor().scale(&self.eval_y(x))
    }

    /// All piece endpoints, sorted and deduplicated.
    #[must_use]
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self
            .pieces
            .iter()
            .flat_map(|p| [p.x0.clone(), p.x1.clone()])
            .collect();
        v.dedup();
        v
    }

    #[must_use]
    pub fn integral_y(&self) -> Rational {
        self.pieces
            .iter()
            .map(|p| p.len() * p.mid_value())
            .fold(Rational::zero(), |a, b| a + b)
    }

    #[must_use]
    pub fn integral(&self) -> Quad2 {
        self.scale_factor().scale(&self.integral_y())
    }

    #[must_use]
    pub fn l1_y(&self) -> Rational {
        self.pieces
            .iter()
            .map(LinPiece::abs_integral)
            .fold(Rational::zero(), |a, b| a + b)
    }

    #[must_use]
    pub fn l1_norm(&self) -> Quad2 {
        self.scale_factor().scale(&self.l1_y())
    }

    /// `∫y² = Σ len·(y0² + y0·y1 + y1²)/3`.
    #[must_use]
    pub fn l2_y_sq(&self) -> Rational {
        self.pieces
            .iter()
            .map(|p| p.len() * (&p.y0 * &p.y0 + &p.y0 * &p.y1 + &p.y1 * &p.y1) / int(3))
            .fold(Rational::zero(), |a, b| a + b)
    }

    #[must_use]
    pub fn l2_norm_sq(&self) -> Quad2 {
        Quad2::pow2_half(2 * self.half_exp).scale(&self.l2_y_sq())
    }

    /// Same function with every sign change moved onto a piece boundary.
    #[must_use]
    pub fn split_zero_crossings(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .flat_map(|p| p.split_at_levels(&[Rational::zero()]))
            .collect();
        Self {
            half_exp: self.half_exp,
            pieces,
        }
    }

    #[must_use]
    pub fn abs(&self) -> Self {
        let pieces = self
            .split_zero_crossings()
            .pieces
            .into_iter()
            .map(|p| LinPiece::new(p.x0, p.x1, p.y0.abs(), p.y1.abs()))
            .collect();
        Self {
            half_exp: self.half_exp,
            pieces,
        }
    }

    /// Maximal runs `(a, b, sign)` where `y` has a constant nonzero sign
    /// almost everywhere.
    #[must_use]
    pub fn sign_runs(&self) -> Vec<(Rational, Rational, Ordering)> {
        let mut runs: Vec<(Rational, Rational, Ordering)> = Vec::new();
        for p in self.split_zero_crossings().pieces {
            let s = p.mid_value().cmp(&Rational::zero());
            if s == Ordering::Equal {
                continue;
            }
            match runs.last_mut() {
                Some(r) if r.1 == p.x0 && r.2 == s => r.1 = p.x1,
                _ => runs.push((p.x0, p.x1, s)),
            }
        }
        runs
    }

    fn set_where(&self, keep: impl Fn(Ordering) -> bool) -> PointSet {
        PointSet::from_sorted(
            self.sign_runs()
                .into_iter()
                .filter(|r| keep(r.2))
                .map(|r| (r.0, r.1))
                .collect(),
        )
    }

    #[must_use]
    pub fn support(&self) -> PointSet {
        self.set_where(|s| s != Ordering::Equal)
    }

    #[must_use]
    pub fn positive_set(&self) -> PointSet {
        self.set_where(|s| s == Ordering::Greater)
    }

    #[must_use]
    pub fn negative_set(&self) -> PointSet {
        self.set_where(|s| s == Ordering::Less)
    }

    /// `(y·1{|y| ≥ t}, y·1{|y| < t})` for `t > 0`, exactly at the crossings.
    #[must_use]
    pub fn split_threshold(&self, t: &Rational) -> (Self, Self) {
        let levels = [t.clone(), -t];
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        for p in &self.pieces {
            for q in p.split_at_levels(&levels) {
                if q.mid_value().abs() >= *t {
                    upper.push(q);
                } else {
                    lower.push(q);
                }
            }
        }
        (
            Self {
                half_exp: self.half_exp,
                pieces: upper,
            },
            Self {
                half_exp: self.half_exp,
                pieces: lower,
            },
        )
    }

    /// `{|y| > t}` up to a null set.
    #[must_use]
    pub fn set_above(&self, t: &Rational) -> PointSet {
        let levels = [t.clone(), -t];
        PointSet::from_sorted(
            self.pieces
                .iter()
                .flat_map(|p| p.split_at_levels(&levels))
                .filter(|q| q.mid_value().abs() > *t)
                .map(|q| (q.x0, q.x1))
                .collect(),
        )
    }

    /// `|{|y| > t}|`.
    #[must_use]
    pub fn measure_above(&self, t: &Rational) -> Rational {
        self.set_above(t).measure()
    }

    /// `x ↦ 2^{n/2}·f(2^n x − s)`.
    #[must_use]
    pub fn dilate(&self, n: i64, s: &Rational) -> Self {
        let map = |x: &Rational| shl(&(x + s), -n);
        Self {
            half_exp: self.half_exp + n,
            pieces: self
                .pieces
                .iter()
                .map(|p| LinPiece::new(map(&p.x0), map(&p.x1), p.y0.clone(), p.y1.clone()))
                .collect(),
        }
    }

    /// `r·y`, exponent unchanged.
    #[must_use]
    pub fn scale_y(&self, r: &Rational) -> Self {
        Self {
            half_exp: self.half_exp,
            pieces: self
                .pieces
                .iter()
                .map(|p| LinPiece::new(p.x0.clone(), p.x1.clone(), &p.y0 * r, &p.y1 * r))
                .collect(),
        }
    }

    /// Pointwise sum; both must share `half_exp`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.half_exp != other.half_exp {
            return Err(Error::invalid(
                "adding functions with different scale exponents",
            ));
        }
        let mut pts: Vec<Rational> = self.breakpoints();
        pts.extend(other.breakpoints());
        pts.sort();
        pts.dedup();
        let mut pieces = Vec::new();
        for w in pts.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / int(2);
            let p = self.piece_at(&mid);
            let q = other.piece_at(&mid);
            if p.is_none() && q.is_none() {
                continue;
            }
            let y = |x: &Rational| {
                p.map_or_else(Rational::zero, |p| p.at(x))
                    + q.map_or_else(Rational::zero, |q| q.at(x))
            };
            pieces.push(LinPiece::new(a.clone(), b.clone(), y(a), y(b)));
        }
        Self::new(self.half_exp, pieces)
    }

    /// Equality as functions: same exponent and same values on every piece
    /// of the common refinement.
    #[must_use]
    pub fn same_function(&self, other: &Self) -> bool {
        if self.half_exp != other.half_exp {
            return self.is_zero() && other.is_zero();
        }
        let mut pts: Vec<Rational> = self.breakpoints();
        pts.extend(other.breakpoints());
        pts.sort();
        pts.dedup();
        pts.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / int(2);
            let lhs = self.piece_at(&mid);
            let rhs = other.piece_at(&mid);
            let at =
                |p: Option<&LinPiece>, x: &Rational| p.map_or_else(Rational::zero, |p| p.at(x));
            at(lhs, a) == at(rhs, a) && at(lhs, b) == at(rhs, b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    fn psi() -> PwLinear {
        PwLinear::from_nodes(
            0,
            &[int(0), rat(1, 4), rat(3, 4), int(1)],
            &[int(0), int(1), int(-1), int(0)],
        )
        .unwrap()
    }

    #[test]
    fn integrals_of_the_default_shape() {
        let p = psi();
        assert_eq!(p.integral_y(), int(0));
        assert_eq!(p.l1_y(), rat(1, 2));
        // ∫ψ² = 1/4·1/3 + 1/2·1/3 + 1/4·1/3 = 1/3
        assert_eq!(p.l2_y_sq(), rat(1, 3));
    }

    #[test]
    fn threshold_split() {
        let p = psi();
        let (up, lo) = p.split_threshold(&rat(1, 4));
        assert_eq!(up.support().measure(), rat(3, 4));
        assert_eq!(
            up.support(),
            PointSet::from_intervals(vec![(rat(1, 16), rat(7, 16)), (rat(9, 16), rat(15, 16))])
        );
        assert!(up.add(&lo).unwrap().same_function(&p));
        assert_eq!(up.l1_y(), rat(15, 32));
        assert_eq!(lo.l1_y(), rat(1, 32));
        assert_eq!(p.measure_above(&rat(1, 4)), rat(3, 4));
        assert_eq!(p.measure_above(&rat(1, 2)), rat(1, 2));
        let (up, lo) = p.split_threshold(&int(2));
        assert!(up.is_zero());
        assert!(lo.same_function(&p));
    }

    #[test]
    fn overlapping_pieces_add() {
        let p = psi();
        let shifted = p.dilate(0, &rat(1, 2));
        let mut all = p.pieces().to_vec();
        all.extend(shifted.pieces().iter().cloned());
        let s = PwLinear::sum_pieces(0, &all);
        assert!(s.same_function(&p.add(&shifted).unwrap()));
        assert_eq!(s.integral_y(), int(0));
        assert_eq!(s.eval_y(&rat(3, 4)), int(-1) + int(1));
        assert_eq!(s.eval_y(&rat(5, 8)), rat(-1, 2) + rat(1, 2));
    }

    #[test]
    fn dilation_moves_breakpoints() {
        let q = psi().dilate(1, &int(1));
        assert_eq!(q.half_exp, 1);
        assert_eq!(q.support().hull(), Some((rat(1, 2), int(1))));
        assert_eq!(q.integral(), Quad2::zero());
        assert_eq!(q.l2_norm_sq(), psi().l2_norm_sq());
    }

    #[test]
    fn sign_runs_of_the_default_shape() {
        let r = psi().sign_runs();
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].0.clone(), r[0].1.clone()), (int(0), rat(1, 2)));
        assert_eq!(r[0].2, Ordering::Greater);
        assert_eq!((r[1].0.clone(), r[1].1.clone()), (rat(1, 2), int(1)));
    }
}
