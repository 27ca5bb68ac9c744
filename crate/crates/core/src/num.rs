//! Exact scalars: arbitrary precision rationals and the field Q(√2).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Reduced fraction with a positive denominator.
pub type Rational = BigRational;

/// `n / d` as an exact rational. Panics on `d == 0`.
#[must_use]
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[must_use]
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^e` for any integer exponent.
#[must_use]
pub fn pow2(e: i64) -> Rational {
    let mag = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new_raw(BigInt::one(), mag)
    }
}

/// Multiply by `2^e` without going through a general product.
#[must_use]
pub fn shl(x: &Rational, e: i64) -> Rational {
    if e >= 0 {
        Rational::new(x.numer() << e as u64, x.denom().clone())
    } else {
        Rational::new(x.numer().clone(), x.denom() << e.unsigned_abs())
    }
}

/// Exponent `k` when the denominator equals `2^k`.
#[must_use]
pub fn dyadic_exponent(x: &Rational) -> Option<u64> {
    let d = x.denom();
    let tz = d.trailing_zeros().unwrap_or(0);
    if (d >> tz).is_one() {
        Some(tz)
    } else {
        None
    }
}

#[must_use]
pub fn is_dyadic(x: &Rational) -> bool {
    dyadic_exponent(x).is_some()
}

/// `Some(e)` when `x == 2^e`.
#[must_use]
pub fn exact_log2(x: &Rational) -> Option<i64> {
    if !x.is_positive() {
        return None;
    }
    let n = x.numer();
    let d = x.denom();
    if n.is_one() {
        let e = dyadic_exponent(x)?;
        Some(-(e as i64))
    } else if d.is_one() {
        let tz = n.trailing_zeros()?;
        ((n >> tz).is_one()).then_some(tz as i64)
    } else {
        None
    }
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
#[must_use]
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    if n == 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[must_use]
pub fn floor(x: &Rational) -> BigInt {
    x.numer().div_floor(x.denom())
}

#[must_use]
pub fn ceil(x: &Rational) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

#[must_use]
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // huge numerators and denominators: scale both down first
        let nb = x.numer().bits() as i64;
        let db = x.denom().bits() as i64;
        let shift = nb.max(db) - 1000;
        if shift <= 0 {
            return f64::NAN;
        }
        let n = (x.numer() >> shift as u64).to_f64().unwrap_or(f64::NAN);
        let d = (x.denom() >> shift as u64).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parse `"3/4"`, `"-2"` or a terminating decimal such as `"0.125"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        if !fp.chars().all(|c| c.is_ascii_digit()) || fp.is_empty() {
            return Err(bad());
        }
        let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Exact value `a + b·√2`.
///
/// Equality is structural: `√2` is irrational, so the pair `(a, b)` is unique.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Quad2 {
    pub a: Rational,
    pub b: Rational,
}

impl Quad2 {
    #[must_use]
    pub fn new(a: Rational, b: Rational) -> Self {
        Self { a, b }
    }

    #[must_use]
    pub fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }

    #[must_use]
    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    #[must_use]
    pub fn from_rational(a: Rational) -> Self {
        Self::new(a, Rational::zero())
    }

    #[must_use]
    pub fn from_int(n: i64) -> Self {
        Self::from_rational(int(n))
    }

    #[must_use]
    pub fn sqrt2() -> Self {
        Self::new(Rational::zero(), Rational::one())
    }

    /// `2^{m/2}`: rational for even `m`, a multiple of `√2` for odd `m`.
    #[must_use]
    pub fn pow2_half(m: i64) -> Self {
        if m.rem_euclid(2) == 0 {
            Self::from_rational(pow2(m.div_euclid(2)))
        } else {
            Self::new(Rational::zero(), pow2((m - 1).div_euclid(2)))
        }
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    #[must_use]
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    #[must_use]
    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.a)
    }

    /// Exact sign via the signs of `a`, `b` and the comparison `a²` vs `2b²`.
    #[must_use]
    pub fn sign(&self) -> Ordering {
        let sa = self.a.cmp(&Rational::zero());
        let sb = self.b.cmp(&Rational::zero());
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            _ => {
                let a2 = &self.a * &self.a;
                let b2 = &self.b * &self.b * int(2);
                match a2.cmp(&b2) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    #[must_use]
    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    #[must_use]
    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    #[must_use]
    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    #[must_use]
    pub fn conj(&self) -> Self {
        Self::new(self.a.clone(), -&self.b)
    }

    /// `a² − 2b²`, the field norm.
    #[must_use]
    pub fn norm(&self) -> Rational {
        &self.a * &self.a - &self.b * &self.b * int(2)
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::InvalidInput("inverse of zero".into()));
        }
        Ok(Self::new(&self.a / &n, -&self.b / &n))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    #[must_use]
    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(&self.a * r, &self.b * r)
    }

    #[must_use]
    pub fn square(&self) -> Self {
        self * self
    }

    #[must_use]
    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + std::f64::consts::SQRT_2 * to_f64(&self.b)
    }

    #[must_use]
    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    #[must_use]
    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl PartialOrd for Quad2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Quad2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).sign()
    }
}

impl From<Rational> for Quad2 {
    fn from(a: Rational) -> Self {
        Self::from_rational(a)
    }
}

impl fmt::Display for Quad2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}*sqrt2", self.b)
        } else if self.b.is_negative() {
            write!(f, "{}-{}*sqrt2", self.a, -&self.b)
        } else {
            write!(f, "{}+{}*sqrt2", self.a, self.b)
        }
    }
}

macro_rules! quad_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Quad2> for &Quad2 {
            type Output = Quad2;
            fn $m(self, rhs: &Quad2) -> Quad2 {
                $body(self, rhs)
            }
        }
        impl $tr<Quad2> for Quad2 {
            type Output = Quad2;
            fn $m(self, rhs: Quad2) -> Quad2 {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Quad2> for Quad2 {
            type Output = Quad2;
            fn $m(self, rhs: &Quad2) -> Quad2 {
                $body(&self, rhs)
            }
        }
        impl $tr<Quad2> for &Quad2 {
            type Output = Quad2;
            fn $m(self, rhs: Quad2) -> Quad2 {
                $body(self, &rhs)
            }
        }
    };
}

quad_binop!(Add, add, |x: &Quad2, y: &Quad2| Quad2::new(
    &x.a + &y.a,
    &x.b + &y.b
));
quad_binop!(Sub, sub, |x: &Quad2, y: &Quad2| Quad2::new(
    &x.a - &y.a,
    &x.b - &y.b
));
quad_binop!(Mul, mul, |x: &Quad2, y: &Quad2| Quad2::new(
    &x.a * &y.a + &x.b * &y.b * int(2),
    &x.a * &y.b + &x.b * &y.a
));

impl AddAssign<&Quad2> for Quad2 {
    fn add_assign(&mut self, rhs: &Quad2) {
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl SubAssign<&Quad2> for Quad2 {
    fn sub_assign(&mut self, rhs: &Quad2) {
        self.a -= &rhs.a;
        self.b -= &rhs.b;
    }
}

impl Neg for Quad2 {
    type Output = Quad2;
    fn neg(self) -> Quad2 {
        Quad2::new(-self.a, -self.b)
    }
}

impl Neg for &Quad2 {
    type Output = Quad2;
    fn neg(self) -> Quad2 {
        Quad2::new(-&self.a, -&self.b)
    }
}

impl std::iter::Sum for Quad2 {
    fn sum<I: Iterator<Item = Quad2>>(iter: I) -> Quad2 {
        iter.fold(Quad2::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_of_mixed_terms() {
        // 3 - 2√2 ≈ 0.17 > 0, 1 - √2 < 0, -7 + 5√2 ≈ 0.07 > 0
        assert!(Quad2::new(int(3), int(-2)).is_positive());
        assert!(Quad2::new(int(1), int(-1)).is_negative());
        assert!(Quad2::new(int(-7), int(5)).is_positive());
        assert_eq!(Quad2::zero().sign(), Ordering::Equal);
    }

    #[test]
    fn pow2_half_squares_to_power() {
        for m in -7..8 {
            let s = Quad2::pow2_half(m);
            assert_eq!(s.square(), Quad2::from_rational(pow2(m)));
        }
        assert_eq!(Quad2::pow2_half(1), Quad2::sqrt2());
    }

    #[test]
    fn inverse_roundtrip() {
        let x = Quad2::new(rat(3, 5), rat(-7, 2));
        assert_eq!(&x * &x.inv().unwrap(), Quad2::one());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn log2_helpers() {
        assert_eq!(exact_log2(&rat(1, 8)), Some(-3));
        assert_eq!(exact_log2(&int(16)), Some(4));
        assert_eq!(exact_log2(&rat(3, 8)), None);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert!(is_dyadic(&rat(5, 64)));
        assert!(!is_dyadic(&rat(1, 3)));
    }
}
