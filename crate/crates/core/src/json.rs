//! Serde glue for exact scalars.
//!
//! A rational is written as `{"num": "3", "den": "4"}` with decimal strings so
//! that arbitrary precision survives any JSON reader. On input the shorthands
//! `"3/4"`, `"0.75"` and bare integers are accepted as well.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::num::{parse_rational, Quad2, Rational};

#[derive(Serialize, Deserialize)]
struct Frac {
    num: String,
    den: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RatIn {
    Frac(Frac),
    Text(String),
    Int(i64),
}

/// Owned wrapper used where a field is not a bare `Rational`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub Rational);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Frac {
            num: self.0.numer().to_string(),
            den: self.0.denom().to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RatIn::deserialize(d)? {
            RatIn::Frac(f) => {
                let n: BigInt = f.num.parse().map_err(D::Error::custom)?;
                let dd: BigInt = f.den.parse().map_err(D::Error::custom)?;
                if dd.is_zero() {
                    return Err(D::Error::custom("zero denominator"));
                }
                Ok(Rat(Rational::new(n, dd)))
            }
            RatIn::Text(t) => parse_rational(&t).map(Rat).map_err(D::Error::custom),
            RatIn::Int(i) => Ok(Rat(Rational::from_integer(i.into()))),
        }
    }
}

pub mod rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        Rat(r.clone()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        Rat::deserialize(d).map(|r| r.0)
    }
}

pub mod rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| Rat(r.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<Rat>::deserialize(d).map(|v| v.into_iter().map(|r| r.0).collect())
    }
}

pub mod rational_pair {
    use super::*;

    pub fn serialize<S: Serializer>(p: &(Rational, Rational), s: S) -> Result<S::Ok, S::Error> {
        (Rat(p.0.clone()), Rat(p.1.clone())).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(Rational, Rational), D::Error> {
        <(Rat, Rat)>::deserialize(d).map(|(a, b)| (a.0, b.0))
    }
}

pub mod rational_pair_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[(Rational, Rational)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(a, b)| (Rat(a.clone()), Rat(b.clone()))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<(Rational, Rational)>, D::Error> {
        Vec::<(Rat, Rat)>::deserialize(d).map(|v| v.into_iter().map(|(a, b)| (a.0, b.0)).collect())
    }
}

pub mod rational_opt {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        r.clone().map(Rat).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<Rat>::deserialize(d).map(|o| o.map(|r| r.0))
    }
}

#[derive(Serialize, Deserialize)]
struct QuadRepr {
    a: Rat,
    b: Rat,
}

impl Serialize for Quad2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QuadRepr {
            a: Rat(self.a.clone()),
            b: Rat(self.b.clone()),
        }
        .serialize(s)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QuadIn {
    Full(QuadRepr),
    Plain(Rat),
}

impl<'de> Deserialize<'de> for Quad2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match QuadIn::deserialize(d)? {
            QuadIn::Full(q) => Quad2::new(q.a.0, q.b.0),
            QuadIn::Plain(r) => Quad2::from_rational(r.0),
        })
    }
}
