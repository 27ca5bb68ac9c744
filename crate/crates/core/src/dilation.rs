//! Dilated and translated copies `Φ_{m,l}(x) = 2^{m/2}Φ(2^m x − l)` and the
//! `√log N` bound for their positive combinations.

use std::collections::HashSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{int, is_dyadic, shl, Quad2, Rational};
use crate::step::StepFunction;
use crate::stopping::{log_factor, HAAR_CONSTANT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DilationIndex {
    pub m: i32,
    pub l: i64,
}

impl DilationIndex {
    #[must_use]
    pub const fn new(m: i32, l: i64) -> Self {
        Self { m, l }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub m: i32,
    pub l: i64,
    #[serde(with = "crate::json::rational")]
    pub c: Rational,
}

impl Term {
    #[must_use]
    pub fn new(m: i32, l: i64, c: Rational) -> Self {
        Self { m, l, c }
    }

    #[must_use]
    pub fn index(&self) -> DilationIndex {
        DilationIndex::new(self.m, self.l)
    }
}

/// `Σ c_k Φ_{m_k, l_k}` with distinct indices and positive coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CombinationRepr", into = "CombinationRepr")]
pub struct Combination {
    phi: StepFunction,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct CombinationRepr {
    phi: StepFunction,
    terms: Vec<Term>,
}

impl TryFrom<CombinationRepr> for Combination {
    type Error = Error;
    fn try_from(r: CombinationRepr) -> Result<Self> {
        Self::new(r.phi, r.terms)
    }
}

impl From<Combination> for CombinationRepr {
    fn from(c: Combination) -> Self {
        Self {
            phi: c.phi,
            terms: c.terms,
        }
    }
}

impl Combination {
    pub fn new(phi: StepFunction, terms: Vec<Term>) -> Result<Self> {
        if terms.len() < 2 {
            return Err(Error::pre("a combination needs N ≥ 2 terms"));
        }
        let mut seen = HashSet::with_capacity(terms.len());
        if let Some(t) = terms.iter().find(|t| !seen.insert(t.index())) {
            return Err(Error::pre(format!("repeated index ({}, {})", t.m, t.l)));
        }
        if terms.iter().any(|t| t.c <= Rational::zero()) {
            return Err(Error::pre("coefficients must be positive"));
        }
        Ok(Self { phi, terms })
    }

    /// No validation. Used for single terms and negative controls.
    #[must_use]
    pub fn unchecked(phi: StepFunction, terms: Vec<Term>) -> Self {
        Self { phi, terms }
    }

    #[must_use]
    pub fn phi(&self) -> &StepFunction {
        &self.phi
    }

    #[must_use]
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
}

/// `2^{m/2}Φ(2^m x − l)`: breakpoints `b ↦ (b + l)/2^m`.
pub fn dilate_translate(phi: &StepFunction, idx: DilationIndex) -> Result<StepFunction> {
    if let Some(b) = phi.breakpoints().iter().find(|b| !is_dyadic(b)) {
        return Err(Error::invalid(format!("breakpoint {b} is not dyadic")));
    }
    let shift = int(idx.l);
    let e = -i64::from(idx.m);
    let bps = phi
        .breakpoints()
        .iter()
        .map(|b| shl(&(b + &shift), e))
        .collect();
    let s = Quad2::pow2_half(i64::from(idx.m));
    let vals = phi.values().iter().map(|v| v * &s).collect();
    StepFunction::new(bps, vals)
}

/// The combination as an explicit step function.
pub fn combination_function(comb: &Combination) -> Result<StepFunction> {
    let mut pieces = Vec::new();
    for t in &comb.terms {
        let f = dilate_translate(&comb.phi, t.index())?;
        let c = Quad2::from_rational(t.c.clone());
        pieces.extend(f.pieces().map(|(a, b, v)| (a.clone(), b.clone(), v * &c)));
    }
    StepFunction::sum_pieces(&pieces)
}

/// Exact `‖Σ c_k Φ_{m_k,l_k}‖²`.
pub fn combination_norm_sq(comb: &Combination) -> Result<Quad2> {
    Ok(combination_function(comb)?.l2_norm_sq())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct T3Report {
    pub n_terms: usize,
    pub log_factor: u64,
    pub lhs_sq: Quad2,
    /// `‖Φ‖₁²·Σ c_k²`.
    pub rhs_base: Quad2,
    pub bound_ok: bool,
}

impl T3Report {
    #[must_use]
    pub fn bound(&self) -> Quad2 {
        self.rhs_base
            .scale(&int((HAAR_CONSTANT * self.log_factor) as i64))
    }

    #[must_use]
    pub fn ratio_f64(&self) -> f64 {
        self.lhs_sq.to_f64() / self.rhs_base.to_f64()
    }
}

/// Both sides of the bound without checking the combination invariants.
pub fn t3_evaluate(comb: &Combination) -> Result<T3Report> {
    if comb.phi.is_zero() {
        return Err(Error::pre("Φ must not vanish"));
    }
    if comb.terms.is_empty() {
        return Err(Error::pre("no terms"));
    }
    let lhs_sq = combination_norm_sq(comb)?;
    let l1 = comb.phi.l1_norm();
    let csq = comb
        .terms
        .iter()
        .fold(Rational::zero(), |acc, t| acc + &t.c * &t.c);
    let rhs_base = l1.square().scale(&csq);
    let log_factor = log_factor(comb.terms.len());
    let bound = rhs_base.scale(&int((HAAR_CONSTANT * log_factor) as i64));
    Ok(T3Report {
        n_terms: comb.terms.len(),
        log_factor,
        bound_ok: lhs_sq <= bound,
        lhs_sq,
        rhs_base,
    })
}

/// `‖Σ c_k Φ_{m_k,l_k}‖² ≤ 12·max(2,⌈log₂N⌉)·‖Φ‖₁²·Σ c_k²`.
pub fn t3_report(comb: &Combination) -> Result<T3Report> {
    Combination::new(comb.phi.clone(), comb.terms.clone())?;
    t3_evaluate(comb)
}

/// Full dyadic tree of depth `n` over `[0,1)` as `(m, l)` indices.
///
/// `c = 2^{−⌊m/2⌋}` keeps coefficients rational while making every term
/// `1_Δ` or `√2·1_Δ` when `Φ = 1_[0,1)`, so the overlap grows like `n`.
#[must_use]
pub fn full_tree_terms(depth: u32) -> Vec<Term> {
    let mut v = Vec::new();
    for m in 0..=depth as i32 {
        let c = crate::num::pow2(-i64::from(m / 2));
        for l in 0..(1i64 << m) {
            v.push(Term::new(m, l, c.clone()));
        }
    }
    v
}
