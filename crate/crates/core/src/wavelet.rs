//! Piecewise-linear mother wavelets, their dilates `φ_{n,j}`, truncation at
//! level `λ2^{n/2}` and the constants that make truncated subsystems tree
//! systems.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linear::PwLinear;
use crate::num::{int, pow2, rat, shl, Quad2, Rational};
use crate::pointset::PointSet;
use crate::tree::{build_tree, sign_preserving, BuiltTree, Partition, TreeFunction, TreeLevel};

/// Bits of precision for irrational powers: brackets have width `2^{−70}`.
const ROOT_BITS: i64 = 70;

/// Mother shape as a piecewise-linear graph with declared constants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MotherRepr", into = "MotherRepr")]
pub struct MotherWavelet {
    breakpoints: Vec<Rational>,
    values: Vec<Rational>,
    alpha: Rational,
    beta: Rational,
    c: Rational,
    shape: PwLinear,
}

#[derive(Serialize, Deserialize)]
struct MotherRepr {
    #[serde(with = "crate::json::rational_vec")]
    breakpoints: Vec<Rational>,
    #[serde(with = "crate::json::rational_vec")]
    values: Vec<Rational>,
    #[serde(with = "crate::json::rational")]
    alpha: Rational,
    #[serde(with = "crate::json::rational")]
    beta: Rational,
    #[serde(with = "crate::json::rational")]
    c: Rational,
}

impl TryFrom<MotherRepr> for MotherWavelet {
    type Error = Error;
    fn try_from(r: MotherRepr) -> Result<Self> {
        Self::new(r.breakpoints, r.values, r.alpha, r.beta, r.c)
    }
}

impl From<MotherWavelet> for MotherRepr {
    fn from(m: MotherWavelet) -> Self {
        Self {
            breakpoints: m.breakpoints,
            values: m.values,
            alpha: m.alpha,
            beta: m.beta,
            c: m.c,
        }
    }
}

fn in_unit_range(x: &Rational) -> bool {
    x.is_positive() && *x <= Rational::one()
}

impl MotherWavelet {
    pub fn new(
        breakpoints: Vec<Rational>,
        values: Vec<Rational>,
        alpha: Rational,
        beta: Rational,
        c: Rational,
    ) -> Result<Self> {
        if !in_unit_range(&alpha) || !in_unit_range(&beta) {
            return Err(Error::invalid("alpha and beta must lie in (0, 1]"));
        }
        if !c.is_positive() {
            return Err(Error::invalid("c must be positive"));
        }
        let shape = PwLinear::from_nodes(0, &breakpoints, &values)?;
        Ok(Self {
            breakpoints,
            values,
            alpha,
            beta,
            c,
            shape,
        })
    }

    /// Hat-shaped default: nodes `(0, ¼, ¾, 1)`, values `(0, 1, −1, 0)`,
    /// `α = β = 1`, `c = 4`.
    #[must_use]
    pub fn builtin() -> Self {
        Self::new(
            vec![int(0), rat(1, 4), rat(3, 4), int(1)],
            vec![int(0), int(1), int(-1), int(0)],
            int(1),
            int(1),
            int(4),
        )
        .expect("built-in mother is valid")
    }

    #[must_use]
    pub fn shape(&self) -> &PwLinear {
        &self.shape
    }

    #[must_use]
    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    #[must_use]
    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    #[must_use]
    pub fn c(&self) -> &Rational {
        &self.c
    }

    /// Same graph with values multiplied by `r`; the declared constant is
    /// kept.
    pub fn scaled(&self, r: &Rational) -> Result<Self> {
        Self::new(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v * r).collect(),
            self.alpha.clone(),
            self.beta.clone(),
            self.c.clone(),
        )
    }

    /// Git-style blob hash of the JSON encoding.
    #[must_use]
    pub fn content_hash(&self) -> String {
        let body = serde_json::to_vec(self).expect("mother serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(&body);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Graph nodes with both one-sided values at jumps.
    fn nodes(&self) -> Vec<(Rational, Rational)> {
        self.breakpoints
            .iter()
            .cloned()
            .zip(self.values.iter().cloned())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Indices `n ≥ 0`, `1 ≤ j ≤ 2^n`.
    UnitInterval,
    /// Any integer translation.
    RealLine,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletSystem {
    pub mother: MotherWavelet,
    pub domain: Domain,
}

impl WaveletSystem {
    #[must_use]
    pub fn unit(mother: MotherWavelet) -> Self {
        Self {
            mother,
            domain: Domain::UnitInterval,
        }
    }

    pub fn check_index(&self, n: i64, j: i64) -> Result<()> {
        if self.domain == Domain::UnitInterval {
            if n < 0 {
                return Err(Error::pre(format!("scale {n} is negative")));
            }
            if n > 62 || j < 1 || j > 1i64 << n {
                return Err(Error::pre(format!("index ({n}, {j}) outside 1 ≤ j ≤ 2^n")));
            }
        }
        Ok(())
    }

    /// `φ_{n,j}(x) = 2^{n/2}ψ(2^n x − (j−1))`.
    pub fn phi(&self, n: i64, j: i64) -> Result<PwLinear> {
        self.check_index(n, j)?;
        Ok(self.mother.shape.dilate(n, &int(j - 1)))
    }

    /// `(φ̄, φ̿)`: the parts where `|φ| ≥ λ2^{n/2}` and `< λ2^{n/2}`.
    pub fn truncate(&self, n: i64, j: i64, lambda: &Rational) -> Result<(PwLinear, PwLinear)> {
        if !lambda.is_positive() {
            return Err(Error::pre("λ must be positive"));
        }
        Ok(self.phi(n, j)?.split_threshold(lambda))
    }
}

/// Closed bracket `[lo, hi]` around a possibly irrational value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    #[serde(with = "crate::json::rational")]
    pub lo: Rational,
    #[serde(with = "crate::json::rational")]
    pub hi: Rational,
}

impl Bracket {
    #[must_use]
    pub fn exact(x: Rational) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    #[must_use]
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    #[must_use]
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

fn perfect_root(x: &BigInt, q: u32) -> Option<BigInt> {
    let r = x.nth_root(q);
    (r.pow(q) == *x).then_some(r)
}

/// `x^e` for `x > 0` and rational `e > 0`.
pub fn pow_bracket(x: &Rational, e: &Rational) -> Result<Bracket> {
    if !x.is_positive() || !e.is_positive() {
        return Err(Error::invalid("pow_bracket needs x > 0 and e > 0"));
    }
    let p = e
        .numer()
        .to_u32()
        .ok_or_else(|| Error::Range("exponent numerator too large".into()))?;
    let q = e
        .denom()
        .to_u32()
        .ok_or_else(|| Error::Range("exponent denominator too large".into()))?;
    let z = num_traits::pow(x.clone(), p as usize);
    if q == 1 {
        return Ok(Bracket::exact(z));
    }
    if let (Some(a), Some(b)) = (perfect_root(z.numer(), q), perfect_root(z.denom(), q)) {
        return Ok(Bracket::exact(Rational::new(a, b)));
    }
    let scaled = shl(&z, ROOT_BITS * i64::from(q));
    let n = crate::num::floor(&scaled);
    let r = n.nth_root(q);
    let lo = shl(&Rational::from(r.clone()), -ROOT_BITS);
    let hi = shl(&Rational::from(r + 1), -ROOT_BITS);
    Ok(Bracket { lo, hi })
}

/// `ξ(x) = (1 + |x|)^{−(1+β)}`: exact when the power is rational, else a
/// bracket of width below `2^{−60}`.
pub fn xi(x: &Rational, beta: &Rational) -> Result<Bracket> {
    if !in_unit_range(beta) {
        return Err(Error::invalid("β must lie in (0, 1]"));
    }
    let base = (Rational::one() + x.abs()).recip();
    pow_bracket(&base, &(Rational::one() + beta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    #[serde(with = "crate::json::rational")]
    pub integral: Rational,
    pub mean_zero: bool,
    /// Smallest `c` with `|ψ| ≤ c·ξ` at every node (upper bracket).
    #[serde(with = "crate::json::rational")]
    pub size_min_c: Rational,
    /// Same quotient sampled inside the pieces (display only).
    pub size_min_c_sampled: f64,
    pub size_ok: bool,
    #[serde(with = "crate::json::rational_opt")]
    pub size_failure_at: Option<Rational>,
    /// Largest slope of the graph; `None` at a jump.
    #[serde(with = "crate::json::rational_opt")]
    pub lipschitz: Option<Rational>,
    /// Smallest `c` in `|ψ(t)−ψ(t′)| ≤ c|t−t′|^α·max(ξ(t), ξ(t′))` over node
    /// pairs at distance ≤ 1; `None` when no finite constant exists.
    #[serde(with = "crate::json::rational_opt")]
    pub modulus_min_c: Option<Rational>,
    pub modulus_ok: bool,
    #[serde(with = "crate::json::rational_pair_vec")]
    pub modulus_failure: Vec<(Rational, Rational)>,
    /// Scales at which the size bound was re-derived from `φ_{n,j}` data.
    pub depth_checked: u32,
    pub covariant: bool,
}

fn size_quotient(v: &Rational, s: &Rational, beta: &Rational) -> Result<Rational> {
    Ok(v.abs() / xi(s, beta)?.lo)
}

/// Mean zero exactly, the size bound `|φ_{n,j}(t)| ≤ c2^{n/2}ξ(2^n t − (j−1))`
/// at every node and the symmetric modulus bound; minimal constants are
/// reported alongside the verdict for the declared `c`.
pub fn check_axioms(mother: &MotherWavelet, depth: u32) -> Result<AxiomReport> {
    let beta = &mother.beta;
    let integral = mother.shape.integral_y();
    let nodes = mother.nodes();
    let mut size_min_c = Rational::zero();
    let mut size_failure_at = None;
    for (t, v) in &nodes {
        let q = size_quotient(v, t, beta)?;
        if q > mother.c && size_failure_at.is_none() {
            size_failure_at = Some(t.clone());
        }
        if q > size_min_c {
            size_min_c = q;
        }
    }
    let mut sampled = crate::num::to_f64(&size_min_c);
    for p in mother.shape.pieces() {
        for i in 1..16 {
            let t = &p.x0 + p.len() * rat(i, 16);
            let q = size_quotient(&p.at(&t), &t, beta)?;
            sampled = sampled.max(crate::num::to_f64(&q));
        }
    }
    // the same bound through φ_{n,j} at both ends of each scale
    let sys = WaveletSystem::unit(mother.clone());
    let mut covariant = true;
    for n in 0..=depth.min(40) {
        let n = i64::from(n);
        for j in [1, 1i64 << n] {
            let f = sys.phi(n, j)?;
            let mut worst = Rational::zero();
            for p in f.pieces() {
                for (t, y) in [(&p.x0, &p.y0), (&p.x1, &p.y1)] {
                    let s = shl(t, n) - int(j - 1);
                    worst = worst.max(size_quotient(y, &s, beta)?);
                }
            }
            covariant &= worst <= size_min_c;
        }
    }

    let lipschitz = {
        let mut best = Some(Rational::zero());
        for w in nodes.windows(2) {
            let dx = &w[1].0 - &w[0].0;
            let dy = (&w[1].1 - &w[0].1).abs();
            best = match best {
                Some(_) if dx.is_zero() && !dy.is_zero() => None,
                Some(b) if dx.is_zero() => Some(b),
                Some(b) => Some(b.max(dy / dx)),
                None => None,
            };
        }
        best
    };

    // the zero extension one unit beyond each end joins the pair set
    let mut pts = nodes.clone();
    if let (Some(first), Some(last)) = (nodes.first(), nodes.last()) {
        pts.insert(0, (&first.0 - int(1), Rational::zero()));
        pts.push((&last.0 + int(1), Rational::zero()));
    }
    let mut modulus_min_c = Some(Rational::zero());
    let mut modulus_failure = Vec::new();
    for (i, (t, u)) in pts.iter().enumerate() {
        for (s, v) in &pts[i + 1..] {
            let dx = s - t;
            if dx > Rational::one() {
                break;
            }
            let dy = (v - u).abs();
            if dy.is_zero() {
                continue;
            }
            let q = if dx.is_zero() {
                None
            } else {
                let d = pow_bracket(&dx, &mother.alpha)?.lo;
                let m = xi(t, beta)?.lo.max(xi(s, beta)?.lo);
                Some(dy / (d * m))
            };
            let fails = q.as_ref().map_or(true, |q| *q > mother.c);
            if fails && modulus_failure.is_empty() {
                modulus_failure.push((t.clone(), s.clone()));
            }
            modulus_min_c = match (modulus_min_c, q) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            };
        }
    }
    Ok(AxiomReport {
        mean_zero: integral.is_zero(),
        integral,
        size_ok: size_failure_at.is_none(),
        size_min_c,
        size_min_c_sampled: sampled,
        size_failure_at,
        lipschitz,
        modulus_ok: modulus_failure.is_empty(),
        modulus_min_c,
        modulus_failure,
        depth_checked: depth,
        covariant,
    })
}

/// `λ` with the integer constants `μ₀`, `ν₀` and `l = μ₀ + ν₀ − 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationParams {
    #[serde(with = "crate::json::rational")]
    pub lambda: Rational,
    pub mu0: u32,
    pub nu0: u32,
    pub l: u32,
}

impl TruncationParams {
    pub fn new(lambda: Rational, mu0: u32, nu0: u32) -> Result<Self> {
        if !lambda.is_positive() || mu0 == 0 || nu0 == 0 {
            return Err(Error::invalid("λ > 0 and positive μ₀, ν₀ required"));
        }
        let l = mu0 + nu0 - 1;
        if l <= 2 {
            return Err(Error::invalid("l = μ₀ + ν₀ − 1 must exceed 2"));
        }
        Ok(Self {
            lambda,
            mu0,
            nu0,
            l,
        })
    }
}

const MAX_EXPONENT: u32 = 4096;

/// Smallest `e ≥ 1` with `2^{(e+shift)·num} > r^{den}` where `num/den` is
/// the given exponent ratio.
fn smallest_power(r: &Rational, ratio: &Rational, shift: i64) -> Result<u32> {
    let num = ratio.numer().to_i64().unwrap_or(i64::MAX);
    let den = ratio.denom().to_usize().unwrap_or(usize::MAX);
    let target = num_traits::pow(r.clone(), den);
    (1..=MAX_EXPONENT)
        .find(|&e| pow2((i64::from(e) + shift) * num) > target)
        .ok_or_else(|| Error::Range("constant exceeds the exponent cap".into()))
}

/// `μ₀`: least with `2^{μ₀} > (c/λ)^{1/α}`; `ν₀`: least with
/// `2^{ν₀} > ¼(c/λ)^{1/(1+β)}`, raised until `l > 2`.
pub fn derive_constants(
    c: &Rational,
    alpha: &Rational,
    beta: &Rational,
    lambda: &Rational,
) -> Result<TruncationParams> {
    if !c.is_positive() || !lambda.is_positive() {
        return Err(Error::invalid("c and λ must be positive"));
    }
    if !in_unit_range(alpha) || !in_unit_range(beta) {
        return Err(Error::invalid("α and β must lie in (0, 1]"));
    }
    let r = c / lambda;
    let mu0 = smallest_power(&r, alpha, 0)?;
    let mut nu0 = smallest_power(&r, &(Rational::one() + beta), 2)?;
    while mu0 + nu0 - 1 <= 2 {
        nu0 += 1;
    }
    TruncationParams::new(lambda.clone(), mu0, nu0)
}

/// The upper truncation never takes both signs on one cell of
/// `τ + 𝒟_{n+μ₀}`.
pub fn sign_preserving_truncation_check(
    sys: &WaveletSystem,
    n: i64,
    j: i64,
    lambda: &Rational,
    mu0: u32,
    tau: &Rational,
) -> Result<bool> {
    let (upper, _) = sys.truncate(n, j, lambda)?;
    let m = i32::try_from(n + i64::from(mu0)).map_err(|_| Error::Range("grid scale".into()))?;
    Ok(sign_preserving(
        &Partition::grid(m, tau.clone()),
        &TreeFunction::Linear(upper),
    ))
}

/// Window of half-width `2^{ν₀−1−n}` around the centre of
/// `[(j−1)2^{−n}, j2^{−n}]`, shifted by `τ`.
#[must_use]
pub fn support_window(n: i64, j: i64, nu0: u32, tau: &Rational) -> (Rational, Rational) {
    let centre = shl(&(int(j - 1) + rat(1, 2)), -n);
    let half = pow2(i64::from(nu0) - 1 - n);
    (&centre - &half + tau, &centre + &half + tau)
}

/// The upper truncation's support lies in [`support_window`].
pub fn support_truncation_check(
    sys: &WaveletSystem,
    n: i64,
    j: i64,
    lambda: &Rational,
    nu0: u32,
    tau: &Rational,
) -> Result<bool> {
    if tau.abs() > pow2(i64::from(nu0) - n - 2) {
        return Err(Error::pre("|τ| exceeds 2^{ν₀−n−2}"));
    }
    let (upper, _) = sys.truncate(n, j, lambda)?;
    let (a, b) = support_window(n, j, nu0, tau);
    Ok(PointSet::interval(a, b).contains_set(&upper.support()))
}

/// Probe indices for the λ scan.
pub const LAMBDA_PROBES: [(i64, i64); 5] = [(0, 1), (1, 1), (1, 2), (3, 5), (5, 32)];

/// Smallest exponent tried is `2^{−40}`.
pub const LAMBDA_MIN_EXP: u32 = 40;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaChoice {
    #[serde(with = "crate::json::rational")]
    pub lambda: Rational,
    #[serde(with = "crate::json::rational")]
    pub epsilon: Rational,
    /// `min 2^{n/2}‖φ̄_{n,j}‖₁` over probes.
    #[serde(with = "crate::json::rational")]
    pub kappa: Rational,
    /// `min 2^n|{|φ̄_{n,j}| > λ2^{n/2}}|` over probes.
    #[serde(with = "crate::json::rational")]
    pub kappa_prime: Rational,
    /// `max 2^{n/2}‖φ̿_{n,j}‖₁` over probes.
    #[serde(with = "crate::json::rational")]
    pub lower_l1: Rational,
    pub scale_invariant: bool,
    pub params: TruncationParams,
}

/// Scans `λ = 2^{−i}` until the probes satisfy
/// `2^{n/2}‖φ̿‖₁ ≤ εκ`, `2^{n/2}‖φ̄‖₁ ≥ κ > 0` and a positive large-value
/// measure `κ′`.
pub fn choose_lambda(sys: &WaveletSystem, epsilon: &Rational) -> Result<LambdaChoice> {
    if !epsilon.is_positive() {
        return Err(Error::pre("ε must be positive"));
    }
    for i in 1..=LAMBDA_MIN_EXP {
        let lambda = pow2(-i64::from(i));
        let mut rows = Vec::with_capacity(LAMBDA_PROBES.len());
        for &(n, j) in &LAMBDA_PROBES {
            let (up, lo) = sys.truncate(n, j, &lambda)?;
            let s = pow2(n);
            rows.push((
                &s * up.l1_y(),
                &s * lo.l1_y(),
                &s * up.measure_above(&lambda),
            ));
        }
        let kappa = rows.iter().map(|r| r.0.clone()).min().unwrap_or_default();
        let lower = rows.iter().map(|r| r.1.clone()).max().unwrap_or_default();
        let kappa_prime = rows.iter().map(|r| r.2.clone()).min().unwrap_or_default();
        if kappa.is_positive() && kappa_prime.is_positive() && lower <= epsilon * &kappa {
            let m = &sys.mother;
            let params = derive_constants(&m.c, &m.alpha, &m.beta, &lambda)?;
            return Ok(LambdaChoice {
                scale_invariant: rows.windows(2).all(|w| w[0] == w[1]),
                lambda,
                epsilon: epsilon.clone(),
                kappa,
                kappa_prime,
                lower_l1: lower,
                params,
            });
        }
    }
    Err(Error::Violation(format!(
        "no λ ≥ 2^-{LAMBDA_MIN_EXP} meets the truncation bounds; the mother may violate the axioms"
    )))
}

/// Scale of the `k`-th subsystem level: `n = kl`.
#[must_use]
pub fn subsystem_scale(k: u32, p: &TruncationParams) -> i64 {
    i64::from(k) * i64::from(p.l)
}

/// `G_k = {j : 1 ≤ j·2^{ν₀} ≤ 2^{kl}}`.
pub fn g_k(k: u32, p: &TruncationParams) -> Result<RangeInclusive<i64>> {
    let e = subsystem_scale(k, p) - i64::from(p.nu0);
    if !(0..=61).contains(&e) || subsystem_scale(k, p) > 62 || k == 0 {
        return Err(Error::pre(format!(
            "level {k} is outside the supported range"
        )));
    }
    Ok(1..=1i64 << e)
}

/// `Ψ_{k,j} = φ_{kl, j2^{ν₀}}`.
pub fn subsystem_psi(
    sys: &WaveletSystem,
    k: u32,
    j: i64,
    p: &TruncationParams,
) -> Result<PwLinear> {
    if !g_k(k, p)?.contains(&j) {
        return Err(Error::pre(format!("j = {j} is outside G_{k}")));
    }
    sys.phi(subsystem_scale(k, p), j << p.nu0)
}

/// `τ_k = 1/((2^l − 1)·2^{μ₀+(k−1)l})`.
#[must_use]
pub fn tau_k(k: u32, p: &TruncationParams) -> Rational {
    let l = i64::from(p.l);
    let e = i64::from(p.mu0) + (i64::from(k) - 1) * l;
    (pow2(l) - int(1)).recip() * pow2(-e)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridIdentity {
    pub k: u32,
    /// `τ_k − τ_{k+1} = 2^{−(kl+μ₀)}`, so `τ_k + 𝒟_{kl+μ₀} = τ_{k+1} + 𝒟_{(k+1)l−ν₀+1}`.
    pub holds: bool,
    /// `0 < τ_k < 2^{ν₀−kl−2}`.
    pub tau_in_range: bool,
}

pub fn grid_identity_check(k: u32, p: &TruncationParams) -> Result<GridIdentity> {
    if k == 0 {
        return Err(Error::pre("k starts at 1"));
    }
    let n = subsystem_scale(k, p);
    let scale = n + i64::from(p.mu0);
    let next_scale = subsystem_scale(k + 1, p) - i64::from(p.nu0) + 1;
    let diff = tau_k(k, p) - tau_k(k + 1, p);
    let holds = scale == next_scale && diff == pow2(-scale);
    let t = tau_k(k, p);
    let tau_in_range = t.is_positive() && t < pow2(i64::from(p.nu0) - n - 2);
    Ok(GridIdentity {
        k,
        holds,
        tau_in_range,
    })
}

/// `ℱ_k = τ_k + 𝒟_{kl−ν₀+1}` and `𝒞_k = τ_k + 𝒟_{kl+μ₀}`.
pub fn subsystem_partitions(k: u32, p: &TruncationParams) -> Result<(Partition, Partition)> {
    let n = subsystem_scale(k, p);
    let f = i32::try_from(n - i64::from(p.nu0) + 1).map_err(|_| Error::Range("scale".into()))?;
    let c = i32::try_from(n + i64::from(p.mu0)).map_err(|_| Error::Range("scale".into()))?;
    let t = tau_k(k, p);
    Ok((Partition::grid(f, t.clone()), Partition::grid(c, t)))
}

/// Upper truncations `Ψ̄_{k,j}` of one level, in `j` order.
pub fn level_truncations(
    sys: &WaveletSystem,
    k: u32,
    p: &TruncationParams,
) -> Result<Vec<(PwLinear, PwLinear)>> {
    g_k(k, p)?
        .map(|j| subsystem_psi(sys, k, j, p).map(|f| f.split_threshold(&p.lambda)))
        .collect()
}

/// Tree system of the truncated subsystem over the given levels.
pub fn psi_tree(
    sys: &WaveletSystem,
    ks: RangeInclusive<u32>,
    p: &TruncationParams,
) -> Result<BuiltTree> {
    let mut levels = Vec::new();
    for k in ks {
        let (f_partition, c_partition) = subsystem_partitions(k, p)?;
        let funcs = level_truncations(sys, k, p)?
            .into_iter()
            .map(|(up, _)| TreeFunction::Linear(up))
            .collect();
        levels.push(TreeLevel {
            f_partition,
            c_partition,
            funcs,
        });
    }
    build_tree(&levels)
}

/// `Σ_j |Ψ̄_{k,j}|` and `Σ_j |Ψ̿_{k,j}|` as `2^{kl/2}·y`.
pub fn level_abs_sums(
    sys: &WaveletSystem,
    k: u32,
    p: &TruncationParams,
) -> Result<(PwLinear, PwLinear)> {
    let mut up = Vec::new();
    let mut lo = Vec::new();
    for (u, l) in level_truncations(sys, k, p)? {
        up.extend(u.abs().pieces().iter().cloned());
        lo.extend(l.abs().pieces().iter().cloned());
    }
    let h = subsystem_scale(k, p);
    Ok((PwLinear::sum_pieces(h, &up), PwLinear::sum_pieces(h, &lo)))
}

/// Measure of `{g > 0}` on `[x0, x1)` for `g` linear with end values
/// `g0`, `g1`.
fn positive_part_measure(len: &Rational, g0: &Quad2, g1: &Quad2) -> Result<Quad2> {
    let len = Quad2::from_rational(len.clone());
    match (g0.is_positive(), g1.is_positive()) {
        (true, true) => Ok(len),
        (false, false) => Ok(Quad2::zero()),
        (true, false) => Ok(&len * &g0.div(&(g0 - g1))?),
        (false, true) => Ok(&len * &g1.div(&(g1 - g0))?),
    }
}

/// Exact measure of `{Σ_k w_k·y_k > 0}` inside `[lo, hi)` where each `y_k`
/// is piecewise linear and `w_k ∈ ℚ(√2)`.
pub fn weighted_positive_measure(
    terms: &[(Quad2, &PwLinear)],
    lo: &Rational,
    hi: &Rational,
) -> Result<Quad2> {
    let mut pts: Vec<Rational> = vec![lo.clone(), hi.clone()];
    for (_, f) in terms {
        pts.extend(f.breakpoints().into_iter().filter(|x| x > lo && x < hi));
    }
    pts.sort();
    pts.dedup();
    let mut total = Quad2::zero();
    let two = int(2);
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mid = (a + b) / &two;
        let (mut g0, mut g1) = (Quad2::zero(), Quad2::zero());
        for (wt, f) in terms {
            if let Some(piece) = f.piece_containing(&mid) {
                g0 += &wt.scale(&piece.at(a));
                g1 += &wt.scale(&piece.at(b));
            }
        }
        total += &positive_part_measure(&(b - a), &g0, &g1)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct L12Report {
    /// `|{x ∈ Δ : S̄ > 8S̿}| / |Δ|`.
    pub fraction: Quad2,
    pub fraction_f64: String,
    #[serde(with = "crate::json::rational_opt")]
    pub c0: Option<Rational>,
    pub ok: Option<bool>,
}

/// Fraction of `Δ` where `Σ_{k=m+1}^M a_k Σ_j|Ψ̄_{k,j}|` beats eight times
/// the same sum of lower truncations.
pub fn l12_measure_check(
    sys: &WaveletSystem,
    m: u32,
    big_m: u32,
    a: &[Rational],
    delta: (&Rational, &Rational),
    p: &TruncationParams,
    c0: Option<&Rational>,
) -> Result<L12Report> {
    if big_m <= m {
        return Err(Error::pre("M must exceed m"));
    }
    if a.len() != (big_m - m) as usize {
        return Err(Error::pre("need one coefficient per level m+1..=M"));
    }
    if a.iter().any(Signed::is_negative) || a.iter().all(Zero::is_zero) {
        return Err(Error::pre(
            "coefficients must be nonnegative and not all zero",
        ));
    }
    let (lo, hi) = delta;
    let len = hi - lo;
    if len < pow2(-i64::from(m) * i64::from(p.l)) {
        return Err(Error::pre("|Δ| < 2^{-ml}"));
    }
    let mut diffs = Vec::new();
    for (i, k) in (m + 1..=big_m).enumerate() {
        let (up, low) = level_abs_sums(sys, k, p)?;
        let d = up.add(&low.scale_y(&int(-8)))?;
        let w = Quad2::pow2_half(d.half_exp).scale(&a[i]);
        diffs.push((w, d));
    }
    let terms: Vec<(Quad2, &PwLinear)> = diffs.iter().map(|(w, d)| (w.clone(), d)).collect();
    let meas = weighted_positive_measure(&terms, lo, hi)?;
    let fraction = meas.scale(&len.recip());
    Ok(L12Report {
        fraction_f64: format!("{:.6}", fraction.to_f64()),
        ok: c0.map(|c| fraction >= Quad2::from_rational(c.clone())),
        c0: c0.cloned(),
        fraction,
    })
}
