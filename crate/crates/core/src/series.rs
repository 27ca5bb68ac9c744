//! Multiplier sequences, the Abel–Dini choice of `q_k`, coefficient fields
//! and the convergence demos.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{int, pow2, to_f64, Quad2, Rational};
use crate::wavelet::{g_k, subsystem_scale, TruncationParams, WaveletSystem};

/// Positive nondecreasing `w(n)`, `n ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Multiplier {
    Constant {
        #[serde(with = "crate::json::rational")]
        value: Rational,
    },
    /// `scale·n^exponent`.
    Power {
        exponent: u32,
        #[serde(with = "crate::json::rational", default = "one")]
        scale: Rational,
    },
    /// `scale·ln(n+1)^power`, evaluated in binary floating point and read
    /// back exactly.
    Log {
        power: f64,
        #[serde(default = "one_f64")]
        scale: f64,
    },
    /// Listed values for `n ≤ len`, then `last·(n/len)^tail_exponent`.
    Table {
        #[serde(with = "crate::json::rational_vec")]
        values: Vec<Rational>,
        tail_exponent: u32,
    },
}

fn one() -> Rational {
    Rational::one()
}

fn one_f64() -> f64 {
    1.0
}

impl Multiplier {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { value } if !value.is_positive() => {
                Err(Error::invalid("constant multiplier must be positive"))
            }
            Self::Power { scale, .. } if !scale.is_positive() => {
                Err(Error::invalid("power multiplier scale must be positive"))
            }
            Self::Log { power, scale }
                if !(*power >= 0.0 && *scale > 0.0 && power.is_finite() && scale.is_finite()) =>
            {
                Err(Error::invalid(
                    "log multiplier needs power ≥ 0 and scale > 0",
                ))
            }
            Self::Table { values, .. } => {
                if values.is_empty() || values.iter().any(|v| !v.is_positive()) {
                    return Err(Error::invalid("table values must be positive"));
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::invalid("table values must be nondecreasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `w(n)` exactly (the log family rounds once, in binary).
    pub fn eval(&self, n: u64) -> Result<Rational> {
        if n == 0 {
            return Err(Error::pre("multipliers are indexed from n = 1"));
        }
        Ok(match self {
            Self::Constant { value } => value.clone(),
            Self::Power { exponent, scale } => {
                scale * num_traits::pow(Rational::from_integer(n.into()), *exponent as usize)
            }
            Self::Log { .. } => Rational::from_float(self.eval_f64(n))
                .ok_or_else(|| Error::Range("multiplier overflow".into()))?,
            Self::Table {
                values,
                tail_exponent,
            } => {
                let len = values.len() as u64;
                if n <= len {
                    values[(n - 1) as usize].clone()
                } else {
                    let r = Rational::new(n.into(), len.into());
                    values[values.len() - 1].clone() * num_traits::pow(r, *tail_exponent as usize)
                }
            }
        })
    }

    #[must_use]
    pub fn eval_f64(&self, n: u64) -> f64 {
        match self {
            Self::Log { power, scale } => scale * ((n as f64) + 1.0).ln().powf(*power),
            _ => self.eval(n).map(|r| to_f64(&r)).unwrap_or(f64::NAN),
        }
    }

    /// Polynomial growth order of `w`; logarithms count as zero.
    #[must_use]
    pub fn growth_exponent(&self) -> u32 {
        match self {
            Self::Constant { .. } | Self::Log { .. } => 0,
            Self::Power { exponent, .. } => *exponent,
            Self::Table { tail_exponent, .. } => *tail_exponent,
        }
    }

    /// Certificate for `Σ 1/w(n) = ∞` from the family's tail.
    #[must_use]
    pub fn reciprocal_sum_diverges(&self) -> bool {
        self.growth_exponent() <= 1
    }

    /// Integral-test bound on `Σ_{m>n} 1/w(m)` for convergent families.
    #[must_use]
    pub fn reciprocal_tail_bound(&self, n: u64) -> Option<f64> {
        let e = f64::from(self.growth_exponent());
        if e <= 1.0 || n == 0 {
            return None;
        }
        // w(m) ≥ w(n)(m/n)^e on the tail
        let wn = self.eval_f64(n);
        Some(wn.recip() * (n as f64) / (e - 1.0))
    }

    /// `w̄(k) = w(kl − ν₀)`.
    pub fn wbar(&self, k: u32, p: &TruncationParams) -> Result<Rational> {
        let n = subsystem_scale(k, p) - i64::from(p.nu0);
        let n = u64::try_from(n)
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::pre(format!("kl − ν₀ = {n} is below 1 at level {k}")))?;
        self.eval(n)
    }
}

/// Running sum with Neumaier compensation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[must_use]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `q_k = Σ_{i≤k} 1/w̄(i)` with the partial sums of `Σ1/(w̄q)` and
/// `Σ1/(w̄q²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelDini {
    pub q: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl AbelDini {
    /// `Σ_{k=from+1}^{to} 1/(w̄q²)`, 1-based.
    #[must_use]
    pub fn second_tail(&self, from: usize, to: usize) -> f64 {
        self.second[to - 1] - self.second[from - 1]
    }

    /// `Σ_{k>K} 1/(w̄q²) ≤ 1/q_K` by telescoping.
    #[must_use]
    pub fn telescoping_bound(&self, from: usize) -> f64 {
        self.q[from - 1].recip()
    }

    #[must_use]
    pub fn q_strictly_increasing(&self) -> bool {
        self.q.windows(2).all(|w| w[0] < w[1])
    }
}

fn check_wbar<T: PartialOrd + Clone>(w: &[T], positive: impl Fn(&T) -> bool) -> Result<()> {
    if w.is_empty() {
        return Err(Error::pre("empty w̄ sequence"));
    }
    if !w.iter().all(positive) {
        return Err(Error::pre("w̄ must be positive"));
    }
    if let Some(i) = w.windows(2).position(|x| x[0] > x[1]) {
        return Err(Error::pre(format!("w̄ decreases at k = {}", i + 2)));
    }
    Ok(())
}

pub fn abel_dini(wbar: &[f64]) -> Result<AbelDini> {
    check_wbar(wbar, |x| *x > 0.0 && x.is_finite())?;
    let mut q = Vec::with_capacity(wbar.len());
    let mut first = Vec::with_capacity(wbar.len());
    let mut second = Vec::with_capacity(wbar.len());
    let (mut qs, mut s1, mut s2) = (
        CompensatedSum::default(),
        CompensatedSum::default(),
        CompensatedSum::default(),
    );
    for w in wbar {
        qs.add(w.recip());
        let qk = qs.value();
        s1.add((w * qk).recip());
        s2.add((w * qk * qk).recip());
        q.push(qk);
        first.push(s1.value());
        second.push(s2.value());
    }
    Ok(AbelDini { q, first, second })
}

/// Exact `q_k` for short windows.
pub fn abel_dini_exact(wbar: &[Rational]) -> Result<Vec<Rational>> {
    check_wbar(wbar, Signed::is_positive)?;
    let mut acc = Rational::zero();
    Ok(wbar
        .iter()
        .map(|w| {
            acc += w.recip();
            acc.clone()
        })
        .collect())
}

/// One level of `Σ_k Σ_{j∈G_k} a_k Ψ_{k,j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientBlock {
    pub k: u32,
    #[serde(with = "crate::json::rational")]
    pub wbar: Rational,
    #[serde(with = "crate::json::rational")]
    pub q: Rational,
    /// `a_k = 1/(2^{kl/2} w̄(k) q_k)`.
    pub a: Quad2,
    /// `|G_k|`.
    pub count: u64,
}

impl CoefficientBlock {
    /// `a_k·2^{kl/2} = 1/(w̄q)`, the factor in front of `y` in `a_kΨ_{k,j}`.
    #[must_use]
    pub fn y_factor(&self) -> Rational {
        (&self.wbar * &self.q).recip()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub blocks: Vec<CoefficientBlock>,
    /// `Σ_k |G_k| a_k² w̄(k)`.
    #[serde(with = "crate::json::rational")]
    pub weighted_square_sum: Rational,
    /// `2^{−ν₀} Σ_k 1/(w̄ q²)`.
    #[serde(with = "crate::json::rational")]
    pub identity_rhs: Rational,
    pub identity_ok: bool,
}

pub fn t4_coefficients(
    w: &Multiplier,
    big_k: u32,
    p: &TruncationParams,
) -> Result<CoefficientField> {
    w.validate()?;
    if !w.reciprocal_sum_diverges() {
        return Err(Error::pre(
            "Σ 1/w converges: wrong regime for the divergence construction",
        ));
    }
    if big_k == 0 {
        return Err(Error::pre("K ≥ 1 required"));
    }
    let wbar = (1..=big_k)
        .map(|k| w.wbar(k, p))
        .collect::<Result<Vec<_>>>()?;
    let q = abel_dini_exact(&wbar)?;
    let mut blocks = Vec::new();
    let mut lhs = Rational::zero();
    let mut rhs = Rational::zero();
    for (i, k) in (1..=big_k).enumerate() {
        let g = g_k(k, p)?;
        let count = (*g.end() - *g.start() + 1) as u64;
        let n = subsystem_scale(k, p);
        let inv = (&wbar[i] * &q[i]).recip();
        let a = Quad2::pow2_half(-n).scale(&inv);
        let a_sq = a
            .square()
            .as_rational()
            .cloned()
            .ok_or_else(|| Error::Violation("a_k² is irrational".into()))?;
        lhs += a_sq * Rational::from_integer(count.into()) * &wbar[i];
        rhs += (&wbar[i] * &q[i] * &q[i]).recip();
        blocks.push(CoefficientBlock {
            k,
            wbar: wbar[i].clone(),
            q: q[i].clone(),
            a,
            count,
        });
    }
    let identity_rhs = rhs * pow2(-i64::from(p.nu0));
    Ok(CoefficientField {
        identity_ok: lhs == identity_rhs,
        weighted_square_sum: lhs,
        identity_rhs,
        blocks,
    })
}

/// `∫_u^v ξ` for `ξ(u) = (1+|u|)^{−1−β}`, avoiding cancellation in the tails.
#[must_use]
pub fn xi_integral(u: f64, v: f64, beta: f64) -> f64 {
    debug_assert!(u <= v);
    // G(u) = sign(u)(1 − (1+|u|)^{−β})/β
    let h = |t: f64| (1.0 + t.abs()).powf(-beta);
    if u >= 0.0 {
        (h(u) - h(v)) / beta
    } else if v <= 0.0 {
        (h(v) - h(u)) / beta
    } else {
        (2.0 - h(u) - h(v)) / beta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiSquareSum {
    pub lhs: f64,
    /// Upper bound on the omitted terms.
    pub tail_bound: f64,
    /// `C_ξ = ‖ξ‖₁² + 2‖ξ‖₁`.
    pub c_xi: f64,
    pub bound: f64,
    pub bound_ok: bool,
    pub terms: u64,
}

/// Tail target for [`xi_square_sum_check`].
pub const XI_TAIL_TARGET: f64 = 1.0 / (1u64 << 40) as f64;

/// `Σ_j (∫_{−a}^{a} 2^{n/2}ξ(2^n t − j) dt)² ≤ C_ξ·a`.
pub fn xi_square_sum_check(n: i32, a: &Rational, beta: &Rational) -> Result<XiSquareSum> {
    if !a.is_positive() {
        return Err(Error::pre("a must be positive"));
    }
    if !beta.is_positive() || *beta > Rational::one() {
        return Err(Error::invalid("β must lie in (0, 1]"));
    }
    let b = to_f64(beta);
    let big_a = 2f64.powi(n) * to_f64(a);
    let scale = 2f64.powi(-n);
    // far terms: integral ≤ 2A·ξ(d) at distance d = |j| − A
    let tail = |d: f64| {
        let t = 2.0 * big_a;
        scale * t * t * 2.0 * (1.0 + d).powf(-1.0 - 2.0 * (1.0 + b)) * (1.0 + d) / (1.0 + 2.0 * b)
    };
    let mut d = 16.0;
    while tail(d) > XI_TAIL_TARGET {
        d *= 2.0;
    }
    let reach = (big_a + d).ceil() as i64;
    let mut s = CompensatedSum::default();
    for j in -reach..=reach {
        let jf = j as f64;
        let v = xi_integral(-big_a - jf, big_a - jf, b);
        s.add(scale * v * v);
    }
    let norm = 2.0 / b;
    let c_xi = norm * norm + 2.0 * norm;
    let lhs = s.value();
    let tail_bound = tail(d);
    let bound = c_xi * to_f64(a);
    Ok(XiSquareSum {
        bound_ok: lhs + tail_bound <= bound,
        lhs,
        tail_bound,
        c_xi,
        bound,
        terms: (2 * reach + 1) as u64,
    })
}

/// Coefficients `|a_{n,j}| = n^{−p}2^{−n/2}` for `n ≥ 1`, `1 ≤ j ≤ 2^n`
/// (`p = 0` stands for the zero field).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleCoefficients {
    pub power: u32,
    pub zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Config {
    pub grid_depth: u32,
    /// Scales summed explicitly; beyond them an analytic remainder is used.
    pub window: u32,
    pub check_scale: u32,
    pub tolerance: f64,
    /// Sample points are the cell midpoints of `[a, b) ⊂ [0, 1]`.
    pub sample_window: (f64, f64),
}

impl Default for T1Config {
    fn default() -> Self {
        Self {
            grid_depth: 12,
            window: 256,
            check_scale: 12,
            tolerance: 1e-3,
            sample_window: (0.0, 1.0),
        }
    }
}

fn check_sample_window((a, b): (f64, f64)) -> Result<()> {
    if !(0.0..1.0).contains(&a) || !(a < b && b <= 1.0) {
        return Err(Error::pre("sample window must satisfy 0 ≤ a < b ≤ 1"));
    }
    Ok(())
}

fn sample_point((a, b): (f64, f64), i: usize, points: usize) -> f64 {
    a + (b - a) * (i as f64 + 0.5) / points as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Row {
    pub n: u32,
    pub min_partial: f64,
    pub max_partial: f64,
    pub min_tail: f64,
    pub max_tail: f64,
    pub majorant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Report {
    pub rows: Vec<T1Row>,
    pub points: usize,
    pub monotone: bool,
    pub majorant_ok: bool,
    pub tail_at_check: f64,
    pub below_tolerance: bool,
}

/// `sup_t Σ_i ξ(t − i) ≤ 2ξ(0) + ‖ξ‖₁` with `‖ξ‖₁ = 2/β`.
fn xi_lattice_bound(beta: f64) -> f64 {
    2.0 + 2.0 / beta
}

/// `Σ_{j=1}^{2^n} ξ(t − j)`: nearby terms directly, the rest by integrals.
/// Works in offsets `d = j − ⌊t⌋` so huge `t` stays exact.
fn xi_lattice_sum(t: f64, n: u32, beta: f64) -> f64 {
    const NEAR: i64 = 64;
    let base = t.floor();
    let u = t - base;
    let lo_d = 1.0 - base;
    let hi_d = 2f64.powi(n as i32) - base;
    let dlo = lo_d.max(-NEAR as f64) as i64;
    let dhi = hi_d.min(NEAR as f64) as i64;
    let mut s = CompensatedSum::default();
    for d in dlo..=dhi {
        s.add((1.0 + (u - d as f64).abs()).powf(-1.0 - beta));
    }
    if lo_d < dlo as f64 {
        // u − d runs over (u + NEAR, u − lo_d]
        s.add(xi_integral(u - dlo as f64 + 0.5, u - lo_d + 0.5, beta));
    }
    if hi_d > dhi as f64 {
        s.add(xi_integral(dhi as f64 + 0.5 - u, hi_d + 0.5 - u, beta));
    }
    s.value()
}

/// Per-point partial sums of `Σ|a_{n,j}|·c2^{n/2}ξ(2^n x − j)` by scale and
/// the remaining tails. Requires `Σ1/w < ∞` and `Σ a²w < ∞`.
pub fn t1_abs_convergence_demo(
    sys: &WaveletSystem,
    w: &Multiplier,
    coeffs: ScaleCoefficients,
    cfg: &T1Config,
) -> Result<T1Report> {
    w.validate()?;
    if w.reciprocal_sum_diverges() {
        return Err(Error::pre(
            "Σ 1/w diverges: the convergence theorem does not apply",
        ));
    }
    if !coeffs.zero && 2 * coeffs.power <= w.growth_exponent() + 1 {
        return Err(Error::pre("Σ a²w diverges for these coefficients"));
    }
    if !coeffs.zero && coeffs.power < 2 {
        return Err(Error::pre("coefficient power must be at least 2"));
    }
    if cfg.check_scale == 0 || cfg.check_scale >= cfg.window || cfg.grid_depth > 20 {
        return Err(Error::pre(
            "need 1 ≤ check_scale < window and grid depth ≤ 20",
        ));
    }
    check_sample_window(cfg.sample_window)?;
    let c = to_f64(sys.mother.c());
    let beta = to_f64(sys.mother.beta());
    let p = f64::from(coeffs.power);
    let coef = |n: u32| {
        if coeffs.zero {
            0.0
        } else {
            (f64::from(n)).powf(-p)
        }
    };
    // Σ_{m>W} c·lattice·m^{−p} ≤ c·lattice·W^{1−p}/(p−1)
    let remainder = |from: u32| {
        if coeffs.zero {
            0.0
        } else {
            c * xi_lattice_bound(beta) * f64::from(from).powf(1.0 - p) / (p - 1.0)
        }
    };
    let points = 1usize << cfg.grid_depth;
    let window = cfg.window;
    let per_point: Vec<Vec<f64>> = (0..points)
        .map(|i| {
            let x = sample_point(cfg.sample_window, i, points);
            (1..=window)
                .map(|n| {
                    let t = 2f64.powi(n as i32) * x;
                    c * coef(n) * xi_lattice_sum(t, n, beta)
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    let mut monotone = true;
    let mut majorant_ok = true;
    let mut prev_tails: Vec<f64> = vec![f64::INFINITY; points];
    for n in 1..=cfg.check_scale {
        let mut row = T1Row {
            n,
            min_partial: f64::INFINITY,
            max_partial: 0.0,
            min_tail: f64::INFINITY,
            max_tail: 0.0,
            majorant: if coeffs.zero {
                0.0
            } else {
                c * xi_lattice_bound(beta) * f64::from(n).powf(1.0 - p) / (p - 1.0)
            },
        };
        for (pt, d) in per_point.iter().enumerate() {
            let partial: f64 = d[..n as usize].iter().sum();
            let tail = d[n as usize..].iter().sum::<f64>() + remainder(window);
            monotone &= tail <= prev_tails[pt];
            majorant_ok &= tail <= row.majorant + 1e-12;
            prev_tails[pt] = tail;
            row.min_partial = row.min_partial.min(partial);
            row.max_partial = row.max_partial.max(partial);
            row.min_tail = row.min_tail.min(tail);
            row.max_tail = row.max_tail.max(tail);
        }
        rows.push(row);
    }
    let tail_at_check = rows.last().map_or(0.0, |r| r.max_tail);
    Ok(T1Report {
        rows,
        points,
        monotone,
        majorant_ok,
        below_tolerance: tail_at_check < cfg.tolerance,
        tail_at_check,
    })
}

/// Coefficients in the natural ordering `φ_1, φ_2, …`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RcCoefficients {
    /// `a_n = n^{−p}(ln n)^{−q}` for `n ≥ 2`, `a_1 = 0`.
    PowerLog {
        #[serde(with = "crate::json::rational")]
        p: Rational,
        #[serde(with = "crate::json::rational")]
        q: Rational,
    },
    Single {
        index: u64,
        #[serde(with = "crate::json::rational")]
        value: Rational,
    },
}

impl RcCoefficients {
    /// `a_n = 1/(n ln n)`.
    #[must_use]
    pub fn n_log_n() -> Self {
        Self::PowerLog {
            p: int(1),
            q: int(1),
        }
    }

    #[must_use]
    pub fn eval(&self, n: u64) -> f64 {
        match self {
            Self::PowerLog { p, q } => {
                if n < 2 {
                    0.0
                } else {
                    let x = n as f64;
                    x.powf(-to_f64(p)) * x.ln().powf(-to_f64(q))
                }
            }
            Self::Single { index, value } => {
                if n == *index {
                    to_f64(value)
                } else {
                    0.0
                }
            }
        }
    }

    /// `Σ a_n² ln n < ∞`: `Σ n^{−2p}(ln n)^{1−2q}` converges iff `2p > 1`,
    /// or `2p = 1` and `2q − 1 > 1`.
    #[must_use]
    pub fn certificate(&self) -> bool {
        match self {
            Self::Single { index, .. } => *index >= 1,
            Self::PowerLog { p, q } => {
                let two_p = p * int(2);
                two_p > Rational::one()
                    || (two_p == Rational::one() && q * int(2) - int(1) > Rational::one())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcConfig {
    pub k_max: u32,
    pub grid_depth: u32,
    pub tolerance: f64,
    pub sample_window: (f64, f64),
}

impl Default for RcConfig {
    fn default() -> Self {
        Self {
            k_max: 10,
            grid_depth: 12,
            tolerance: 1e-2,
            sample_window: (0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcRow {
    pub k: u32,
    pub delta_sup: f64,
    pub delta_l2_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcReport {
    pub rows: Vec<RcRow>,
    pub sum_l2_sq: f64,
    /// `Σ_{n=2}^{2^{K+1}} a_n² ln n`.
    pub weighted_sum: f64,
    /// `C = 2N‖ψ‖₂²/ln 2` with `N` the most terms of one block alive at a
    /// point.
    pub constant: f64,
    pub bound_ok: bool,
    pub edge_sup: f64,
    pub edge_below_tolerance: bool,
}

/// Mother value in floating point (display and quadrature only).
fn shape_f64(sys: &WaveletSystem, t: f64) -> f64 {
    let pieces = sys.mother.shape().pieces();
    let i = pieces.partition_point(|p| to_f64(&p.x0) <= t);
    if i == 0 {
        return 0.0;
    }
    let p = &pieces[i - 1];
    let (x0, x1) = (to_f64(&p.x0), to_f64(&p.x1));
    if t >= x1 {
        return 0.0;
    }
    let (y0, y1) = (to_f64(&p.y0), to_f64(&p.y1));
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}

/// Block maxima `δ_k(x) = max_{2^k<m≤2^{k+1}} |Σ_{i=2^k}^m a_iφ_i(x)|` in
/// the natural ordering `φ_{2^s+j−1} = φ_{s,j}`.
pub fn rc_convergence_demo(
    sys: &WaveletSystem,
    a: &RcCoefficients,
    cfg: &RcConfig,
) -> Result<RcReport> {
    if !a.certificate() {
        return Err(Error::pre("Σ a_n² log n diverges for this family"));
    }
    // coarser grids sample only zeros of the finest blocks
    if cfg.k_max == 0 || cfg.grid_depth > 20 || cfg.k_max + 2 > cfg.grid_depth {
        return Err(Error::pre(
            "need 1 ≤ k_max ≤ grid depth − 2 and grid depth ≤ 20",
        ));
    }
    check_sample_window(cfg.sample_window)?;
    let span = cfg.sample_window.1 - cfg.sample_window.0;
    let (s0, s1) = sys
        .mother
        .shape()
        .support()
        .hull()
        .map(|(a, b)| (to_f64(&a), to_f64(&b)))
        .unwrap_or((0.0, 0.0));
    let width = (s1 - s0).ceil().max(1.0);
    let points = 1usize << cfg.grid_depth;
    // φ_i(x) for i in [2^k, 2^{k+1}] with φ_i(x) ≠ 0, in index order
    let alive = |k: u32, x: f64| -> Vec<(u64, f64)> {
        let mut out = Vec::new();
        for s in [k, k + 1] {
            let scale = 2f64.powi(s as i32);
            let t = scale * x;
            let jlo = ((t - s1).floor() + 1.0).max(1.0) as u64;
            let jhi = ((t - s0).ceil() + 1.0).min(scale) as u64;
            for j in jlo..=jhi {
                let i = (1u64 << s) + j - 1;
                if i > 1u64 << (k + 1) {
                    break;
                }
                let v = scale.sqrt() * shape_f64(sys, t - (j as f64 - 1.0));
                if v != 0.0 {
                    out.push((i, a.eval(i) * v));
                }
            }
        }
        out.sort_by_key(|e| e.0);
        out
    };
    let mut rows = Vec::new();
    let mut total = 0.0;
    for k in 1..=cfg.k_max {
        let mut sup: f64 = 0.0;
        let mut l2 = CompensatedSum::default();
        for pt in 0..points {
            let x = sample_point(cfg.sample_window, pt, points);
            let mut s = 0.0;
            let mut best: f64 = 0.0;
            for (i, v) in alive(k, x) {
                s += v;
                // the first index alone is not a block sum
                if i > 1u64 << k {
                    best = best.max(s.abs());
                }
            }
            sup = sup.max(best);
            l2.add(best * best * span / points as f64);
        }
        total += l2.value();
        rows.push(RcRow {
            k,
            delta_sup: sup,
            delta_l2_sq: l2.value(),
        });
    }
    let mut weighted = CompensatedSum::default();
    for n in 2..=(1u64 << (cfg.k_max + 1)) {
        let v = a.eval(n);
        weighted.add(v * v * (n as f64).ln());
    }
    let norm_sq = to_f64(&sys.mother.shape().l2_y_sq());
    let constant = 2.0 * (width + 2.0) * norm_sq / std::f64::consts::LN_2;
    let edge_sup = rows.last().map_or(0.0, |r| r.delta_sup);
    Ok(RcReport {
        bound_ok: total <= constant * weighted.value() + 1e-12,
        rows,
        sum_l2_sq: total,
        weighted_sum: weighted.value(),
        constant,
        edge_sup,
        edge_below_tolerance: edge_sup < cfg.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use crate::wavelet::MotherWavelet;

    fn params() -> TruncationParams {
        TruncationParams::new(rat(1, 4), 5, 1).unwrap()
    }

    #[test]
    fn multiplier_families() {
        let c = Multiplier::Constant { value: int(1) };
        assert!(c.reciprocal_sum_diverges());
        let sq = Multiplier::Power {
            exponent: 2,
            scale: int(1),
        };
        assert!(!sq.reciprocal_sum_diverges());
        assert_eq!(sq.eval(7).unwrap(), int(49));
        assert!(sq.reciprocal_tail_bound(10).unwrap() >= 0.095);
        let t = Multiplier::Table {
            values: vec![int(1), int(2)],
            tail_exponent: 1,
        };
        assert_eq!(t.eval(4).unwrap(), int(4));
        let bad = Multiplier::Table {
            values: vec![int(2), int(1)],
            tail_exponent: 1,
        };
        assert!(bad.validate().is_err());
        let json = r#"{"family":"power","params":{"exponent":2}}"#;
        let w: Multiplier = serde_json::from_str(json).unwrap();
        assert_eq!(w, sq);
        assert_eq!(c.wbar(2, &params()).unwrap(), int(1));
        assert_eq!(sq.wbar(2, &params()).unwrap(), int(81));
    }

    #[test]
    fn abel_dini_constant_and_harmonic() {
        let r = abel_dini(&[1.0; 1000]).unwrap();
        assert_eq!(r.q[999], 1000.0);
        assert!(r.q_strictly_increasing());
        assert!((r.second[999] - 1.6439345666815615).abs() < 1e-12);
        let w: Vec<f64> = (1..=10_000).map(f64::from).collect();
        let r = abel_dini(&w).unwrap();
        assert!(r.second[9999] <= 1.0 / r.q[0] + 1.0 + 1e-12);
        assert!(r.second_tail(100, 10_000) <= r.telescoping_bound(100));
        assert!(abel_dini(&[2.0, 1.0]).is_err());
        assert!(abel_dini(&[0.0]).is_err());
    }

    #[test]
    fn exact_abel_dini() {
        let q = abel_dini_exact(&[int(1), int(2), int(2)]).unwrap();
        assert_eq!(q, vec![int(1), rat(3, 2), int(2)]);
    }

    #[test]
    fn t4_coefficient_identity() {
        let p = params();
        let f = t4_coefficients(&Multiplier::Constant { value: int(1) }, 3, &p).unwrap();
        assert!(f.identity_ok);
        assert_eq!(f.blocks[1].a, Quad2::pow2_half(-10).scale(&rat(1, 2)));
        assert_eq!(f.blocks[2].count, 1 << 14);
        let sq = Multiplier::Power {
            exponent: 2,
            scale: int(1),
        };
        assert!(t4_coefficients(&sq, 3, &p).is_err());
        let lin = Multiplier::Power {
            exponent: 1,
            scale: int(1),
        };
        assert!(t4_coefficients(&lin, 8, &p).unwrap().identity_ok);
    }

    #[test]
    fn xi_square_sum() {
        let r = xi_square_sum_check(0, &int(1), &int(1)).unwrap();
        assert_eq!(r.c_xi, 8.0);
        assert!(r.bound_ok);
        assert!(r.tail_bound < XI_TAIL_TARGET);
        let a = xi_square_sum_check(6, &int(1), &int(1)).unwrap();
        let b = xi_square_sum_check(10, &int(1), &int(1)).unwrap();
        assert!(a.lhs <= b.lhs && b.lhs <= 8.0);
        let d = xi_square_sum_check(6, &int(2), &int(1)).unwrap();
        assert!(d.bound_ok && d.lhs > a.lhs);
        assert!(
            xi_square_sum_check(0, &rat(1, 3), &int(1))
                .unwrap()
                .bound_ok
        );
        assert!(xi_square_sum_check(0, &int(0), &int(1)).is_err());
    }

    #[test]
    fn xi_integral_matches_closed_form() {
        // ∫_0^1 (1+u)^{-2} = 1/2
        assert!((xi_integral(0.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((xi_integral(-1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((xi_integral(-1e9, 1e9, 1.0) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn t1_demo_regimes() {
        let sys = WaveletSystem::unit(MotherWavelet::builtin());
        let w = Multiplier::Power {
            exponent: 2,
            scale: int(1),
        };
        let cfg = T1Config {
            grid_depth: 6,
            ..T1Config::default()
        };
        let r = t1_abs_convergence_demo(
            &sys,
            &w,
            ScaleCoefficients {
                power: 2,
                zero: false,
            },
            &cfg,
        )
        .unwrap();
        assert!(r.monotone);
        assert!(r.majorant_ok);
        // per-scale mass ≈ c‖ξ‖₁/n² = 8/n², so the tail after 12 is ≈ 0.64
        assert!(
            r.tail_at_check > 0.5 && r.tail_at_check < 0.8,
            "{}",
            r.tail_at_check
        );
        let z = t1_abs_convergence_demo(
            &sys,
            &w,
            ScaleCoefficients {
                power: 2,
                zero: true,
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(z.tail_at_check, 0.0);
        let lin = Multiplier::Power {
            exponent: 1,
            scale: int(1),
        };
        assert!(t1_abs_convergence_demo(
            &sys,
            &lin,
            ScaleCoefficients {
                power: 2,
                zero: false
            },
            &cfg
        )
        .is_err());
    }

    #[test]
    fn rc_demo() {
        let sys = WaveletSystem::unit(MotherWavelet::builtin());
        let cfg = RcConfig::default();
        let r = rc_convergence_demo(&sys, &RcCoefficients::n_log_n(), &cfg).unwrap();
        assert!(r.bound_ok);
        assert!(r.edge_below_tolerance);
        assert!(r
            .rows
            .windows(2)
            .skip(2)
            .all(|w| w[1].delta_sup <= w[0].delta_sup));
        let single = RcCoefficients::Single {
            index: 5,
            value: int(1),
        };
        let s = rc_convergence_demo(&sys, &single, &cfg).unwrap();
        assert!(s.rows[1].delta_sup > 0.0);
        assert!(s
            .rows
            .iter()
            .enumerate()
            .all(|(i, r)| i == 1 || r.delta_sup == 0.0));
        let edge = RcCoefficients::PowerLog {
            p: rat(1, 2),
            q: int(1),
        };
        assert!(rc_convergence_demo(&sys, &edge, &cfg).is_err());
        let boundary = RcCoefficients::PowerLog {
            p: rat(1, 2),
            q: rat(3, 2),
        };
        assert!(boundary.certificate());
    }
}
