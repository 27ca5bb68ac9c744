//! Pinned constants for the divergence experiments.

use std::path::Path;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::divergence::{pow2_ceil_slack, pow2_floor, t4_measure, T4Row};
use crate::error::{Error, Result};
use crate::linear::PwLinear;
use crate::num::{int, Quad2, Rational};
use crate::series::{t4_coefficients, Multiplier};
use crate::wavelet::{
    choose_lambda, level_abs_sums, weighted_positive_measure, MotherWavelet, TruncationParams,
    WaveletSystem,
};

pub const CALIBRATION_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: u32,
    #[serde(with = "crate::json::rational")]
    pub lambda: Rational,
    pub mu0: u32,
    pub nu0: u32,
    pub l: u32,
    #[serde(with = "crate::json::rational")]
    pub epsilon: Rational,
    #[serde(with = "crate::json::rational")]
    pub kappa: Rational,
    #[serde(with = "crate::json::rational")]
    pub kappa_prime: Rational,
    /// Lower bound for the measured fractions, a power of two.
    #[serde(with = "crate::json::rational")]
    pub c0: Rational,
    /// Largest allowed increase of the block fractions in `s`.
    #[serde(with = "crate::json::rational")]
    pub t4_slack: Rational,
    #[serde(with = "crate::json::rational")]
    pub l12_fraction: Rational,
    pub t4_fractions: Vec<T4Row>,
    pub s_max: u32,
    pub grid_depth: u32,
    pub mother_hash: String,
}

impl Calibration {
    pub fn params(&self) -> Result<TruncationParams> {
        let p = TruncationParams::new(self.lambda.clone(), self.mu0, self.nu0)?;
        if p.l != self.l {
            return Err(Error::Calibration(format!(
                "l = {} disagrees with μ₀ + ν₀ − 1",
                self.l
            )));
        }
        Ok(p)
    }

    pub fn check_mother(&self, m: &MotherWavelet) -> Result<()> {
        if self.mother_hash != m.content_hash() {
            return Err(Error::Calibration(
                "calibration was made for a different mother wavelet".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Calibration(format!("{}: {e}", path.display())))?;
        let cal: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if cal.version != CALIBRATION_VERSION {
            return Err(Error::Calibration(format!(
                "unsupported calibration version {}",
                cal.version
            )));
        }
        if !cal.c0.is_positive() || !cal.t4_slack.is_positive() {
            return Err(Error::Calibration("c0 and slack must be positive".into()));
        }
        cal.params()?;
        Ok(cal)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Chooses `λ`, measures `|{Σ a_k Σ_j|Ψ̄| > 8 Σ a_k Σ_j|Ψ̿|}|` on `[0, 1)`
/// over levels `1..=s_max` and the rearranged fractions for `w ≡ 1`, then
/// pins `c₀` and the slack.
pub fn calibrate(
    sys: &WaveletSystem,
    epsilon: &Rational,
    s_max: u32,
    grid_depth: u32,
) -> Result<Calibration> {
    let choice = choose_lambda(sys, epsilon)?;
    let p = choice.params.clone();
    let w = Multiplier::Constant { value: int(1) };
    let field = t4_coefficients(&w, s_max, &p)?;
    // a_kΨ̄ = (1/(w̄q))·y, so the weights are rational
    let mut diffs = Vec::new();
    for b in &field.blocks {
        let (up, low) = level_abs_sums(sys, b.k, &p)?;
        diffs.push((
            Quad2::from_rational(b.y_factor()),
            up.add(&low.scale_y(&int(-8)))?,
        ));
    }
    let terms: Vec<(Quad2, &PwLinear)> = diffs.iter().map(|(w, d)| (w.clone(), d)).collect();
    let l12_fraction = weighted_positive_measure(&terms, &int(0), &int(1))?
        .as_rational()
        .cloned()
        .ok_or_else(|| Error::Violation("L12 fraction is irrational".into()))?;
    let (rows, _, _) = t4_measure(sys, &w, s_max, &p, grid_depth)?;
    let min_t4 = rows
        .iter()
        .map(|r| r.fraction.clone())
        .min()
        .unwrap_or_default();
    let floor_of = min_t4.clone().min(l12_fraction.clone());
    if !floor_of.is_positive() {
        return Err(Error::Violation(
            "a measured fraction is zero; no positive c0 exists".into(),
        ));
    }
    let rise = rows
        .windows(2)
        .map(|w| &w[1].fraction - &w[0].fraction)
        .max()
        .unwrap_or_default();
    Ok(Calibration {
        version: CALIBRATION_VERSION,
        lambda: p.lambda.clone(),
        mu0: p.mu0,
        nu0: p.nu0,
        l: p.l,
        epsilon: epsilon.clone(),
        kappa: choice.kappa,
        kappa_prime: choice.kappa_prime,
        c0: pow2_floor(&floor_of),
        t4_slack: pow2_ceil_slack(&rise),
        l12_fraction,
        t4_fractions: rows,
        s_max,
        grid_depth,
        mother_hash: sys.mother.content_hash(),
    })
}
