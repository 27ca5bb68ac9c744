use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde_json::json;

use dyadic_forge::calibration::calibrate as run_calibration;
use dyadic_forge::divergence::{t4_rearranged_divergence_demo, PermutationMode};
use dyadic_forge::num::{int, pow2, to_f64};
use dyadic_forge::series::{
    rc_convergence_demo, t1_abs_convergence_demo, Multiplier, RcCoefficients, RcConfig,
    ScaleCoefficients, T1Config,
};
use dyadic_forge::tree::{sign_preserving, Partition, TreeFunction};
use dyadic_forge::wavelet::{
    check_axioms, choose_lambda, grid_identity_check, support_truncation_check, TruncationParams,
    WaveletSystem,
};
use dyadic_forge::Rational;

use super::{calibration, json_arg, mother, rational_arg, sample_window, to_json};
use crate::args::{Common, Permutation};
use crate::output::{fmt_f64, Outcome, Table, Verdict};

/// Scales re-derived by the axiom check.
const AXIOM_DEPTH: u32 = 8;
/// Levels whose grid identity is checked.
const GRID_LEVELS: u32 = 6;

fn system(path: Option<&Path>) -> Result<WaveletSystem> {
    Ok(WaveletSystem::unit(mother(path)?))
}

#[derive(serde::Serialize)]
struct SignFailure {
    n: i64,
    j: i64,
    shift_index: u64,
}

/// Upper truncations at every `n ≤ max_n`, `1 ≤ j ≤ 2^n`, on the grids
/// `τ + 𝒟_{n+μ₀}` with `τ = i/T · 2^{−(n+μ₀)}`, `i < T`.
fn sign_sweep(
    sys: &WaveletSystem,
    p: &TruncationParams,
    max_n: u32,
    shifts: u64,
) -> Result<(u64, Vec<SignFailure>)> {
    let mut checked = 0;
    let mut failures = Vec::new();
    for n in 0..=i64::from(max_n) {
        let cell = pow2(-(n + i64::from(p.mu0)));
        let m = (n + i64::from(p.mu0)) as i32;
        let per_j: Vec<Vec<SignFailure>> = (1..=1i64 << n)
            .into_par_iter()
            .map(|j| {
                let (upper, _) = sys.truncate(n, j, &p.lambda)?;
                let f = TreeFunction::Linear(upper);
                Ok((0..shifts)
                    .filter(|&i| {
                        let tau = &cell * Rational::new((i as i64).into(), (shifts as i64).into());
                        !sign_preserving(&Partition::grid(m, tau), &f)
                    })
                    .map(|shift_index| SignFailure { n, j, shift_index })
                    .collect())
            })
            .collect::<Result<_>>()?;
        checked += (1u64 << n) * shifts;
        failures.extend(per_j.into_iter().flatten());
    }
    Ok((checked, failures))
}

pub fn check(c: &Common, mother_path: Option<&Path>, epsilon: &str) -> Result<Outcome> {
    let sys = system(mother_path)?;
    let max_n = c.depth.unwrap_or(12);
    let shifts = c.trials.unwrap_or(64);
    let axioms = check_axioms(&sys.mother, AXIOM_DEPTH.min(max_n))?;
    let params = match calibration(c)? {
        Some(cal) => {
            cal.check_mother(&sys.mother)?;
            cal.params()?
        }
        None => choose_lambda(&sys, &rational_arg(epsilon)?)?.params,
    };
    let (checked, failures) = sign_sweep(&sys, &params, max_n, shifts)?;
    let mut support_ok = true;
    for n in 0..=i64::from(max_n.min(10)) {
        for j in 1..=1i64 << n {
            support_ok &=
                support_truncation_check(&sys, n, j, &params.lambda, params.nu0, &int(0))?;
        }
    }
    let grids = (1..=GRID_LEVELS)
        .map(|k| grid_identity_check(k, &params))
        .collect::<dyadic_forge::Result<Vec<_>>>()?;
    let grids_ok = grids.iter().all(|g| g.holds && g.tau_in_range);

    let mut table = Table::new(&["check", "ok", "detail"]);
    table.push(vec![
        "mean_zero".into(),
        axioms.mean_zero.to_string(),
        axioms.integral.to_string(),
    ]);
    table.push(vec![
        "size".into(),
        axioms.size_ok.to_string(),
        axioms.size_min_c.to_string(),
    ]);
    table.push(vec![
        "modulus".into(),
        axioms.modulus_ok.to_string(),
        axioms
            .modulus_min_c
            .as_ref()
            .map_or("none".into(), ToString::to_string),
    ]);
    table.push(vec![
        "sign_preserving".into(),
        failures.is_empty().to_string(),
        checked.to_string(),
    ]);
    table.push(vec![
        "support".into(),
        support_ok.to_string(),
        String::new(),
    ]);
    table.push(vec![
        "grid_identity".into(),
        grids_ok.to_string(),
        GRID_LEVELS.to_string(),
    ]);

    let ok = axioms.mean_zero && axioms.size_ok && failures.is_empty() && support_ok && grids_ok;
    Ok(Outcome {
        json: json!({
            "mother_hash": sys.mother.content_hash(),
            "axioms": to_json(&axioms)?,
            "params": to_json(&params)?,
            "sign_preserving": {
                "max_scale": max_n,
                "shifts": shifts,
                "checked": checked,
                "failures": to_json(&failures)?,
            },
            "support_ok": support_ok,
            "grid_identities": to_json(&grids)?,
        }),
        table: Some(table),
        verdict: Verdict::check(ok, "wavelet axioms or truncation checks"),
    })
}

pub fn calibrate(
    c: &Common,
    mother_path: Option<&Path>,
    epsilon: &str,
    s_max: u32,
) -> Result<Outcome> {
    let sys = system(mother_path)?;
    let cal = run_calibration(&sys, &rational_arg(epsilon)?, s_max, c.depth.unwrap_or(16))?;
    let mut table = Table::new(&[
        "block_s",
        "threshold",
        "fraction",
        "fraction_f64",
        "min_cell_max",
        "median_cell_max",
    ]);
    for r in &cal.t4_fractions {
        table.push(t4_cells(r));
    }
    Ok(Outcome {
        json: to_json(&cal)?,
        table: Some(table),
        verdict: Verdict::Verified,
    })
}

fn t4_cells(r: &dyadic_forge::divergence::T4Row) -> Vec<String> {
    vec![
        r.block_s.to_string(),
        r.threshold.to_string(),
        r.fraction.to_string(),
        fmt_f64(to_f64(&r.fraction)),
        r.min_cell_max.to_string(),
        r.median_cell_max.to_string(),
    ]
}

pub fn t4(
    c: &Common,
    multiplier: &str,
    s_max: Option<u32>,
    perm: Permutation,
    mother_path: Option<&Path>,
) -> Result<Outcome> {
    let sys = system(mother_path)?;
    let w: Multiplier = json_arg(multiplier)?;
    let cal = calibration(c)?;
    let s_max = s_max.or(cal.as_ref().map(|k| k.s_max)).unwrap_or(3);
    let depth = c.depth.or(cal.as_ref().map(|k| k.grid_depth)).unwrap_or(16);
    let mode = match perm {
        Permutation::Adversarial => PermutationMode::Adversarial,
        Permutation::Identity => PermutationMode::Identity,
    };
    let report = t4_rearranged_divergence_demo(&sys, &w, s_max, depth, cal.as_ref(), mode)?;
    let mut table = Table::new(&[
        "block_s",
        "threshold",
        "fraction",
        "fraction_f64",
        "min_cell_max",
        "median_cell_max",
    ]);
    for r in &report.rows {
        table.push(t4_cells(r));
    }
    let verdict = match mode {
        PermutationMode::Identity => Verdict::ReportOnly,
        PermutationMode::Adversarial => {
            Verdict::check(report.ok(), "block fractions below c0 or not monotone")
        }
    };
    Ok(Outcome {
        json: to_json(&report)?,
        table: Some(table),
        verdict,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn t1(
    c: &Common,
    multiplier: &str,
    coeff_power: u32,
    zero: bool,
    check_scale: u32,
    scales: u32,
    tolerance: f64,
    mother_path: Option<&Path>,
) -> Result<Outcome> {
    let sys = system(mother_path)?;
    let w: Multiplier = json_arg(multiplier)?;
    let cfg = T1Config {
        grid_depth: c.depth.unwrap_or(12),
        window: scales,
        check_scale,
        tolerance,
        sample_window: sample_window(c)?,
    };
    let coeffs = ScaleCoefficients {
        power: coeff_power,
        zero,
    };
    let report = t1_abs_convergence_demo(&sys, &w, coeffs, &cfg)?;
    let mut table = Table::new(&[
        "n",
        "min_partial",
        "max_partial",
        "min_tail",
        "max_tail",
        "majorant",
    ]);
    for r in &report.rows {
        table.push(vec![
            r.n.to_string(),
            fmt_f64(r.min_partial),
            fmt_f64(r.max_partial),
            fmt_f64(r.min_tail),
            fmt_f64(r.max_tail),
            fmt_f64(r.majorant),
        ]);
    }
    let ok = report.monotone && report.majorant_ok && report.below_tolerance;
    Ok(Outcome {
        json: json!({ "config": to_json(&cfg)?, "multiplier": to_json(&w)?, "report": to_json(&report)? }),
        table: Some(table),
        verdict: Verdict::check(
            ok,
            format!(
                "tail {} at scale {check_scale} vs tolerance {tolerance}",
                report.tail_at_check
            ),
        ),
    })
}

pub fn rc(
    c: &Common,
    coefficients: &str,
    k_max: u32,
    tolerance: f64,
    mother_path: Option<&Path>,
) -> Result<Outcome> {
    let sys = system(mother_path)?;
    let a: RcCoefficients = json_arg(coefficients)?;
    let cfg = RcConfig {
        k_max,
        grid_depth: c.depth.unwrap_or(12),
        tolerance,
        sample_window: sample_window(c)?,
    };
    let report = rc_convergence_demo(&sys, &a, &cfg)?;
    let mut table = Table::new(&["k", "delta_sup", "delta_l2_sq"]);
    for r in &report.rows {
        table.push(vec![
            r.k.to_string(),
            fmt_f64(r.delta_sup),
            fmt_f64(r.delta_l2_sq),
        ]);
    }
    let ok = report.bound_ok && report.edge_below_tolerance;
    Ok(Outcome {
        json: json!({ "config": to_json(&cfg)?, "coefficients": to_json(&a)?, "report": to_json(&report)? }),
        table: Some(table),
        verdict: Verdict::check(ok, "block maxima bound or edge tolerance"),
    })
}
