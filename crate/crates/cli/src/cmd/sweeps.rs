use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use dyadic_forge::dilation::{t3_report, Combination, T3Report};
use dyadic_forge::json::Rat;
use dyadic_forge::num::{ceil_log2, int, to_f64};
use dyadic_forge::sample::{
    positive_rational, random_collection, random_dilation_family, random_tree_levels, trial_rng,
};
use dyadic_forge::stopping::{full_tree, haar_bound_report, HaarReport};
use dyadic_forge::tree::{
    adversarial_permutation, build_tree, check_permutation_order, haar_levels,
    verify_rearrangement_bound, TreeSystem,
};
use dyadic_forge::{DyadicInterval, IntervalCollection};

use super::{load_json, to_json};
use crate::args::{Common, Permutation};
use crate::output::{fmt_f64, Outcome, Table, Verdict};

const T3_HEADERS: [&str; 9] = [
    "family",
    "case",
    "N",
    "log_factor",
    "lhs_sq",
    "rhs_base",
    "ratio",
    "ratio_f64",
    "bound_ok",
];

fn haar_row(family: &str, case: u64, r: &HaarReport) -> Vec<String> {
    let ratio = r.ratio().unwrap_or_default();
    vec![
        family.into(),
        case.to_string(),
        r.n_terms.to_string(),
        r.log_factor.to_string(),
        r.lhs_sq.to_string(),
        r.rhs_base.to_string(),
        ratio.to_string(),
        fmt_f64(to_f64(&ratio)),
        r.bound_ok.to_string(),
    ]
}

fn t3_row(family: &str, case: u64, r: &T3Report) -> Result<Vec<String>> {
    Ok(vec![
        family.into(),
        case.to_string(),
        r.n_terms.to_string(),
        r.log_factor.to_string(),
        r.lhs_sq.to_string(),
        r.rhs_base.to_string(),
        r.lhs_sq.div(&r.rhs_base)?.to_string(),
        fmt_f64(r.ratio_f64()),
        r.bound_ok.to_string(),
    ])
}

fn random_haar(seed: u64, trial: u64, max_n: usize) -> Result<HaarReport> {
    let mut rng = trial_rng(seed, trial);
    let u = loop {
        let u = random_collection(&mut rng, max_n, true);
        if u.len() >= 2 {
            break u;
        }
    };
    let c: Vec<_> = (0..u.len()).map(|_| positive_rational(&mut rng)).collect();
    Ok(haar_bound_report(&u, &c)?)
}

/// Unit coefficients on the full dyadic tree of `[0, 1)`: the ratio is
/// exactly `depth + 1`.
fn sharpness_report(depth: u32) -> Result<HaarReport> {
    let u = full_tree(depth);
    Ok(haar_bound_report(&u, &vec![int(1); u.len()])?)
}

/// `lhs ≥ (⌈log₂N⌉ − 1)·rhs`.
fn sharp_enough(r: &HaarReport) -> bool {
    let l = i64::from(ceil_log2(r.n_terms as u64)) - 1;
    r.lhs_sq >= &r.rhs_base * int(l)
}

pub fn t3_sweep(c: &Common) -> Result<Outcome> {
    let trials = c.trials.unwrap_or(1000);
    let depth = c.depth.unwrap_or(14);
    let intervals: Vec<HaarReport> = (0..trials)
        .into_par_iter()
        .map(|t| random_haar(c.seed, 2 * t, 64))
        .collect::<Result<_>>()?;
    let dilations: Vec<T3Report> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (phi, terms) = random_dilation_family(&mut trial_rng(c.seed, 2 * t + 1), 24);
            Ok(t3_report(&Combination::new(phi, terms)?)?)
        })
        .collect::<Result<_>>()?;
    let sharp: Vec<HaarReport> = (2..=depth.max(2))
        .into_par_iter()
        .map(sharpness_report)
        .collect::<Result<_>>()?;

    let mut table = Table::new(&T3_HEADERS);
    for (t, r) in intervals.iter().enumerate() {
        table.push(haar_row("intervals", t as u64, r));
    }
    for (t, r) in dilations.iter().enumerate() {
        table.push(t3_row("dilations", t as u64, r)?);
    }
    for (d, r) in (2u64..).zip(&sharp) {
        table.push(haar_row("full_tree", d, r));
    }
    let bounds_ok = intervals.iter().all(|r| r.bound_ok)
        && dilations.iter().all(|r| r.bound_ok)
        && sharp.iter().all(|r| r.bound_ok);
    let sharp_ok = sharp.iter().all(sharp_enough);
    Ok(Outcome {
        json: json!({
            "seed": c.seed,
            "trials": trials,
            "intervals": to_json(&intervals)?,
            "dilations": to_json(&dilations)?,
            "full_tree": to_json(&sharp)?,
            "bounds_ok": bounds_ok,
            "sharpness_ok": sharp_ok,
        }),
        table: Some(table),
        verdict: Verdict::check(bounds_ok && sharp_ok, "T3 bound or sharpness row"),
    })
}

#[derive(Deserialize)]
struct HaarInput {
    intervals: Vec<DyadicInterval>,
    #[serde(default)]
    coefficients: Option<Vec<Rat>>,
}

pub fn haar_bound(c: &Common, input: Option<&Path>) -> Result<Outcome> {
    let reports: Vec<HaarReport> = match input {
        Some(p) => {
            let inp: HaarInput = load_json(p)?;
            let coeffs = match inp.coefficients {
                Some(v) => v.into_iter().map(|r| r.0).collect(),
                None => vec![int(1); inp.intervals.len()],
            };
            let u = IntervalCollection::multiset(inp.intervals);
            vec![haar_bound_report(&u, &coeffs)?]
        }
        None => (0..c.trials.unwrap_or(200))
            .into_par_iter()
            .map(|t| random_haar(c.seed, t, 128))
            .collect::<Result<_>>()?,
    };
    let mut table = Table::new(&T3_HEADERS);
    for (t, r) in reports.iter().enumerate() {
        table.push(haar_row("intervals", t as u64, r));
    }
    let ok = reports.iter().all(|r| r.bound_ok);
    Ok(Outcome {
        json: json!({ "seed": c.seed, "reports": to_json(&reports)?, "bound_ok": ok }),
        table: Some(table),
        verdict: Verdict::check(ok, "weighted indicator bound"),
    })
}

struct TreeCase {
    case: String,
    nodes: usize,
    order_valid: bool,
    report: dyadic_forge::tree::RearrangementReport,
}

fn tree_case(case: String, sys: &TreeSystem, perm: Permutation) -> Result<TreeCase> {
    let order = match perm {
        Permutation::Adversarial => adversarial_permutation(sys)?,
        Permutation::Identity => (1..=sys.nodes.len()).collect(),
    };
    let order_valid = check_permutation_order(sys, &order)?.is_none();
    let report = verify_rearrangement_bound(sys, &order)?;
    Ok(TreeCase {
        case,
        nodes: sys.nodes.len(),
        order_valid,
        report,
    })
}

pub fn tree_rearrange(c: &Common, input: Option<&Path>, perm: Permutation) -> Result<Outcome> {
    let cases: Vec<TreeCase> = match input {
        Some(p) => {
            let sys: TreeSystem = load_json(p)?;
            vec![tree_case("input".into(), &sys, perm)?]
        }
        None => {
            let mut v: Vec<TreeCase> = (0..c.trials.unwrap_or(100))
                .into_par_iter()
                .map(|t| {
                    let levels = random_tree_levels(&mut trial_rng(c.seed, t), 4, 6);
                    tree_case(t.to_string(), &build_tree(&levels)?.system, perm)
                })
                .collect::<Result<_>>()?;
            let d = c.depth.unwrap_or(5);
            let haar = build_tree(&haar_levels(d)?)?;
            v.push(tree_case(format!("haar_{d}"), &haar.system, perm)?);
            v
        }
    };
    let mut table = Table::new(&[
        "case",
        "nodes",
        "order_valid",
        "half_ok",
        "prefix_ok",
        "worst_ratio",
        "worst_prefix_ratio",
        "points",
        "sampled",
    ]);
    let mut rows = Vec::new();
    for k in &cases {
        let r = &k.report;
        table.push(vec![
            k.case.clone(),
            k.nodes.to_string(),
            k.order_valid.to_string(),
            r.half_ok.to_string(),
            r.prefix_ok.to_string(),
            fmt_f64(r.worst_ratio),
            fmt_f64(r.worst_prefix_ratio),
            r.points_checked.to_string(),
            r.sampled.to_string(),
        ]);
        rows.push(json!({
            "case": k.case,
            "nodes": k.nodes,
            "order_valid": k.order_valid,
            "report": to_json(r)?,
        }));
    }
    let ok = cases.iter().all(|k| k.order_valid && k.report.ok());
    let verdict = match perm {
        Permutation::Identity => Verdict::ReportOnly,
        Permutation::Adversarial => Verdict::check(ok, "rearrangement bound"),
    };
    Ok(Outcome {
        json: json!({ "seed": c.seed, "permutation": format!("{perm:?}").to_lowercase(), "cases": rows, "ok": ok }),
        table: Some(table),
        verdict,
    })
}
