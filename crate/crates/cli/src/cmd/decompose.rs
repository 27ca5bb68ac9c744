use std::path::Path;

use anyhow::Result;
use serde_json::json;

use dyadic_forge::stopping::{iterate_decomposition, split_level};
use dyadic_forge::IntervalCollection;

use super::{load_json, to_json};
use crate::output::{Outcome, Table, Verdict};

pub fn run(input: &Path, n: u32) -> Result<Outcome> {
    let u: IntervalCollection = load_json(input)?;
    let split = split_level(&u, n)?;
    let split_checks = split.check(&u, n)?;
    let dec = iterate_decomposition(&u, n)?;
    let layer_checks = dec.check(&u, n)?;

    let mut table = Table::new(&["layer", "m", "j", "left", "right"]);
    for (k, layer) in dec.layers.iter().enumerate() {
        for i in layer.items() {
            table.push(vec![
                (k + 1).to_string(),
                i.m.to_string(),
                i.j.to_string(),
                i.left().to_string(),
                i.right().to_string(),
            ]);
        }
    }
    let ok = split_checks.all_hold() && layer_checks.all_hold();
    Ok(Outcome {
        json: json!({
            "n": n,
            "split": to_json(&split)?,
            "split_checks": to_json(&split_checks)?,
            "decomposition": to_json(&dec)?,
            "layer_checks": to_json(&layer_checks)?,
        }),
        table: Some(table),
        verdict: Verdict::check(ok, "stopping-time properties"),
    })
}
