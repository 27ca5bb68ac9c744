use std::fmt;
use std::io::Write;

use anyhow::{bail, Context, Result};
use serde_json::Value;

use crate::args::{Common, Format};

/// Writing results failed for reasons outside the input.
#[derive(Debug)]
pub struct EnvFailure(pub String);

impl fmt::Display for EnvFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for EnvFailure {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    /// Control runs: numbers are reported, nothing is asserted.
    ReportOnly,
    Violated(String),
}

impl Verdict {
    pub fn check(ok: bool, what: impl Into<String>) -> Self {
        if ok {
            Self::Verified
        } else {
            Self::Violated(what.into())
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Self {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

pub struct Outcome {
    pub json: Value,
    pub table: Option<Table>,
    pub verdict: Verdict,
}

/// Float rendering for display columns.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.9e}")
}

fn render(outcome: &Outcome, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&outcome.json)?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let Some(table) = &outcome.table else {
                bail!(dyadic_forge::Error::Precondition(
                    "this command has no tabular output; use --format json".into()
                ));
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.headers)?;
            for r in &table.rows {
                w.write_record(r)?;
            }
            w.into_inner().context("flushing csv")
        }
    }
}

pub fn emit(outcome: &Outcome, common: &Common) -> Result<()> {
    let bytes = render(outcome, common.format)?;
    match &common.out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| EnvFailure(format!("{}: {e}", path.display())).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)
                .and_then(|()| out.flush())
                .map_err(|e| EnvFailure(format!("stdout: {e}")).into())
        }
    }
}
