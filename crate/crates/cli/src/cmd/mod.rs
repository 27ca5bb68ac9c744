mod decompose;
mod sweeps;
mod wavelet;

use std::path::Path;

use anyhow::Result;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use dyadic_forge::calibration::Calibration;
use dyadic_forge::num::{parse_rational, to_f64};
use dyadic_forge::wavelet::MotherWavelet;
use dyadic_forge::{Error, Rational};

use crate::args::{Cli, Command, Common};
use crate::output::Outcome;

pub fn run(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Decompose { input, n } => decompose::run(input, *n),
        Command::T3Sweep => sweeps::t3_sweep(c),
        Command::HaarBound { input } => sweeps::haar_bound(c, input.as_deref()),
        Command::TreeRearrange { input, permutation } => {
            sweeps::tree_rearrange(c, input.as_deref(), *permutation)
        }
        Command::WaveletCheck { mother, epsilon } => wavelet::check(c, mother.as_deref(), epsilon),
        Command::CalibrateLambda {
            mother,
            epsilon,
            s_max,
        } => wavelet::calibrate(c, mother.as_deref(), epsilon, *s_max),
        Command::T4Demo {
            multiplier,
            s_max,
            permutation,
            mother,
        } => wavelet::t4(c, multiplier, *s_max, *permutation, mother.as_deref()),
        Command::T1Demo {
            multiplier,
            coeff_power,
            zero,
            check_scale,
            scales,
            tolerance,
            mother,
        } => wavelet::t1(
            c,
            multiplier,
            *coeff_power,
            *zero,
            *check_scale,
            *scales,
            *tolerance,
            mother.as_deref(),
        ),
        Command::RcDemo {
            coefficients,
            k_max,
            tolerance,
            mother,
        } => wavelet::rc(c, coefficients, *k_max, *tolerance, mother.as_deref()),
    }
}

fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{origin}: {e}")).into())
}

pub(crate) fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

/// Inline JSON, or `@path` for a file.
pub(crate) fn json_arg<T: DeserializeOwned>(arg: &str) -> Result<T> {
    match arg.strip_prefix('@') {
        Some(p) => load_json(Path::new(p)),
        None => parse_json(arg, "argument"),
    }
}

pub(crate) fn rational_arg(s: &str) -> Result<Rational> {
    Ok(parse_rational(s.trim())?)
}

pub(crate) fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

pub(crate) fn mother(path: Option<&Path>) -> Result<MotherWavelet> {
    match path {
        Some(p) => load_json(p),
        None => Ok(MotherWavelet::builtin()),
    }
}

/// `None` when no path was given; a given but unreadable file is an error.
pub(crate) fn calibration(c: &Common) -> Result<Option<Calibration>> {
    match &c.calibration {
        Some(p) => Ok(Some(Calibration::load(p)?)),
        None => Ok(None),
    }
}

/// `--window a,b` as floats for sampling, default `[0, 1)`.
pub(crate) fn sample_window(c: &Common) -> Result<(f64, f64)> {
    let Some(w) = &c.window else {
        return Ok((0.0, 1.0));
    };
    let (a, b) = w
        .split_once(',')
        .ok_or_else(|| Error::InvalidInput("--window expects a,b".into()))?;
    let (a, b) = (rational_arg(a)?, rational_arg(b)?);
    if a >= b {
        return Err(Error::InvalidInput("--window needs a < b".into()).into());
    }
    Ok((to_f64(&a), to_f64(&b)))
}
