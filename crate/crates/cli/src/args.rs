use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "dyadic-forge",
    version,
    about = "Exact checks for dyadic stopping times, Haar-type bounds and wavelet series"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every randomized input.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of randomized trials (command-specific default).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Depth: grid depth or largest scale, depending on the command.
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// Sampling window `a,b` inside [0, 1].
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Calibration file for the divergence experiment.
    #[arg(long, global = true, env = "DYADIC_FORGE_CALIBRATION")]
    pub calibration: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Permutation {
    Adversarial,
    Identity,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stopping-time split and layered decomposition of a collection.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: u32,
    },
    /// Random interval and dilation families plus full-tree sharpness rows.
    T3Sweep,
    /// Weighted indicator bound for a file or random collections.
    HaarBound {
        /// `{"intervals": [...], "coefficients": [...]}`; coefficients default to 1.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Rearrangement bound on random tree systems or a system file.
    TreeRearrange {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Permutation::Adversarial)]
        permutation: Permutation,
    },
    /// Mother-wavelet axioms, sign-preserving truncations and grid identities.
    WaveletCheck {
        #[arg(long)]
        mother: Option<PathBuf>,
        /// ε for the λ choice when no calibration is given.
        #[arg(long, default_value = "1/8")]
        epsilon: String,
    },
    /// Chooses λ and pins the divergence constants.
    CalibrateLambda {
        #[arg(long)]
        mother: Option<PathBuf>,
        #[arg(long, default_value = "1/8")]
        epsilon: String,
        #[arg(long, default_value_t = 3)]
        s_max: u32,
    },
    /// Rearranged partial sums on the calibrated subsystem.
    T4Demo {
        /// Multiplier JSON, or `@path` to read it from a file.
        #[arg(
            long,
            default_value = r#"{"family":"constant","params":{"value":"1"}}"#
        )]
        multiplier: String,
        #[arg(long)]
        s_max: Option<u32>,
        #[arg(long, value_enum, default_value_t = Permutation::Adversarial)]
        permutation: Permutation,
        #[arg(long)]
        mother: Option<PathBuf>,
    },
    /// Absolute convergence of the weighted series.
    T1Demo {
        #[arg(long, default_value = r#"{"family":"power","params":{"exponent":2}}"#)]
        multiplier: String,
        /// Coefficients `n^{-p} 2^{-n/2}`.
        #[arg(long, default_value_t = 2)]
        coeff_power: u32,
        #[arg(long)]
        zero: bool,
        #[arg(long, default_value_t = 12)]
        check_scale: u32,
        #[arg(long, default_value_t = 256)]
        scales: u32,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long)]
        mother: Option<PathBuf>,
    },
    /// Block maxima of the natural-order series.
    RcDemo {
        /// Coefficient JSON, or `@path`.
        #[arg(long, default_value = r#"{"family":"power_log","p":"1","q":"1"}"#)]
        coefficients: String,
        #[arg(long, default_value_t = 10)]
        k_max: u32,
        #[arg(long, default_value_t = 1e-2)]
        tolerance: f64,
        #[arg(long)]
        mother: Option<PathBuf>,
    },
}
