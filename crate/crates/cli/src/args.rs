use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use slicewass::SlicedScheme;

#[derive(Debug, Parser)]
#[command(name = "slicewass", version, about = "Wasserstein, sliced and max-sliced distances")]
pub struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distances between two point-cloud files.
    Dist(DistArgs),
    /// Empirical rate experiment on samples of the uniform cube.
    Rates(RatesArgs),
    /// Audit of the sliced / max-sliced / exact inequalities.
    Audit(AuditArgs),
    /// Lower-bound scan for the constant C_d in W_1 <= C_d maxSW_1.
    Cdscan(CdscanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    W,
    Sw,
    Maxsw,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// `quad:RES` or `mc:N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeArg {
    Quad(usize),
    Mc(usize),
}

impl SchemeArg {
    pub fn resolve(self, seed: u64) -> SlicedScheme {
        match self {
            SchemeArg::Quad(resolution) => SlicedScheme::Quadrature { resolution },
            SchemeArg::Mc(count) => SlicedScheme::MonteCarlo { count, seed },
        }
    }
}

impl FromStr for SchemeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, num) = s
            .split_once(':')
            .ok_or_else(|| format!("expected quad:RES or mc:N, got {s:?}"))?;
        let n: usize = num
            .parse()
            .map_err(|_| format!("invalid count {num:?} in scheme {s:?}"))?;
        match kind {
            "quad" => Ok(SchemeArg::Quad(n)),
            "mc" => Ok(SchemeArg::Mc(n)),
            _ => Err(format!("unknown scheme kind {kind:?}; expected quad or mc")),
        }
    }
}

impl<'de> Deserialize<'de> for SchemeArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; explicit flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic step.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (dist) or directory (experiments); default stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    pub file_a: PathBuf,
    pub file_b: PathBuf,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_enum)]
    pub metric: Option<Metric>,
    /// Report the sliced value divided by the sphere area (both are always
    /// included; this selects which one is `sw.value`).
    #[arg(long)]
    pub normalized: bool,
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
    /// Random starts for heuristic max-sliced (d > 3).
    #[arg(long)]
    pub starts: Option<usize>,
    /// Bracket width for certified max-sliced (d <= 3).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also dump the optimal plan as CSV (plus a `.json` header).
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Evaluation budget of the certified max-sliced search.
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(long, value_delimiter = ',')]
    pub d_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    /// Instances per (d, p) cell.
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Evaluation budget of the certified max-sliced search.
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CdscanArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Evaluation budget of the certified max-sliced search.
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

/// Values a config file may set. Unknown keys are rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub p: Option<f64>,
    pub metric: Option<Metric>,
    pub normalized: Option<bool>,
    pub scheme: Option<SchemeArg>,
    pub starts: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub d: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub d_list: Option<Vec<usize>>,
    pub p_list: Option<Vec<f64>>,
    pub instances: Option<usize>,
    pub max_evals: Option<usize>,
}
