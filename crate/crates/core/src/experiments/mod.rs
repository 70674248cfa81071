//! Reproducible studies built on the distance routines: empirical rates,
//! inequality audits, `C_d` scans, projected-square laws and convergence
//! suites, plus their on-disk formats.
//!
//! Every study takes an explicit seed; sub-seeds are derived with
//! [`crate::rng::derive_path`], so results do not depend on thread count.

mod audit;
mod convergence;
mod laws;
mod rates;

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::rng;

pub use audit::{cd_lower_bound_scan, inequality_audit, AuditCell, AuditConfig, AuditInstance, AuditReport, CdScanRecord, CdScanReport, InstanceKind};
pub use convergence::{convergence_suite, ConvergenceReport, ConvergenceRow, Schedule};
pub use laws::{pit_statistic, projected_square_cdf, uniformizing_map, UniformizingMap};
pub use rates::{rate_experiment, RateConfig, RateFit, RateMean, RateReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "W_exact")]
    WExact,
    #[serde(rename = "SW")]
    Sw,
    #[serde(rename = "maxSW")]
    MaxSw,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::WExact, Estimator::Sw, Estimator::MaxSw];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::WExact => "W_exact",
            Estimator::Sw => "SW",
            Estimator::MaxSw => "maxSW",
        }
    }
}

/// One measured distance in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub d: usize,
    pub p: f64,
    pub n: usize,
    pub replication: usize,
    pub estimator: Estimator,
    pub value: f64,
    pub stderr: f64,
    pub seed: u64,
    /// Seconds spent computing `value`; the only nondeterministic field.
    pub wall_time: f64,
}

impl ExperimentRecord {
    /// Equality of everything except `wall_time`.
    pub fn same_result(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_time = other.wall_time;
        a == *other && self.value.to_bits() == other.value.to_bits()
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(json_err)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", k + 1)))?,
        );
    }
    Ok(out)
}

/// Pretty-printed JSON document.
pub fn write_summary<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(json_err)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// CSV with one row per record, for plotting tools.
pub fn write_records_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

/// A random pair of small measures in R^d for audits and scans.
///
/// Support sizes are 1 to 12; points are Gaussian or uniform in a cube
/// with a random scale and offset; weights are uniform or Dirichlet(1).
pub fn random_instance(d: usize, seed: u64) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut r = rng::rng(seed);
    let draw = |r: &mut rng::Rng| {
        let n = r.random_range(1..=12usize);
        let scale = r.random_range(0.2..3.0f64);
        let gaussian = r.random_bool(0.5);
        let offset: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let coords: Vec<f64> = (0..n * d)
            .map(|k| {
                let z: f64 = if gaussian {
                    r.sample(StandardNormal)
                } else {
                    r.random_range(-1.0..1.0)
                };
                offset[k % d] + scale * z
            })
            .collect();
        if r.random_bool(0.5) {
            DiscreteMeasure::uniform_flat(d, coords).expect("valid uniform measure")
        } else {
            let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(r)).map(|x: f64| x + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            DiscreteMeasure::from_flat(d, coords, raw.iter().map(|x| x / s).collect())
                .expect("valid weighted measure")
        }
    };
    let mu = draw(&mut r);
    let nu = draw(&mut r);
    (mu, nu)
}
