//! Sequences `mu_n -> mu` tracked under `W`, `SW` and `maxSW` together.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::maxsliced::{max_sliced, max_sliced_certified_with, CertifyOptions};
use crate::measures::{generate, DiscreteMeasure, GeneratorSpec};
use crate::numeric::spearman;
use crate::ot_exact::wasserstein_exact;
use crate::rng::{self, derive_path};
use crate::sliced::{sliced_wasserstein, SlicedScheme};

/// How the approximating sequence is built from the target `mu`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `mu` translated by `e_1 / n`.
    Translation { ns: Vec<usize> },
    /// `mu` itself at every step.
    Constant { ns: Vec<usize> },
    /// Empirical measure of `n` i.i.d. draws from `mu`, duplicates merged.
    Empirical { ns: Vec<usize> },
}

impl Schedule {
    pub fn ns(&self) -> &[usize] {
        match self {
            Schedule::Translation { ns } | Schedule::Constant { ns } | Schedule::Empirical { ns } => ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub w: f64,
    pub sw_normalized: f64,
    pub maxsw_lower: f64,
    pub maxsw_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schedule: Schedule,
    pub p: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Rank correlations of the `W` sequence with the other two; `None` when
    /// a sequence is constant.
    pub spearman_w_sw: Option<f64>,
    pub spearman_w_maxsw: Option<f64>,
    /// `SW_norm <= maxSW_upper` and `maxSW_lower <= W` on every row.
    pub ordering_holds: bool,
    /// Largest of the three distances on the last row.
    pub final_max: f64,
}

fn approximant(mu: &DiscreteMeasure, schedule: &Schedule, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    match schedule {
        Schedule::Translation { .. } => {
            let mut shift = vec![0.0; mu.dim()];
            shift[0] = 1.0 / n as f64;
            mu.translate(&shift)
        }
        Schedule::Constant { .. } => Ok(mu.clone()),
        Schedule::Empirical { .. } => {
            let pick = WeightedIndex::new(mu.weights())
                .map_err(|e| Error::InvalidSpec(format!("cannot sample target: {e}")))?;
            let mut r = rng::rng(seed);
            let coords: Vec<f64> = (0..n)
                .flat_map(|_| mu.point(pick.sample(&mut r)).to_vec())
                .collect();
            Ok(DiscreteMeasure::uniform_flat(mu.dim(), coords)?.canonicalize())
        }
    }
}

/// Tracks `W_p`, normalized `SW_p` and `maxSW_p` between `mu_n` and the
/// target drawn from `target` (which must describe a discrete measure).
///
/// `maxSW` is certified to `tol` for `d <= 3` and a multi-start lower bound
/// (so `upper = lower`) otherwise.
pub fn convergence_suite(
    target: &GeneratorSpec,
    schedule: &Schedule,
    p: f64,
    seed: u64,
    tol: f64,
) -> Result<ConvergenceReport> {
    check_order(p)?;
    let ns = schedule.ns();
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::ArgumentOutOfRange("schedule needs positive sizes".into()));
    }
    let mu = generate(target, derive_path(seed, &[0]))?;
    let d = mu.dim();
    let rows: Vec<ConvergenceRow> = ns
        .par_iter()
        .map(|&n| -> Result<ConvergenceRow> {
            let step_seed = derive_path(seed, &[1, n as u64]);
            let mn = approximant(&mu, schedule, n, step_seed)?;
            let w = wasserstein_exact(&mn, &mu, p)?.primal_value;
            let sw = sliced_wasserstein(&mn, &mu, p, SlicedScheme::default_for(d, step_seed), true)?.value;
            let (lo, hi) = if d <= 3 {
                let r = match max_sliced_certified_with(&mn, &mu, p, &CertifyOptions::new(tol)) {
                    Ok(r) => r,
                    Err(Error::BudgetExceeded(r)) => *r,
                    Err(e) => return Err(e),
                };
                (r.lower, r.upper)
            } else {
                let r = max_sliced(&mn, &mu, p, 4, step_seed)?;
                (r.lower, r.upper)
            };
            Ok(ConvergenceRow {
                n,
                w,
                sw_normalized: sw,
                maxsw_lower: lo,
                maxsw_upper: hi,
            })
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (w, sw, ms) = (col(|r| r.w), col(|r| r.sw_normalized), col(|r| r.maxsw_lower));
    let ordering_holds = rows
        .iter()
        .all(|r| r.sw_normalized <= r.maxsw_upper + 1e-9 && r.maxsw_lower <= r.w + 1e-9);
    let last = rows.last().expect("nonempty schedule");
    let final_max = last.w.max(last.sw_normalized).max(last.maxsw_upper);
    Ok(ConvergenceReport {
        schedule: schedule.clone(),
        p,
        spearman_w_sw: spearman(&w, &sw),
        spearman_w_maxsw: spearman(&w, &ms),
        rows,
        ordering_holds,
        final_max,
    })
}
