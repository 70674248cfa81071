//! Audits of the sandwich `SW_p / A_d^{1/p} <= maxSW_p <= W_p`, of
//! `W_2 <= sqrt(d) maxSW_2`, and scans for lower bounds on the constant in
//! `W_1 <= C_d maxSW_1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::random_instance;
use crate::error::{check_order, Error, Result};
use crate::maxsliced::{max_sliced_certified_with, CertifyOptions, DirectionResult, DEFAULT_MAX_EVALUATIONS};
use crate::measures::DiscreteMeasure;
use crate::ot_exact::wasserstein_exact;
use crate::rng::derive_path;
use crate::sliced::{sliced_wasserstein_both, SlicedScheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub d_list: Vec<usize>,
    pub p_list: Vec<f64>,
    pub instances_per_cell: usize,
    pub seed: u64,
    /// Bracket width for the certified maxSW.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Absolute slack allowed in every inequality (plus the quadrature error
    /// bound on the sliced side, when one is available).
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Evaluation budget of each certified search.
    #[serde(default = "default_budget")]
    pub max_evaluations: usize,
}

fn default_budget() -> usize {
    DEFAULT_MAX_EVALUATIONS
}

fn default_tol() -> f64 {
    1e-4
}

fn default_slack() -> f64 {
    1e-6
}

impl AuditConfig {
    /// `d in {2, 3}`, `p in {1, 2}`, 25 instances per cell.
    pub fn standard(seed: u64) -> Self {
        Self {
            d_list: vec![2, 3],
            p_list: vec![1.0, 2.0],
            instances_per_cell: 25,
            seed,
            tol: default_tol(),
            slack: default_slack(),
            max_evaluations: default_budget(),
        }
    }
}

/// What kind of pair an audit instance is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Identical,
    PointMasses,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditInstance {
    pub d: usize,
    pub p: f64,
    pub index: usize,
    pub seed: u64,
    pub kind: InstanceKind,
    pub sw_normalized: f64,
    pub sw_unnormalized: f64,
    pub sw_error_bound: Option<f64>,
    pub maxsw_lower: f64,
    pub maxsw_upper: f64,
    pub w_exact: f64,
    /// `maxSW_upper - SW_normalized`.
    pub margin_sliced: f64,
    /// `W_exact - maxSW_lower`.
    pub margin_exact: f64,
    /// `sqrt(d) maxSW_upper - W_exact`, for `p = 2`.
    pub margin_dimension: Option<f64>,
    pub budget_exceeded: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCell {
    pub d: usize,
    pub p: f64,
    pub instances: usize,
    pub violations: usize,
    pub min_margin_sliced: f64,
    pub min_margin_exact: f64,
    pub min_margin_dimension: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub cells: Vec<AuditCell>,
    pub instances: Vec<AuditInstance>,
    pub violations: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Certified bracket; a budget overrun still yields a valid, wider bracket.
fn bracket(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64, opts: &CertifyOptions) -> Result<(DirectionResult, bool)> {
    match max_sliced_certified_with(mu, nu, p, opts) {
        Ok(r) => Ok((r, false)),
        Err(Error::BudgetExceeded(r)) => Ok((*r, true)),
        Err(e) => Err(e),
    }
}

fn audit_pair(
    cfg: &AuditConfig,
    d: usize,
    p: f64,
    index: usize,
) -> Result<AuditInstance> {
    let seed = derive_path(cfg.seed, &[d as u64, p.to_bits(), index as u64]);
    let (mu, nu) = random_instance(d, seed);
    // Every fifth instance is a pair of identical measures and every fifth
    // (offset by one) a pair of point masses; the rest are random.
    let (kind, mu, nu) = match index % 5 {
        0 => (InstanceKind::Identical, mu.clone(), mu),
        1 => {
            let x = mu.point(0).to_vec();
            let y = nu.point(0).to_vec();
            (
                InstanceKind::PointMasses,
                DiscreteMeasure::dirac(x)?,
                DiscreteMeasure::dirac(y)?,
            )
        }
        _ => (InstanceKind::Random, mu, nu),
    };
    let (swn, swu) = sliced_wasserstein_both(&mu, &nu, p, SlicedScheme::default_for(d, seed))?;
    let (ms, budget_exceeded) = bracket(
        &mu,
        &nu,
        p,
        &CertifyOptions {
            tol: cfg.tol,
            max_evaluations: cfg.max_evaluations,
        },
    )?;
    let w = wasserstein_exact(&mu, &nu, p)?.primal_value;

    let mut violations = Vec::new();
    let quad = swn.error_bound.unwrap_or(0.0);
    let margin_sliced = ms.upper - swn.value;
    if margin_sliced < -(cfg.slack + quad) {
        violations.push(format!("SW_norm {} > maxSW_upper {}", swn.value, ms.upper));
    }
    let margin_exact = w - ms.lower;
    if margin_exact < -cfg.slack {
        violations.push(format!("maxSW_lower {} > W {}", ms.lower, w));
    }
    let margin_dimension = (p == 2.0).then(|| (d as f64).sqrt() * ms.upper - w);
    if margin_dimension.is_some_and(|m| m < -cfg.slack) {
        violations.push(format!("W_2 {} > sqrt(d) maxSW_upper {}", w, (d as f64).sqrt() * ms.upper));
    }
    Ok(AuditInstance {
        d,
        p,
        index,
        seed,
        kind,
        sw_normalized: swn.value,
        sw_unnormalized: swu.value,
        sw_error_bound: swn.error_bound,
        maxsw_lower: ms.lower,
        maxsw_upper: ms.upper,
        w_exact: w,
        margin_sliced,
        margin_exact,
        margin_dimension,
        budget_exceeded,
        violations,
    })
}

/// Audits every `(d, p)` cell on `instances_per_cell` pairs.
pub fn inequality_audit(cfg: &AuditConfig) -> Result<AuditReport> {
    for &d in &cfg.d_list {
        if !(1..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
    }
    for &p in &cfg.p_list {
        check_order(p)?;
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::ArgumentOutOfRange(format!("tol must be > 0, got {}", cfg.tol)));
    }
    let jobs: Vec<(usize, f64, usize)> = cfg
        .d_list
        .iter()
        .flat_map(|&d| {
            cfg.p_list
                .iter()
                .flat_map(move |&p| (0..cfg.instances_per_cell).map(move |k| (d, p, k)))
        })
        .collect();
    let instances: Vec<AuditInstance> = jobs
        .par_iter()
        .map(|&(d, p, k)| audit_pair(cfg, d, p, k))
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for &d in &cfg.d_list {
        for &p in &cfg.p_list {
            let group: Vec<&AuditInstance> = instances.iter().filter(|x| x.d == d && x.p == p).collect();
            let min = |f: &dyn Fn(&AuditInstance) -> f64| group.iter().map(|x| f(x)).fold(f64::INFINITY, f64::min);
            cells.push(AuditCell {
                d,
                p,
                instances: group.len(),
                violations: group.iter().map(|x| x.violations.len()).sum(),
                min_margin_sliced: min(&|x| x.margin_sliced),
                min_margin_exact: min(&|x| x.margin_exact),
                min_margin_dimension: (p == 2.0).then(|| min(&|x| x.margin_dimension.unwrap_or(f64::INFINITY))),
            });
        }
    }
    let violations = cells.iter().map(|c| c.violations).sum();
    Ok(AuditReport {
        config: cfg.clone(),
        cells,
        instances,
        violations,
    })
}

/// One scanned pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdScanRecord {
    pub index: usize,
    pub seed: u64,
    pub w_exact: f64,
    pub maxsw_lower: f64,
    pub maxsw_upper: f64,
    /// `None` when the pair was skipped.
    pub ratio: Option<f64>,
    pub budget_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdScanReport {
    pub d: usize,
    pub p: f64,
    /// `max W / maxSW_upper` over the scanned pairs; a lower bound on any
    /// admissible `C_d`.
    pub bound: f64,
    /// Index and seed of the pair attaining `bound`.
    pub argmax: Option<(usize, u64)>,
    pub instances: usize,
    /// Pairs skipped because `maxSW_upper < 1e-12`.
    pub skipped: usize,
    pub records: Vec<CdScanRecord>,
}

/// Scans random pairs for the largest ratio `W_p / maxSW_p`.
///
/// The denominator is `min(maxSW_upper, W_p)`, still a certified upper
/// bound on `maxSW_p` since `maxSW_p <= W_p`; the ratio is therefore at
/// least 1 and equals 1 exactly whenever the bracket reaches `W_p`.
pub fn cd_lower_bound_scan(
    d: usize,
    p: f64,
    instances: usize,
    seed: u64,
    opts: &CertifyOptions,
) -> Result<CdScanReport> {
    check_order(p)?;
    if instances == 0 {
        return Err(Error::ArgumentOutOfRange("instances must be >= 1".into()));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let records: Vec<CdScanRecord> = (0..instances)
        .into_par_iter()
        .map(|k| -> Result<CdScanRecord> {
            let pair_seed = derive_path(seed, &[k as u64]);
            let (mu, nu) = random_instance(d, pair_seed);
            let (ms, budget_exceeded) = bracket(&mu, &nu, p, opts)?;
            let w = wasserstein_exact(&mu, &nu, p)?.primal_value;
            let denom = ms.upper.min(w);
            Ok(CdScanRecord {
                index: k,
                seed: pair_seed,
                w_exact: w,
                maxsw_lower: ms.lower,
                maxsw_upper: ms.upper,
                ratio: (denom >= 1e-12).then(|| w / denom),
                budget_exceeded,
            })
        })
        .collect::<Result<_>>()?;
    let mut bound = f64::NEG_INFINITY;
    let mut argmax = None;
    for r in &records {
        if let Some(q) = r.ratio {
            if q > bound {
                bound = q;
                argmax = Some((r.index, r.seed));
            }
        }
    }
    let skipped = records.iter().filter(|r| r.ratio.is_none()).count();
    if argmax.is_none() {
        return Err(Error::DegenerateInstance("every scanned pair had maxSW below 1e-12".into()));
    }
    Ok(CdScanReport {
        d,
        p,
        bound,
        argmax,
        instances,
        skipped,
        records,
    })
}
