use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use slicewass::experiments::{
    cd_lower_bound_scan, inequality_audit, rate_experiment, write_jsonl, write_records_csv, write_summary,
    AuditCell, AuditConfig, CdScanReport, RateConfig, RateFit, RateMean, Verdict,
};
use slicewass::io::{read_point_cloud, write_plan};
use slicewass::{
    max_sliced, max_sliced_certified_with, sliced_wasserstein_both, solve_w1, wasserstein_exact, CertifyOptions,
    DiscreteMeasure, Error, Mode, SlicedScheme, DEFAULT_MAX_EVALUATIONS,
};

use crate::args::{AuditArgs, CdscanArgs, ConfigFile, DistArgs, Format, Metric, RatesArgs};
use crate::{CliError, CliResult};

pub const SCHEMA: u32 = 1;

const DEFAULT_TOL: f64 = 1e-4;
const DEFAULT_STARTS: usize = 8;

fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

#[derive(Debug, Serialize)]
struct WReport {
    value: f64,
    /// `sum pi_ij |x_i - y_j|^p` before the p-th root.
    total_cost: f64,
    /// Kantorovich dual value (p = 1 only).
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_value: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SwReport {
    /// Equal to `normalized_value` under `--normalized`, else `unnormalized_value`.
    value: f64,
    normalized: bool,
    normalized_value: f64,
    unnormalized_value: f64,
    normalized_stderr: f64,
    unnormalized_stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalized_error_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unnormalized_error_bound: Option<f64>,
    scheme: SlicedScheme,
}

#[derive(Debug, Serialize)]
struct MaxSwReport {
    value: f64,
    lower: f64,
    upper: f64,
    v_star: Vec<f64>,
    mode: Mode,
    evaluations: usize,
    budget_exceeded: bool,
}

#[derive(Debug, Default, Serialize)]
struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    maxsw: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DistReport {
    schema: u32,
    command: &'static str,
    dim: usize,
    n_a: usize,
    n_b: usize,
    p: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<WReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sw: Option<SwReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    maxsw: Option<MaxSwReport>,
    timings: Timings,
}

fn read_cloud(path: &Path) -> CliResult<DiscreteMeasure> {
    read_point_cloud(path).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn dist_csv(r: &DistReport) -> String {
    let mut s = String::from("metric,value,lower,upper,stderr,error_bound\n");
    if let Some(w) = &r.w {
        let _ = writeln!(s, "w,{},{},{},0,0", w.value, w.value, w.value);
    }
    if let Some(sw) = &r.sw {
        let _ = writeln!(
            s,
            "sw_normalized,{},,,{},{}",
            sw.normalized_value,
            sw.normalized_stderr,
            fmt_opt(sw.normalized_error_bound)
        );
        let _ = writeln!(
            s,
            "sw_unnormalized,{},,,{},{}",
            sw.unnormalized_value,
            sw.unnormalized_stderr,
            fmt_opt(sw.unnormalized_error_bound)
        );
    }
    if let Some(m) = &r.maxsw {
        let _ = writeln!(s, "maxsw,{},{},{},,{}", m.value, m.lower, m.upper, m.upper - m.lower);
    }
    s
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn dist(a: &DistArgs, cfg: &ConfigFile) -> CliResult<u8> {
    let p = pick(a.p, cfg.p, 1.0);
    let metric = pick(a.metric, cfg.metric, Metric::All);
    let normalized = a.normalized || cfg.normalized.unwrap_or(false);
    let seed = pick(a.common.seed, cfg.seed, 0);
    let tol = pick(a.tol, cfg.tol, DEFAULT_TOL);
    let starts = pick(a.starts, cfg.starts, DEFAULT_STARTS);
    let format = pick(a.common.format, cfg.format, Format::Json);
    let max_evals = pick(a.max_evals, cfg.max_evals, DEFAULT_MAX_EVALUATIONS);

    let mu = read_cloud(&a.file_a)?;
    let nu = read_cloud(&a.file_b)?;
    if mu.dim() != nu.dim() {
        return Err(CliError {
            code: 3,
            message: format!(
                "dimension mismatch: {} has dim {}, {} has dim {}",
                a.file_a.display(),
                mu.dim(),
                a.file_b.display(),
                nu.dim()
            ),
        });
    }
    let d = mu.dim();
    let scheme = match a.scheme.or(cfg.scheme) {
        Some(s) => s.resolve(seed),
        None => SlicedScheme::default_for(d, seed),
    };
    let wants = |m: Metric| metric == Metric::All || metric == m;
    let mut timings = Timings::default();

    let w = if wants(Metric::W) || a.plan.is_some() {
        let t = Instant::now();
        let (plan, dual) = if p == 1.0 {
            let (plan, cert) = solve_w1(&mu, &nu)?;
            (plan, Some(cert))
        } else {
            (wasserstein_exact(&mu, &nu, p)?, None)
        };
        timings.w = Some(t.elapsed().as_secs_f64());
        if let Some(path) = &a.plan {
            write_plan(&plan, dual.as_ref(), path)?;
        }
        wants(Metric::W).then(|| WReport {
            value: plan.primal_value,
            total_cost: plan.total_cost,
            dual_value: dual.map(|c| c.dual_value),
        })
    } else {
        None
    };

    let sw = if wants(Metric::Sw) {
        let t = Instant::now();
        let (n, u) = sliced_wasserstein_both(&mu, &nu, p, scheme)?;
        timings.sw = Some(t.elapsed().as_secs_f64());
        Some(SwReport {
            value: if normalized { n.value } else { u.value },
            normalized,
            normalized_value: n.value,
            unnormalized_value: u.value,
            normalized_stderr: n.stderr,
            unnormalized_stderr: u.stderr,
            normalized_error_bound: n.error_bound,
            unnormalized_error_bound: u.error_bound,
            scheme: n.scheme,
        })
    } else {
        None
    };

    let mut budget_exceeded = false;
    let maxsw = if wants(Metric::Maxsw) {
        let t = Instant::now();
        let r = if d <= 3 {
            match max_sliced_certified_with(
                &mu,
                &nu,
                p,
                &CertifyOptions {
                    tol,
                    max_evaluations: max_evals,
                },
            ) {
                Ok(r) => r,
                Err(Error::BudgetExceeded(r)) => {
                    budget_exceeded = true;
                    *r
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            max_sliced(&mu, &nu, p, starts, seed)?
        };
        timings.maxsw = Some(t.elapsed().as_secs_f64());
        Some(MaxSwReport {
            value: r.lower,
            lower: r.lower,
            upper: r.upper,
            v_star: r.v_star.into_inner(),
            mode: r.mode,
            evaluations: r.evaluations,
            budget_exceeded,
        })
    } else {
        None
    };

    let report = DistReport {
        schema: SCHEMA,
        command: "dist",
        dim: d,
        n_a: mu.len(),
        n_b: nu.len(),
        p,
        seed,
        w,
        sw,
        maxsw,
        timings,
    };
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => dist_csv(&report),
    };
    emit(&text, a.common.out.as_deref())?;
    if budget_exceeded {
        return Err(CliError {
            code: 4,
            message: "max-sliced evaluation budget exhausted; reported bracket is partial".into(),
        });
    }
    Ok(0)
}

fn prepare_dir(out: Option<&Path>, command: &str) -> CliResult<PathBuf> {
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("results").join(command));
    fs::create_dir_all(&dir).map_err(|e| CliError::parse(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn verdict_table(verdicts: &[Verdict]) -> String {
    let width = verdicts.iter().map(|v| v.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for v in verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{tag}  {:width$}  {}", v.name, v.detail);
    }
    s
}

#[derive(Serialize)]
struct RatesSummary<'a> {
    schema: u32,
    command: &'static str,
    passed: bool,
    config: &'a RateConfig,
    means: &'a [RateMean],
    fits: &'a [RateFit],
    ratios: &'a [(usize, f64)],
    verdicts: &'a [Verdict],
    note: &'a str,
}

pub fn rates(a: &RatesArgs, cfg: &ConfigFile) -> CliResult<u8> {
    let d = pick(a.d, cfg.d, 3);
    let seed = pick(a.common.seed, cfg.seed, 0);
    let base = RateConfig::standard(d, seed);
    let rc = RateConfig {
        p: pick(a.p, cfg.p, base.p),
        n_list: pick(a.n_list.clone(), cfg.n_list.clone(), base.n_list.clone()),
        reps: pick(a.reps, cfg.reps, base.reps),
        maxsw_starts: pick(a.starts, cfg.starts, base.maxsw_starts),
        ..base
    };
    let format = pick(a.common.format, cfg.format, Format::Json);
    let dir = prepare_dir(a.common.out.as_deref(), "rates")?;
    let report = rate_experiment(&rc)?;
    write_jsonl(&report.records, &dir.join("records.jsonl"))?;
    if format == Format::Csv {
        write_records_csv(&report.records, &dir.join("records.csv"))?;
    }
    let passed = report.passed();
    let summary = RatesSummary {
        schema: SCHEMA,
        command: "rates",
        passed,
        config: &report.config,
        means: &report.means,
        fits: &report.fits,
        ratios: &report.ratios,
        verdicts: &report.verdicts,
        note: &report.note,
    };
    write_summary(&summary, &dir.join("summary.json"))?;

    let mut table = format!("rates d={} p={} reps={} n={:?}\n", rc.d, rc.p, rc.reps, rc.n_list);
    for f in &report.fits {
        let _ = writeln!(table, "slope {:<8} {:+.4}", f.estimator.name(), f.slope);
    }
    table.push_str(&verdict_table(&report.verdicts));
    let _ = writeln!(table, "{}", if passed { "PASS" } else { "FAIL" });
    print!("{table}");
    Ok(if passed { 0 } else { 1 })
}

#[derive(Serialize)]
struct AuditSummary<'a> {
    schema: u32,
    command: &'static str,
    passed: bool,
    violations: usize,
    budget_exceeded: usize,
    config: &'a AuditConfig,
    cells: &'a [AuditCell],
}

pub fn audit(a: &AuditArgs, cfg: &ConfigFile) -> CliResult<u8> {
    let seed = pick(a.common.seed, cfg.seed, 0);
    let base = AuditConfig::standard(seed);
    let ac = AuditConfig {
        d_list: pick(a.d_list.clone(), cfg.d_list.clone(), base.d_list.clone()),
        p_list: pick(a.p_list.clone(), cfg.p_list.clone(), base.p_list.clone()),
        instances_per_cell: pick(a.instances, cfg.instances, base.instances_per_cell),
        tol: pick(a.tol, cfg.tol, base.tol),
        max_evaluations: pick(a.max_evals, cfg.max_evals, base.max_evaluations),
        ..base
    };
    let dir = prepare_dir(a.common.out.as_deref(), "audit")?;
    let report = inequality_audit(&ac)?;
    write_jsonl(&report.instances, &dir.join("records.jsonl"))?;
    let budget_exceeded = report.instances.iter().filter(|x| x.budget_exceeded).count();
    let passed = report.passed();
    write_summary(
        &AuditSummary {
            schema: SCHEMA,
            command: "audit",
            passed,
            violations: report.violations,
            budget_exceeded,
            config: &report.config,
            cells: &report.cells,
        },
        &dir.join("summary.json"),
    )?;

    let mut table = String::from("d  p    instances  violations  min_margin_sliced  min_margin_exact  min_margin_dim\n");
    for c in &report.cells {
        let _ = writeln!(
            table,
            "{:<2} {:<4} {:<10} {:<11} {:<18.3e} {:<17.3e} {}",
            c.d,
            c.p,
            c.instances,
            c.violations,
            c.min_margin_sliced,
            c.min_margin_exact,
            c.min_margin_dimension.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "-".into())
        );
    }
    let _ = writeln!(table, "violations: {}", report.violations);
    let _ = writeln!(table, "budget_exceeded: {budget_exceeded}");
    print!("{table}");
    if budget_exceeded > 0 {
        return Err(CliError {
            code: 4,
            message: format!("{budget_exceeded} instances exhausted the max-sliced budget; partial brackets recorded"),
        });
    }
    Ok(if passed { 0 } else { 1 })
}

#[derive(Serialize)]
struct CdscanSummary {
    schema: u32,
    command: &'static str,
    passed: bool,
    d: usize,
    p: f64,
    seed: u64,
    tol: f64,
    bound: f64,
    argmax: Option<(usize, u64)>,
    instances: usize,
    skipped: usize,
    budget_exceeded: usize,
    verdicts: Vec<Verdict>,
}

fn cdscan_verdicts(r: &CdScanReport) -> Vec<Verdict> {
    let mut v = vec![Verdict {
        name: "bound >= 1".into(),
        passed: r.bound.is_finite() && r.bound >= 1.0 - 1e-9,
        detail: format!("bound = {}", r.bound),
    }];
    if r.d == 1 {
        v.push(Verdict {
            name: "bound == 1 in one dimension".into(),
            passed: (r.bound - 1.0).abs() <= 1e-9,
            detail: format!("|bound - 1| = {:.3e}", (r.bound - 1.0).abs()),
        });
    }
    if r.p == 2.0 {
        let cap = (r.d as f64).sqrt();
        v.push(Verdict {
            name: "bound <= sqrt(d) for p = 2".into(),
            passed: r.bound <= cap * (1.0 + 1e-9),
            detail: format!("sqrt(d) = {cap}"),
        });
    }
    v
}

pub fn cdscan(a: &CdscanArgs, cfg: &ConfigFile) -> CliResult<u8> {
    let d = pick(a.d, cfg.d, 2);
    let p = pick(a.p, cfg.p, 1.0);
    let instances = pick(a.instances, cfg.instances, 500);
    let tol = pick(a.tol, cfg.tol, DEFAULT_TOL);
    let seed = pick(a.common.seed, cfg.seed, 0);
    let dir = prepare_dir(a.common.out.as_deref(), "cdscan")?;
    let opts = CertifyOptions {
        tol,
        max_evaluations: pick(a.max_evals, cfg.max_evals, DEFAULT_MAX_EVALUATIONS),
    };
    let report = cd_lower_bound_scan(d, p, instances, seed, &opts)?;
    write_jsonl(&report.records, &dir.join("records.jsonl"))?;
    let budget_exceeded = report.records.iter().filter(|r| r.budget_exceeded).count();
    let verdicts = cdscan_verdicts(&report);
    let passed = verdicts.iter().all(|v| v.passed);
    let mut table = format!(
        "cdscan d={d} p={p} instances={instances} skipped={} bound={}\n",
        report.skipped, report.bound
    );
    table.push_str(&verdict_table(&verdicts));
    write_summary(
        &CdscanSummary {
            schema: SCHEMA,
            command: "cdscan",
            passed,
            d,
            p,
            seed,
            tol,
            bound: report.bound,
            argmax: report.argmax,
            instances,
            skipped: report.skipped,
            budget_exceeded,
            verdicts,
        },
        &dir.join("summary.json"),
    )?;
    print!("{table}");
    if budget_exceeded > 0 {
        return Err(CliError {
            code: 4,
            message: format!("{budget_exceeded} pairs exhausted the max-sliced budget; partial brackets recorded"),
        });
    }
    Ok(if passed { 0 } else { 1 })
}
