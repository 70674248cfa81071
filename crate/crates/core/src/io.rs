//! Point-cloud files and transport-plan dumps.
//!
//! CSV: one point per row, one column per coordinate. A header row is
//! optional; it is detected by any non-numeric field in the first row. When
//! the header names its last column `weight`, that column holds weights.
//! Missing weights mean uniform weights. Lines starting with `#` are skipped.
//!
//! JSON: `{"dim": d, "points": [[...], ...], "weights": [...]}` with
//! `weights` optional.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::ot_exact::{DualCertificate, TransportPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloudJson {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

fn build(dim: usize, points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<DiscreteMeasure> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    for (i, pt) in points.iter().enumerate() {
        if pt.len() != dim {
            return Err(Error::Parse(format!(
                "point {i} has {} coordinates, expected {dim}",
                pt.len()
            )));
        }
    }
    match weights {
        Some(w) => DiscreteMeasure::new(points, w),
        None => DiscreteMeasure::uniform(points),
    }
}

/// Parses the JSON point-cloud format.
pub fn parse_json(text: &str) -> Result<DiscreteMeasure> {
    let raw: PointCloudJson =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid point-cloud JSON: {e}")))?;
    build(raw.dim, raw.points, raw.weights)
}

/// Parses the CSV point-cloud format.
pub fn parse_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("invalid CSV: {e}")))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    let Some((_, first)) = rows.first() else {
        return Err(Error::EmptySupport);
    };
    let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let mut weighted = false;
    if is_header {
        weighted = first.last().is_some_and(|f| f.eq_ignore_ascii_case("weight"));
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(Error::EmptySupport);
    }
    let width = rows[0].1.len();
    let dim = if weighted { width.saturating_sub(1) } else { width };
    let mut points = Vec::with_capacity(rows.len());
    let mut weights = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.len() != width {
            return Err(Error::Parse(format!(
                "line {line}: {} fields, expected {width}",
                row.len()
            )));
        }
        let values = row
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {line}: cannot parse {f:?} as a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if weighted {
            weights.push(values[dim]);
            points.push(values[..dim].to_vec());
        } else {
            points.push(values);
        }
    }
    build(dim, points, weighted.then_some(weights))
}

/// Reads a point cloud; `.json` files use the JSON format, anything else CSV.
pub fn read_point_cloud(path: &Path) -> Result<DiscreteMeasure> {
    let text = fs::read_to_string(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        parse_json(&text)
    } else {
        parse_csv(&text)
    }
}

/// Writes `mu` as CSV with a `weight` column.
pub fn write_point_cloud_csv(mu: &DiscreteMeasure, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<String> = (0..mu.dim()).map(|k| format!("x{k}")).collect();
    header.push("weight".into());
    w.write_record(&header).map_err(csv_err)?;
    for (i, pt) in mu.points().enumerate() {
        let mut row: Vec<String> = pt.iter().map(|x| x.to_string()).collect();
        row.push(mu.weight(i).to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Header written next to a plan dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanHeader {
    pub order: f64,
    pub primal_value: f64,
    pub total_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_value: Option<f64>,
    pub entries: usize,
}

/// Path of the JSON header that accompanies a plan CSV.
pub fn plan_header_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Dumps `plan` as CSV triples `i,j,mass` plus a JSON header at
/// [`plan_header_path`].
pub fn write_plan(plan: &TransportPlan, dual: Option<&DualCertificate>, csv_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path).map_err(csv_err)?;
    w.write_record(["i", "j", "mass"]).map_err(csv_err)?;
    for &(i, j, m) in &plan.triples {
        w.write_record([i.to_string(), j.to_string(), m.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    let header = PlanHeader {
        order: plan.order,
        primal_value: plan.primal_value,
        total_cost: plan.total_cost,
        dual_value: dual.map(|d| d.dual_value),
        entries: plan.triples.len(),
    };
    let mut f = fs::File::create(plan_header_path(csv_path))?;
    serde_json::to_writer_pretty(&mut f, &header).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(f)?;
    Ok(())
}

/// Reads the triples of a plan dump.
pub fn read_plan(csv_path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut r = csv::Reader::from_path(csv_path).map_err(csv_err)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec.map_err(csv_err)?);
    }
    Ok(out)
}
