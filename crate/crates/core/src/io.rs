//! CSV ingestion with row normalization, and CSV/JSON serialization of
//! datasets, run artifacts, selection reports and consistency curves.
//!
//! Floats are written with their shortest round-trip representation, so an
//! exported dataset re-ingests bit-identically. Non-finite risks serialize
//! to JSON as the strings "inf"/"-inf"/"nan" (JSON has no infinity literal).

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::cm::CmRun;
use crate::datagen::MixtureSpec;
use crate::error::{Error, Result};
use crate::select::SelectionReport;
use crate::simplex::{Dataset, ProbVector};
use crate::theory::ConsistencyCurve;

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path_str(path),
        source,
    }
}

/// Reads a rectangular nonnegative CSV matrix and normalizes each row by its
/// sum. An optional header row is auto-detected: if any cell of the first
/// row fails to parse as a number, the row is treated as a header.
pub fn ingest_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path_str(path),
            source,
        })?;
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        if cells.iter().all(|c| c.is_empty()) {
            continue;
        }
        raw_rows.push(cells);
    }
    if raw_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let header_present = raw_rows[0].iter().any(|c| c.parse::<f64>().is_err());
    let data_rows = if header_present {
        &raw_rows[1..]
    } else {
        &raw_rows[..]
    };
    if data_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let expected = data_rows[0].len();
    let mut points = Vec::with_capacity(data_rows.len());
    for (row, cells) in data_rows.iter().enumerate() {
        if cells.len() != expected {
            return Err(Error::RaggedRows {
                row,
                expected,
                got: cells.len(),
            });
        }
        let mut values = Vec::with_capacity(expected);
        for (col, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                col,
                value: cell.clone(),
            })?;
            if value < 0.0 {
                return Err(Error::NegativeEntry { row, col, value });
            }
            values.push(value);
        }
        let sum: f64 = values.iter().sum();
        if sum <= 0.0 {
            return Err(Error::ZeroRowSum { row });
        }
        points.push(ProbVector::new(
            values.iter().map(|&v| v / sum).collect(),
        )?);
    }
    Dataset::new(points)
}

/// Writes a dataset as a plain numeric CSV (no header), one observation per
/// row. Round-trip safe: re-ingesting reproduces the components exactly.
pub fn export_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in data.points() {
        let row: Vec<String> = p.components().iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

fn float_value(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// The run artifact as a JSON value:
/// {"k", "m", "seed", "prototypes", "assignment", "risk", "trace"}.
pub fn run_to_json(run: &CmRun) -> Value {
    let prototypes: Vec<Vec<f64>> = run
        .codebook
        .prototypes()
        .iter()
        .map(|p| p.components().to_vec())
        .collect();
    json!({
        "k": run.codebook.k(),
        "m": run.codebook.dim(),
        "seed": run.seed,
        "prototypes": prototypes,
        "assignment": run.assignment.codes(),
        "risk": float_value(run.risk),
        "trace": run.trace.risks.iter().map(|&r| float_value(r)).collect::<Vec<_>>(),
    })
}

pub fn write_run_json(run: &CmRun, path: &Path) -> Result<()> {
    write_json(&run_to_json(run), path)
}

pub fn write_json(value: &Value, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path_str(path),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Selection report CSV with the fixed header
/// `k,risk,cost,regularized_risk,c1,c2`.
pub fn selection_report_csv(report: &SelectionReport) -> String {
    let mut out = String::from("k,risk,cost,regularized_risk,c1,c2\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.k, row.risk, row.cost, row.regularized_risk, row.c1, row.c2
        ));
    }
    out
}

pub fn write_selection_csv(report: &SelectionReport, path: &Path) -> Result<()> {
    fs::write(path, selection_report_csv(report)).map_err(io_err(path))
}

pub fn write_selection_json(report: &SelectionReport, path: &Path) -> Result<()> {
    let value = serde_json::to_value(report).map_err(|source| Error::Json {
        path: path_str(path),
        source,
    })?;
    write_json(&value, path)
}

/// Consistency curve CSV with header `n,min_risk,reference_risk,seed`.
pub fn consistency_curve_csv(curve: &ConsistencyCurve) -> String {
    let mut out = String::from("n,min_risk,reference_risk,seed\n");
    for row in &curve.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.n, row.min_risk, row.reference_risk, row.seed
        ));
    }
    out
}

pub fn write_consistency_csv(curve: &ConsistencyCurve, path: &Path) -> Result<()> {
    fs::write(path, consistency_curve_csv(curve)).map_err(io_err(path))
}

pub fn write_consistency_json(curve: &ConsistencyCurve, path: &Path) -> Result<()> {
    let value = serde_json::to_value(curve).map_err(|source| Error::Json {
        path: path_str(path),
        source,
    })?;
    write_json(&value, path)
}

/// Reads and validates a mixture spec from a JSON preset file.
pub fn read_mixture_spec(path: &Path) -> Result<MixtureSpec> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let spec: MixtureSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path_str(path),
        source,
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn write_mixture_spec(spec: &MixtureSpec, path: &Path) -> Result<()> {
    let value = serde_json::to_value(spec).map_err(|source| Error::Json {
        path: path_str(path),
        source,
    })?;
    write_json(&value, path)
}
