use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::{RunConfig, FORMAT_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            // 17 significant digits
            Cell::F(x) => format!("{x:.16e}"),
            Cell::I(n) => n.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => json!(x),
            Cell::I(n) => json!(n),
            Cell::S(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::I(n as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::I(b as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

/// A table with one header row.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let v = json!({
            "format_version": FORMAT_VERSION,
            "table": self.name,
            "columns": self.columns,
            "rows": rows,
        });
        let mut out = serde_json::to_vec_pretty(&v).map_err(|e| Error::Io(e.into()))?;
        out.push(b'\n');
        Ok(out)
    }
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    /// `false` when a validation suite found a failing check.
    pub passed: bool,
}

impl RunOutput {
    pub fn new() -> Self {
        RunOutput { passed: true, ..Default::default() }
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub subcommand: String,
    pub code_version: String,
    pub status: String,
    pub config: RunConfig,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputRecord>,
    pub summary: Map<String, Value>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<OutputRecord> {
    fs::write(dir.join(name), bytes)?;
    Ok(OutputRecord { file: name.into(), rows: 0, sha256: hex::encode(Sha256::digest(bytes)) })
}

/// Writes every table in `format` and returns their records.
pub fn write_tables(dir: &Path, tables: &[Table], format: Format) -> Result<Vec<OutputRecord>> {
    fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let (name, bytes) = match format {
                Format::Csv => (format!("{}.csv", t.name), t.to_csv()?),
                Format::Json => (format!("{}.json", t.name), t.to_json()?),
            };
            let mut rec = write_file(dir, &name, &bytes)?;
            rec.rows = t.rows.len();
            Ok(rec)
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(manifest).map_err(|e| Error::Io(e.into()))?;
    bytes.push(b'\n');
    fs::write(&path, bytes)?;
    Ok(path)
}

/// Machine-readable failure record.
pub fn error_record(subcommand: &str, err: &Error) -> Value {
    let kind = match err {
        Error::Config(_) => "config",
        Error::Infeasible { .. } => "infeasible",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::OutsideWindow(_) => "outside_window",
        Error::NoConvergence { .. } => "no_convergence",
        Error::NormDrift { .. } => "norm_drift",
        Error::Io(_) => "io",
        _ => "internal",
    };
    json!({
        "format_version": FORMAT_VERSION,
        "status": "error",
        "subcommand": subcommand,
        "kind": kind,
        "message": err.to_string(),
    })
}
