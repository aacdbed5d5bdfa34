//! Output artifacts: versioned CSV tables with a `#` prologue echoing the
//! resolved configuration, and a JSON run summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{emit_config, RunConfig};
use crate::error::{Error, Result};
use crate::mc::RNG_NAME;

pub const SCHEMA_VERSION: u32 = 1;

/// Column order of the main results table.
pub const RESULT_COLUMNS: [&str; 14] = [
    "schema_version",
    "d",
    "q",
    "J",
    "epsilon",
    "L",
    "r",
    "mode",
    "theta",
    "theta_se",
    "tv",
    "tv_se",
    "n_samples",
    "seed",
];

/// One row of the main results table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub d: usize,
    pub q: usize,
    #[serde(rename = "J")]
    pub coupling: f64,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub side: usize,
    pub r: Option<usize>,
    pub mode: String,
    pub theta: f64,
    pub theta_se: f64,
    pub tv: f64,
    pub tv_se: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl ResultRow {
    fn record(&self) -> Vec<String> {
        vec![
            SCHEMA_VERSION.to_string(),
            self.d.to_string(),
            self.q.to_string(),
            self.coupling.to_string(),
            self.epsilon.to_string(),
            self.side.to_string(),
            self.r.map(|r| r.to_string()).unwrap_or_default(),
            self.mode.clone(),
            self.theta.to_string(),
            self.theta_se.to_string(),
            self.tv.to_string(),
            self.tv_se.to_string(),
            self.n_samples.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// A named table of string cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            records: Vec::new(),
        }
    }

    pub fn results(rows: &[ResultRow]) -> Self {
        let mut t = Table::new("results", &RESULT_COLUMNS);
        t.records = rows.iter().map(ResultRow::record).collect();
        t
    }

    pub fn push(&mut self, record: Vec<String>) {
        debug_assert_eq!(record.len(), self.header.len());
        self.records.push(record);
    }

    fn to_json(&self) -> serde_json::Value {
        let rows = self
            .records
            .iter()
            .map(|rec| {
                let obj = self
                    .header
                    .iter()
                    .zip(rec)
                    .map(|(h, v)| (h.clone(), cell_json(v)))
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

fn cell_json(v: &str) -> serde_json::Value {
    if v.is_empty() {
        return serde_json::Value::Null;
    }
    if let Ok(i) = v.parse::<i64>() {
        return i.into();
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => x.into(),
        _ => v.into(),
    }
}

/// Text placed before the CSV header: schema version, RNG and the full
/// resolved configuration, each line prefixed with `#`.
pub fn prologue(cfg: &RunConfig) -> Result<String> {
    let mut out = format!("# schema_version = {SCHEMA_VERSION}\n# rng = {RNG_NAME}\n");
    for &q in &cfg.model.qs {
        out.push_str(&format!(
            "# resolved J(q = {q}) = {}\n",
            cfg.model.coupling_for(q)?
        ));
    }
    out.push_str("# config:\n");
    for line in emit_config(cfg)?.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str(&format!("#   {line}\n"));
        }
    }
    Ok(out)
}

pub fn write_csv(path: &Path, prologue: &str, table: &Table) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(prologue.as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.header).map_err(csv_err)?;
    for rec in &table.records {
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// The JSON run summary. Timestamps live here only, so CSV bodies are
/// reproducible.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub config: String,
    pub resolved_couplings: Vec<(usize, f64)>,
    pub rng: String,
    pub seed: u64,
    pub streams: Vec<u64>,
    pub workers: usize,
    pub started_unix: f64,
    pub wall_time_s: f64,
    pub verdicts: serde_json::Value,
    pub tables: serde_json::Map<String, serde_json::Value>,
    pub artifacts: Vec<PathBuf>,
}

impl Summary {
    pub fn attach(&mut self, table: &Table) {
        self.tables.insert(table.name.clone(), table.to_json());
    }
}

pub fn write_json(path: &Path, summary: &Summary) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, summary)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}
