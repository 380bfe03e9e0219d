//! Report files: JSON documents and CSV tables, each written to a temporary
//! file and renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use orthospline::analysis::Check;
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    orthospline::knots::fmt_f64(x)
}

pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

/// A CSV table with a header row.
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Int(v) => v.to_string(),
                Cell::Float(v) => fmt_float(*v),
            }))?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, R: Serialize> {
    pub schema: u32,
    pub command: &'a str,
    pub config: &'a ExperimentConfig,
    pub report: &'a R,
    pub checks: &'a [Check],
    pub pass: bool,
    pub tables: Vec<String>,
}

/// Paths of the files a command writes: `<out>/<command>.json` and
/// `<out>/<command>_<table>.csv`.
pub fn json_path(out: &Path, command: &str) -> PathBuf {
    out.join(format!("{command}.json"))
}

pub fn csv_path(out: &Path, command: &str, table: &str) -> PathBuf {
    out.join(format!("{command}_{table}.csv"))
}
