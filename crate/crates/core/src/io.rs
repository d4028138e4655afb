//! CSV and JSON persistence.
//!
//! Field files have a header row `t, x_0, ..., x_nx` followed by one row per
//! time node `t_n, v_0, ..., v_nx`. Numbers are written with 17 significant
//! digits, so reading a file back reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::coupling::Solution;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Round-trip-exact decimal form with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>, path: &Path) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    w.into_inner().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_field(path: &Path, grid: &Grid, field: &Field) -> Result<()> {
    field.check_grid(grid)?;
    let header = std::iter::once("t".to_string()).chain(grid.x.iter().map(|&x| format_float(x)));
    let rows = (0..=grid.nt).map(|n| {
        std::iter::once(format_float(grid.t[n]))
            .chain(field.slice(n).iter().map(|&v| format_float(v)))
            .collect()
    });
    let bytes = csv_bytes(std::iter::once(header.collect()).chain(rows), path)?;
    write_atomic(path, &bytes)
}

/// A field read back from disk together with its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub field: Field,
}

impl FieldFile {
    /// Checks the coordinates against `grid` (relative `1e-12`).
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + q.abs()))
        };
        if !close(&self.x, &grid.x) || !close(&self.t, &grid.t) {
            return Err(Error::Shape(format!(
                "file coordinates ({} x {}) do not match the configured grid ({} x {})",
                self.t.len(),
                self.x.len(),
                grid.nt + 1,
                grid.nx + 1
            )));
        }
        Ok(())
    }
}

fn parse_number(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: `{s}` is not a number"),
    })
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut t = Vec::new();
    let mut x = Vec::new();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 1;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {line}: {e}"),
        })?;
        if k == 0 {
            if record.get(0) != Some("t") {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    message: "line 1: header must start with `t`".into(),
                });
            }
            x = record
                .iter()
                .skip(1)
                .map(|s| parse_number(s, path, line))
                .collect::<Result<_>>()?;
            continue;
        }
        let values: Vec<f64> = record
            .iter()
            .map(|s| parse_number(s, path, line))
            .collect::<Result<_>>()?;
        t.push(values[0]);
        rows.push(values[1..].to_vec());
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    if rows.iter().any(|r| r.len() != x.len()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: "row lengths do not match the header".into(),
        });
    }
    let field = Field::from_rows(&rows)?;
    Ok(FieldFile { t, x, field })
}

/// `t, eta, Q, f, pbar` with an empty `pbar` where it is undefined.
pub fn write_paths(path: &Path, sol: &Solution) -> Result<()> {
    let header = ["t", "eta", "Q", "f", "pbar"].map(String::from).to_vec();
    let rows = (0..=sol.grid.nt).map(|n| {
        vec![
            format_float(sol.grid.t[n]),
            format_float(sol.eta[n]),
            format_float(sol.q[n]),
            format_float(sol.f[n]),
            sol.pbar[n].map(format_float).unwrap_or_default(),
        ]
    });
    let bytes = csv_bytes(std::iter::once(header).chain(rows), path)?;
    write_atomic(path, &bytes)
}

/// Generic table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let head = header.iter().map(|s| s.to_string()).collect();
    let bytes = csv_bytes(std::iter::once(head).chain(rows.iter().cloned()), path)?;
    write_atomic(path, &bytes)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
