// SPDX-License-Identifier: Apache-2.0

//! CSV tables, Wigner field dumps and JSON sidecars.
//!
//! Floats are written in Rust's shortest round-trip form, so identical runs
//! produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::WignerField;
use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Float(x) => format_float(*x),
        Cell::Text(s) => s.clone(),
    }
}

/// Header row plus data rows, in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn export_table(table: &Table, path: &Path) -> io::Result<()> {
    fs::write(path, table.to_csv())
}

/// Metadata written next to a field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMeta {
    /// Simulation time of the snapshot, units of `T`.
    pub time: f64,
    pub config_hash: String,
    pub solver: String,
}

/// `<path>.json` next to `<path>`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `q,p,w` rows (row-major in `q`) and a JSON sidecar.
pub fn export_field(field: &WignerField, meta: &FieldMeta, path: &Path) -> io::Result<()> {
    let g = &field.grid;
    let mut out = String::with_capacity(g.n_q * g.n_p * 40);
    out.push_str("q,p,w\n");
    for i in 0..g.n_q {
        for j in 0..g.n_p {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_float(g.q(i)),
                format_float(g.p(j)),
                format_float(field.values[[i, j]])
            );
        }
    }
    fs::write(path, out)?;
    let side = json!({
        "grid": {
            "q_min": g.q_min, "q_max": g.q_max, "n_q": g.n_q,
            "p_min": g.p_min, "p_max": g.p_max, "n_p": g.n_p,
        },
        "time": meta.time,
        "config_hash": meta.config_hash,
        "solver": meta.solver,
        "min": field.min(),
        "max": field.max(),
    });
    write_json(&side, &sidecar_path(path))
}

pub fn write_json(value: &Value, path: &Path) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// SHA-256 of the canonical serialized configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml_string().as_bytes()))
}
