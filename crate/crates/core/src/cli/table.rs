//! Rectangular tables and their CSV / JSON encodings.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{format_float, Format};
use crate::error::{QlgError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    /// Non-finite values become `null` in JSON and `inf`/`NaN` in CSV.
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl Cell {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; text cells are skipped.
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().filter_map(|r| r[i].as_num()).collect())
    }

    fn check(&self) -> Result<()> {
        let w = self.columns.len();
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != w) {
            return Err(QlgError::pre(format!(
                "row {i} has {} cells for {w} columns",
                r.len()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Document<'a> {
    columns: &'a [String],
    rows: &'a [Vec<Cell>],
    manifest: &'a serde_json::Value,
}

/// Encodes the table. CSV carries no manifest; JSON embeds it.
pub fn render_table(table: &Table, manifest: &serde_json::Value, format: Format) -> Result<Vec<u8>> {
    table.check()?;
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let ser = |e: csv::Error| QlgError::Serialize(e.to_string());
            w.write_record(&table.columns).map_err(ser)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(ser)?;
            }
            w.into_inner().map_err(|e| QlgError::Serialize(e.to_string()))
        }
        Format::Json => {
            let doc = Document {
                columns: &table.columns,
                rows: &table.rows,
                manifest,
            };
            let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| QlgError::Serialize(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes the encoded table to `path`, or to standard output when absent.
pub fn emit_table(table: &Table, manifest: &serde_json::Value, format: Format, path: Option<&Path>) -> Result<()> {
    let bytes = render_table(table, manifest, format)?;
    match path {
        Some(p) => std::fs::write(p, &bytes).map_err(|source| QlgError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|source| QlgError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
