//! Tabular experiment reports with deterministic serialization.
//!
//! Reports hold typed cells in a fixed column order so that re-running a
//! configuration reproduces the emitted bytes exactly. Wall-clock time is
//! carried on the struct for display but never written to the output file.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// One report cell. Floats serialize with six decimal places everywhere so
/// CSV and JSON output stay stable across platforms.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn csv_field(&self) -> String {
        match self {
            Cell::Text(s) => csv_quote(s),
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.6}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json_value(&self) -> String {
        match self {
            Cell::Text(s) => serde_json::to_string(s).expect("strings serialize"),
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.6}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => "null".to_string(),
        }
    }
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    JsonLines,
}

#[derive(Clone, Debug)]
pub struct Report {
    /// Echo of the resolved configuration, for the run summary.
    pub config: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub wall_ms: u128,
}

impl Report {
    pub fn new(config: impl Into<String>, columns: &[&str]) -> Report {
        Report {
            config: config.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match columns");
        self.rows.push(row);
    }

    /// A report passes when every `pass` cell is true. Reports without a
    /// `pass` column pass vacuously.
    pub fn all_passed(&self) -> bool {
        let Some(idx) = self.columns.iter().position(|c| c == "pass") else {
            return true;
        };
        self.rows.iter().all(|r| matches!(r[idx], Cell::Bool(true)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.iter().map(|c| csv_quote(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(|c| c.csv_field()).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push('{');
            for (i, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:{}", serde_json::to_string(col).expect("strings serialize"), cell.json_value());
            }
            out.push_str("}\n");
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::JsonLines => self.to_json_lines(),
        }
    }
}

/// Writes via a sibling temp file and rename, so readers never observe a
/// partial report.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
