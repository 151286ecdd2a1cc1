//! Tables of results and their CSV / JSON rendering.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`) so that parsing
//! the output reproduces every value bit for bit. Non-finite values are
//! written as the strings `inf`, `-inf` and `nan`.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x as i64)
    }
}

impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Value::Int(x)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

/// 17 significant digits, or `inf` / `-inf` / `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

impl Value {
    fn csv_field(&self) -> String {
        match self {
            Value::Float(x) => format_float(*x),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
        }
    }

    fn write_json(&self, out: &mut String) {
        match self {
            Value::Float(x) if x.is_finite() => out.push_str(&format_float(*x)),
            Value::Float(x) => out.push_str(&serde_json::to_string(&format_float(*x)).expect("string")),
            Value::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Value::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            Value::Text(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        }
    }
}

/// Homogeneous rows under a fixed header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Set when a numerical failure cut the run short.
    pub incomplete: Option<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), incomplete: None }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn float(&self, row: usize, name: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(name)?)? {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn emit(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => self.emit_csv(out),
            Format::Json => self.emit_json(out),
        }
    }

    /// Header row, then one record per row (RFC 4180 quoting). A cut-short
    /// run ends with a `# incomplete: ...` line.
    pub fn emit_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(io::Error::other)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv_field)).map_err(io::Error::other)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        out.write_all(&bytes)?;
        if let Some(msg) = &self.incomplete {
            write!(out, "# incomplete: {}\r\n", msg.replace(['\r', '\n'], " "))?;
        }
        out.flush()
    }

    /// An array of objects; a cut-short run is wrapped as
    /// `{"rows": [...], "incomplete": true, "error": "..."}`.
    pub fn emit_json(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut s = String::from("[");
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
            for (j, (col, v)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                s.push_str(&serde_json::to_string(col).expect("string"));
                s.push_str(": ");
                v.write_json(&mut s);
            }
            s.push('}');
        }
        s.push_str(if self.rows.is_empty() { "]" } else { "\n]" });
        if let Some(msg) = &self.incomplete {
            s = format!("{{\"rows\": {s}, \"incomplete\": true, \"error\": {}}}", serde_json::to_string(msg).expect("string"));
        }
        s.push('\n');
        out.write_all(s.as_bytes())?;
        out.flush()
    }
}

/// Column names for bound reports in `C^n`.
pub fn bound_columns(n: usize) -> Vec<String> {
    let mut cols = Vec::new();
    if n == 1 {
        cols.push("z_re".to_string());
        cols.push("z_im".to_string());
    } else {
        for j in 1..=n {
            cols.push(format!("z{j}_re"));
            cols.push(format!("z{j}_im"));
        }
    }
    for c in ["r_star", "bound", "mean_term", "radius_penalty", "norm_term", "const_term", "method"] {
        cols.push(c.to_string());
    }
    cols
}

pub fn bound_table(n: usize) -> Table {
    Table { columns: bound_columns(n), rows: Vec::new(), incomplete: None }
}

pub fn bound_row(r: &BoundReport) -> Vec<Value> {
    let mut row: Vec<Value> = r.z.iter().map(|&x| Value::Float(x)).collect();
    row.extend([r.r_star, r.bound, r.mean_term, r.radius_penalty, r.norm_term, r.const_term].map(Value::Float));
    row.push(Value::Text(r.method.to_string()));
    row
}
