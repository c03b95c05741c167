//! Rectangular sweep results and their CSV form.

use crate::RunError;
use std::fmt::Display;

/// Column-labeled rows of finite floats plus `#`-prefixed metadata.
/// Output is deterministic: same table, same bytes.
#[derive(Debug, Clone)]
pub struct SweepTable {
    columns: Vec<&'static str>,
    metadata: Vec<(String, String)>,
    rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            metadata: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[&'static str] {
        &self.columns
    }

    pub fn note(&mut self, key: &str, value: impl Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<(), RunError> {
        if row.len() != self.columns.len() {
            return Err(RunError::RowArity {
                got: row.len(),
                want: self.columns.len(),
            });
        }
        if let Some(pos) = row.iter().position(|v| !v.is_finite()) {
            return Err(RunError::NonFinite {
                column: self.columns[pos].to_string(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(concat!("# kerrcat ", env!("CARGO_PKG_VERSION"), "\n"));
        for (key, value) in &self.metadata {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip form when it stays within 12 significant digits,
/// otherwise scientific with 12.
pub fn format_value(v: f64) -> String {
    let shortest = format!("{v}");
    if significant_digits(&shortest) <= 12 {
        shortest
    } else {
        format!("{v:.11e}")
    }
}

fn significant_digits(repr: &str) -> usize {
    let mantissa = repr.split(['e', 'E']).next().unwrap_or(repr);
    mantissa
        .chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count()
}
