use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    /// Shortest decimal that parses back to the same value, `.` separator.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Rows under a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(s, "{}", cells.join(",")).expect("writing to a String");
        }
        s
    }

    pub fn to_json(&self, summary: &Value) -> String {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({ "columns": self.columns, "rows": rows, "summary": summary });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, summary: &Value) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(summary),
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_shortest_round_trip_numbers() {
        let mut t = Table::new(&["region", "method", "value", "std_error"]);
        t.push(vec!["E".into(), "closed_form".into(), 4.0.into(), 0.0.into()]);
        t.push(vec!["E".into(), "monte_carlo".into(), 0.1.into(), (1.0f64 / 3.0).into()]);
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "region,method,value,std_error\nE,closed_form,4,0\nE,monte_carlo,0.1,0.3333333333333333\n"
        );
        let third: f64 = csv.lines().nth(2).unwrap().rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
    }

    #[test]
    fn json_keeps_column_order() {
        let mut t = Table::new(&["s", "k", "cover_size"]);
        t.push(vec![3u32.into(), 5u64.into(), 2usize.into()]);
        let v: Value = serde_json::from_str(&t.to_json(&json!(null))).unwrap();
        assert_eq!(v["columns"], json!(["s", "k", "cover_size"]));
        assert_eq!(v["rows"], json!([[3, 5, 2]]));
    }
}
