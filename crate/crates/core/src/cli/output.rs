use std::io::Write;

use serde_json::{json, Map, Value};

use super::config::Format;
use crate::error::{Error, Result};

/// Outcome of a command: a summary object plus a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub summary: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// `false` when a check failed.
    pub passed: bool,
}

impl Report {
    pub fn new(command: &'static str, columns: Vec<&'static str>) -> Self {
        Self { command, summary: Map::new(), columns, rows: vec![], passed: true }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.summary.insert(key.into(), value);
    }

    /// The rows as objects keyed by column.
    pub fn records(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
            .collect()
    }

    pub fn to_json(&self, config: &Value) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "passed": self.passed,
            "summary": self.summary,
            "rows": self.records(),
        })
    }

    /// Writes the report; CSV output starts with `#` lines holding the
    /// version, the resolved config and the summary.
    pub fn write<W: Write + ?Sized>(&self, out: &mut W, format: Format, config: &Value) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json(config))?;
                writeln!(out)?;
            }
            Format::Csv => {
                writeln!(out, "# landscape {} {}", env!("CARGO_PKG_VERSION"), self.command)?;
                writeln!(out, "# config {config}")?;
                writeln!(out, "# summary {}", Value::Object(self.summary.clone()))?;
                writeln!(out, "# passed {}", self.passed)?;
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(&self.columns).map_err(csv_err)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(cell)).map_err(csv_err)?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
