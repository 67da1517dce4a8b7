//! Tables written as CSV or JSON lines after one JSON metadata line.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Finite floats as numbers, everything else as null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn write_table<W: Write>(mut w: W, meta: &Value, table: &Table, format: Format) -> Result<(), CliError> {
    writeln!(w, "{}", serde_json::to_string(meta)?)?;
    match format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(&table.columns)?;
            for row in &table.rows {
                csv.write_record(row.iter().map(cell))?;
            }
            csv.flush()?;
        }
        Format::Json => {
            for row in &table.rows {
                let obj: Map<String, Value> =
                    table.columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect();
                writeln!(w, "{}", serde_json::to_string(&obj)?)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit(path: Option<&std::path::Path>, meta: &Value, table: &Table, format: Format) -> Result<(), CliError> {
    match path {
        Some(p) => write_table(std::io::BufWriter::new(std::fs::File::create(p)?), meta, table, format),
        None => write_table(std::io::stdout().lock(), meta, table, format),
    }
}
