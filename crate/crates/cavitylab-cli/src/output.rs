//! Tabular output. CSV is the tabular default; JSON renders the same rows
//! as an array of objects. Floats are fixed at 12 significant digits in CSV
//! so identical runs produce identical bytes.

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use serde_json::{Map, Value};

use cavitylab::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    U(u64),
    F(f64),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(v) => v.to_string(),
            Cell::F(v) => format!("{v:.12e}"),
            Cell::S(v) => v.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::U(v) => Value::from(*v),
            Cell::F(v) => serde_json::Number::from_f64(*v)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(format!("{v}"))),
            Cell::S(v) => Value::String(v.clone()),
        }
    }
}

#[derive(Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Table {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> Result<String> {
        let fail = |e: &dyn std::fmt::Display| Error::InvalidParameter(format!("csv output: {e}"));
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns).map_err(|e| fail(&e))?;
        for row in &self.rows {
            writer
                .write_record(row.iter().map(Cell::csv))
                .map_err(|e| fail(&e))?;
        }
        let bytes = writer.into_inner().map_err(|e| fail(&e))?;
        String::from_utf8(bytes).map_err(|e| fail(&e))
    }

    fn render_json(&self) -> Result<String> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut object = Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    object.insert((*name).to_string(), cell.json());
                }
                Value::Object(object)
            })
            .collect();
        let text = serde_json::to_string_pretty(&Value::Array(rows))
            .map_err(|e| Error::InvalidParameter(format!("json output: {e}")))?;
        Ok(text + "\n")
    }
}

/// Writes to `--out` when given, stdout otherwise.
pub fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
