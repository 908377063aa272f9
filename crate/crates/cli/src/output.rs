//! CSV tables with a `#` metadata header, plus an optional JSON mirror.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;

/// Rows of one subcommand run.
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Table {
            command,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, config: &Config, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "# dnafb {} {}", self.command, env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# seed = {}", config.seed)?;
        writeln!(out, "# resolved configuration:")?;
        for line in config.to_toml().lines() {
            if line.is_empty() {
                writeln!(out, "#")?;
            } else {
                writeln!(out, "#   {line}")?;
            }
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self, config: &Config) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.clone()))
                    .collect::<serde_json::Map<_, _>>();
                Value::Object(obj)
            })
            .collect();
        json!({
            "command": self.command,
            "seed": config.seed,
            "config": to_value(config),
            "rows": rows,
        })
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Writes the CSV to `path`, or to stdout when absent, and the JSON mirror when requested.
pub fn emit(table: &Table, config: &Config, path: Option<&Path>, json: Option<&Path>) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            table.write_csv(config, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(config, &mut lock)?;
        }
    }
    if let Some(p) = json {
        let mut w = BufWriter::new(File::create(p)?);
        serde_json::to_writer_pretty(&mut w, &table.to_json(config))?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}
