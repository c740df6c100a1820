use serde_json::{json, Map, Value};

use crate::args::Format;

pub const SCHEMA_VERSION: u32 = 1;

/// Tabular view of a report, used for CSV output.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub warnings: Vec<String>,
    pub result: Value,
    pub table: Table,
    /// `Some(false)` makes the process exit with status 1.
    pub pass: Option<bool>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            config: Map::new(),
            warnings: Vec::new(),
            result: Value::Null,
            table: Table::default(),
            pass: None,
        }
    }

    pub fn config(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut doc = json!({
                    "schema": SCHEMA_VERSION,
                    "command": self.command,
                    "config": self.config,
                    "warnings": self.warnings,
                    "result": self.result,
                });
                if let Some(pass) = self.pass {
                    doc["pass"] = json!(pass);
                }
                let mut text = serde_json::to_string_pretty(&doc).expect("report is valid JSON");
                text.push('\n');
                text
            }
            Format::Csv => self.table.to_csv(),
        }
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
