//! Tabular output: a metadata block followed by fixed columns, as CSV or JSON.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One cell; `None` and non-finite values are written as empty (CSV) or null (JSON).
pub type Cell = Option<f64>;

pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Map<String, Value>,
}

impl Table {
    pub fn new(columns: &'static [&'static str], command: &str, config: &impl Serialize) -> Self {
        let mut metadata = Map::new();
        metadata.insert("program".into(), json!("iontc"));
        metadata.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        metadata.insert("command".into(), json!(command));
        metadata.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
        Table { columns, rows: Vec::new(), metadata }
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        self.metadata.insert(key.into(), serde_json::to_value(value).expect("metadata serializes"));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        // -0.0 + 0.0 is +0.0; keeps "-0" out of the output
        self.rows.push(row.into_iter().map(|c| c.map(|v| v + 0.0)).collect());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| fmt_cell(*c)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn render_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|c| finite(*c).map_or(Value::Null, |v| json!(v))).collect()))
            .collect();
        let doc = json!({
            "metadata": Value::Object(self.metadata.clone()),
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    /// Writes to `out`, or to stdout when no path is given.
    pub fn write(&self, out: Option<&Path>, format: Format) -> std::io::Result<()> {
        let text = self.render(format);
        match out {
            Some(p) => std::fs::write(p, text),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())?;
                so.flush()
            }
        }
    }
}

fn finite(c: Cell) -> Option<f64> {
    c.filter(|v| v.is_finite())
}

/// Shortest round-trip form, so reruns are byte-identical. Very small or
/// large magnitudes switch to exponent notation.
pub fn fmt_cell(c: Cell) -> String {
    match finite(c) {
        Some(v) if v == 0.0 => "0".into(),
        Some(v) if (1e-4..1e16).contains(&v.abs()) => format!("{v}"),
        Some(v) => format!("{v:e}"),
        None => String::new(),
    }
}
