//! Tabular results and their CSV and JSON encodings.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

/// Significant digits of every floating-point value written out.
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] and drops trailing zeros, so `0.125`
/// prints as `0.125` and one ulp of noise never reaches the output.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    s.parse().unwrap_or(v)
}

pub fn format_float(v: f64) -> String {
    let r = round_sig(v);
    if r.is_nan() {
        "nan".into()
    } else if r.is_infinite() {
        if r > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if r != 0.0 && (r.abs() < 1e-5 || r.abs() >= 1e15) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(t) if t.contains([',', '"', '\n']) => {
                format!("\"{}\"", t.replace('"', "\"\""))
            }
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => {
                serde_json::Number::from_f64(round_sig(*v)).map_or(Value::Null, Value::Number)
            }
            Cell::Text(t) => json!(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(name: &str, columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(
            row.len(),
            self.columns.len(),
            "row width of table {}",
            self.name
        );
        self.rows.push(row);
    }

    /// Two-column `quantity,value` table.
    pub fn summary(name: &str, entries: Vec<(&str, Cell)>) -> Self {
        let mut t = Table::new(name, ["quantity", "value"]);
        for (k, v) in entries {
            t.push(vec![k.into(), v]);
        }
        t
    }
}

/// Provenance written ahead of every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Metadata {
    pub fn version() -> &'static str {
        env!("CARGO_PKG_VERSION")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn csv_header(&self, out: &mut String, table: &str) {
        let m = &self.metadata;
        let _ = writeln!(out, "# qwalk {}", Metadata::version());
        let _ = writeln!(out, "# experiment: {}", m.experiment);
        let _ = writeln!(out, "# config_sha256: {}", m.config_sha256);
        let _ = writeln!(out, "# seed: {}", m.seed);
        let _ = writeln!(out, "# table: {table}");
    }

    /// One CSV document for `table`, metadata header included.
    pub fn table_csv(&self, table: &Table) -> String {
        let mut out = String::new();
        self.csv_header(&mut out, &table.name);
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// All tables as consecutive CSV documents separated by blank lines.
    pub fn to_csv(&self) -> String {
        let docs: Vec<String> = self.tables.iter().map(|t| self.table_csv(t)).collect();
        docs.join("\n")
    }

    pub fn to_json_value(&self) -> Value {
        let m = &self.metadata;
        let tables: Vec<Value> = self
            .tables
            .iter()
            .map(|t| {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let mut obj = Map::new();
                obj.insert("name".into(), json!(t.name));
                obj.insert("columns".into(), json!(t.columns));
                obj.insert("rows".into(), Value::Array(rows));
                Value::Object(obj)
            })
            .collect();
        json!({
            "metadata": {
                "tool": "qwalk",
                "version": Metadata::version(),
                "experiment": m.experiment,
                "config_sha256": m.config_sha256,
                "seed": m.seed,
            },
            "tables": tables,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value())
            .expect("report values are serializable");
        s.push('\n');
        s
    }
}
