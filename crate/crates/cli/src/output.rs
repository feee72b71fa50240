use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

pub const ARTIFACT_VERSION: &str = concat!("bykov-cli ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::I(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            // `Debug` is the shortest representation that parses back to the same value.
            Cell::F(v) => write!(f, "{v:?}"),
            Cell::I(v) => write!(f, "{v}"),
            Cell::S(s) => write!(f, "{s}"),
            Cell::B(b) => write!(f, "{b}"),
            Cell::Empty => Ok(()),
        }
    }
}

/// One output file: metadata, a fixed-header table for CSV and the library value for JSON.
pub struct Artifact {
    pub command: &'static str,
    pub meta: Map<String, Value>,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    pub data: Value,
}

impl Artifact {
    pub fn new<T: Serialize>(command: &'static str, columns: &'static [&'static str], data: &T) -> Self {
        Artifact {
            command,
            meta: Map::new(),
            columns,
            rows: Vec::new(),
            data: serde_json::to_value(data).expect("library types serialize"),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.meta.insert(
            key.to_string(),
            serde_json::to_value(value).expect("metadata serializes"),
        );
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => {
                let doc = json!({
                    "artifact": ARTIFACT_VERSION,
                    "command": self.command,
                    "meta": Value::Object(self.meta.clone()),
                    "data": self.data,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("json renders");
                s.push('\n');
                s
            }
        }
    }

    fn render_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# artifact: {ARTIFACT_VERSION}\n# command: {}\n", self.command));
        for (k, v) in &self.meta {
            let text = match v {
                Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!("# {k}: {text}\n"));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| {
            std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
