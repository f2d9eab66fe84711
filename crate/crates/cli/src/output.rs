//! Reports rendered as text, CSV or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::ser::{Serialize, SerializeMap, Serializer};
use sha2::{Digest, Sha256};

/// Significant digits kept in every printed number.
pub const DIGITS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Rounds to [`DIGITS`] significant digits so that every format prints the
/// same number.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", DIGITS - 1, x).parse().unwrap_or(x)
}

/// Plain notation for moderate magnitudes, scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    let a = r.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => (if *x > 0.0 { "inf" } else { "-inf" }).into(),
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) if x.is_finite() => s.serialize_f64(round_sig(*x)),
            Cell::Num(_) => s.serialize_str(&self.render()),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<BTreeMap<&str, &Cell>> = self
            .rows
            .iter()
            .map(|r| self.columns.iter().map(String::as_str).zip(r).collect())
            .collect();
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("columns", &self.columns)?;
        m.serialize_entry("rows", &rows)?;
        m.end()
    }
}

/// Output of one command: the resolved configuration, scalar results,
/// tables and free-form notes.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub summary: Vec<(String, Cell)>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Self { command: command.into(), config, summary: Vec::new(), tables: Vec::new(), notes: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    /// SHA-256 of the command and its resolved configuration.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        for (k, v) in &self.config {
            h.update(b"\n");
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
        }
        hex::encode(h.finalize())
    }

    fn header(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_string(), self.command.clone()),
            ("version".to_string(), qcvar::limitdist::TABLE_VERSION.to_string()),
            ("config_hash".to_string(), self.config_hash()),
        ];
        out.extend(self.config.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.header() {
            let _ = writeln!(out, "# {k} = {v}");
        }
        if !self.summary.is_empty() {
            out.push('\n');
            let w = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &self.summary {
                let _ = writeln!(out, "{k:<w$}  {}", v.render());
            }
        }
        for t in &self.tables {
            let _ = writeln!(out, "\n[{}]", t.name);
            let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
            let widths: Vec<usize> = t
                .columns
                .iter()
                .enumerate()
                .map(|(j, c)| cells.iter().map(|r| r[j].len()).chain([c.len()]).max().unwrap_or(0))
                .collect();
            let line = |vals: Vec<&str>| {
                vals.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect::<Vec<_>>().join("  ")
            };
            let _ = writeln!(out, "{}", line(t.columns.iter().map(String::as_str).collect()));
            for r in &cells {
                let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
            }
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                let _ = writeln!(out, "note: {n}");
            }
        }
        out
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.header() {
            let _ = writeln!(out, "# {k}={v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "# note={n}");
        }
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        if !self.summary.is_empty() {
            w.write_record(["section", "key", "value"]).expect("in-memory write");
            for (k, v) in &self.summary {
                w.write_record(["summary", k.as_str(), v.render().as_str()]).expect("in-memory write");
            }
        }
        for t in &self.tables {
            let head: Vec<&str> = std::iter::once("section").chain(t.columns.iter().map(String::as_str)).collect();
            w.write_record(&head).expect("in-memory write");
            for r in &t.rows {
                let rec: Vec<String> = std::iter::once(t.name.clone()).chain(r.iter().map(Cell::render)).collect();
                w.write_record(&rec).expect("in-memory write");
            }
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields"));
        out
    }

    fn to_json(&self) -> String {
        let header: BTreeMap<String, String> = self.header().into_iter().collect();
        let summary: BTreeMap<&str, &Cell> = self.summary.iter().map(|(k, v)| (k.as_str(), v)).collect();
        let tables: BTreeMap<&str, &Table> = self.tables.iter().map(|t| (t.name.as_str(), t)).collect();
        let doc = serde_json::json!({
            "meta": header,
            "summary": summary,
            "tables": tables,
            "notes": self.notes,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable report");
        s.push('\n');
        s
    }
}
