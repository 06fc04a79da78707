use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(usize),
    Num(f64),
    Text(String),
    Flag(bool),
    Empty,
}

/// 17 significant digits, enough to reproduce any `f64` exactly.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => u8::from(*b).to_string(),
            Cell::Empty => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_u64(*i as u64),
            Cell::Num(x) if x.is_finite() => {
                let raw =
                    RawValue::from_string(format_number(*x)).map_err(serde::ser::Error::custom)?;
                raw.serialize(s)
            }
            Cell::Num(_) | Cell::Empty => s.serialize_none(),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Flag(b) => s.serialize_u8(u8::from(*b)),
        }
    }
}

/// Rows under a fixed header, plus optional summary fields that only the
/// JSON rendering carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
}

struct Row<'a>(&'a [&'static str], &'a [Cell]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

struct Rows<'a>(&'a Table);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&Row(&self.0.columns, row))?;
        }
        seq.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.summary.len() + 1))?;
        for (k, v) in &self.summary {
            map.serialize_entry(k, v)?;
        }
        map.serialize_entry("rows", &Rows(self))?;
        map.end()
    }
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, CliError> {
        match format {
            OutputFormat::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv_text).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                Ok(out)
            }
            OutputFormat::Json => {
                let mut out = serde_json::to_string_pretty(self)
                    .map_err(|e| CliError::Validation(format!("cannot serialize output: {e}")))?;
                out.push('\n');
                Ok(out)
            }
        }
    }
}

/// Reads `(k, e_j)` pairs back from a CSV trace written by [`Table::render`].
/// Extra columns are ignored.
pub fn parse_trace_csv(text: &str, origin: &str) -> Result<Vec<(usize, f64)>, CliError> {
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))
    };
    let (k_col, e_col) = (col("k")?, col("e_j")?);
    let mut out = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let k = record
            .get(k_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(line, "bad `k` value".into()))?;
        let e = record
            .get(e_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(line, "bad `e_j` value".into()))?;
        out.push((k, e));
    }
    Ok(out)
}
