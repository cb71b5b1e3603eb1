//! CSV output with a `#` metadata block, and the matching reader.

use std::fs;
use std::path::Path;

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest representation that parses back to the same f64.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Columns and rows of one output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Comment lines without the leading `# `.
    pub meta: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { meta: Vec::new(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column `name` parsed as reals.
    pub fn reals(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let c = self.column(name).ok_or_else(|| CliError::config(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[c].parse::<f64>().map_err(|_| CliError::config(format!("row {}: `{}` is not a number", i + 1, r[c])))
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        for m in &self.meta {
            out.push_str("# ");
            out.push_str(m);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e| CliError::Csv { path: path.display().to_string(), source: e };
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io { path: path.display().to_string(), source: e.into_error() })?;
        out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
        fs::write(path, out).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text).map_err(|e| CliError::Csv { path: path.display().to_string(), source: e })
    }

    pub fn parse(text: &str) -> Result<Self, csv::Error> {
        let meta = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .map(|l| l.strip_prefix(' ').unwrap_or(l).to_string())
            .collect();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { meta, header, rows })
    }
}
