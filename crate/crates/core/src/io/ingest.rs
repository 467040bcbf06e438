//! CSV ingestion. Every file has a header row; dates are `YYYY-MM-DD`,
//! strictly increasing; an empty numeric cell is a missing value. Errors
//! are collected per file (up to [`MAX_REPORTED`] lines) before failing.

use std::path::Path;

use chrono::NaiveDate;

use crate::benchmarks::FirmSnapshot;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const MAX_REPORTED: usize = 20;

/// Expected layout of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `date,<value>`.
    Series,
    /// `date,<col1>,...,<colN>`.
    Panel,
    /// `name,W,D,lrmes`.
    Firm,
    /// Same grammar as a panel; one column per bank.
    DdPanel,
    /// `strike,quote`.
    Chain,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ingested {
    Series(TimeSeries),
    Panel(Vec<TimeSeries>),
    Firms(Vec<FirmRow>),
    Chain { strikes: Vec<f64>, quotes: Vec<f64> },
}

/// One row of a firm CSV; the prudential capital fraction comes from the
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmRow {
    pub name: String,
    pub equity: f64,
    pub debt: f64,
    pub lrmes: f64,
}

impl FirmRow {
    pub fn snapshot(&self, k: f64) -> Result<FirmSnapshot> {
        FirmSnapshot::new(self.name.clone(), self.equity, self.debt, self.lrmes, k)
    }
}

struct Problems {
    path: String,
    lines: Vec<String>,
    total: usize,
}

impl Problems {
    fn new(path: &Path) -> Self {
        Self {
            path: path.display().to_string(),
            lines: Vec::new(),
            total: 0,
        }
    }

    fn push(&mut self, line: u64, msg: impl std::fmt::Display) {
        self.total += 1;
        if self.lines.len() < MAX_REPORTED {
            self.lines.push(format!("line {line}: {msg}"));
        }
    }

    fn finish(mut self) -> Result<()> {
        if self.total == 0 {
            return Ok(());
        }
        if self.total > self.lines.len() {
            self.lines.push(format!("... {} more", self.total - self.lines.len()));
        }
        Err(Error::Ingest {
            path: self.path,
            lines: self.lines,
        })
    }
}

fn read_records(path: &Path) -> Result<(Vec<String>, Vec<(u64, Vec<String>)>)> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Ingest {
            path: path.display().to_string(),
            lines: vec!["file not found".into()],
        },
        _ => Error::io(path, e),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut problems = Problems::new(path);
    for rec in reader.records() {
        match rec {
            Ok(r) => {
                let line = r.position().map_or(0, |p| p.line());
                if r.iter().all(str::is_empty) {
                    continue;
                }
                rows.push((line, r.iter().map(str::to_string).collect::<Vec<_>>()));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                problems.push(line, e);
            }
        }
    }
    problems.finish()?;
    if rows.is_empty() {
        return Err(Error::Ingest {
            path: path.display().to_string(),
            lines: vec!["line 1: missing header row".into()],
        });
    }
    let (_, header) = rows.remove(0);
    Ok((header, rows))
}

fn header_error(path: &Path, expected: &str, found: &[String]) -> Error {
    Error::Ingest {
        path: path.display().to_string(),
        lines: vec![format!("line 1: header mismatch: expected {expected}, found `{}`", found.join(","))],
    }
}

fn parse_number(cell: &str) -> std::result::Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("non-numeric cell `{cell}`")),
    }
}

fn parse_required(cell: &str, column: &str) -> std::result::Result<f64, String> {
    match parse_number(cell)? {
        Some(v) => Ok(v),
        None => Err(format!("empty `{column}` cell")),
    }
}

/// Reads a `date,...` file into one series per value column.
fn read_dated(path: &Path, expect_columns: Option<usize>) -> Result<Vec<TimeSeries>> {
    let (header, rows) = read_records(path)?;
    let ok_header = header.first().map(|h| h.eq_ignore_ascii_case("date")).unwrap_or(false)
        && header.len() >= 2
        && expect_columns.map_or(true, |n| header.len() == n + 1)
        && header[1..].iter().all(|h| !h.is_empty());
    if !ok_header {
        let expected = match expect_columns {
            Some(1) => "`date,<value>`".to_string(),
            _ => "`date,<column>,...`".to_string(),
        };
        return Err(header_error(path, &expected, &header));
    }
    let width = header.len();
    let mut problems = Problems::new(path);
    let mut dates: Vec<NaiveDate> = Vec::with_capacity(rows.len());
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(rows.len()); width - 1];
    // Ordering is checked against the last row with a valid date, even if
    // that row had bad cells, so one bad cell does not cascade.
    let mut last: Option<NaiveDate> = None;
    for (line, row) in &rows {
        if row.len() != width {
            problems.push(*line, format!("expected {width} cells, found {}", row.len()));
            continue;
        }
        let date = match NaiveDate::parse_from_str(&row[0], "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                problems.push(*line, format!("unparseable date `{}`", row[0]));
                continue;
            }
        };
        if let Some(prev) = &last {
            if date == *prev {
                problems.push(*line, format!("duplicate date {date}"));
                continue;
            }
            if date < *prev {
                problems.push(*line, format!("date {date} is earlier than the previous row ({prev})"));
                continue;
            }
        }
        last = Some(date);
        let mut cells = Vec::with_capacity(width - 1);
        let mut bad = false;
        for (j, cell) in row[1..].iter().enumerate() {
            match parse_number(cell) {
                Ok(v) => cells.push(v),
                Err(msg) => {
                    problems.push(*line, format!("column `{}`: {msg}", header[j + 1]));
                    bad = true;
                }
            }
        }
        if bad {
            continue;
        }
        dates.push(date);
        for (col, v) in columns.iter_mut().zip(cells) {
            col.push(v);
        }
    }
    problems.finish()?;
    if dates.is_empty() {
        return Err(Error::Ingest {
            path: path.display().to_string(),
            lines: vec!["no data rows".into()],
        });
    }
    header[1..]
        .iter()
        .zip(columns)
        .map(|(name, values)| TimeSeries::new(name.clone(), dates.clone(), values))
        .collect()
}

/// Single-series CSV. The series takes the name of its value column.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    Ok(read_dated(path, Some(1))?.remove(0))
}

pub fn read_panel(path: &Path) -> Result<Vec<TimeSeries>> {
    read_dated(path, None)
}

pub fn read_firms(path: &Path) -> Result<Vec<FirmRow>> {
    let (header, rows) = read_records(path)?;
    let expected = ["name", "W", "D", "lrmes"];
    if header.len() != 4 || header.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(header_error(path, "`name,W,D,lrmes`", &header));
    }
    let mut problems = Problems::new(path);
    let mut out = Vec::new();
    for (line, row) in rows {
        if row.len() != 4 {
            problems.push(line, format!("expected 4 cells, found {}", row.len()));
            continue;
        }
        let parsed = (|| -> std::result::Result<FirmRow, String> {
            if row[0].is_empty() {
                return Err("empty firm name".into());
            }
            Ok(FirmRow {
                name: row[0].clone(),
                equity: parse_required(&row[1], "W")?,
                debt: parse_required(&row[2], "D")?,
                lrmes: parse_required(&row[3], "lrmes")?,
            })
        })();
        match parsed {
            Ok(f) if out.iter().any(|o: &FirmRow| o.name == f.name) => {
                problems.push(line, format!("duplicate firm `{}`", f.name))
            }
            Ok(f) => out.push(f),
            Err(msg) => problems.push(line, msg),
        }
    }
    problems.finish()?;
    Ok(out)
}

pub fn read_chain(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let (header, rows) = read_records(path)?;
    if header.len() != 2 || !header[0].eq_ignore_ascii_case("strike") || !header[1].eq_ignore_ascii_case("quote") {
        return Err(header_error(path, "`strike,quote`", &header));
    }
    let mut problems = Problems::new(path);
    let (mut strikes, mut quotes) = (Vec::new(), Vec::new());
    for (line, row) in rows {
        if row.len() != 2 {
            problems.push(line, format!("expected 2 cells, found {}", row.len()));
            continue;
        }
        match (parse_required(&row[0], "strike"), parse_required(&row[1], "quote")) {
            (Ok(k), Ok(q)) => {
                strikes.push(k);
                quotes.push(q);
            }
            (Err(msg), _) | (_, Err(msg)) => problems.push(line, msg),
        }
    }
    problems.finish()?;
    Ok((strikes, quotes))
}

pub fn ingest(path: &Path, schema: Schema) -> Result<Ingested> {
    Ok(match schema {
        Schema::Series => Ingested::Series(read_series(path)?),
        Schema::Panel | Schema::DdPanel => Ingested::Panel(read_panel(path)?),
        Schema::Firm => Ingested::Firms(read_firms(path)?),
        Schema::Chain => {
            let (strikes, quotes) = read_chain(path)?;
            Ingested::Chain { strikes, quotes }
        }
    })
}
