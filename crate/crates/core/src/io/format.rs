//! Number formatting shared by every emitted artifact: 10 significant
//! digits, shortest representation, no exponent.

use crate::series::TimeSeries;

/// `v` rounded to 10 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.9e}").parse().expect("formatted float parses")
}

pub fn fmt_f64(v: f64) -> String {
    format!("{}", round_sig(v))
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Minimal CSV writer for engine outputs; cells never need quoting except
/// labels, which are quoted when they contain a delimiter or a quote.
#[derive(Debug, Default)]
pub struct CsvOut {
    buf: String,
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

impl CsvOut {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut out = Self::default();
        out.row(header);
        out
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let line: Vec<String> = cells.iter().map(|c| quote(c.as_ref())).collect();
        self.buf.push_str(&line.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// Wide `date,<name>...` table of series that share one date index.
pub fn series_table(series: &[&TimeSeries]) -> Vec<u8> {
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.name().to_string()));
    let mut out = CsvOut::new(&header);
    if let Some(first) = series.first() {
        for (t, d) in first.dates().iter().enumerate() {
            let mut row = vec![d.to_string()];
            row.extend(series.iter().map(|s| fmt_opt(s.get(t))));
            out.row(&row);
        }
    }
    out.into_bytes()
}
