use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{align, AlignPolicy, ReturnSeries, TimeSeries};

/// A row that did not make it into the design matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedRow {
    pub date: NaiveDate,
    pub reason: String,
}

/// Response vector and design matrix with an intercept column followed by,
/// for each predictor, its lags `1..=p` in observation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDesign {
    pub y: Vec<f64>,
    /// Row-major, `y.len()` rows by `column_labels.len()` columns.
    pub x: Vec<f64>,
    pub lags: usize,
    pub row_dates: Vec<NaiveDate>,
    pub predictor_labels: Vec<String>,
    pub column_labels: Vec<String>,
    /// Candidate rows before dropping incomplete ones.
    pub rows_before: usize,
    pub dropped: Vec<DroppedRow>,
}

impl LaggedDesign {
    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    pub fn ncols(&self) -> usize {
        self.column_labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.ncols();
        &self.x[i * m..(i + 1) * m]
    }

    /// Number of slope parameters (columns other than the intercept).
    pub fn slopes(&self) -> usize {
        self.ncols() - 1
    }

    /// Keeps the rows for which `keep(y_i)` holds.
    pub fn filter_rows(&self, keep: impl Fn(f64) -> bool) -> Self {
        let m = self.ncols();
        let mut out = Self {
            y: Vec::new(),
            x: Vec::new(),
            row_dates: Vec::new(),
            dropped: self.dropped.clone(),
            ..self.clone()
        };
        for i in 0..self.nrows() {
            if keep(self.y[i]) {
                out.y.push(self.y[i]);
                out.x.extend_from_slice(&self.x[i * m..(i + 1) * m]);
                out.row_dates.push(self.row_dates[i]);
            }
        }
        out
    }

    /// Design restricted to the first `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> Self {
        let m = self.ncols();
        let cols = cols.clamp(1, m);
        let x = (0..self.nrows())
            .flat_map(|i| self.x[i * m..i * m + cols].iter().copied())
            .collect();
        Self {
            x,
            column_labels: self.column_labels[..cols].to_vec(),
            ..self.clone()
        }
    }

    /// Builds a design directly from rows; the first column should be the
    /// intercept.
    pub fn from_rows(y: Vec<f64>, rows: Vec<Vec<f64>>, column_labels: Vec<String>) -> Result<Self> {
        let m = column_labels.len();
        if rows.len() != y.len() || rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidValue("design rows do not match the response or column labels".into()));
        }
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let n = y.len();
        Ok(Self {
            y,
            x: rows.into_iter().flatten().collect(),
            lags: 0,
            row_dates: (0..n).map(|i| start + chrono::Days::new(i as u64)).collect(),
            predictor_labels: column_labels[1..].to_vec(),
            column_labels,
            rows_before: n,
            dropped: Vec::new(),
        })
    }
}

pub fn build_design(y: &ReturnSeries, predictors: &[ReturnSeries], lags: usize) -> Result<LaggedDesign> {
    if lags == 0 {
        return Err(Error::InvalidValue("lag depth must be at least 1".into()));
    }
    let mut panel: Vec<TimeSeries> = vec![y.base.clone()];
    panel.extend(predictors.iter().map(|p| p.base.clone()));
    let aligned = align(&panel, AlignPolicy::Union)?;
    let (response, preds) = aligned.split_first().expect("non-empty panel");

    let predictor_labels: Vec<String> = preds.iter().map(|p| p.name().to_string()).collect();
    let mut column_labels = vec!["intercept".to_string()];
    for name in &predictor_labels {
        column_labels.extend((1..=lags).map(|k| format!("{name}_lag{k}")));
    }
    let m = column_labels.len();

    let n = response.len();
    let mut out = LaggedDesign {
        y: Vec::new(),
        x: Vec::new(),
        lags,
        row_dates: Vec::new(),
        predictor_labels,
        column_labels,
        rows_before: n.saturating_sub(lags),
        dropped: Vec::new(),
    };
    for t in 0..n {
        let date = response.dates()[t];
        if t < lags {
            out.dropped.push(DroppedRow {
                date,
                reason: format!("first {lags} observations only feed lags"),
            });
            continue;
        }
        let Some(yt) = response.get(t) else {
            out.dropped.push(DroppedRow {
                date,
                reason: format!("response `{}` missing", response.name()),
            });
            continue;
        };
        let mut row = Vec::with_capacity(m);
        row.push(1.0);
        let mut missing = None;
        'fill: for p in preds {
            for k in 1..=lags {
                match p.get(t - k) {
                    Some(v) => row.push(v),
                    None => {
                        missing = Some(format!("predictor `{}` missing at lag {k}", p.name()));
                        break 'fill;
                    }
                }
            }
        }
        match missing {
            Some(reason) => {
                log::debug!("design row {date} dropped: {reason}");
                out.dropped.push(DroppedRow { date, reason });
            }
            None => {
                out.y.push(yt);
                out.x.extend(row);
                out.row_dates.push(date);
            }
        }
    }
    let needed = 1 + m + 2;
    if out.nrows() < needed {
        return Err(Error::InsufficientData {
            context: format!("lagged design with {m} columns"),
            needed,
            available: out.nrows(),
        });
    }
    Ok(out)
}
