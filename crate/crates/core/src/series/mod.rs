//! Date-indexed series with explicit missing slots, plus the analytics built
//! on top of them: returns, drawdowns, descriptive statistics and
//! correlations.

mod correlation;
mod returns;
mod stats;

pub use correlation::{correlation_matrix, CorrelationMatrix};
pub use returns::{compute_returns, ReturnKind, ReturnSeries};
pub use stats::{describe, drawdown, quantile_sorted, StatsSummary};

use std::collections::BTreeSet;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// A named sequence of values on strictly increasing dates. `None` marks a
/// missing observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    dates: Vec<NaiveDate>,
    values: Vec<Option<f64>>,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        dates: Vec<NaiveDate>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        let name = name.into();
        if dates.len() != values.len() {
            return Err(Error::InvalidValue(format!(
                "series `{name}`: {} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidValue(format!(
                "series `{name}`: dates not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(pos) = values.iter().position(|v| v.is_some_and(|x| !x.is_finite())) {
            return Err(Error::Domain {
                series: name,
                date: dates[pos],
                reason: "non-finite value".into(),
            });
        }
        Ok(Self {
            name,
            dates,
            values,
        })
    }

    /// Builds a series with every slot present.
    pub fn from_values(
        name: impl Into<String>,
        dates: Vec<NaiveDate>,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        Self::new(name, dates, values.into_iter().map(Some).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    /// Present values in date order.
    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }

    pub fn count_present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn count_missing(&self) -> usize {
        self.len() - self.count_present()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Applies `f` to every present value, keeping the date index.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            name: self.name.clone(),
            dates: self.dates.clone(),
            values: self.values.iter().map(|v| v.map(&f)).collect(),
        }
    }

    /// Reindexes onto `dates`, inserting missing slots where this series has
    /// no observation. Dates absent from `dates` are dropped.
    pub fn reindex(&self, dates: &[NaiveDate]) -> Self {
        let mut values = Vec::with_capacity(dates.len());
        let mut j = 0;
        for d in dates {
            while j < self.dates.len() && self.dates[j] < *d {
                j += 1;
            }
            if j < self.dates.len() && self.dates[j] == *d {
                values.push(self.values[j]);
            } else {
                values.push(None);
            }
        }
        Self {
            name: self.name.clone(),
            dates: dates.to_vec(),
            values,
        }
    }

    /// The first `n` observations.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            name: self.name.clone(),
            dates: self.dates[..n].to_vec(),
            values: self.values[..n].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignPolicy {
    Intersect,
    Union,
}

/// Puts every series of `panel` on one shared date index.
pub fn align(panel: &[TimeSeries], policy: AlignPolicy) -> Result<Vec<TimeSeries>> {
    let first = panel
        .first()
        .ok_or_else(|| Error::InvalidValue("cannot align an empty panel".into()))?;
    let dates: Vec<NaiveDate> = match policy {
        AlignPolicy::Union => {
            let set: BTreeSet<NaiveDate> = panel.iter().flat_map(|s| s.dates.iter().copied()).collect();
            set.into_iter().collect()
        }
        AlignPolicy::Intersect => {
            let mut common: BTreeSet<NaiveDate> = first.dates.iter().copied().collect();
            for s in &panel[1..] {
                let other: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
                common = common.intersection(&other).copied().collect();
                if common.is_empty() {
                    return Err(Error::InsufficientOverlap {
                        series: s.name.clone(),
                    });
                }
            }
            if common.is_empty() {
                return Err(Error::InsufficientOverlap {
                    series: first.name.clone(),
                });
            }
            common.into_iter().collect()
        }
    };
    Ok(panel.iter().map(|s| s.reindex(&dates)).collect())
}

#[cfg(test)]
pub(crate) fn test_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    (0..n).map(|i| start + chrono::Days::new(i as u64)).collect()
}
