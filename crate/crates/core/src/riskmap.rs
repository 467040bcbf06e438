//! Dynamic quantile ranking of an indicator into colored risk regimes.
//!
//! At each date the breakpoint quantiles are taken over a history window
//! ending at that date and the current value is assigned to the interval
//! `(q_{k-1}, q_k]` it falls into. Buckets are numbered from 1 (lowest).

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{quantile_sorted, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "length")]
pub enum MapWindow {
    /// All history since the first observation.
    Expanding,
    /// The last `n` trading dates.
    Rolling(usize),
    /// Quantiles of the whole sample, including the future. Not causal;
    /// useful for static summaries and tests.
    FullSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPolicy {
    pub breakpoints: Vec<f64>,
    pub window: MapWindow,
    pub warmup: usize,
    #[serde(default)]
    pub exclude_current: bool,
}

impl Default for MapPolicy {
    fn default() -> Self {
        Self {
            breakpoints: vec![0.25, 0.5, 0.75],
            window: MapWindow::Expanding,
            warmup: 252,
            exclude_current: false,
        }
    }
}

impl MapPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty()
            || self.breakpoints.iter().any(|p| !(*p > 0.0 && *p < 1.0))
            || self.breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidValue(format!(
                "breakpoints must be strictly increasing inside (0, 1), got {:?}",
                self.breakpoints
            )));
        }
        if self.warmup < 2 {
            return Err(Error::InvalidValue("warmup must be at least 2".into()));
        }
        if let MapWindow::Rolling(n) = self.window {
            if n < self.warmup {
                return Err(Error::InvalidValue(format!(
                    "rolling window {n} is shorter than the warmup {}",
                    self.warmup
                )));
            }
        }
        Ok(())
    }

    pub fn bucket_count(&self) -> usize {
        self.breakpoints.len() + 1
    }
}

/// Color label of a bucket. Quartile maps use the four named regimes.
pub fn bucket_color(bucket: u8, buckets: usize) -> String {
    if buckets == 4 {
        ["GREEN", "LIGHT GREEN", "ORANGE", "RED"][bucket as usize - 1].to_string()
    } else {
        format!("LEVEL {bucket}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskMap {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<Option<f64>>,
    pub buckets: Vec<Option<u8>>,
    pub policy: MapPolicy,
    /// Dates whose history window had no dispersion, so every breakpoint
    /// coincided.
    pub degenerate_dates: Vec<NaiveDate>,
}

impl RiskMap {
    pub fn colors(&self) -> Vec<Option<String>> {
        let n = self.policy.bucket_count();
        self.buckets.iter().map(|b| b.map(|b| bucket_color(b, n))).collect()
    }

    pub fn classified(&self) -> usize {
        self.buckets.iter().flatten().count()
    }
}

/// Bucket of `value` against ascending breakpoint quantiles, intervals
/// left-open and right-closed.
fn bucket_of(value: f64, quantiles: &[f64]) -> u8 {
    let k = quantiles.iter().position(|q| value <= *q).unwrap_or(quantiles.len());
    (k + 1) as u8
}

/// Ascending multiset supporting insertion and removal.
#[derive(Default)]
struct SortedWindow(Vec<f64>);

impl SortedWindow {
    fn insert(&mut self, v: f64) {
        let i = self.0.partition_point(|x| *x < v);
        self.0.insert(i, v);
    }

    fn remove(&mut self, v: f64) {
        let i = self.0.partition_point(|x| *x < v);
        debug_assert!(self.0.get(i) == Some(&v));
        self.0.remove(i);
    }
}

pub fn classify(indicator: &TimeSeries, policy: &MapPolicy) -> Result<RiskMap> {
    policy.validate()?;
    let values = indicator.values();
    let mut buckets = vec![None; values.len()];
    let mut degenerate_dates = Vec::new();
    let mut window = SortedWindow::default();

    if policy.window == MapWindow::FullSample {
        indicator.present().for_each(|v| window.insert(v));
    }

    let mut quantiles = vec![0.0; policy.breakpoints.len()];
    for t in 0..values.len() {
        match policy.window {
            MapWindow::Rolling(n) if t >= n => {
                if let Some(old) = values[t - n] {
                    window.remove(old);
                }
            }
            _ => {}
        }
        let Some(v) = values[t] else { continue };
        let causal = policy.window != MapWindow::FullSample;
        if causal && !policy.exclude_current {
            window.insert(v);
        }
        let w = &window.0;
        if w.len() >= policy.warmup {
            for (q, p) in quantiles.iter_mut().zip(&policy.breakpoints) {
                *q = quantile_sorted(w, *p);
            }
            if w[0] == w[w.len() - 1] {
                degenerate_dates.push(indicator.dates()[t]);
            }
            buckets[t] = Some(bucket_of(v, &quantiles));
        }
        if causal && policy.exclude_current {
            window.insert(v);
        }
    }
    if !degenerate_dates.is_empty() {
        log::warn!(
            "risk map `{}`: {} dates classified against a constant history window",
            indicator.name(),
            degenerate_dates.len()
        );
    }

    Ok(RiskMap {
        name: indicator.name().to_string(),
        dates: indicator.dates().to_vec(),
        values: values.to_vec(),
        buckets,
        policy: policy.clone(),
        degenerate_dates,
    })
}

/// Share of classified dates falling in each bucket.
pub fn occupancy(map: &RiskMap) -> Result<Vec<f64>> {
    let n = map.classified();
    if n == 0 {
        return Err(Error::InsufficientData {
            context: format!("risk map `{}` has no classified dates", map.name),
            needed: 1,
            available: 0,
        });
    }
    let mut counts = vec![0usize; map.policy.bucket_count()];
    for b in map.buckets.iter().flatten() {
        counts[*b as usize - 1] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / n as f64).collect())
}
