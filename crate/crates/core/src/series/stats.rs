use serde::Serialize;

use super::TimeSeries;
use crate::error::{Error, Result};

/// Quantile of an ascending slice by linear interpolation between order
/// statistics at zero-based position `(n - 1) * q`. This rule is used
/// everywhere a quantile is taken.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Summary statistics of the present values of a series.
///
/// Skewness and kurtosis use population central moments; kurtosis is the
/// excess kurtosis (zero for a normal law). `stdev` is the sample standard
/// deviation. Moments that are undefined (too few observations, zero
/// variance) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub nobs: usize,
    pub n_missing: usize,
    pub min: f64,
    pub q1: f64,
    pub mean: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub stdev: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub jb_stat: Option<f64>,
    pub jb_pvalue: Option<f64>,
}

pub fn describe(series: &TimeSeries) -> Result<StatsSummary> {
    let mut v: Vec<f64> = series.present().collect();
    if v.is_empty() {
        return Err(Error::InsufficientHistory {
            series: series.name().to_string(),
            needed: 1,
            available: 0,
        });
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in &v {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let stdev = if v.len() > 1 { (m2 / (n - 1.0)).sqrt() } else { 0.0 };
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let scale = v[0].abs().max(v[v.len() - 1].abs());
    let degenerate = m2.sqrt() <= 1e-14 * scale;
    let skewness = (!degenerate && v.len() >= 3).then(|| m3 / m2.powf(1.5));
    let kurtosis = (!degenerate && v.len() >= 4).then(|| m4 / (m2 * m2) - 3.0);
    let (jb_stat, jb_pvalue) = match (skewness, kurtosis) {
        (Some(s), Some(k)) => {
            let jb = n / 6.0 * (s * s + k * k / 4.0);
            (Some(jb), Some(chi2_2_upper_tail(jb)))
        }
        _ => (None, None),
    };

    Ok(StatsSummary {
        nobs: v.len(),
        n_missing: series.count_missing(),
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        mean,
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
        stdev,
        skewness,
        kurtosis,
        jb_stat,
        jb_pvalue,
    })
}

/// Upper tail of the chi-square law with two degrees of freedom.
fn chi2_2_upper_tail(x: f64) -> f64 {
    (-x / 2.0).exp().clamp(0.0, 1.0)
}

/// Relative distance below the running maximum, `P_t / max_{s<=t} P_s - 1`.
/// Missing prices stay missing and do not move the running maximum.
pub fn drawdown(prices: &TimeSeries) -> Result<TimeSeries> {
    if prices.count_present() == 0 {
        return Err(Error::InsufficientHistory {
            series: prices.name().to_string(),
            needed: 1,
            available: 0,
        });
    }
    let mut peak = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(prices.len());
    for (i, v) in prices.values().iter().enumerate() {
        match *v {
            Some(p) if p <= 0.0 => {
                return Err(Error::Domain {
                    series: prices.name().to_string(),
                    date: prices.dates()[i],
                    reason: "non-positive price".into(),
                })
            }
            Some(p) => {
                peak = peak.max(p);
                out.push(Some(if p == peak { 0.0 } else { p / peak - 1.0 }));
            }
            None => out.push(None),
        }
    }
    TimeSeries::new(prices.name(), prices.dates().to_vec(), out)
}
