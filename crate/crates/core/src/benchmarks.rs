//! Closed-form parts of the benchmark systemic-risk indicators: SRISK from
//! firm snapshots, the distance-to-default spread with its stress flags,
//! nonparametric VaR and the fixed CATFIN loadings.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{align, quantile_sorted, AlignPolicy, TimeSeries};

pub const DEFAULT_PRUDENTIAL_CAPITAL: f64 = 0.08;

/// Loadings on the standardized GPD, SGED and nonparametric VaR measures.
pub const CATFIN_LOADINGS: [f64; 3] = [0.5700, 0.5719, 0.5889];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmSnapshot {
    pub name: String,
    /// Market value of equity.
    pub equity: f64,
    /// Book value of debt.
    pub debt: f64,
    /// Long-run marginal expected shortfall, a fraction.
    pub lrmes: f64,
    /// Prudential capital fraction.
    pub k: f64,
}

impl FirmSnapshot {
    pub fn new(name: impl Into<String>, equity: f64, debt: f64, lrmes: f64, k: f64) -> Result<Self> {
        let s = Self {
            name: name.into(),
            equity,
            debt,
            lrmes,
            k,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidValue(format!("firm `{}`: {what}", self.name)));
        if !(self.equity > 0.0 && self.equity.is_finite()) {
            return bad("market value of equity must be positive");
        }
        if !(self.debt >= 0.0 && self.debt.is_finite()) {
            return bad("debt must be non-negative");
        }
        if !(0.0..1.0).contains(&self.lrmes) {
            return bad("LRMES must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.k) {
            return bad("prudential capital fraction must lie in [0, 1)");
        }
        Ok(())
    }

    /// Quasi-leverage `(D + W) / W`.
    pub fn leverage(&self) -> f64 {
        (self.debt + self.equity) / self.equity
    }
}

/// Horizon and market-decline threshold under which an ingested LRMES was
/// estimated. Carried as metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistressThresholds {
    pub horizon: usize,
    pub threshold: f64,
}

impl Default for DistressThresholds {
    fn default() -> Self {
        Self {
            horizon: 22,
            threshold: -0.10,
        }
    }
}

/// Capital shortfall `k D - (1 - k) W (1 - LRMES)`.
///
/// The leverage form `W (k LVG + (1 - k) LRMES - 1)` is evaluated as well and
/// must agree to 1e-9 relative. Note the `(1 - k)` on the LRMES term: with
/// `(1 + k)` the two forms would differ by `2 k W LRMES`.
pub fn srisk_firm(s: &FirmSnapshot) -> Result<f64> {
    s.validate()?;
    let direct = s.k * s.debt - (1.0 - s.k) * s.equity * (1.0 - s.lrmes);
    let via_leverage = s.equity * (s.k * s.leverage() + (1.0 - s.k) * s.lrmes - 1.0);
    let scale = s.equity.max(s.debt).max(direct.abs());
    let gap = (direct - via_leverage).abs();
    if gap > 1e-9 * scale {
        return Err(Error::Consistency {
            what: format!("SRISK forms for firm `{}`", s.name),
            discrepancy: gap,
        });
    }
    Ok(direct)
}

/// System SRISK: the sum of positive shortfalls.
pub fn srisk_aggregate(firm_values: &[f64]) -> f64 {
    firm_values.iter().map(|v| v.max(0.0)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressRules {
    /// Spread level signalling major stress.
    pub major_level: f64,
    /// The major flag is raised once the spread has stayed below
    /// `major_level` for more than this many consecutive days.
    pub major_days: usize,
    pub elevated_level: f64,
    /// Minimum run length below the elevated level.
    pub extended_days: usize,
}

impl Default for StressRules {
    fn default() -> Self {
        Self {
            major_level: 0.1,
            major_days: 2,
            elevated_level: 0.5,
            extended_days: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StressFlags {
    pub major: bool,
    pub elevated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClevelandSpread {
    /// Cross-sectional mean of available bank distances to default.
    pub add: TimeSeries,
    pub spread: TimeSeries,
    pub flags: Vec<StressFlags>,
}

impl ClevelandSpread {
    pub fn dates(&self) -> &[NaiveDate] {
        self.spread.dates()
    }
}

/// Average distance to default minus portfolio distance to default, with
/// run-length stress flags. Missing spreads break a run.
pub fn cleveland_spread(banks: &[TimeSeries], pdd: &TimeSeries, rules: StressRules) -> Result<ClevelandSpread> {
    if banks.is_empty() {
        return Err(Error::InvalidValue("at least one bank distance-to-default series is required".into()));
    }
    let mut panel = banks.to_vec();
    panel.push(pdd.clone());
    let aligned = align(&panel, AlignPolicy::Union)?;
    let (bank_series, pdd) = aligned.split_at(banks.len());
    let pdd = &pdd[0];
    let dates = pdd.dates().to_vec();

    let add: Vec<Option<f64>> = (0..dates.len())
        .map(|t| {
            let present: Vec<f64> = bank_series.iter().filter_map(|s| s.get(t)).collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect();
    let spread: Vec<Option<f64>> = add
        .iter()
        .zip(pdd.values())
        .map(|(a, p)| Some((*a)? - (*p)?))
        .collect();

    let mut flags = vec![StressFlags::default(); dates.len()];
    let (mut major_run, mut elevated_run) = (0usize, 0usize);
    for (t, s) in spread.iter().enumerate() {
        match s {
            Some(s) => {
                major_run = if *s < rules.major_level { major_run + 1 } else { 0 };
                elevated_run = if *s < rules.elevated_level { elevated_run + 1 } else { 0 };
            }
            None => {
                major_run = 0;
                elevated_run = 0;
            }
        }
        flags[t] = StressFlags {
            major: major_run > rules.major_days,
            elevated: elevated_run >= rules.extended_days,
        };
    }

    Ok(ClevelandSpread {
        add: TimeSeries::new("ADD", dates.clone(), add)?,
        spread: TimeSeries::new("cleveland_spread", dates, spread)?,
        flags,
    })
}

/// Value at risk at `confidence` as a positive loss: the negated
/// `(1 - confidence)` quantile of the sample.
pub fn var_nonparametric(returns: &[f64], confidence: f64) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::InvalidValue("VaR of an empty sample".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidValue(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if confidence >= 0.99 && returns.len() < 20 {
        log::warn!("VaR at {confidence} from only {} observations", returns.len());
    }
    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(-quantile_sorted(&sorted, 1.0 - confidence))
}

/// Fixed linear combination of three standardized VaR measures.
pub fn catfin_combine(v_gpd: f64, v_sged: f64, v_np: f64) -> f64 {
    CATFIN_LOADINGS[0] * v_gpd + CATFIN_LOADINGS[1] * v_sged + CATFIN_LOADINGS[2] * v_np
}

/// Full-sample z-scores of the present values (sample standard deviation).
pub fn standardize(series: &TimeSeries) -> Result<TimeSeries> {
    let v: Vec<f64> = series.present().collect();
    if v.len() < 2 {
        return Err(Error::InsufficientHistory {
            series: series.name().to_string(),
            needed: 2,
            available: v.len(),
        });
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Err(Error::InvalidValue(format!("series `{}` has zero variance", series.name())));
    }
    Ok(series.map(|x| (x - mean) / sd))
}

/// CATFIN per date from raw GPD, SGED and nonparametric VaR series, each
/// standardized over the full sample before combining.
pub fn catfin_series(v_gpd: &TimeSeries, v_sged: &TimeSeries, v_np: &TimeSeries) -> Result<TimeSeries> {
    let z: Vec<TimeSeries> = [v_gpd, v_sged, v_np]
        .iter()
        .map(|s| standardize(s))
        .collect::<Result<_>>()?;
    let aligned = align(&z, AlignPolicy::Union)?;
    let values = (0..aligned[0].len())
        .map(|t| Some(catfin_combine(aligned[0].get(t)?, aligned[1].get(t)?, aligned[2].get(t)?)))
        .collect();
    TimeSeries::new("catfin", aligned[0].dates().to_vec(), values)
}

/// Nonparametric VaR of the cross-section of firm returns on each date.
pub fn cross_sectional_var(panel: &[TimeSeries], confidence: f64) -> Result<TimeSeries> {
    let aligned = align(panel, AlignPolicy::Union)?;
    let dates = aligned[0].dates().to_vec();
    let values = (0..dates.len())
        .map(|t| {
            let xs: Vec<f64> = aligned.iter().filter_map(|s| s.get(t)).collect();
            if xs.is_empty() {
                Ok(None)
            } else {
                var_nonparametric(&xs, confidence).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new("v_np", dates, values)
}
