//! Forecasting regressions of index returns on lagged indicator returns:
//! OLS, OLS on the lower part of the response distribution, and quantile
//! regression with the Koenker-Machado goodness of fit.

mod design;
mod ols;
mod quantile;
mod simplex;

pub use design::{build_design, DroppedRow, LaggedDesign};
pub use ols::{ols, quasi_quantile_ols};
pub use quantile::{intercept_only_fit, pinball_loss, quantile_regression, QuantileFit};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response threshold of a quasi-quantile regression: rows with the response
/// strictly below it are kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "q")]
pub enum Threshold {
    Mean,
    Percentile(f64),
    /// Keeps every row.
    Unbounded,
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Mean => write!(f, "mean"),
            Threshold::Percentile(q) => write!(f, "P{}", (q * 1e8).round() / 1e6),
            Threshold::Unbounded => write!(f, "all"),
        }
    }
}

impl std::str::FromStr for Threshold {
    type Err = Error;

    /// Parses `mean`, `all` or `P<percent>` (e.g. `P25`, `P2.5`).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "mean" => return Ok(Threshold::Mean),
            "all" => return Ok(Threshold::Unbounded),
            _ => {}
        }
        let pct = t
            .strip_prefix(['P', 'p'])
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| *v > 0.0 && *v < 100.0)
            .ok_or_else(|| Error::Config(format!("bad threshold `{s}`: expected `mean`, `all` or `P<percent>`")))?;
        Ok(Threshold::Percentile(pct / 100.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelKind {
    Ols,
    QuasiQuantile { threshold: Threshold },
    Quantile { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Fit {
    AdjustedR2(f64),
    PseudoR2(f64),
}

impl Fit {
    pub fn value(&self) -> f64 {
        match self {
            Fit::AdjustedR2(v) | Fit::PseudoR2(v) => *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterInfo {
    pub threshold: Threshold,
    pub threshold_value: f64,
    pub rows_total: usize,
    pub rows_kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub model: ModelKind,
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub n_obs: usize,
    pub lags: usize,
    pub fit: Fit,
    /// Plain R² for least-squares models.
    pub r2: Option<f64>,
    /// Sum of squared residuals, or the minimized pinball loss.
    pub objective: f64,
    /// Pinball loss of the intercept-only fit (quantile models).
    pub restricted_objective: Option<f64>,
    pub filter: Option<FilterInfo>,
    pub dropped_rows: usize,
}

/// `1 - (1 - R²)(n - 1)/(n - p - 1)`, with `p` the number of slope
/// parameters.
pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> Result<f64> {
    if n <= p + 1 {
        return Err(Error::InvalidValue(format!(
            "adjusted R² needs n > p + 1 (n = {n}, p = {p})"
        )));
    }
    Ok(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64)
}

/// `1 - V_full / V_restricted`.
pub fn pseudo_r2(v_full: f64, v_restricted: f64) -> Result<f64> {
    if !(v_restricted > 0.0) {
        return Err(Error::InvalidValue(format!(
            "restricted objective must be positive, got {v_restricted}"
        )));
    }
    if v_full > v_restricted {
        return Err(Error::NestingViolation {
            full: v_full,
            restricted: v_restricted,
        });
    }
    Ok((1.0 - v_full / v_restricted).clamp(0.0, 1.0))
}
