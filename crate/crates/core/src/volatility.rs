//! Realized volatility from daily prices and the model-free implied
//! variance of a single option-chain slice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RvParams {
    /// Number of daily log returns in the window.
    pub window: usize,
    pub annualization: f64,
}

impl Default for RvParams {
    fn default() -> Self {
        Self {
            window: 21,
            annualization: 252.0,
        }
    }
}

impl RvParams {
    pub fn new(window: usize, annualization: f64) -> Result<Self> {
        let p = Self {
            window,
            annualization,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidValue(format!(
                "realized-volatility window must be at least 2, got {}",
                self.window
            )));
        }
        if !(self.annualization > 0.0 && self.annualization.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "annualization must be positive, got {}",
                self.annualization
            )));
        }
        Ok(())
    }
}

/// Annualized realized volatility as a decimal (0.20 = 20%):
/// `sqrt(annualization / window * sum of the last `window` squared daily log
/// returns)`, using returns up to and including each date. Dates without a
/// complete window of returns are missing.
pub fn realized_vol(prices: &TimeSeries, params: RvParams) -> Result<TimeSeries> {
    params.validate()?;
    let p = prices.values();
    let mut squared: Vec<Option<f64>> = Vec::with_capacity(p.len());
    squared.push(None);
    for t in 1..p.len() {
        let r = match (p[t - 1], p[t]) {
            (Some(a), Some(b)) => {
                for (idx, v) in [(t - 1, a), (t, b)] {
                    if v <= 0.0 {
                        return Err(Error::Domain {
                            series: prices.name().to_string(),
                            date: prices.dates()[idx],
                            reason: "non-positive price".into(),
                        });
                    }
                }
                let r = (b / a).ln();
                Some(r * r)
            }
            _ => None,
        };
        squared.push(r);
    }

    let scale = params.annualization / params.window as f64;
    let w = params.window;
    let mut out = vec![None; p.len()];
    // Rolling sum over complete windows; recomputed after gaps.
    let mut run = 0usize;
    let mut sum = 0.0;
    for t in 0..p.len() {
        match squared[t] {
            Some(s) => {
                run += 1;
                sum += s;
                if run > w {
                    sum -= squared[t - w].expect("inside a complete run");
                }
                if run >= w {
                    if run % 512 == 0 {
                        sum = squared[t + 1 - w..=t].iter().map(|v| v.unwrap()).sum();
                    }
                    out[t] = Some((scale * sum.max(0.0)).sqrt());
                }
            }
            None => {
                run = 0;
                sum = 0.0;
            }
        }
    }
    TimeSeries::new(prices.name(), prices.dates().to_vec(), out)
}

/// One expiry of out-of-the-money option quotes.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionChainSlice {
    /// Time to expiry in years.
    pub expiry: f64,
    /// Continuously compounded risk-free rate.
    pub rate: f64,
    pub forward: f64,
    pub strikes: Vec<f64>,
    pub quotes: Vec<f64>,
    /// Index of the first strike at or below the forward.
    pub k0: usize,
}

impl OptionChainSlice {
    /// Builds a slice, locating `k0` as the highest strike not above the
    /// forward.
    pub fn new(expiry: f64, rate: f64, forward: f64, strikes: Vec<f64>, quotes: Vec<f64>) -> Result<Self> {
        let k0 = strikes
            .iter()
            .rposition(|k| *k <= forward)
            .ok_or_else(|| Error::InvalidValue(format!("no strike at or below the forward {forward}")))?;
        let slice = Self {
            expiry,
            rate,
            forward,
            strikes,
            quotes,
            k0,
        };
        slice.validate()?;
        Ok(slice)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expiry > 0.0) {
            return Err(Error::InvalidValue(format!("time to expiry must be positive, got {}", self.expiry)));
        }
        if !(self.forward > 0.0) {
            return Err(Error::InvalidValue(format!("forward must be positive, got {}", self.forward)));
        }
        if self.strikes.is_empty() {
            return Err(Error::InvalidValue("option chain has no strikes".into()));
        }
        if self.strikes.len() != self.quotes.len() {
            return Err(Error::InvalidValue(format!(
                "{} strikes but {} quotes",
                self.strikes.len(),
                self.quotes.len()
            )));
        }
        if self.strikes[0] <= 0.0 || self.strikes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidValue("strikes must be positive and strictly increasing".into()));
        }
        if self.quotes.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::InvalidValue("quotes must be non-negative".into()));
        }
        if self.k0 >= self.strikes.len() || self.strikes[self.k0] > self.forward {
            return Err(Error::InvalidValue(format!("k0 = {} is not a strike at or below the forward", self.k0)));
        }
        Ok(())
    }

    /// Strike spacing: half the distance between neighbours inside the
    /// strip, the one-sided distance at either end, zero for a lone strike.
    pub fn strike_spacing(&self) -> Vec<f64> {
        let k = &self.strikes;
        let n = k.len();
        (0..n)
            .map(|i| match (i, n) {
                (_, 1) => 0.0,
                (0, _) => k[1] - k[0],
                (i, n) if i == n - 1 => k[i] - k[i - 1],
                (i, _) => (k[i + 1] - k[i - 1]) / 2.0,
            })
            .collect()
    }

    /// The strip term `(2/T) * sum dK/K^2 * e^{RT} * Q(K)`.
    pub fn strip_term(&self) -> f64 {
        let growth = (self.rate * self.expiry).exp();
        let sum: f64 = self
            .strike_spacing()
            .iter()
            .zip(&self.strikes)
            .zip(&self.quotes)
            .map(|((dk, k), q)| dk / (k * k) * growth * q)
            .sum();
        2.0 / self.expiry * sum
    }

    /// The forward adjustment `(1/T) * (F/K0 - 1)^2`.
    pub fn forward_term(&self) -> f64 {
        let x = self.forward / self.strikes[self.k0] - 1.0;
        x * x / self.expiry
    }

    pub fn variance(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.strip_term() - self.forward_term())
    }
}

/// Volatility-index level in percent points, `100 * sigma`.
pub fn implied_variance_index(slice: &OptionChainSlice) -> Result<f64> {
    let variance = slice.variance()?;
    if variance < 0.0 {
        return Err(Error::DegenerateChain { variance });
    }
    Ok(100.0 * variance.sqrt())
}
