//! Annualized realized volatility of a simulated price path, and the same
//! path expressed in volatility-index points.

use chrono::NaiveDate;
use ivrvsri::series::{describe, TimeSeries};
use ivrvsri::volatility::{realized_vol, RvParams};

fn main() -> ivrvsri::Result<()> {
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
    let dates: Vec<NaiveDate> = (0..120).map(|d| start + chrono::Days::new(d)).collect();
    // Deterministic path: calm first half, then larger alternating moves.
    let mut p = 100.0;
    let prices: Vec<f64> = (0..120)
        .map(|t| {
            let step = if t < 60 { 0.004 } else { 0.025 };
            p *= (if t % 2 == 0 { step } else { -0.8 * step } as f64).exp();
            p
        })
        .collect();
    let prices = TimeSeries::from_values("SPX", dates, prices)?;

    let rv = realized_vol(&prices, RvParams::default())?;
    let points = rv.map(|v| 100.0 * v);
    for t in [21, 59, 81, 119] {
        println!("{}  RV = {:.4}  ({:.2} index points)", rv.dates()[t], rv.get(t).unwrap_or(f64::NAN), points.get(t).unwrap_or(f64::NAN));
    }
    let s = describe(&points)?;
    println!("RV points: n = {}, mean = {:.2}, min = {:.2}, max = {:.2}", s.nobs, s.mean, s.min, s.max);
    Ok(())
}
