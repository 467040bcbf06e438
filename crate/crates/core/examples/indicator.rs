//! Cap-weighted IVSRI, RVSRI and the global IVRVSRI from four markets.

use chrono::NaiveDate;
use ivrvsri::indicator::{cap_weights, IndicatorSet, MarketVol, MixWeights};
use ivrvsri::series::TimeSeries;

fn main() -> ivrvsri::Result<()> {
    let labels: Vec<String> = ["USA", "EUR", "JAP", "BRA"].map(String::from).to_vec();
    let weights = cap_weights(&labels, &[35.6, 3.7, 5.5, 1.0])?;
    for (l, w) in labels.iter().zip(&weights.weights) {
        println!("{l}: {:.1}%", 100.0 * w);
    }

    let start = NaiveDate::from_ymd_opt(2024, 3, 1).expect("valid date");
    let dates: Vec<NaiveDate> = (0..5).map(|d| start + chrono::Days::new(d)).collect();
    let markets: Vec<MarketVol> = labels
        .iter()
        .enumerate()
        .map(|(m, label)| {
            let base = 15.0 + 4.0 * m as f64;
            let iv = (0..5).map(|t| base + t as f64);
            let rv = (0..5).map(|t| base - 3.0 + 0.5 * t as f64);
            MarketVol {
                label: label.clone(),
                iv: TimeSeries::from_values("iv", dates.clone(), iv).expect("sorted dates"),
                rv: TimeSeries::from_values("rv", dates.clone(), rv).expect("sorted dates"),
            }
        })
        .collect();
    let set = IndicatorSet::build(&markets, weights, MixWeights::new(0.5)?)?;
    println!("date        IVSRI   RVSRI   IVRVSRI");
    for (t, d) in set.dates().iter().enumerate() {
        let v = |s: &TimeSeries| s.get(t).unwrap_or(f64::NAN);
        println!("{d}  {:6.3}  {:6.3}  {:6.3}", v(&set.ivsri), v(&set.rvsri), v(&set.ivrvsri));
    }
    Ok(())
}
