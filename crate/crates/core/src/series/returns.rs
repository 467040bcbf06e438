use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    Log,
    Simple,
}

/// Returns over `horizon` trading days, either one per date (overlapping) or
/// sampled every `horizon` dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub base: TimeSeries,
    pub kind: ReturnKind,
    pub horizon: usize,
    pub overlap: bool,
}

pub fn compute_returns(
    prices: &TimeSeries,
    kind: ReturnKind,
    horizon: usize,
    overlap: bool,
) -> Result<ReturnSeries> {
    if horizon == 0 {
        return Err(Error::InvalidValue("return horizon must be at least 1".into()));
    }
    let available = prices.count_present();
    if available < horizon + 1 {
        return Err(Error::InsufficientHistory {
            series: prices.name().to_string(),
            needed: horizon + 1,
            available,
        });
    }
    let step = if overlap { 1 } else { horizon };
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut t = horizon;
    while t < prices.len() {
        let value = single_return(prices, t, horizon, kind)?;
        dates.push(prices.dates()[t]);
        values.push(value);
        t += step;
    }
    let name = prices.name().to_string();
    Ok(ReturnSeries {
        base: TimeSeries::new(name, dates, values)?,
        kind,
        horizon,
        overlap,
    })
}

fn single_return(prices: &TimeSeries, t: usize, horizon: usize, kind: ReturnKind) -> Result<Option<f64>> {
    let (Some(p0), Some(p1)) = (prices.get(t - horizon), prices.get(t)) else {
        return Ok(None);
    };
    let domain = |idx: usize, reason: &str| Error::Domain {
        series: prices.name().to_string(),
        date: prices.dates()[idx],
        reason: reason.to_string(),
    };
    match kind {
        ReturnKind::Log => {
            if p0 <= 0.0 {
                return Err(domain(t - horizon, "non-positive price"));
            }
            if p1 <= 0.0 {
                return Err(domain(t, "non-positive price"));
            }
            Ok(Some((p1 / p0).ln()))
        }
        ReturnKind::Simple => {
            if p0 == 0.0 {
                return Err(domain(t - horizon, "zero base value for simple return"));
            }
            Ok(Some(p1 / p0 - 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::test_dates;
    use proptest::prelude::*;

    fn prices(v: &[f64]) -> TimeSeries {
        TimeSeries::from_values("p", test_dates(v.len()), v.iter().copied()).unwrap()
    }

    #[test]
    fn flat_price_gives_zero_log_return() {
        let r = compute_returns(&prices(&[100.0, 100.0]), ReturnKind::Log, 1, true).unwrap();
        assert_eq!(r.base.values(), &[Some(0.0)]);
        assert_eq!(r.base.dates()[0], test_dates(2)[1]);
    }

    #[test]
    fn simple_return_by_hand() {
        let r = compute_returns(&prices(&[100.0, 105.0]), ReturnKind::Simple, 1, true).unwrap();
        assert!((r.base.get(0).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn log_return_matches_ln() {
        let r = compute_returns(&prices(&[100.0, 110.517]), ReturnKind::Log, 1, true).unwrap();
        assert!((r.base.get(0).unwrap() - 0.100000).abs() < 1e-5);
    }

    #[test]
    fn non_overlapping_samples_every_horizon() {
        let p: Vec<f64> = (0..16).map(|i| 100.0 + i as f64).collect();
        let r = compute_returns(&prices(&p), ReturnKind::Simple, 5, false).unwrap();
        let d = test_dates(16);
        assert_eq!(r.base.dates(), &[d[5], d[10], d[15]]);
        assert!((r.base.get(1).unwrap() - (110.0 / 105.0 - 1.0)).abs() < 1e-15);

        let o = compute_returns(&prices(&p), ReturnKind::Simple, 5, true).unwrap();
        assert_eq!(o.base.len(), 11);
    }

    #[test]
    fn missing_endpoint_propagates() {
        let s = TimeSeries::new("p", test_dates(3), vec![Some(1.0), None, Some(2.0)]).unwrap();
        let r = compute_returns(&s, ReturnKind::Log, 1, true).unwrap();
        assert_eq!(r.base.values(), &[None, None]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            compute_returns(&prices(&[1.0, 2.0]), ReturnKind::Log, 2, true),
            Err(Error::InsufficientHistory { needed: 3, .. })
        ));
        let err = compute_returns(&prices(&[1.0, -2.0, 3.0]), ReturnKind::Log, 1, true).unwrap_err();
        match err {
            Error::Domain { date, .. } => assert_eq!(date, test_dates(3)[1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn cumulated_log_returns_rebuild_price_ratio(v in prop::collection::vec(0.8f64..1.25, 2..250)) {
            let mut level = 100.0;
            let p: Vec<f64> = v.iter().map(|g| { level *= g; level }).collect();
            let r = compute_returns(&prices(&p), ReturnKind::Log, 1, true).unwrap();
            let mut acc = 0.0;
            for (i, x) in r.base.present().enumerate() {
                acc += x;
                let expected = p[i + 1] / p[0];
                prop_assert!((acc.exp() - expected).abs() <= 1e-12 * expected);
            }
        }
    }
}
