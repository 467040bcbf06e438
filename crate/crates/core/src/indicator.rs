//! Capitalization-weighted composites of implied and realized volatility
//! and their convex mix, per market and globally.
//!
//! The global mix is computed twice: as the mix of the two global composites
//! and as the cap-weighted composite of the per-market mixes. With a shared
//! [`MixWeights`] the two are algebraically identical, so any disagreement
//! beyond [`COMPOSITION_TOLERANCE`] is reported as a consistency error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{align, AlignPolicy, TimeSeries};

pub const COMPOSITION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketWeights {
    pub labels: Vec<String>,
    pub caps: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Normalizes market capitalizations into weights summing to one.
pub fn cap_weights(labels: &[String], caps: &[f64]) -> Result<MarketWeights> {
    if caps.is_empty() {
        return Err(Error::InvalidValue("no market capitalizations given".into()));
    }
    if labels.len() != caps.len() {
        return Err(Error::Config(format!(
            "{} market labels but {} capitalizations",
            labels.len(),
            caps.len()
        )));
    }
    if let Some(i) = caps.iter().position(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidValue(format!(
            "market `{}` has non-positive capitalization {}",
            labels[i], caps[i]
        )));
    }
    let total: f64 = caps.iter().sum();
    Ok(MarketWeights {
        labels: labels.to_vec(),
        caps: caps.to_vec(),
        weights: caps.iter().map(|c| c / total).collect(),
    })
}

impl MarketWeights {
    /// Uses weights as given (e.g. a published rounded vector). They must be
    /// positive and sum to one within 1e-12.
    pub fn from_weights(labels: &[String], weights: &[f64]) -> Result<Self> {
        let w = cap_weights(labels, weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidValue(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            caps: weights.to_vec(),
            weights: weights.to_vec(),
            ..w
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Shares of the implied and realized components in the mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixWeights {
    w_iv: f64,
    w_rv: f64,
}

impl MixWeights {
    pub fn new(w_iv: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w_iv) {
            return Err(Error::InvalidValue(format!("w_iv must lie in [0, 1], got {w_iv}")));
        }
        Ok(Self {
            w_iv,
            w_rv: 1.0 - w_iv,
        })
    }

    pub fn w_iv(&self) -> f64 {
        self.w_iv
    }

    pub fn w_rv(&self) -> f64 {
        self.w_rv
    }
}

impl Default for MixWeights {
    fn default() -> Self {
        Self { w_iv: 0.5, w_rv: 0.5 }
    }
}

fn check_same_index(series: &[&TimeSeries]) -> Result<()> {
    if let Some(first) = series.first() {
        for s in &series[1..] {
            if s.dates() != first.dates() {
                return Err(Error::Config(format!(
                    "series `{}` and `{}` are not on the same date index",
                    first.name(),
                    s.name()
                )));
            }
        }
    }
    Ok(())
}

/// Pointwise linear combination; a date with any missing input is missing.
fn combine(name: &str, series: &[&TimeSeries], coefs: &[f64]) -> Result<TimeSeries> {
    check_same_index(series)?;
    let dates = series[0].dates().to_vec();
    let values = (0..dates.len())
        .map(|t| {
            series
                .iter()
                .zip(coefs)
                .try_fold(0.0, |acc, (s, c)| s.get(t).map(|v| acc + c * v))
        })
        .collect();
    TimeSeries::new(name, dates, values)
}

/// Cap-weighted sum of aligned series.
pub fn weighted_composite(series: &[TimeSeries], weights: &MarketWeights) -> Result<TimeSeries> {
    if series.len() != weights.len() || series.is_empty() {
        return Err(Error::Config(format!(
            "{} series but {} market weights",
            series.len(),
            weights.len()
        )));
    }
    let refs: Vec<&TimeSeries> = series.iter().collect();
    combine("composite", &refs, &weights.weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolUnits {
    /// 0.20 means 20%.
    Decimal,
    /// Volatility-index points, 20.0 means 20%.
    Percent,
}

/// What to do when the implied and realized inputs are in different units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitPolicy {
    Strict,
    /// Convert the realized series to the implied series' units.
    AutoScale,
    /// Sum as given.
    AllowMixed,
}

/// `w_iv * IV_t + w_rv * RV_t` for one market.
pub fn ivrvsri_country(
    iv: &TimeSeries,
    iv_units: VolUnits,
    rv: &TimeSeries,
    rv_units: VolUnits,
    mix: MixWeights,
    policy: UnitPolicy,
) -> Result<TimeSeries> {
    let rv = match (iv_units, rv_units, policy) {
        (a, b, _) if a == b => rv.clone(),
        (_, _, UnitPolicy::AllowMixed) => rv.clone(),
        (VolUnits::Percent, VolUnits::Decimal, UnitPolicy::AutoScale) => rv.map(|v| 100.0 * v),
        (VolUnits::Decimal, VolUnits::Percent, UnitPolicy::AutoScale) => rv.map(|v| v / 100.0),
        (a, b, _) => {
            return Err(Error::Config(format!(
                "implied series `{}` is in {a:?} units but realized series `{}` is in {b:?}",
                iv.name(),
                rv.name()
            )))
        }
    };
    combine(iv.name(), &[iv, &rv], &[mix.w_iv, mix.w_rv])
}

/// Implied and realized inputs of one market, already in common units.
#[derive(Debug, Clone)]
pub struct MarketVol {
    pub label: String,
    pub iv: TimeSeries,
    pub rv: TimeSeries,
}

#[derive(Debug, Clone)]
pub struct IndicatorSet {
    pub labels: Vec<String>,
    pub iv: Vec<TimeSeries>,
    pub rv: Vec<TimeSeries>,
    pub ivrvsri_country: Vec<TimeSeries>,
    pub ivsri: TimeSeries,
    pub rvsri: TimeSeries,
    pub ivrvsri: TimeSeries,
    pub weights: MarketWeights,
    pub mix: MixWeights,
}

impl IndicatorSet {
    /// Puts every input on the union of the market calendars and composes
    /// the per-market and global indicators.
    pub fn build(markets: &[MarketVol], weights: MarketWeights, mix: MixWeights) -> Result<Self> {
        if markets.len() != weights.len() || markets.is_empty() {
            return Err(Error::Config(format!(
                "{} markets but {} market weights",
                markets.len(),
                weights.len()
            )));
        }
        let panel: Vec<TimeSeries> = markets
            .iter()
            .flat_map(|m| {
                [
                    m.iv.clone().with_name(format!("IV_{}", m.label)),
                    m.rv.clone().with_name(format!("RV_{}", m.label)),
                ]
            })
            .collect();
        let mut aligned = align(&panel, AlignPolicy::Union)?.into_iter();
        let mut iv = Vec::new();
        let mut rv = Vec::new();
        for _ in markets {
            iv.push(aligned.next().expect("two series per market"));
            rv.push(aligned.next().expect("two series per market"));
        }
        let ivrvsri_country = markets
            .iter()
            .zip(iv.iter().zip(&rv))
            .map(|(m, (i, r))| {
                combine(&format!("IVRVSRI_{}", m.label), &[i, r], &[mix.w_iv, mix.w_rv])
            })
            .collect::<Result<Vec<_>>>()?;
        let ivsri = weighted_composite(&iv, &weights)?.with_name("IVSRI");
        let rvsri = weighted_composite(&rv, &weights)?.with_name("RVSRI");
        let mut set = Self {
            labels: markets.iter().map(|m| m.label.clone()).collect(),
            iv,
            rv,
            ivrvsri_country,
            ivrvsri: ivsri.clone(),
            ivsri,
            rvsri,
            weights,
            mix,
        };
        set.ivrvsri = ivrvsri_global(&set)?;
        Ok(set)
    }

    pub fn dates(&self) -> &[chrono::NaiveDate] {
        self.ivsri.dates()
    }
}

/// The global indicator as the mix of the global composites, cross-checked
/// against the cap-weighted composite of the per-market mixes.
pub fn ivrvsri_global(set: &IndicatorSet) -> Result<TimeSeries> {
    let from_composites = combine(
        "IVRVSRI",
        &[&set.ivsri, &set.rvsri],
        &[set.mix.w_iv, set.mix.w_rv],
    )?;
    let from_countries = weighted_composite(&set.ivrvsri_country, &set.weights)?;
    let mut worst = 0.0f64;
    for (a, b) in from_composites.values().iter().zip(from_countries.values()) {
        match (a, b) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            _ => worst = f64::INFINITY,
        }
    }
    if worst >= COMPOSITION_TOLERANCE {
        return Err(Error::Consistency {
            what: "global IVRVSRI (composite mix vs. mix of country indicators)".into(),
            discrepancy: worst,
        });
    }
    Ok(from_composites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::test_dates;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("m{i}")).collect()
    }

    fn constant(name: &str, n: usize, v: f64) -> TimeSeries {
        TimeSeries::from_values(name, test_dates(n), std::iter::repeat(v).take(n)).unwrap()
    }

    #[test]
    fn weights_examples() {
        let w = cap_weights(&labels(4), &[35.6, 3.7, 5.5, 1.0]).unwrap();
        for (got, published) in w.weights.iter().zip([0.777, 0.081, 0.120, 0.022]) {
            assert!((got - published).abs() < 0.0005, "{got} vs {published}");
        }
        let w = cap_weights(&labels(4), &[1.0; 4]).unwrap();
        assert_eq!(w.weights, vec![0.25; 4]);
        assert_eq!(cap_weights(&labels(1), &[7.0]).unwrap().weights, vec![1.0]);
        assert!(cap_weights(&labels(2), &[1.0, 0.0]).unwrap_err().to_string().contains("m1"));
    }

    #[test]
    fn composite_examples() {
        let w = MarketWeights::from_weights(&labels(4), &[0.777, 0.081, 0.12, 0.022]).unwrap();
        let s: Vec<TimeSeries> = [20.0, 25.0, 22.0, 30.0]
            .iter()
            .map(|v| constant("iv", 3, *v))
            .collect();
        let out = weighted_composite(&s, &w).unwrap();
        assert!((out.get(0).unwrap() - 20.865).abs() < 1e-10);

        let same: Vec<TimeSeries> = (0..4).map(|_| constant("iv", 3, 17.5)).collect();
        let out = weighted_composite(&same, &w).unwrap();
        assert!(out.present().all(|v| (v - 17.5).abs() < 1e-12));

        let one = MarketWeights::from_weights(&labels(1), &[1.0]).unwrap();
        let x = constant("iv", 3, 3.0);
        assert_eq!(weighted_composite(&[x.clone()], &one).unwrap().values(), x.values());
        assert!(matches!(weighted_composite(&[x], &w), Err(Error::Config(_))));
    }

    #[test]
    fn composite_missing_propagates() {
        let w = cap_weights(&labels(2), &[1.0, 1.0]).unwrap();
        let a = TimeSeries::new("a", test_dates(2), vec![Some(1.0), None]).unwrap();
        let b = constant("b", 2, 2.0);
        let out = weighted_composite(&[a, b], &w).unwrap();
        assert_eq!(out.values(), &[Some(1.5), None]);
    }

    #[test]
    fn country_examples() {
        let iv = constant("iv", 2, 20.0);
        let rv = constant("rv", 2, 10.0);
        let p = VolUnits::Percent;
        let out = ivrvsri_country(&iv, p, &rv, p, MixWeights::default(), UnitPolicy::Strict).unwrap();
        assert_eq!(out.get(0), Some(15.0));
        let out = ivrvsri_country(&iv, p, &rv, p, MixWeights::new(1.0).unwrap(), UnitPolicy::Strict).unwrap();
        assert_eq!(out.values(), iv.values());
        let out = ivrvsri_country(&iv, p, &iv, p, MixWeights::new(0.3).unwrap(), UnitPolicy::Strict).unwrap();
        assert!(out.present().all(|v| (v - 20.0).abs() < 1e-12));
    }

    #[test]
    fn unit_mismatch() {
        let iv = constant("iv", 2, 20.0);
        let rv = constant("rv", 2, 0.10);
        let mix = MixWeights::default();
        let strict = ivrvsri_country(&iv, VolUnits::Percent, &rv, VolUnits::Decimal, mix, UnitPolicy::Strict);
        assert!(matches!(strict, Err(Error::Config(_))));
        let auto = ivrvsri_country(&iv, VolUnits::Percent, &rv, VolUnits::Decimal, mix, UnitPolicy::AutoScale).unwrap();
        assert!((auto.get(0).unwrap() - 15.0).abs() < 1e-12);
        let literal = ivrvsri_country(&iv, VolUnits::Percent, &rv, VolUnits::Decimal, mix, UnitPolicy::AllowMixed).unwrap();
        assert!((literal.get(0).unwrap() - 10.05).abs() < 1e-12);
    }

    fn market(label: &str, iv: f64, rv: f64, n: usize) -> MarketVol {
        MarketVol {
            label: label.into(),
            iv: constant("iv", n, iv),
            rv: constant("rv", n, rv),
        }
    }

    #[test]
    fn global_two_ways_by_hand() {
        let w = cap_weights(&labels(2), &[1.0, 1.0]).unwrap();
        let set = IndicatorSet::build(&[market("a", 10.0, 20.0, 3), market("b", 30.0, 40.0, 3)], w, MixWeights::default()).unwrap();
        assert_eq!(set.ivrvsri_country[0].get(0), Some(15.0));
        assert_eq!(set.ivrvsri_country[1].get(0), Some(35.0));
        assert!(set.ivrvsri.present().all(|v| (v - 25.0).abs() < 1e-12));
    }

    #[test]
    fn global_constant_and_boundary_mix() {
        let w = cap_weights(&labels(3), &[3.0, 2.0, 1.0]).unwrap();
        let ms = [market("a", 7.0, 7.0, 4), market("b", 7.0, 7.0, 4), market("c", 7.0, 7.0, 4)];
        let set = IndicatorSet::build(&ms, w.clone(), MixWeights::default()).unwrap();
        assert!(set.ivrvsri.present().all(|v| (v - 7.0).abs() < 1e-12));

        let ms = [market("a", 10.0, 1.0, 4), market("b", 20.0, 2.0, 4), market("c", 30.0, 3.0, 4)];
        let set = IndicatorSet::build(&ms, w, MixWeights::new(1.0).unwrap()).unwrap();
        assert_eq!(set.ivrvsri.values(), set.ivsri.values());
    }

    #[test]
    fn global_missing_when_any_market_missing() {
        let w = cap_weights(&labels(2), &[1.0, 1.0]).unwrap();
        let mut b = market("b", 30.0, 40.0, 3);
        b.iv = TimeSeries::new("iv", test_dates(3), vec![Some(30.0), None, Some(30.0)]).unwrap();
        let set = IndicatorSet::build(&[market("a", 10.0, 20.0, 3), b], w, MixWeights::default()).unwrap();
        assert_eq!(set.ivrvsri.get(1), None);
        assert!(set.ivrvsri.get(0).is_some());
    }

    #[test]
    fn tampered_set_fails_consistency() {
        let w = cap_weights(&labels(2), &[1.0, 1.0]).unwrap();
        let mut set = IndicatorSet::build(&[market("a", 10.0, 20.0, 3), market("b", 30.0, 40.0, 3)], w, MixWeights::default()).unwrap();
        set.rvsri = set.rvsri.map(|v| v + 1e-6);
        assert!(matches!(ivrvsri_global(&set), Err(Error::Consistency { .. })));
    }

    proptest! {
        #[test]
        fn composite_is_convex(vals in prop::collection::vec(0.0f64..100.0, 4), caps in prop::collection::vec(0.1f64..50.0, 4)) {
            let w = cap_weights(&labels(4), &caps).unwrap();
            let s: Vec<TimeSeries> = vals.iter().map(|v| constant("x", 1, *v)).collect();
            let out = weighted_composite(&s, &w).unwrap().get(0).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out >= lo - 1e-12 && out <= hi + 1e-12);
        }

        #[test]
        fn weights_scale_invariant(caps in prop::collection::vec(0.1f64..50.0, 1..8), c in 1e-3f64..1e3) {
            let l = labels(caps.len());
            let a = cap_weights(&l, &caps).unwrap();
            let scaled: Vec<f64> = caps.iter().map(|x| x * c).collect();
            let b = cap_weights(&l, &scaled).unwrap();
            prop_assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in a.weights.iter().zip(&b.weights) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn global_monotone_in_inputs(
            ivs in prop::collection::vec(5.0f64..80.0, 3),
            rvs in prop::collection::vec(5.0f64..80.0, 3),
            which in 0usize..6,
            bump in 0.0f64..10.0,
        ) {
            let w = cap_weights(&labels(3), &[5.0, 2.0, 1.0]).unwrap();
            let build = |ivs: &[f64], rvs: &[f64]| {
                let ms: Vec<MarketVol> = (0..3).map(|i| market(&format!("m{i}"), ivs[i], rvs[i], 1)).collect();
                IndicatorSet::build(&ms, w.clone(), MixWeights::new(0.4).unwrap()).unwrap().ivrvsri.get(0).unwrap()
            };
            let base = build(&ivs, &rvs);
            let (mut ivs2, mut rvs2) = (ivs.clone(), rvs.clone());
            if which < 3 { ivs2[which] += bump } else { rvs2[which - 3] += bump }
            prop_assert!(build(&ivs2, &rvs2) >= base - 1e-12);
        }
    }
}
