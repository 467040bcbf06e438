//! End-to-end orchestration: ingest, volatility, indicators, risk maps,
//! statistics, benchmarks and the regression battery. Every artifact is
//! rendered in memory first; files are only written once all requested
//! stages have succeeded, and the manifest is written last.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ChainConfig, EngineConfig, OverlapMode};
use super::format::{fmt_f64, fmt_opt, round_sig, series_table, CsvOut};
use super::ingest::{read_chain, read_firms, read_panel, read_series, FirmRow};
use super::plot::{heat_strip, line_chart};
use crate::benchmarks::{catfin_series, cleveland_spread, srisk_aggregate, srisk_firm, ClevelandSpread, StressRules, DEFAULT_PRUDENTIAL_CAPITAL};
use crate::error::{Error, Result};
use crate::indicator::{cap_weights, IndicatorSet, MarketVol};
use crate::regression::{build_design, ols, quantile_regression, quasi_quantile_ols, DroppedRow, Fit, LaggedDesign, RegressionReport, Threshold};
use crate::riskmap::{classify, RiskMap};
use crate::series::{align, compute_returns, correlation_matrix, describe, drawdown, AlignPolicy, ReturnKind, ReturnSeries, TimeSeries};
use crate::volatility::{implied_variance_index, realized_vol, OptionChainSlice};

/// Version of the regression battery JSON layout.
pub const BATTERY_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Validate,
    Indicator,
    Riskmap,
    Stats,
    Benchmarks,
    Evaluate,
    Report,
    All,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Validate,
        Stage::Indicator,
        Stage::Riskmap,
        Stage::Stats,
        Stage::Benchmarks,
        Stage::Evaluate,
        Stage::Report,
        Stage::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Indicator => "indicator",
            Stage::Riskmap => "riskmap",
            Stage::Stats => "stats",
            Stage::Benchmarks => "benchmarks",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }

    fn emits(self, stage: Stage) -> bool {
        self == stage || (self == Stage::All && stage != Stage::Validate)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// Command-line overrides of the configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunOptions {
    /// Also emit risk-map SVGs from the `riskmap` stage.
    pub svg: bool,
    pub lags: Option<usize>,
    pub overlap: Option<OverlapMode>,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bytes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedLog {
    pub design: String,
    pub rows: Vec<DroppedRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub stage: String,
    /// Wall-clock time of the run; the only non-reproducible field.
    pub timestamp: String,
    pub config: serde_json::Value,
    pub options: RunOptions,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub row_counts: BTreeMap<String, usize>,
    pub dropped_rows: Vec<DroppedLog>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub stage: Stage,
    pub out_dir: PathBuf,
    /// Relative paths of the written files, manifest excluded.
    pub files: Vec<String>,
    pub manifest: Option<RunManifest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parsed and validated inputs of a run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub markets: Vec<String>,
    pub prices: Vec<TimeSeries>,
    pub iv: Vec<TimeSeries>,
    pub srisk: Option<TimeSeries>,
    pub catfin: Option<TimeSeries>,
    pub ciss: Option<TimeSeries>,
    pub cleveland: Option<TimeSeries>,
    pub firms: Option<Vec<FirmRow>>,
    pub dd_panel: Option<Vec<TimeSeries>>,
    pub pdd: Option<TimeSeries>,
    pub catfin_var: Option<Vec<TimeSeries>>,
    pub chains: Vec<(ChainConfig, Vec<f64>, Vec<f64>)>,
    pub digests: Vec<FileDigest>,
}

fn digest_input(cfg: &EngineConfig, role: &str, path: &Path, rows: usize) -> Result<FileDigest> {
    let full = cfg.resolve(path);
    let bytes = std::fs::read(&full).map_err(|e| Error::io(&full, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        role: Some(role.to_string()),
        rows: Some(rows),
        bytes: None,
    })
}

/// Validates the configuration and reads every input file.
pub fn load_inputs(cfg: &EngineConfig) -> Result<Inputs> {
    cfg.validate()?;
    let mut digests = Vec::new();
    let mut prices = Vec::new();
    let mut iv = Vec::new();
    for m in &cfg.markets {
        let p = read_series(&cfg.resolve(&m.price_csv))?.with_name(m.name.clone());
        digests.push(digest_input(cfg, &format!("prices:{}", m.name), &m.price_csv, p.len())?);
        let v = read_series(&cfg.resolve(&m.iv_csv))?.with_name(format!("IV_{}", m.name));
        digests.push(digest_input(cfg, &format!("iv:{}", m.name), &m.iv_csv, v.len())?);
        prices.push(p);
        iv.push(v);
    }

    let b = &cfg.benchmarks;
    let mut level = |role: &str, path: &Option<PathBuf>| -> Result<Option<TimeSeries>> {
        let Some(path) = path else { return Ok(None) };
        let s = read_series(&cfg.resolve(path))?.with_name(role);
        digests.push(digest_input(cfg, role, path, s.len())?);
        Ok(Some(s))
    };
    let srisk = level("srisk", &b.srisk)?;
    let catfin = level("catfin", &b.catfin)?;
    let ciss = level("ciss", &b.ciss)?;
    let cleveland = level("cleveland", &b.cleveland)?;
    let pdd = level("pdd", &b.pdd)?;

    let firms = match &b.firms {
        Some(path) => {
            let rows = read_firms(&cfg.resolve(path))?;
            let k = b.firm_k.unwrap_or(DEFAULT_PRUDENTIAL_CAPITAL);
            for f in &rows {
                f.snapshot(k).map_err(|e| Error::Ingest {
                    path: path.display().to_string(),
                    lines: vec![e.to_string()],
                })?;
            }
            digests.push(digest_input(cfg, "firms", path, rows.len())?);
            Some(rows)
        }
        None => None,
    };
    let mut panel = |role: &str, path: &Option<PathBuf>| -> Result<Option<Vec<TimeSeries>>> {
        let Some(path) = path else { return Ok(None) };
        let p = read_panel(&cfg.resolve(path))?;
        digests.push(digest_input(cfg, role, path, p[0].len())?);
        Ok(Some(p))
    };
    let dd_panel = panel("dd_panel", &b.dd_panel)?;
    let catfin_var = panel("catfin_var", &b.catfin_var)?;
    if let Some(p) = &catfin_var {
        let names: Vec<&str> = p.iter().map(TimeSeries::name).collect();
        if names != ["gpd", "sged", "np"] {
            return Err(Error::Ingest {
                path: b.catfin_var.as_ref().expect("present").display().to_string(),
                lines: vec![format!("line 1: header mismatch: expected `date,gpd,sged,np`, found `date,{}`", names.join(","))],
            });
        }
    }

    let mut chains = Vec::new();
    for c in &cfg.chains {
        let (strikes, quotes) = read_chain(&cfg.resolve(&c.path))?;
        digests.push(digest_input(cfg, &format!("chain:{}", c.name), &c.path, strikes.len())?);
        chains.push((c.clone(), strikes, quotes));
    }

    Ok(Inputs {
        markets: cfg.markets.iter().map(|m| m.name.clone()).collect(),
        prices,
        iv,
        srisk,
        catfin,
        ciss,
        cleveland,
        firms,
        dd_panel,
        pdd,
        catfin_var,
        chains,
        digests,
    })
}

/// Per-market realized volatility in index points and the indicator set.
pub fn compute_indicator(cfg: &EngineConfig, inputs: &Inputs) -> Result<IndicatorSet> {
    let params = cfg.rv_params()?;
    let rv: Vec<TimeSeries> = inputs
        .prices
        .par_iter()
        .map(|p| realized_vol(p, params).map(|s| s.map(|v| v * cfg.rv_scale)))
        .collect::<Result<_>>()?;
    let markets: Vec<MarketVol> = inputs
        .markets
        .iter()
        .zip(inputs.iv.iter().zip(rv))
        .map(|(label, (iv, rv))| MarketVol {
            label: label.clone(),
            iv: iv.clone(),
            rv,
        })
        .collect();
    let caps: Vec<f64> = cfg.markets.iter().map(|m| m.cap).collect();
    let weights = cap_weights(&inputs.markets, &caps)?;
    IndicatorSet::build(&markets, weights, cfg.mix()?)
}

/// The global indicator's map first, then one per market.
pub fn compute_riskmaps(cfg: &EngineConfig, set: &IndicatorSet) -> Result<Vec<RiskMap>> {
    std::iter::once(&set.ivrvsri)
        .chain(&set.ivrvsri_country)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| classify(s, &cfg.riskmap))
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchmarkResults {
    pub srisk_firms: Option<Vec<(FirmRow, f64, f64)>>,
    pub cleveland: Option<ClevelandSpread>,
    pub catfin_derived: Option<TimeSeries>,
    /// Level series used as regression predictors, named `catfin`, `ciss`,
    /// `srisk`, `cleveland`.
    pub levels: Vec<TimeSeries>,
}

pub fn compute_benchmarks(cfg: &EngineConfig, inputs: &Inputs) -> Result<BenchmarkResults> {
    let k = cfg.benchmarks.firm_k.unwrap_or(DEFAULT_PRUDENTIAL_CAPITAL);
    let srisk_firms = inputs
        .firms
        .as_ref()
        .map(|rows| {
            rows.iter()
                .map(|f| Ok((f.clone(), k, srisk_firm(&f.snapshot(k)?)?)))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let cleveland = match (&inputs.dd_panel, &inputs.pdd) {
        (Some(banks), Some(pdd)) => Some(cleveland_spread(banks, pdd, StressRules::default())?),
        _ => None,
    };
    let catfin_derived = inputs
        .catfin_var
        .as_ref()
        .map(|p| catfin_series(&p[0], &p[1], &p[2]))
        .transpose()?;

    let mut levels = Vec::new();
    if let Some(s) = inputs.catfin.clone().or_else(|| catfin_derived.clone()) {
        levels.push(s.with_name("catfin"));
    }
    if let Some(s) = &inputs.ciss {
        levels.push(s.clone().with_name("ciss"));
    }
    if let Some(s) = &inputs.srisk {
        levels.push(s.clone().with_name("srisk"));
    }
    if let Some(s) = inputs.cleveland.clone().or_else(|| cleveland.as_ref().map(|c| c.spread.clone())) {
        levels.push(s.with_name("cleveland"));
    }
    Ok(BenchmarkResults {
        srisk_firms,
        cleveland,
        catfin_derived,
        levels,
    })
}

/// Systemic-risk level series in table order, with the engine's indicator
/// placed after the first two benchmarks when present.
fn sri_levels(set: &IndicatorSet, bench: &BenchmarkResults) -> Vec<TimeSeries> {
    let mut out: Vec<TimeSeries> = bench.levels.clone();
    let at = out.iter().take_while(|s| matches!(s.name(), "catfin" | "ciss")).count();
    out.insert(at, set.ivrvsri.clone());
    out
}

fn weekly_returns(levels: &TimeSeries, index: &[NaiveDate], kind: ReturnKind, horizon: usize, overlap: bool) -> Result<ReturnSeries> {
    compute_returns(&levels.reindex(index), kind, horizon, overlap)
}

fn shift(series: &TimeSeries, steps: usize, name: String) -> Result<TimeSeries> {
    let v = series.values();
    let values = (0..v.len()).map(|t| if t >= steps { v[t - steps] } else { None }).collect();
    TimeSeries::new(name, series.dates().to_vec(), values)
}

fn response_prices<'a>(cfg: &EngineConfig, inputs: &'a Inputs) -> &'a TimeSeries {
    let name = cfg.response_market();
    let i = inputs.markets.iter().position(|m| m == name).expect("validated response market");
    &inputs.prices[i]
}

const STAT_ROWS: [&str; 12] = [
    "nobs", "NAs", "min", "q1", "mean", "median", "q3", "max", "stdev", "skewness", "kurtosis_excess", "jb_pvalue",
];

fn stats_table(series: &[TimeSeries]) -> Result<Vec<u8>> {
    let summaries = series.iter().map(describe).collect::<Result<Vec<_>>>()?;
    let mut header = vec!["statistic".to_string()];
    header.extend(series.iter().map(|s| s.name().to_string()));
    let mut out = CsvOut::new(&header);
    for (r, label) in STAT_ROWS.iter().enumerate() {
        let mut row = vec![label.to_string()];
        for s in &summaries {
            row.push(match r {
                0 => s.nobs.to_string(),
                1 => s.n_missing.to_string(),
                2 => fmt_f64(s.min),
                3 => fmt_f64(s.q1),
                4 => fmt_f64(s.mean),
                5 => fmt_f64(s.median),
                6 => fmt_f64(s.q3),
                7 => fmt_f64(s.max),
                8 => fmt_f64(s.stdev),
                9 => fmt_opt(s.skewness),
                10 => fmt_opt(s.kurtosis),
                _ => fmt_opt(s.jb_pvalue),
            });
        }
        out.row(&row);
    }
    Ok(out.into_bytes())
}

fn correlation_table(panel: &[TimeSeries]) -> Result<Vec<u8>> {
    let m = correlation_matrix(panel, 0)?;
    for d in &m.diagnostics {
        log::warn!("correlation: {d}");
    }
    let mut header = vec![String::new()];
    header.extend(m.labels.iter().cloned());
    let mut out = CsvOut::new(&header);
    for (i, label) in m.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..m.labels.len()).map(|j| fmt_opt(m.get(i, j))));
        out.row(&row);
    }
    Ok(out.into_bytes())
}

fn riskmap_csv(map: &RiskMap) -> Vec<u8> {
    let mut out = CsvOut::new(&["date", "value", "bucket", "color"]);
    for ((d, v), (b, c)) in map.dates.iter().zip(&map.values).zip(map.buckets.iter().zip(map.colors())) {
        out.row(&[
            d.to_string(),
            fmt_opt(*v),
            b.map(|b| b.to_string()).unwrap_or_default(),
            c.unwrap_or_default(),
        ]);
    }
    out.into_bytes()
}

// ---- regression battery ----

#[derive(Debug, Clone, Copy, PartialEq)]
enum Model {
    Ols,
    QuasiQuantile(Threshold),
    Quantile(f64),
}

impl Model {
    fn kind(&self) -> &'static str {
        match self {
            Model::Ols => "ols",
            Model::QuasiQuantile(_) => "quasi_quantile",
            Model::Quantile(_) => "quantile",
        }
    }

    fn row_label(&self) -> String {
        match self {
            Model::Ols => "all".into(),
            Model::QuasiQuantile(t) => format!("r<{t}"),
            Model::Quantile(tau) => fmt_f64(*tau),
        }
    }

    fn run(&self, design: &LaggedDesign) -> Result<RegressionReport> {
        match *self {
            Model::Ols => ols(design),
            Model::QuasiQuantile(t) => quasi_quantile_ols(design, t),
            Model::Quantile(tau) => quantile_regression(design, tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryKey {
    pub model_kind: String,
    pub predictor_set: String,
    pub lag_depth: usize,
    pub threshold_or_tau: String,
    pub overlap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryEntry {
    pub key: BatteryKey,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restricted_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_total: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSummary {
    pub overlap: bool,
    pub predictor_set: String,
    pub lag_depth: usize,
    pub rows: usize,
    pub rows_before: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Battery {
    pub schema_version: u32,
    pub response: String,
    pub return_kind: ReturnKind,
    pub horizon: usize,
    pub lags: usize,
    pub predictors: Vec<String>,
    pub designs: Vec<DesignSummary>,
    pub entries: Vec<BatteryEntry>,
    #[serde(skip)]
    pub dropped: Vec<DroppedLog>,
}

/// Data limitations that are recorded in the battery rather than failing it.
fn is_data_limitation(e: &Error) -> bool {
    matches!(
        e,
        Error::InsufficientData { .. } | Error::SingularDesign { .. } | Error::InvalidValue(_) | Error::InsufficientOverlap { .. }
    )
}

fn entry(key: BatteryKey, outcome: &Result<RegressionReport>) -> BatteryEntry {
    match outcome {
        Ok(r) => BatteryEntry {
            key,
            status: "ok".into(),
            error: None,
            coefficients: r
                .labels
                .iter()
                .zip(&r.coefficients)
                .map(|(n, v)| Coefficient {
                    name: n.clone(),
                    value: round_sig(*v),
                })
                .collect(),
            n_obs: r.n_obs,
            fit_kind: Some(
                match r.fit {
                    Fit::AdjustedR2(_) => "adjusted_r2",
                    Fit::PseudoR2(_) => "pseudo_r2",
                }
                .into(),
            ),
            fit: Some(round_sig(r.fit.value())),
            objective: Some(round_sig(r.objective)),
            restricted_objective: r.restricted_objective.map(round_sig),
            threshold_value: r.filter.as_ref().map(|f| round_sig(f.threshold_value)).filter(|v| v.is_finite()),
            rows_total: r.filter.as_ref().map(|f| f.rows_total),
        },
        Err(e) => BatteryEntry {
            key,
            status: "error".into(),
            error: Some(e.to_string()),
            coefficients: Vec::new(),
            n_obs: 0,
            fit_kind: None,
            fit: None,
            objective: None,
            restricted_objective: None,
            threshold_value: None,
            rows_total: None,
        },
    }
}

/// Every combination of overlap mode, lag depth, predictor set and model.
/// Predictor sets are each level series alone and, with more than one, all
/// of them jointly.
pub fn run_battery(
    cfg: &EngineConfig,
    response_prices: &TimeSeries,
    sri_levels: &[TimeSeries],
    lags: usize,
    overlap: OverlapMode,
) -> Result<Battery> {
    let rc = &cfg.regression;
    let index = response_prices.dates();
    let mut lag_depths = vec![1, lags];
    lag_depths.dedup();
    let mut models = vec![Model::Ols];
    models.extend(rc.parsed_thresholds()?.into_iter().map(Model::QuasiQuantile));
    models.extend(rc.taus.iter().map(|t| Model::Quantile(*t)));

    let mut sets: Vec<(String, Vec<usize>)> = (0..sri_levels.len()).map(|i| (sri_levels[i].name().to_string(), vec![i])).collect();
    if sri_levels.len() > 1 {
        sets.push(("all".into(), (0..sri_levels.len()).collect()));
    }

    let mut designs: Vec<(bool, String, usize, Result<LaggedDesign>)> = Vec::new();
    for ov in overlap.flags() {
        let y = compute_returns(response_prices, rc.return_kind, rc.horizon, ov)?;
        let preds = sri_levels
            .iter()
            .map(|s| weekly_returns(s, index, rc.return_kind, rc.horizon, ov))
            .collect::<Result<Vec<_>>>()?;
        for &p in &lag_depths {
            for (name, members) in &sets {
                let chosen: Vec<ReturnSeries> = members.iter().map(|&i| preds[i].clone()).collect();
                designs.push((ov, name.clone(), p, build_design(&y, &chosen, p)));
            }
        }
    }

    let jobs: Vec<(usize, Model)> = (0..designs.len()).flat_map(|d| models.iter().map(move |m| (d, *m))).collect();
    let outcomes: Vec<Result<RegressionReport>> = jobs
        .par_iter()
        .map(|(d, m)| match &designs[*d].3 {
            Ok(design) => m.run(design),
            Err(e) => Err(Error::InvalidValue(format!("design unavailable: {e}"))),
        })
        .collect();

    let mut entries = Vec::with_capacity(jobs.len());
    for ((d, m), outcome) in jobs.iter().zip(outcomes) {
        let (ov, set, p, _) = &designs[*d];
        let key = BatteryKey {
            model_kind: m.kind().into(),
            predictor_set: set.clone(),
            lag_depth: *p,
            threshold_or_tau: match m {
                Model::Ols => "all".into(),
                Model::QuasiQuantile(t) => t.to_string(),
                Model::Quantile(tau) => fmt_f64(*tau),
            },
            overlap: *ov,
        };
        if let Err(e) = &outcome {
            if !is_data_limitation(e) {
                return Err(outcome.err().expect("error outcome"));
            }
            log::warn!("regression {} / {} / lag {} / {}: {e}", key.model_kind, key.predictor_set, key.lag_depth, key.threshold_or_tau);
        }
        entries.push(entry(key, &outcome));
    }

    let mut summaries = Vec::new();
    let mut dropped = Vec::new();
    for (ov, set, p, design) in &designs {
        let tag = format!("{}/{set}/lag{p}", if *ov { "overlapping" } else { "non_overlapping" });
        match design {
            Ok(d) => {
                summaries.push(DesignSummary {
                    overlap: *ov,
                    predictor_set: set.clone(),
                    lag_depth: *p,
                    rows: d.nrows(),
                    rows_before: d.rows_before,
                    dropped: d.dropped.len(),
                });
                dropped.push(DroppedLog {
                    design: tag,
                    rows: d.dropped.clone(),
                });
            }
            Err(e) => log::warn!("design {tag}: {e}"),
        }
    }

    Ok(Battery {
        schema_version: BATTERY_SCHEMA_VERSION,
        response: format!("r_{}", response_prices.name()),
        return_kind: rc.return_kind,
        horizon: rc.horizon,
        lags,
        predictors: sri_levels.iter().map(|s| s.name().to_string()).collect(),
        designs: summaries,
        entries,
        dropped,
    })
}

/// Flat tables with rows = threshold or tau per lag depth and columns =
/// predictor sets, one file per model kind and sampling.
fn battery_tables(battery: &Battery, cfg: &EngineConfig) -> Result<Vec<(String, Vec<u8>)>> {
    let mut sets: Vec<String> = battery.predictors.clone();
    if sets.len() > 1 {
        sets.push("all".into());
    }
    let mut lag_depths = vec![1, battery.lags];
    lag_depths.dedup();
    let mut rows_by_kind: Vec<(&str, Vec<Model>)> = vec![("ols", vec![Model::Ols])];
    rows_by_kind.push((
        "quasi_quantile",
        cfg.regression.parsed_thresholds()?.into_iter().map(Model::QuasiQuantile).collect(),
    ));
    rows_by_kind.push(("quantile", cfg.regression.taus.iter().map(|t| Model::Quantile(*t)).collect()));

    let mut files = Vec::new();
    let mut overlaps: Vec<bool> = battery.entries.iter().map(|e| e.key.overlap).collect();
    overlaps.dedup();
    overlaps.sort_unstable_by(|a, b| b.cmp(a));
    overlaps.dedup();
    for ov in overlaps {
        for (kind, models) in &rows_by_kind {
            let mut header = vec!["lags".to_string(), "row".to_string()];
            header.extend(sets.iter().cloned());
            let mut out = CsvOut::new(&header);
            for &p in &lag_depths {
                for m in models {
                    let label = m.row_label();
                    let mut row = vec![p.to_string(), label];
                    for set in &sets {
                        let fit = battery
                            .entries
                            .iter()
                            .find(|e| {
                                e.key.overlap == ov
                                    && e.key.model_kind == *kind
                                    && e.key.predictor_set == *set
                                    && e.key.lag_depth == p
                                    && Model::row_label(m) == row_label_of(e)
                            })
                            .and_then(|e| e.fit);
                        row.push(fmt_opt(fit));
                    }
                    out.row(&row);
                }
            }
            let sampling = if ov { "overlapping" } else { "non_overlapping" };
            files.push((format!("regression/{kind}_{sampling}.csv"), out.into_bytes()));
        }
    }
    Ok(files)
}

fn row_label_of(e: &BatteryEntry) -> String {
    match e.key.model_kind.as_str() {
        "ols" => "all".into(),
        "quasi_quantile" => format!("r<{}", e.key.threshold_or_tau),
        _ => e.key.threshold_or_tau.clone(),
    }
}

// ---- orchestration ----

struct Run<'a> {
    cfg: &'a EngineConfig,
    opts: &'a RunOptions,
    inputs: Inputs,
    files: BTreeMap<String, Vec<u8>>,
    row_counts: BTreeMap<String, usize>,
    dropped: Vec<DroppedLog>,
    indicator: Option<IndicatorSet>,
    riskmaps: Option<Vec<RiskMap>>,
    benchmarks: Option<BenchmarkResults>,
}

impl Run<'_> {
    fn indicator(&mut self) -> Result<&IndicatorSet> {
        if self.indicator.is_none() {
            self.indicator = Some(compute_indicator(self.cfg, &self.inputs)?);
        }
        Ok(self.indicator.as_ref().expect("just computed"))
    }

    fn riskmaps(&mut self) -> Result<&Vec<RiskMap>> {
        if self.riskmaps.is_none() {
            let maps = compute_riskmaps(self.cfg, self.indicator()?)?;
            self.riskmaps = Some(maps);
        }
        Ok(self.riskmaps.as_ref().expect("just computed"))
    }

    fn benchmarks(&mut self) -> Result<&BenchmarkResults> {
        if self.benchmarks.is_none() {
            self.benchmarks = Some(compute_benchmarks(self.cfg, &self.inputs)?);
        }
        Ok(self.benchmarks.as_ref().expect("just computed"))
    }

    fn emit(&mut self, path: &str, bytes: Vec<u8>) {
        self.files.insert(path.to_string(), bytes);
    }

    fn stage_indicator(&mut self) -> Result<()> {
        let set = self.indicator()?.clone();
        let mut cols: Vec<&TimeSeries> = set.iv.iter().collect();
        cols.extend(set.rv.iter());
        cols.extend(set.ivrvsri_country.iter());
        cols.extend([&set.ivsri, &set.rvsri, &set.ivrvsri]);
        self.emit("indicator.csv", series_table(&cols));
        self.row_counts.insert("indicator".into(), set.dates().len());

        let mut w = CsvOut::new(&["market", "cap", "weight"]);
        for ((l, c), wt) in set.weights.labels.iter().zip(&set.weights.caps).zip(&set.weights.weights) {
            w.row(&[l.clone(), fmt_f64(*c), fmt_f64(*wt)]);
        }
        self.emit("weights.csv", w.into_bytes());

        if !self.inputs.chains.is_empty() {
            let mut out = CsvOut::new(&["name", "expiry", "rate", "forward", "k0", "variance", "index"]);
            for (c, strikes, quotes) in &self.inputs.chains {
                let slice = OptionChainSlice::new(c.expiry, c.rate, c.forward, strikes.clone(), quotes.clone())?;
                let index = implied_variance_index(&slice)?;
                out.row(&[
                    c.name.clone(),
                    fmt_f64(c.expiry),
                    fmt_f64(c.rate),
                    fmt_f64(c.forward),
                    fmt_f64(slice.strikes[slice.k0]),
                    fmt_f64(slice.variance()?),
                    fmt_f64(index),
                ]);
            }
            self.emit("implied_variance.csv", out.into_bytes());
        }
        Ok(())
    }

    fn stage_riskmap(&mut self, svg: bool) -> Result<()> {
        let maps = self.riskmaps()?.clone();
        for m in &maps {
            self.emit(&format!("riskmap/{}.csv", m.name), riskmap_csv(m));
            self.row_counts.insert(format!("riskmap/{}", m.name), m.classified());
        }
        if svg {
            let refs: Vec<&RiskMap> = maps.iter().collect();
            self.emit("riskmap/heatstrip.svg", heat_strip("IVRVSRI risk maps", &refs).into_bytes());
        }
        Ok(())
    }

    fn stage_stats(&mut self) -> Result<()> {
        let rc = &self.cfg.regression;
        let daily = self
            .inputs
            .prices
            .iter()
            .map(|p| compute_returns(p, ReturnKind::Log, 1, true).map(|r| r.base))
            .collect::<Result<Vec<_>>>()?;
        self.emit("stats/returns.csv", stats_table(&daily)?);

        let drawdowns = self.inputs.prices.iter().map(drawdown).collect::<Result<Vec<_>>>()?;
        let aligned = align(&drawdowns, AlignPolicy::Union)?;
        self.emit("stats/drawdowns.csv", series_table(&aligned.iter().collect::<Vec<_>>()));

        let set = self.indicator()?.clone();
        let bench = self.benchmarks()?.clone();
        let resp = response_prices(self.cfg, &self.inputs).clone();
        let index = resp.dates().to_vec();
        let r_resp = compute_returns(&resp, rc.return_kind, rc.horizon, true)?.base.with_name(format!("r_{}", resp.name()));
        let r_sri = sri_levels(&set, &bench)
            .iter()
            .map(|s| Ok(weekly_returns(s, &index, rc.return_kind, rc.horizon, true)?.base.with_name(format!("r_{}", s.name()))))
            .collect::<Result<Vec<_>>>()?;

        let mut table4 = vec![r_resp.clone()];
        table4.extend(r_sri.iter().cloned());
        self.emit("stats/weekly_returns.csv", stats_table(&table4)?);

        let mut table5 = r_sri.clone();
        table5.push(r_resp.clone());
        self.emit("stats/correlation.csv", correlation_table(&table5)?);

        let h = rc.horizon;
        let mut table6 = r_sri
            .iter()
            .map(|s| shift(s, h, format!("r_lag{h}_{}", &s.name()[2..])))
            .collect::<Result<Vec<_>>>()?;
        table6.push(r_resp);
        self.emit("stats/correlation_lagged.csv", correlation_table(&table6)?);
        Ok(())
    }

    fn stage_benchmarks(&mut self) -> Result<()> {
        let bench = self.benchmarks()?.clone();
        if let Some(firms) = &bench.srisk_firms {
            let mut out = CsvOut::new(&["name", "W", "D", "lrmes", "k", "srisk"]);
            for (f, k, s) in firms {
                out.row(&[f.name.clone(), fmt_f64(f.equity), fmt_f64(f.debt), fmt_f64(f.lrmes), fmt_f64(*k), fmt_f64(*s)]);
            }
            let total = srisk_aggregate(&firms.iter().map(|(_, _, s)| *s).collect::<Vec<_>>());
            out.row(&["aggregate".to_string(), String::new(), String::new(), String::new(), String::new(), fmt_f64(total)]);
            self.emit("benchmarks/srisk_firms.csv", out.into_bytes());
        }
        if let Some(c) = &bench.cleveland {
            let pdd = self.inputs.pdd.as_ref().expect("pdd accompanies the DD panel").reindex(c.dates());
            let mut out = CsvOut::new(&["date", "add", "pdd", "spread", "major", "elevated"]);
            for (t, d) in c.dates().iter().enumerate() {
                out.row(&[
                    d.to_string(),
                    fmt_opt(c.add.get(t)),
                    fmt_opt(pdd.get(t)),
                    fmt_opt(c.spread.get(t)),
                    (c.flags[t].major as u8).to_string(),
                    (c.flags[t].elevated as u8).to_string(),
                ]);
            }
            self.emit("benchmarks/cleveland.csv", out.into_bytes());
        }
        if let Some(cf) = &bench.catfin_derived {
            self.emit("benchmarks/catfin.csv", series_table(&[cf]));
        }
        if !bench.levels.is_empty() {
            let aligned = align(&bench.levels, AlignPolicy::Union)?;
            self.emit("benchmarks/levels.csv", series_table(&aligned.iter().collect::<Vec<_>>()));
        } else {
            log::warn!("no benchmark inputs configured");
        }
        Ok(())
    }

    fn stage_evaluate(&mut self) -> Result<()> {
        let set = self.indicator()?.clone();
        let bench = self.benchmarks()?.clone();
        let levels = sri_levels(&set, &bench);
        let resp = response_prices(self.cfg, &self.inputs).clone();
        let lags = self.opts.lags.unwrap_or(self.cfg.regression.lags);
        let overlap = self.opts.overlap.unwrap_or(self.cfg.regression.overlap);
        let battery = run_battery(self.cfg, &resp, &levels, lags, overlap)?;
        let json = serde_json::to_vec_pretty(&battery).map_err(|e| Error::Serialize(e.to_string()))?;
        self.emit("regression/battery.json", json);
        for (path, bytes) in battery_tables(&battery, self.cfg)? {
            self.emit(&path, bytes);
        }
        for d in &battery.designs {
            let tag = format!(
                "design/{}/{}/lag{}",
                if d.overlap { "overlapping" } else { "non_overlapping" },
                d.predictor_set,
                d.lag_depth
            );
            self.row_counts.insert(tag, d.rows);
        }
        self.dropped.extend(battery.dropped);
        Ok(())
    }

    fn stage_report(&mut self) -> Result<()> {
        let set = self.indicator()?.clone();
        let maps = self.riskmaps()?.clone();
        self.emit(
            "charts/indicators.svg",
            line_chart("IVSRI, RVSRI and IVRVSRI", &[&set.ivsri, &set.rvsri, &set.ivrvsri], None).into_bytes(),
        );
        self.emit(
            "charts/ivrvsri_markets.svg",
            line_chart("IVRVSRI by market", &set.ivrvsri_country.iter().collect::<Vec<_>>(), None).into_bytes(),
        );
        let resp = response_prices(self.cfg, &self.inputs).reindex(&maps[0].dates);
        self.emit(
            "charts/response_on_riskmap.svg",
            line_chart(&format!("{} on the IVRVSRI risk map", resp.name()), &[&resp], Some(&maps[0])).into_bytes(),
        );
        let refs: Vec<&RiskMap> = maps.iter().collect();
        self.emit("charts/heatstrip.svg", heat_strip("IVRVSRI risk maps", &refs).into_bytes());
        let drawdowns = self.inputs.prices.iter().map(drawdown).collect::<Result<Vec<_>>>()?;
        self.emit(
            "charts/drawdowns.svg",
            line_chart("Drawdowns", &drawdowns.iter().collect::<Vec<_>>(), None).into_bytes(),
        );
        Ok(())
    }
}

fn write_files(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let result = (|| -> Result<()> {
        for (rel, bytes) in files {
            let target = dir.join(rel);
            if let Some(parent) = target.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let partial = target.with_file_name(format!(
                "{}.partial",
                target.file_name().expect("file name").to_string_lossy()
            ));
            std::fs::write(&partial, bytes).map_err(|e| Error::io(&partial, e))?;
            staged.push((partial, target));
        }
        for (partial, target) in &staged {
            std::fs::rename(partial, target).map_err(|e| Error::io(target, e))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (partial, _) in &staged {
            let _ = std::fs::remove_file(partial);
        }
    }
    result
}

/// Runs `stage` (and whatever it depends on) and writes its artifacts plus a
/// manifest. `validate` only checks the configuration and inputs.
pub fn run_pipeline(cfg: &EngineConfig, stage: Stage, opts: &RunOptions) -> Result<RunSummary> {
    let mut cfg = cfg.clone();
    if let Some(l) = opts.lags {
        if l == 0 {
            return Err(Error::Config("--lags must be at least 1".into()));
        }
        cfg.regression.lags = l;
    }
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| cfg.out_path());
    let inputs = load_inputs(&cfg).map_err(|e| e.in_stage("validate"))?;
    if stage == Stage::Validate {
        log::info!("configuration and {} input files are valid", inputs.digests.len());
        return Ok(RunSummary {
            stage,
            out_dir,
            files: Vec::new(),
            manifest: None,
        });
    }

    let mut run = Run {
        cfg: &cfg,
        opts,
        inputs,
        files: BTreeMap::new(),
        row_counts: BTreeMap::new(),
        dropped: Vec::new(),
        indicator: None,
        riskmaps: None,
        benchmarks: None,
    };
    for s in [Stage::Indicator, Stage::Riskmap, Stage::Stats, Stage::Benchmarks, Stage::Evaluate, Stage::Report] {
        if !stage.emits(s) {
            continue;
        }
        log::info!("stage {s}");
        let svg = opts.svg;
        match s {
            Stage::Indicator => run.stage_indicator(),
            Stage::Riskmap => run.stage_riskmap(svg),
            Stage::Stats => run.stage_stats(),
            Stage::Benchmarks => run.stage_benchmarks(),
            Stage::Evaluate => run.stage_evaluate(),
            _ => run.stage_report(),
        }
        .map_err(|e| e.in_stage(s.name()))?;
    }

    let outputs: Vec<FileDigest> = run
        .files
        .iter()
        .map(|(path, bytes)| FileDigest {
            path: path.clone(),
            sha256: sha256_hex(bytes),
            role: None,
            rows: None,
            bytes: Some(bytes.len()),
        })
        .collect();
    let manifest = RunManifest {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        stage: stage.name().to_string(),
        timestamp: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        config: serde_json::to_value(&cfg).map_err(|e| Error::Serialize(e.to_string()))?,
        options: opts.clone(),
        inputs: run.inputs.digests.clone(),
        outputs,
        row_counts: run.row_counts.clone(),
        dropped_rows: run.dropped.clone(),
    };
    let manifest_bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Serialize(e.to_string()))?;

    write_files(&out_dir, &run.files)?;
    write_files(&out_dir, &BTreeMap::from([(MANIFEST_FILE.to_string(), manifest_bytes)]))?;
    Ok(RunSummary {
        stage,
        out_dir,
        files: run.files.keys().cloned().collect(),
        manifest: Some(manifest),
    })
}
