//! Engine configuration, read from TOML with one `[[markets]]` table per
//! market. Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicator::MixWeights;
use crate::regression::Threshold;
use crate::riskmap::MapPolicy;
use crate::series::ReturnKind;
use crate::volatility::RvParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub name: String,
    pub price_csv: PathBuf,
    /// Volatility-index levels in index points.
    pub iv_csv: PathBuf,
    /// Market capitalization, any common unit.
    pub cap: f64,
}

/// Which weekly-return sampling the regression battery uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    On,
    Off,
    Both,
}

impl OverlapMode {
    pub fn flags(self) -> Vec<bool> {
        match self {
            OverlapMode::On => vec![true],
            OverlapMode::Off => vec![false],
            OverlapMode::Both => vec![true, false],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegressionConfig {
    /// Market whose weekly returns are the response; the first market when
    /// unset.
    pub response: Option<String>,
    pub lags: usize,
    /// `mean`, `all` or `P<percent>`.
    pub thresholds: Vec<String>,
    pub taus: Vec<f64>,
    pub overlap: OverlapMode,
    pub horizon: usize,
    pub return_kind: ReturnKind,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            response: None,
            lags: 5,
            thresholds: ["mean", "P25", "P10", "P5", "P2.5", "P1"].map(String::from).to_vec(),
            taus: vec![0.5, 0.25, 0.1, 0.05, 0.01],
            overlap: OverlapMode::Both,
            horizon: 5,
            return_kind: ReturnKind::Simple,
        }
    }
}

impl RegressionConfig {
    pub fn parsed_thresholds(&self) -> Result<Vec<Threshold>> {
        self.thresholds.iter().map(|t| t.parse()).collect()
    }
}

/// Optional benchmark inputs. Level series are ordinary series CSVs; when a
/// CATFIN or Cleveland level is not supplied it is derived from the raw
/// inputs if those are given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub srisk: Option<PathBuf>,
    pub catfin: Option<PathBuf>,
    pub ciss: Option<PathBuf>,
    pub cleveland: Option<PathBuf>,
    /// `name,W,D,lrmes` snapshot of firms.
    pub firms: Option<PathBuf>,
    /// Prudential capital fraction applied to every firm in `firms`.
    pub firm_k: Option<f64>,
    /// Wide `date,bank1,...` distance-to-default panel.
    pub dd_panel: Option<PathBuf>,
    /// `date,pdd` portfolio distance to default.
    pub pdd: Option<PathBuf>,
    /// `date,gpd,sged,np` raw VaR estimates.
    pub catfin_var: Option<PathBuf>,
}

/// One option-chain slice; the CSV holds `strike,quote`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub name: String,
    pub path: PathBuf,
    /// Time to expiry in years.
    pub expiry: f64,
    pub rate: f64,
    pub forward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub markets: Vec<MarketConfig>,
    #[serde(default = "default_w_iv")]
    pub w_iv: f64,
    #[serde(default = "default_rv_window")]
    pub rv_window: usize,
    #[serde(default = "default_annualization")]
    pub annualization: f64,
    /// Factor turning decimal realized volatility into index points.
    #[serde(default = "default_rv_scale")]
    pub rv_scale: f64,
    #[serde(default)]
    pub riskmap: MapPolicy,
    #[serde(default)]
    pub regression: RegressionConfig,
    #[serde(default)]
    pub benchmarks: BenchmarkConfig,
    #[serde(default)]
    pub chains: Vec<ChainConfig>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_w_iv() -> f64 {
    0.5
}
fn default_rv_window() -> usize {
    21
}
fn default_annualization() -> f64 {
    252.0
}
fn default_rv_scale() -> f64 {
    100.0
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl EngineConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", path.display())),
            _ => Error::io(path, e),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_path(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn rv_params(&self) -> Result<RvParams> {
        RvParams::new(self.rv_window, self.annualization)
    }

    pub fn mix(&self) -> Result<MixWeights> {
        MixWeights::new(self.w_iv)
    }

    /// Every input path named by the config, with a short role label.
    pub fn input_paths(&self) -> Vec<(String, &Path)> {
        let mut out = Vec::new();
        for m in &self.markets {
            out.push((format!("prices:{}", m.name), m.price_csv.as_path()));
            out.push((format!("iv:{}", m.name), m.iv_csv.as_path()));
        }
        let b = &self.benchmarks;
        let optional = [
            ("srisk", &b.srisk),
            ("catfin", &b.catfin),
            ("ciss", &b.ciss),
            ("cleveland", &b.cleveland),
            ("firms", &b.firms),
            ("dd_panel", &b.dd_panel),
            ("pdd", &b.pdd),
            ("catfin_var", &b.catfin_var),
        ];
        for (role, p) in optional {
            if let Some(p) = p {
                out.push((role.to_string(), p.as_path()));
            }
        }
        for c in &self.chains {
            out.push((format!("chain:{}", c.name), c.path.as_path()));
        }
        out
    }

    /// Checks parameter ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.markets.is_empty() {
            return bad("at least one [[markets]] entry is required".into());
        }
        let mut names: Vec<&str> = self.markets.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("market `{}` is listed twice", w[0]));
        }
        if let Some(m) = self.markets.iter().find(|m| !(m.cap > 0.0 && m.cap.is_finite())) {
            return bad(format!("market `{}`: cap must be positive, got {}", m.name, m.cap));
        }
        if !(self.rv_scale > 0.0 && self.rv_scale.is_finite()) {
            return bad(format!("rv_scale must be positive, got {}", self.rv_scale));
        }
        let wrap = |e: Error| Error::Config(e.to_string());
        self.mix().map_err(wrap)?;
        self.rv_params().map_err(wrap)?;
        self.riskmap.validate().map_err(wrap)?;

        let r = &self.regression;
        if r.lags == 0 {
            return bad("regression.lags must be at least 1".into());
        }
        if r.horizon == 0 {
            return bad("regression.horizon must be at least 1".into());
        }
        r.parsed_thresholds()?;
        if let Some(t) = r.taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return bad(format!("regression.taus must lie in (0, 1), got {t}"));
        }
        if let Some(resp) = &r.response {
            if !self.markets.iter().any(|m| &m.name == resp) {
                return bad(format!("regression.response `{resp}` is not a configured market"));
            }
        }
        if let Some(k) = self.benchmarks.firm_k {
            if !(0.0..1.0).contains(&k) {
                return bad(format!("benchmarks.firm_k must lie in [0, 1), got {k}"));
            }
        }
        if self.benchmarks.dd_panel.is_some() != self.benchmarks.pdd.is_some() {
            return bad("benchmarks.dd_panel and benchmarks.pdd must be given together".into());
        }

        let missing: Vec<String> = self
            .input_paths()
            .into_iter()
            .filter(|(_, p)| !self.resolve(p).is_file())
            .map(|(role, p)| format!("{role}: {}", p.display()))
            .collect();
        if !missing.is_empty() {
            return bad(format!("missing input files: {}", missing.join(", ")));
        }
        Ok(())
    }

    pub fn response_market(&self) -> &str {
        self.regression
            .response
            .as_deref()
            .unwrap_or(self.markets[0].name.as_str())
    }
}
