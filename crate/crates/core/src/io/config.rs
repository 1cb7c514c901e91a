use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::SearchConfig;
use crate::error::{Error, Result};
use crate::evaluation::{SplitSpec, DEFAULT_BIN_WIDTH};
use crate::hydro::ModelId;
use crate::io::basin::StreamflowUnit;
use crate::risk::{Level, LossKind};

/// Synthetic basins to include alongside (or instead of) basin files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    #[serde(default = "one")]
    pub count: u32,
    #[serde(default = "default_years")]
    pub years: u32,
    /// Basin `i` uses seed `seed + i`.
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise: f64,
}

/// Optional tail experiment written to `tail_report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    #[serde(default = "default_tail_n")]
    pub n: usize,
    #[serde(default = "default_tail_level")]
    pub level: Level,
    #[serde(default = "default_shift")]
    pub shift: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "one_f64")]
    pub sigma: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_models")]
    pub models: Vec<ModelId>,
    #[serde(default = "default_benchmark")]
    pub benchmark_model: ModelId,
    #[serde(default = "default_losses")]
    pub loss_kinds: Vec<LossKind>,
    #[serde(default = "default_levels")]
    pub levels: Vec<Level>,
    #[serde(default = "SplitSpec::camels_default")]
    pub split: SplitSpec,
    /// Search settings; the search seed is taken from `seed`.
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub basins: Vec<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub tail: Option<TailSpec>,
    #[serde(default)]
    pub streamflow_unit: StreamflowUnit,
    #[serde(default = "default_bin_width")]
    pub histogram_bin_width: f64,
    /// Worker threads; 0 uses all available cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn one() -> u32 {
    1
}
fn one_u64() -> u64 {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn default_years() -> u32 {
    34
}
fn default_noise() -> f64 {
    0.3
}
fn default_tail_n() -> usize {
    1_000_000
}
fn default_tail_level() -> Level {
    Level::new(0.975).expect("literal level")
}
fn default_shift() -> f64 {
    0.1
}
fn default_xi() -> f64 {
    0.2
}
fn default_models() -> Vec<ModelId> {
    vec![ModelId::Gr4j, ModelId::Lr2]
}
fn default_benchmark() -> ModelId {
    ModelId::Lr2
}
fn default_losses() -> Vec<LossKind> {
    vec![LossKind::Expectile]
}
pub fn default_levels() -> Vec<Level> {
    [0.5, 0.9, 0.95, 0.975]
        .iter()
        .map(|&v| Level::new(v).expect("literal level"))
        .collect()
}
fn default_bin_width() -> f64 {
    DEFAULT_BIN_WIDTH
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl RunConfig {
    /// Parses a TOML config; relative basin paths resolve against the
    /// config file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1) as u64),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for b in &mut cfg.basins {
            if b.is_relative() {
                *b = base.join(&*b);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.models.is_empty() {
            return err("at least one model is required".into());
        }
        if !self.models.contains(&self.benchmark_model) {
            return err(format!(
                "benchmark_model '{}' is not among the configured models",
                self.benchmark_model
            ));
        }
        if self.loss_kinds.is_empty() || self.levels.is_empty() {
            return err("loss_kinds and levels must be non-empty".into());
        }
        if !(self.histogram_bin_width > 0.0) {
            return err(format!(
                "histogram_bin_width must be positive, got {}",
                self.histogram_bin_width
            ));
        }
        if let Some(t) = &self.tail {
            if t.n == 0 || !(t.shift > 0.0) {
                return err("tail experiment needs n >= 1 and shift > 0".into());
            }
        }
        self.search_config().validate()
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            seed: self.seed,
            ..self.search
        }
    }
}
