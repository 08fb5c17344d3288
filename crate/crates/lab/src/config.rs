//! The experiment configuration document.
//!
//! One JSON file holds every tunable number of a run. Unknown keys are
//! rejected and missing keys take the defaults below; the published schema
//! lives in `schemas/experiment-config.schema.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tokenlab_core::agents::BehaviorMapping;
use tokenlab_core::analytics::{reference_split_counts, KnnConfig, SplitMode, SplitSpec};
use tokenlab_core::market::MarketConfig;
use tokenlab_core::tokens::{build_token_set, default_templates, DistinctnessParams, InformationVirtue, TokenTemplate};
use tokenlab_core::TokenId;

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "TOKENLAB_CONFIG";

/// Subjects per token in the reference experiment.
pub const REFERENCE_COHORTS: [u32; 7] = [30, 35, 31, 30, 30, 34, 33];

pub fn reference_cohorts() -> BTreeMap<TokenId, u32> {
    TokenId::ALL.into_iter().zip(REFERENCE_COHORTS).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// Wall-clock milliseconds per step in real-time mode.
    pub tick_ms: u64,
    /// Where finalized live sessions are appended; relative paths resolve
    /// against `output_dir`.
    pub dataset: PathBuf,
    /// Subject ids for live sessions start here.
    pub subject_id_base: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1:8080".into(),
            tick_ms: 1000,
            dataset: PathBuf::from("sessions.csv"),
            subject_id_base: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads for cohort sessions; 0 uses every core.
    pub workers: usize,
    pub virtue: InformationVirtue,
    pub templates: Vec<TokenTemplate>,
    pub distinctness: DistinctnessParams,
    pub behavior: BehaviorMapping,
    pub market: MarketConfig,
    /// Subjects per token.
    pub cohorts: BTreeMap<TokenId, u32>,
    /// `split.seed` selects a sub-stream of the master seed, so changing the
    /// master seed also reshuffles the split.
    pub split: SplitSpec,
    pub knn: KnnConfig,
    pub server: ServerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 1,
            output_dir: PathBuf::from("out"),
            workers: 0,
            virtue: InformationVirtue::default(),
            templates: default_templates(),
            distinctness: DistinctnessParams::default(),
            behavior: BehaviorMapping::default(),
            market: MarketConfig::default(),
            cohorts: reference_cohorts(),
            split: SplitSpec::fixed(0, reference_split_counts()),
            knn: KnnConfig::default(),
            server: ServerConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("no cohort size given for {0}")]
    MissingCohort(TokenId),
    #[error("cohort size for {0} must be positive")]
    EmptyCohort(TokenId),
    #[error("fixed split for {token} covers {split} records but the cohort has {cohort}")]
    SplitCohortMismatch { token: TokenId, split: usize, cohort: u32 },
    #[error("fixed-counts split needs a fixed_counts table")]
    MissingSplitCounts,
    #[error("split ratio {0} must lie in (0, 1)")]
    BadRatio(f64),
    #[error(
        "drift target {drift} lies outside the virtue band [{low}, {high}]; set allow_out_of_band to run it anyway"
    )]
    DriftOutsideVirtue { drift: f64, low: f64, high: f64 },
    #[error("k must be a positive odd integer, got {0}")]
    BadK(usize),
    #[error(transparent)]
    Tokens(#[from] tokenlab_core::tokens::TokenError),
    #[error(transparent)]
    Market(#[from] tokenlab_core::market::ConfigError),
}

impl ExperimentConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text, path)
    }

    /// Canonical serialization; the manifest hash is taken over these bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for id in TokenId::ALL {
            match self.cohorts.get(&id) {
                None => return Err(ConfigError::MissingCohort(id)),
                Some(0) => return Err(ConfigError::EmptyCohort(id)),
                Some(_) => {}
            }
        }
        build_token_set(&self.virtue, &self.templates)?;
        self.market.validate()?;
        let f = &self.market.fundamental;
        let (low, high) = (self.virtue.magnitude_low, self.virtue.magnitude_high);
        if !f.allow_out_of_band && !(low..=high).contains(&f.drift_target) {
            return Err(ConfigError::DriftOutsideVirtue { drift: f.drift_target, low, high });
        }
        if self.knn.k == 0 || self.knn.k.is_multiple_of(2) {
            return Err(ConfigError::BadK(self.knn.k));
        }
        match self.split.mode {
            SplitMode::PooledRandom => {
                if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
                    return Err(ConfigError::BadRatio(self.split.ratio));
                }
            }
            SplitMode::FixedCounts => {
                let counts = self.split.fixed_counts.as_ref().ok_or(ConfigError::MissingSplitCounts)?;
                for (&token, &cohort) in &self.cohorts {
                    let split = counts.get(&token).map_or(0, |c| c.train + c.test);
                    if split != cohort as usize {
                        return Err(ConfigError::SplitCohortMismatch { token, split, cohort });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn total_subjects(&self) -> u64 {
        self.cohorts.values().map(|&n| n as u64).sum()
    }

    /// The live-session dataset path.
    pub fn server_dataset(&self) -> PathBuf {
        if self.server.dataset.is_absolute() {
            self.server.dataset.clone()
        } else {
            self.output_dir.join(&self.server.dataset)
        }
    }
}

/// Resolves `--config`, then the environment variable, then the defaults.
pub fn resolve(explicit: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    if let Some(p) = explicit {
        return ExperimentConfig::load(p);
    }
    match std::env::var_os(CONFIG_ENV) {
        Some(p) if !p.is_empty() => ExperimentConfig::load(Path::new(&p)),
        _ => Ok(ExperimentConfig::default()),
    }
}
