//! Experiment configuration: a single TOML document drives every
//! subcommand. Unknown keys are rejected so typos fail loudly instead of
//! silently running defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detectors::{DetectorKind, DENSE_LRT_CAP};
use crate::error::{Error, Result};
use crate::synthesis::{RngSeed, TemplateKind, TemplateParams, TemplateSpec, DEFAULT_BANDWIDTH_HZ};

/// Which channel impairs the H1 signal (H0 is always noise only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    Pedb,
}

impl ChannelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Pedb => "pedb",
        }
    }
}

/// How a detection interval becomes a statistic: one long periodogram, or
/// the mean statistic over shorter equal blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMode {
    Single,
    Averaged,
}

impl BlockMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockMode::Single => "single",
            BlockMode::Averaged => "averaged",
        }
    }
}

/// Seed accepted either as a bare integer or as `{ seed, stream_id }`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedConfig {
    Plain(u64),
    Full { seed: u64, stream_id: u64 },
}

impl SeedConfig {
    pub fn to_seed(self) -> RngSeed {
        match self {
            SeedConfig::Plain(seed) => RngSeed::new(seed),
            SeedConfig::Full { seed, stream_id } => RngSeed::with_stream(seed, stream_id),
        }
    }
}

/// Template recipe as written in config files: the bin count is always
/// derived from the block length, so it is not a config field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemplateConfig {
    pub kind: TemplateKind,
    pub bandwidth_hz: f64,
    pub params: TemplateParams,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            kind: TemplateKind::NtscLike,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            params: TemplateParams::default(),
        }
    }
}

impl TemplateConfig {
    pub fn spec_with_n(&self, n: usize) -> TemplateSpec {
        TemplateSpec {
            kind: self.kind,
            n,
            bandwidth_hz: self.bandwidth_hz,
            params: self.params.clone(),
        }
    }

    pub fn with_kind(&self, kind: TemplateKind) -> TemplateConfig {
        TemplateConfig {
            kind,
            ..self.clone()
        }
    }
}

/// Settings for the covariance-equivalence experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivalenceConfig {
    /// Block lengths to compare; each must divide the reference length.
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub snr_db: f64,
    /// The reference (asymptotic) resolution is `oversample * max(n_list)`.
    pub oversample: usize,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self {
            n_list: vec![256, 1024, 4096],
            trials: 200,
            snr_db: -10.0,
            oversample: 16,
        }
    }
}

/// Settings for the template-ordering experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesConfig {
    pub kinds: Vec<TemplateKind>,
    pub snr_db: f64,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self {
            kinds: vec![
                TemplateKind::SingleBin,
                TemplateKind::NtscLike,
                TemplateKind::AtscLike,
                TemplateKind::Flat,
            ],
            snr_db: -18.0,
        }
    }
}

/// Everything a run needs. Defaults are desk scale: they finish in
/// minutes on one core while keeping the methodology intact; production
/// scale is a config choice, not a code change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub detector: DetectorKind,
    pub channel: ChannelKind,
    /// Samples per detection interval; 144,000 is 24 ms at 6 MHz.
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub snr_grid_db: Vec<f64>,
    pub trials_calibration: usize,
    pub trials_per_snr: usize,
    pub target_pfa: f64,
    pub base_seed: SeedConfig,
    pub output_dir: PathBuf,
    pub block_mode: BlockMode,
    /// Blocks per detection interval in averaged mode.
    pub blocks: usize,
    /// Worker threads; absent means one per core.
    pub workers: Option<usize>,
    /// Custom power-delay profile file for the pedb channel.
    pub pdp_file: Option<PathBuf>,
    pub template: TemplateConfig,
    pub equivalence: EquivalenceConfig,
    pub features: FeaturesConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            detector: DetectorKind::SpectraCorrelation,
            channel: ChannelKind::Awgn,
            n_samples: 144_000,
            sample_rate_hz: 6e6,
            snr_grid_db: vec![-24.0, -22.0, -20.0, -18.0, -16.0],
            trials_calibration: 10_000,
            trials_per_snr: 2_000,
            target_pfa: 0.01,
            base_seed: SeedConfig::Plain(42),
            output_dir: PathBuf::from("out"),
            block_mode: BlockMode::Averaged,
            blocks: 4,
            workers: None,
            pdp_file: None,
            template: TemplateConfig::default(),
            equivalence: EquivalenceConfig::default(),
            features: FeaturesConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Samples per statistic block under the configured block mode.
    pub fn block_len(&self) -> usize {
        match self.block_mode {
            BlockMode::Single => self.n_samples,
            BlockMode::Averaged => self.n_samples / self.blocks,
        }
    }

    /// Blocks per detection interval under the configured block mode.
    pub fn block_count(&self) -> usize {
        match self.block_mode {
            BlockMode::Single => 1,
            BlockMode::Averaged => self.blocks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_pfa must lie in (0, 1), got {}",
                self.target_pfa
            )));
        }
        let needed = (10.0 / self.target_pfa).ceil() as usize;
        if self.trials_calibration < needed {
            return Err(Error::InvalidConfig(format!(
                "calibrating the {} quantile needs at least {needed} trials, got {}",
                1.0 - self.target_pfa,
                self.trials_calibration
            )));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidConfig("snr_grid_db must not be empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("snr_grid_db entries must be finite".into()));
        }
        if self.trials_per_snr == 0 {
            return Err(Error::InvalidConfig("trials_per_snr must be positive".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sample_rate_hz must be positive and finite, got {}",
                self.sample_rate_hz
            )));
        }
        if self.blocks == 0 || self.blocks > 16 {
            return Err(Error::InvalidConfig(format!(
                "blocks must lie in 1..=16, got {}",
                self.blocks
            )));
        }
        if self.block_mode == BlockMode::Averaged && self.n_samples % self.blocks != 0 {
            return Err(Error::InvalidConfig(format!(
                "n_samples = {} is not divisible into {} blocks",
                self.n_samples, self.blocks
            )));
        }
        if self.block_len() < 16 {
            return Err(Error::InvalidConfig(format!(
                "block length {} too short for a template (need >= 16)",
                self.block_len()
            )));
        }
        if self.detector == DetectorKind::LrtExact && self.block_len() > DENSE_LRT_CAP {
            return Err(Error::InvalidConfig(format!(
                "exact LRT needs block length <= {DENSE_LRT_CAP}, got {}",
                self.block_len()
            )));
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::InvalidConfig("workers must be positive".into()));
            }
        }

        let eq = &self.equivalence;
        if eq.n_list.is_empty() {
            return Err(Error::InvalidConfig("equivalence.n_list must not be empty".into()));
        }
        if eq.trials == 0 {
            return Err(Error::InvalidConfig("equivalence.trials must be positive".into()));
        }
        if eq.oversample < 2 {
            return Err(Error::InvalidConfig(format!(
                "equivalence.oversample must be at least 2, got {}",
                eq.oversample
            )));
        }
        let n_max = *eq.n_list.iter().max().expect("nonempty");
        let n_ref = eq
            .oversample
            .checked_mul(n_max)
            .ok_or_else(|| Error::InvalidConfig("equivalence reference size overflows".into()))?;
        for &n in &eq.n_list {
            if n < 16 {
                return Err(Error::InvalidConfig(format!(
                    "equivalence block length {n} too short (need >= 16)"
                )));
            }
            if n > DENSE_LRT_CAP {
                return Err(Error::InvalidConfig(format!(
                    "equivalence block length {n} exceeds the covariance-path cap {DENSE_LRT_CAP}"
                )));
            }
            if n_ref % n != 0 {
                return Err(Error::InvalidConfig(format!(
                    "equivalence block length {n} must divide the reference length {n_ref}"
                )));
            }
        }

        if self.features.kinds.is_empty() {
            return Err(Error::InvalidConfig("features.kinds must not be empty".into()));
        }
        if !self.features.snr_db.is_finite() {
            return Err(Error::InvalidConfig("features.snr_db must be finite".into()));
        }
        Ok(())
    }

    /// Load and validate a TOML config file.
    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form; identifies a configuration in
    /// run metadata.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
