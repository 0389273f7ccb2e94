use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::party::HpVariationConfig;
use super::reward::RewardConfig;
use crate::content::DifficultyTier;
use crate::error::{Error, Result};
use crate::net::AdamConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub steps: u64,
    pub sims_per_step: u32,
    /// Number of independent runs; run `i` uses seed `base_seed + i`.
    pub seeds: u32,
    pub base_seed: u64,
    pub optimizer: String,
    pub adam: AdamConfig,
    pub baseline: bool,
    pub baseline_window: usize,
    pub checkpoint_every: u64,
    pub tier: DifficultyTier,
    /// Also simulate the DM heuristic on every training party.
    pub paired_dm: bool,
    /// Single-threaded with no wall-clock fields, for bit-identical logs.
    pub strict: bool,
    pub pack: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 10_000,
            sims_per_step: 100,
            seeds: 5,
            base_seed: 0,
            optimizer: "adam".into(),
            adam: AdamConfig::default(),
            baseline: true,
            baseline_window: 100,
            checkpoint_every: 1000,
            tier: DifficultyTier::Deadly,
            paired_dm: false,
            strict: false,
            pack: None,
            out_dir: PathBuf::from("runs"),
        }
    }
}

impl TrainConfig {
    pub fn seed_values(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.base_seed.wrapping_add(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("train: {m}")));
        if self.steps == 0 || self.sims_per_step == 0 || self.seeds == 0 {
            return bad("steps, sims_per_step and seeds must be at least 1");
        }
        if self.optimizer != "adam" {
            return bad("optimizer must be `adam`");
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.baseline_window == 0 {
            return bad("baseline_window must be at least 1");
        }
        Ok(())
    }
}

/// Everything that determines a training run, from one JSON or TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub reward: RewardConfig,
    pub hp_variation: HpVariationConfig,
}

impl ExperimentConfig {
    /// `.toml` files are read as TOML, anything else as JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile { path: path.into() });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = path.display().to_string();
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::SchemaViolation {
                file,
                field: e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_default(),
                message: e.message().to_string(),
            })?
        } else {
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
                file,
                field: e.path().to_string(),
                message: e.inner().to_string(),
            })?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.reward.validate()?;
        self.hp_variation.validate()
    }

    /// SHA-256 of the canonical JSON form with the output directory blanked,
    /// so the same experiment written elsewhere keeps its digest. Embedded
    /// in checkpoints.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.train.out_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
