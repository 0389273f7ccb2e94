use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sim::BatchMetrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    /// Weight on win probability in [0, 1].
    pub alpha: f64,
    /// Weight on fight longevity in rounds, capped at `longevity_cap`.
    pub beta: f64,
    /// Weight on the missing-HP fraction at fight end.
    pub gamma: f64,
    /// Weight on mean damage dealt to the party, in HP.
    pub delta: f64,
    /// Weight on player deaths summed over the batch.
    pub lambda: f64,
    /// Added once per TPK in the batch.
    pub tpk_penalty: f64,
    pub longevity_cap: f64,
    /// Rewards are divided by this before entering the gradient.
    pub reward_scale: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha: 1000.0,
            beta: 25.0,
            gamma: 500.0,
            delta: 10.0,
            lambda: 0.5,
            tpk_penalty: -20.0,
            longevity_cap: 20.0,
            reward_scale: 1000.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.lambda,
            self.tpk_penalty,
            self.longevity_cap,
            self.reward_scale,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("reward: coefficients must be finite".into()));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidConfig("reward: alpha must be positive".into()));
        }
        if self.tpk_penalty > 0.0 {
            return Err(Error::InvalidConfig("reward: tpk_penalty must not be positive".into()));
        }
        if self.reward_scale <= 0.0 {
            return Err(Error::InvalidConfig("reward: reward_scale must be positive".into()));
        }
        if self.longevity_cap < 0.0 {
            return Err(Error::InvalidConfig("reward: longevity_cap must not be negative".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; stored in checkpoints.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("reward config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// `R = α·wp + β·min(fl, cap) + γ·mhp + δ·dmg + λ·dth + tpk_penalty·tpk`.
pub fn compute_reward(m: &BatchMetrics, cfg: &RewardConfig) -> f64 {
    let mhp = 1.0 - m.remaining_party_hp_pct / 100.0;
    cfg.alpha * m.win_probability
        + cfg.beta * m.fight_longevity.min(cfg.longevity_cap)
        + cfg.gamma * mhp
        + cfg.delta * m.total_damage_to_party
        + cfg.lambda * m.total_player_deaths as f64
        + cfg.tpk_penalty * m.tpk_count as f64
}
