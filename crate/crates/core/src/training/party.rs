use serde::{Deserialize, Serialize};

use crate::content::ContentPack;
use crate::error::{Error, Result};
use crate::sim::{Party, PartyMember, RngStream, MAX_PARTY, MIN_PARTY};

/// Party size uniform in 3..=8, classes uniform with repetition, full HP.
pub fn generate_party(pack: &ContentPack, rng: &mut RngStream) -> Party {
    let size = MIN_PARTY + rng.below((MAX_PARTY - MIN_PARTY + 1) as u32) as usize;
    let members = (0..size)
        .map(|_| {
            let t = &pack.pc_templates[rng.below(pack.pc_templates.len() as u32) as usize];
            PartyMember {
                template: t.id.clone(),
                hp_current: t.hp_max,
                hp_max: t.hp_max,
            }
        })
        .collect();
    Party { members }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HpVariationConfig {
    /// Fractions of maximum HP; one is drawn uniformly per party.
    pub thresholds: Vec<f64>,
    /// Per-member relative noise, uniform in `[-noise, +noise]`.
    pub noise: f64,
    pub floor: i32,
}

impl Default for HpVariationConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![1.0, 0.75, 0.5, 0.4, 0.3, 0.2, 0.1],
            noise: 0.05,
            floor: 1,
        }
    }
}

impl HpVariationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("hp_variation: {m}")));
        if self.thresholds.is_empty() {
            return bad("thresholds must not be empty");
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return bad("thresholds must lie in (0, 1]");
        }
        if !(0.0..0.5).contains(&self.noise) {
            return bad("noise must lie in [0, 0.5)");
        }
        if self.floor < 1 {
            return bad("floor must be at least 1");
        }
        Ok(())
    }
}

const EPS: f64 = 1e-9;

/// HP for one member: `clamp(round(hp_max * threshold * (1 + u)), floor, hp_max)`,
/// additionally kept inside `hp_max * [threshold - noise, threshold + noise]`
/// so that rounding never leaves the noise band.
pub fn varied_hp(hp_max: i32, threshold: f64, u: f64, cfg: &HpVariationConfig) -> i32 {
    let m = hp_max as f64;
    let raw = (m * threshold * (1.0 + u)).round() as i32;
    let lo = ((m * (threshold - cfg.noise)) - EPS).ceil() as i32;
    let hi = ((m * (threshold + cfg.noise)) + EPS).floor() as i32;
    let banded = if lo <= hi { raw.clamp(lo, hi) } else { raw };
    banded.clamp(cfg.floor.min(hp_max), hp_max)
}

/// Draws one threshold for the party and per-member noise. The returned
/// threshold is the one applied.
pub fn apply_hp_variation_traced(
    party: &Party,
    cfg: &HpVariationConfig,
    rng: &mut RngStream,
) -> (Party, f64) {
    let threshold = cfg.thresholds[rng.below(cfg.thresholds.len() as u32) as usize];
    let mut out = party.clone();
    for m in &mut out.members {
        let u = cfg.noise * (2.0 * rng.unit() - 1.0);
        m.hp_current = varied_hp(m.hp_max, threshold, u, cfg);
    }
    (out, threshold)
}

pub fn apply_hp_variation(party: &Party, cfg: &HpVariationConfig, rng: &mut RngStream) -> Party {
    apply_hp_variation_traced(party, cfg, rng).0
}
