//! The utility table combatants use to pick actions, and the probability
//! helpers behind it.

use serde::{Deserialize, Serialize};

use crate::content::Condition;

pub const UTILITY_TABLE_VERSION: u32 = 1;

/// Weights behind every action score. A score is a rough "HP-equivalent"
/// value of the action; only positive scores are ever executed.
///
/// * attack: `p_hit * min(mean damage, target hp) + kill_bonus * p(kill)`
/// * heal: `heal_weight * min(mean, missing) * (1 + heal_urgency * missing / max)`,
///   plus `revive_bonus` for an ally at 0 HP
/// * control: `control_weight * p(fail save) * threat(target) * severity * rounds`
/// * buffs and summons: their weight times the expected extra damage over
///   `horizon_rounds`
/// * every spell pays `slot_cost_per_level * spell level`
/// * the final score is multiplied by `1 + U(-jitter, +jitter)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityTable {
    pub version: u32,
    pub kill_bonus: f64,
    pub heal_weight: f64,
    pub heal_urgency: f64,
    pub revive_bonus: f64,
    pub buff_weight: f64,
    pub control_weight: f64,
    pub summon_weight: f64,
    pub horizon_rounds: f64,
    pub slot_cost_per_level: f64,
    /// Hit chance assumed when valuing someone's future attacks.
    pub nominal_hit_chance: f64,
    pub jitter: f64,
}

impl Default for UtilityTable {
    fn default() -> Self {
        Self {
            version: UTILITY_TABLE_VERSION,
            kill_bonus: 5.0,
            heal_weight: 1.0,
            heal_urgency: 1.0,
            revive_bonus: 25.0,
            buff_weight: 1.0,
            control_weight: 1.0,
            summon_weight: 1.0,
            horizon_rounds: 3.0,
            slot_cost_per_level: 2.0,
            nominal_hit_chance: 0.6,
            jitter: 0.10,
        }
    }
}

impl UtilityTable {
    /// Scales `score` by `1 + jitter * (2u - 1)` for `u` in `[0, 1)`.
    pub fn jittered(&self, score: f64, u: f64) -> f64 {
        score * (1.0 + self.jitter * (2.0 * u - 1.0))
    }

    pub fn severity(&self, condition: Condition) -> f64 {
        match condition {
            Condition::Restrained => 0.5,
            Condition::Frightened | Condition::Poisoned => 0.35,
            _ => 0.25,
        }
    }
}

/// Chance that `d20 + to_hit >= ac`, with natural 1 always missing and
/// natural 20 always hitting. `advantage` > 0 rolls twice keeping the higher,
/// < 0 keeping the lower.
pub fn hit_probability(ac: f64, to_hit: f64, advantage: i32) -> f64 {
    let p = ((21.0 - (ac - to_hit)) / 20.0).clamp(0.05, 0.95);
    match advantage.signum() {
        1 => 1.0 - (1.0 - p) * (1.0 - p),
        -1 => p * p,
        _ => p,
    }
}

/// Chance that `d20 + bonus < dc` (no automatic results on saves).
pub fn save_fail_probability(dc: f64, bonus: f64) -> f64 {
    ((dc - bonus - 1.0) / 20.0).clamp(0.0, 1.0)
}

/// Chance of at least one success in `n` tries at probability `p`.
pub(crate) fn any_success(p: f64, n: u8) -> f64 {
    let mut miss = 1.0;
    for _ in 0..n {
        miss *= 1.0 - p;
    }
    1.0 - miss
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_probability_bounds() {
        assert_eq!(hit_probability(15.0, 5.0, 0), 0.55);
        assert_eq!(hit_probability(30.0, 0.0, 0), 0.05);
        assert_eq!(hit_probability(5.0, 10.0, 0), 0.95);
        assert!((hit_probability(15.0, 5.0, 1) - (1.0 - 0.45 * 0.45)).abs() < 1e-12);
        assert!((hit_probability(15.0, 5.0, -1) - 0.55 * 0.55).abs() < 1e-12);
    }

    #[test]
    fn save_probability() {
        assert_eq!(save_fail_probability(15.0, 4.0), 0.5);
        assert_eq!(save_fail_probability(5.0, 10.0), 0.0);
        assert_eq!(save_fail_probability(30.0, 0.0), 1.0);
    }

    #[test]
    fn jitter_range() {
        let t = UtilityTable::default();
        assert!((t.jittered(10.0, 0.0) - 9.0).abs() < 1e-12);
        assert!((t.jittered(10.0, 0.5) - 10.0).abs() < 1e-12);
        assert!(t.jittered(10.0, 0.999_999) < 11.0);
    }
}
