use serde::{Deserialize, Serialize};

use crate::content::{Ability, ContentPack, DamageType, KNOWN_SPECIAL_ABILITIES, POOL_SIZE};
use crate::sim::{MAX_ENEMIES, MAX_PARTY};

pub const ARCH_VERSION: u32 = 1;
/// hp_current, hp_max, ac, six ability scores, proficiency, slots per level, level.
pub const NUMERIC_FEATURES: usize = 16;
pub const SLOT_LEVELS: usize = 5;

/// Fixed divisors applied to numeric features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureScales {
    pub hp: f64,
    pub ac: f64,
    pub ability: f64,
    pub proficiency: f64,
    pub slots: f64,
    pub level: f64,
}

impl Default for FeatureScales {
    fn default() -> Self {
        Self {
            hp: 100.0,
            ac: 20.0,
            ability: 20.0,
            proficiency: 6.0,
            slots: 4.0,
            level: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub version: u32,
    pub max_members: usize,
    pub max_enemies: usize,
    /// Enemy classes; the action space adds STOP.
    pub n_enemy_classes: usize,
    pub n_pc_classes: usize,
    pub n_saves: usize,
    pub n_resistances: usize,
    pub n_spells: usize,
    pub n_specials: usize,
    pub numeric_dim: usize,
    pub class_dim: usize,
    pub group_dim: usize,
    pub synergy_dim: usize,
    pub hidden: usize,
    pub scales: FeatureScales,
}

impl ArchConfig {
    pub fn for_pack(pack: &ContentPack) -> Self {
        Self {
            version: ARCH_VERSION,
            max_members: MAX_PARTY,
            max_enemies: MAX_ENEMIES,
            n_enemy_classes: POOL_SIZE,
            n_pc_classes: pack.pc_templates.len(),
            n_saves: Ability::ALL.len(),
            n_resistances: DamageType::ALL.len(),
            n_spells: pack.spells.len(),
            n_specials: KNOWN_SPECIAL_ABILITIES.len(),
            numeric_dim: NUMERIC_FEATURES,
            class_dim: 16,
            group_dim: 8,
            synergy_dim: 32,
            hidden: 128,
            scales: FeatureScales::default(),
        }
    }

    /// 26 classes plus STOP.
    pub fn n_actions(&self) -> usize {
        self.n_enemy_classes + 1
    }

    pub fn stop_action(&self) -> usize {
        self.n_enemy_classes
    }

    /// Width of one encoded member: numeric projection, class embedding and
    /// four multi-hot projections.
    pub fn member_dim(&self) -> usize {
        self.numeric_dim + self.class_dim + 4 * self.group_dim
    }
}
