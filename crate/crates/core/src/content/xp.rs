use serde::{Deserialize, Serialize};

use super::ContentPack;
use crate::error::{Error, Result};
use crate::sim::{Encounter, Party};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DifficultyTier {
    Easy,
    Medium,
    Hard,
    Deadly,
}

impl std::str::FromStr for DifficultyTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EASY" => Ok(Self::Easy),
            "MEDIUM" => Ok(Self::Medium),
            "HARD" => Ok(Self::Hard),
            "DEADLY" => Ok(Self::Deadly),
            _ => Err(Error::InvalidConfig(format!("unknown difficulty tier `{s}`"))),
        }
    }
}

/// One row of the "XP thresholds by character level" table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelThresholds {
    pub level: u8,
    pub easy: u32,
    pub medium: u32,
    pub hard: u32,
    pub deadly: u32,
}

impl LevelThresholds {
    pub fn get(&self, tier: DifficultyTier) -> u32 {
        match tier {
            DifficultyTier::Easy => self.easy,
            DifficultyTier::Medium => self.medium,
            DifficultyTier::Hard => self.hard,
            DifficultyTier::Deadly => self.deadly,
        }
    }
}

/// Applies to encounters with at least `min_enemies` enemies, up to the next step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierStep {
    pub min_enemies: u8,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XpTables {
    pub schema_version: u32,
    pub thresholds: Vec<LevelThresholds>,
    pub multipliers: Vec<MultiplierStep>,
}

impl XpTables {
    pub fn per_character(&self, level: u8, tier: DifficultyTier) -> Result<u32> {
        self.thresholds
            .iter()
            .find(|t| t.level == level)
            .map(|t| t.get(tier))
            .ok_or(Error::UnsupportedLevel(level))
    }

    pub fn multiplier(&self, enemy_count: usize) -> f64 {
        self.multipliers
            .iter()
            .take_while(|s| s.min_enemies as usize <= enemy_count)
            .last()
            .map_or(1.0, |s| s.multiplier)
    }

    /// Raw XP scaled by the group multiplier, rounded half away from zero.
    pub fn adjusted(&self, raw_xp: u64, enemy_count: usize) -> u64 {
        (raw_xp as f64 * self.multiplier(enemy_count)).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct XpBudget {
    pub per_character: u32,
    pub total: u32,
    pub difficulty_tier: DifficultyTier,
}

pub fn party_xp_budget(party: &Party, tier: DifficultyTier, pack: &ContentPack) -> Result<XpBudget> {
    let level = party.level(pack)?;
    let per_character = pack.xp_tables.per_character(level, tier)?;
    Ok(XpBudget {
        per_character,
        total: per_character * party.len() as u32,
        difficulty_tier: tier,
    })
}

pub fn raw_encounter_xp(encounter: &Encounter, pack: &ContentPack) -> Result<u64> {
    if encounter.is_empty() {
        return Err(Error::EmptyEncounter);
    }
    encounter
        .enemies()
        .iter()
        .map(|id| pack.monster(id).map(|m| m.xp_value as u64))
        .sum()
}

pub fn adjusted_encounter_xp(encounter: &Encounter, pack: &ContentPack) -> Result<u64> {
    let raw = raw_encounter_xp(encounter, pack)?;
    Ok(pack.xp_tables.adjusted(raw, encounter.len()))
}
