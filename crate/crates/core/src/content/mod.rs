//! Stat blocks, spells, the content pack that bundles them, and the DMG XP
//! economy (budgets and group multipliers).

mod dice;
mod pack;
mod xp;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dice::DiceExpr;
pub use pack::{ContentPack, MonsterTable, PcTable, SpellTable, POOL_SIZE, SCHEMA_VERSION};
pub use xp::{
    adjusted_encounter_xp, party_xp_budget, raw_encounter_xp, DifficultyTier, LevelThresholds,
    MultiplierStep, XpBudget, XpTables,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ability {
    Str,
    Dex,
    Con,
    Int,
    Wis,
    Cha,
}

impl Ability {
    pub const ALL: [Ability; 6] = [
        Ability::Str,
        Ability::Dex,
        Ability::Con,
        Ability::Int,
        Ability::Wis,
        Ability::Cha,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbilityScores {
    pub str: u8,
    pub dex: u8,
    pub con: u8,
    pub int: u8,
    pub wis: u8,
    pub cha: u8,
}

impl AbilityScores {
    pub fn score(&self, ability: Ability) -> u8 {
        match ability {
            Ability::Str => self.str,
            Ability::Dex => self.dex,
            Ability::Con => self.con,
            Ability::Int => self.int,
            Ability::Wis => self.wis,
            Ability::Cha => self.cha,
        }
    }

    /// `floor((score - 10) / 2)`.
    pub fn modifier(&self, ability: Ability) -> i32 {
        (self.score(ability) as i32 - 10).div_euclid(2)
    }

    pub fn as_array(&self) -> [u8; 6] {
        [self.str, self.dex, self.con, self.int, self.wis, self.cha]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DamageType {
    Acid,
    Bludgeoning,
    Cold,
    Fire,
    Force,
    Lightning,
    Necrotic,
    Piercing,
    Poison,
    Psychic,
    Radiant,
    Slashing,
    Thunder,
}

impl DamageType {
    pub const ALL: [DamageType; 13] = [
        DamageType::Acid,
        DamageType::Bludgeoning,
        DamageType::Cold,
        DamageType::Fire,
        DamageType::Force,
        DamageType::Lightning,
        DamageType::Necrotic,
        DamageType::Piercing,
        DamageType::Poison,
        DamageType::Psychic,
        DamageType::Radiant,
        DamageType::Slashing,
        DamageType::Thunder,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_physical(self) -> bool {
        matches!(
            self,
            DamageType::Bludgeoning | DamageType::Piercing | DamageType::Slashing
        )
    }
}

/// Timed status effects tracked by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Exhaustion,
    Hasted,
    Blessed,
    Raging,
    Poisoned,
    Frightened,
    Restrained,
    Dodging,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        let name = s.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombatantKind {
    Pc,
    Monster,
}

/// Character level for PCs, challenge-rating tag (`"1/4"`, `"3"`) for monsters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelOrCr {
    Level(u8),
    Cr(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeKind {
    Melee,
    Ranged,
}

/// A condition inflicted on a hit unless the target makes a saving throw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnHitEffect {
    pub condition: Condition,
    pub save: Ability,
    pub dc: i32,
    pub rounds: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub name: String,
    pub to_hit_bonus: i32,
    pub damage_dice: DiceExpr,
    pub damage_type: DamageType,
    pub range_kind: RangeKind,
    /// `None` means unlimited.
    pub uses_per_combat: Option<u32>,
    /// Swings made by one use of the attack (multiattack / Extra Attack).
    pub multiattack: u8,
    pub bonus_action: bool,
    pub on_hit: Option<OnHitEffect>,
}

/// Special abilities the simulator implements. Content packs may only use
/// these tags.
pub const KNOWN_SPECIAL_ABILITIES: &[&str] = &[
    "action-surge",
    "martial-advantage",
    "pack-tactics",
    "rage",
    "regeneration",
    "second-wind",
    "sneak-attack",
    "undead-fortitude",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatBlock {
    pub id: String,
    pub name: String,
    pub kind: CombatantKind,
    pub level_or_cr: LevelOrCr,
    pub hp_max: i32,
    pub ac: i32,
    pub abilities: AbilityScores,
    pub proficiency_bonus: i32,
    pub save_proficiencies: BTreeSet<Ability>,
    pub resistances: BTreeSet<DamageType>,
    pub immunities: BTreeSet<DamageType>,
    pub attacks: Vec<AttackSpec>,
    pub spells: Vec<String>,
    /// Slot counts per spell level, index 0 = 1st level.
    pub spell_slots: Vec<u8>,
    pub spellcasting_ability: Option<Ability>,
    pub special_abilities: Vec<String>,
    pub xp_value: u32,
    pub initiative_bonus: i32,
}

impl StatBlock {
    pub fn level(&self) -> Option<u8> {
        match self.level_or_cr {
            LevelOrCr::Level(l) => Some(l),
            LevelOrCr::Cr(_) => None,
        }
    }

    pub fn is_pc(&self) -> bool {
        self.kind == CombatantKind::Pc
    }

    pub fn has_ability(&self, tag: &str) -> bool {
        self.special_abilities.iter().any(|a| a == tag)
    }

    pub fn modifier(&self, ability: Ability) -> i32 {
        self.abilities.modifier(ability)
    }

    pub fn save_bonus(&self, ability: Ability) -> i32 {
        let prof = if self.save_proficiencies.contains(&ability) {
            self.proficiency_bonus
        } else {
            0
        };
        self.modifier(ability) + prof
    }

    pub fn spell_save_dc(&self) -> i32 {
        let m = self.spellcasting_ability.map_or(0, |a| self.modifier(a));
        8 + self.proficiency_bonus + m
    }

    pub fn spell_attack_bonus(&self) -> i32 {
        let m = self.spellcasting_ability.map_or(0, |a| self.modifier(a));
        self.proficiency_bonus + m
    }

    pub fn spellcasting_modifier(&self) -> i32 {
        self.spellcasting_ability.map_or(0, |a| self.modifier(a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CastingTime {
    Action,
    BonusAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpellEffect {
    /// Spell attack roll per ray.
    Attack {
        dice: DiceExpr,
        damage_type: DamageType,
        rays: u8,
        add_modifier: bool,
    },
    SaveDamage {
        save: Ability,
        dice: DiceExpr,
        damage_type: DamageType,
        half_on_success: bool,
        max_targets: u8,
    },
    Heal {
        dice: DiceExpr,
        add_modifier: bool,
        max_targets: u8,
    },
    Condition {
        save: Ability,
        condition: Condition,
        rounds: u8,
        max_targets: u8,
    },
    Buff {
        condition: Condition,
        rounds: u8,
        max_targets: u8,
    },
    Summon { monster: String, count: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpellSpec {
    pub id: String,
    pub name: String,
    /// 0 for cantrips.
    pub level: u8,
    pub casting_time: CastingTime,
    pub effect: SpellEffect,
}
