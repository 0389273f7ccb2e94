use serde::{Deserialize, Serialize};

use crate::content::{Condition, StatBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Party,
    Enemy,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Party => Side::Enemy,
            Side::Enemy => Side::Party,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LifeState {
    Active,
    Unconscious,
    Stable,
    Dead,
    Removed,
}

impl LifeState {
    pub fn is_terminal(self) -> bool {
        matches!(self, LifeState::Dead | LifeState::Removed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveCondition {
    pub condition: Condition,
    pub rounds: u8,
}

/// A combatant entering the fight: stat block plus starting HP.
#[derive(Debug, Clone, Copy)]
pub struct Entrant<'p> {
    pub base: &'p StatBlock,
    pub hp: i32,
}

impl<'p> Entrant<'p> {
    pub fn full(base: &'p StatBlock) -> Self {
        Self {
            base,
            hp: base.hp_max,
        }
    }
}

pub const RAGE_USES: u8 = 3;
pub const RAGE_ROUNDS: u8 = 10;
pub const RAGE_DAMAGE: i32 = 2;
pub const REGENERATION_HP: i32 = 10;

#[derive(Debug, Clone)]
pub struct CombatantState<'p> {
    pub id: usize,
    pub label: String,
    pub base: &'p StatBlock,
    pub side: Side,
    pub hp_current: i32,
    pub hp_start: i32,
    pub life_state: LifeState,
    pub death_save_successes: u8,
    pub death_save_failures: u8,
    pub conditions: Vec<ActiveCondition>,
    pub initiative_roll: i32,
    pub summoned_by: Option<usize>,
    /// HP actually lost (after resistances, capped at remaining HP).
    pub damage_taken: i32,
    /// HP actually restored (capped at missing HP).
    pub healing_received: i32,
    pub(crate) spell_slots: Vec<u8>,
    /// Indices into the pack's spell list.
    pub(crate) spells: Vec<usize>,
    pub(crate) attack_uses: Vec<Option<u32>>,
    pub(crate) rage_uses: u8,
    pub(crate) second_wind_uses: u8,
    pub(crate) action_surges: u8,
    pub(crate) regen_blocked: bool,
    /// Sneak attack / martial advantage already applied this turn.
    pub(crate) rider_used: bool,
}

impl<'p> CombatantState<'p> {
    pub fn new(id: usize, label: String, base: &'p StatBlock, side: Side, hp: i32) -> Self {
        let hp = hp.clamp(1, base.hp_max);
        let has = |tag: &str| base.has_ability(tag) as u8;
        Self {
            id,
            label,
            base,
            side,
            hp_current: hp,
            hp_start: hp,
            life_state: LifeState::Active,
            death_save_successes: 0,
            death_save_failures: 0,
            conditions: Vec::new(),
            initiative_roll: 0,
            summoned_by: None,
            damage_taken: 0,
            healing_received: 0,
            spell_slots: base.spell_slots.clone(),
            spells: Vec::new(),
            attack_uses: base.attacks.iter().map(|a| a.uses_per_combat).collect(),
            rage_uses: has("rage") * RAGE_USES,
            second_wind_uses: has("second-wind"),
            action_surges: has("action-surge"),
            regen_blocked: false,
            rider_used: false,
        }
    }

    pub fn hp_max(&self) -> i32 {
        self.base.hp_max
    }

    pub fn is_active(&self) -> bool {
        self.life_state == LifeState::Active
    }

    pub fn is_pc(&self) -> bool {
        self.base.is_pc()
    }

    /// Counted toward party metrics: an original roster member, not a summon.
    pub fn is_roster_member(&self) -> bool {
        self.summoned_by.is_none()
    }

    pub fn has(&self, condition: Condition) -> bool {
        self.conditions.iter().any(|c| c.condition == condition)
    }

    /// Adds or refreshes a condition, keeping the longer duration.
    pub fn add_condition(&mut self, condition: Condition, rounds: u8) {
        if rounds == 0 {
            return;
        }
        match self.conditions.iter_mut().find(|c| c.condition == condition) {
            Some(c) => c.rounds = c.rounds.max(rounds),
            None => self.conditions.push(ActiveCondition { condition, rounds }),
        }
    }

    pub fn remove_condition(&mut self, condition: Condition) -> bool {
        let before = self.conditions.len();
        self.conditions.retain(|c| c.condition != condition);
        before != self.conditions.len()
    }

    /// Lowest available slot index able to cast a spell of `level`.
    pub(crate) fn slot_for(&self, level: u8) -> Option<usize> {
        if level == 0 {
            return None;
        }
        (level as usize - 1..self.spell_slots.len()).find(|&i| self.spell_slots[i] > 0)
    }

    pub(crate) fn can_cast(&self, level: u8) -> bool {
        level == 0 || self.slot_for(level).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeathSaveOutcome {
    Success,
    Failure,
    /// Natural 20: back to 1 HP (counted as healing) and ACTIVE.
    Revived,
    Stabilized,
    Died,
}

/// Applies one death saving throw with a given d20 result. Only meaningful
/// while the combatant is UNCONSCIOUS; otherwise returns `None` and leaves the
/// state untouched.
pub fn resolve_death_save(c: &mut CombatantState<'_>, roll: u32) -> Option<DeathSaveOutcome> {
    if c.life_state != LifeState::Unconscious {
        return None;
    }
    let outcome = match roll {
        20 => {
            c.hp_current = 1;
            c.healing_received += 1;
            c.life_state = LifeState::Active;
            c.death_save_successes = 0;
            c.death_save_failures = 0;
            return Some(DeathSaveOutcome::Revived);
        }
        1 => {
            c.death_save_failures = (c.death_save_failures + 2).min(3);
            DeathSaveOutcome::Failure
        }
        r if r >= 10 => {
            c.death_save_successes += 1;
            DeathSaveOutcome::Success
        }
        _ => {
            c.death_save_failures += 1;
            DeathSaveOutcome::Failure
        }
    };
    if c.death_save_failures >= 3 {
        c.life_state = LifeState::Dead;
        return Some(DeathSaveOutcome::Died);
    }
    if c.death_save_successes >= 3 {
        c.life_state = LifeState::Stable;
        return Some(DeathSaveOutcome::Stabilized);
    }
    Some(outcome)
}
