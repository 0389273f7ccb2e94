//! Turn-based combat: initiative, utility-driven action selection, damage,
//! death processing and summons.

use std::mem;

use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use super::roster::{Encounter, Party};
use super::scoring::{any_success, hit_probability, save_fail_probability, UtilityTable};
use super::state::{
    resolve_death_save, CombatantState, DeathSaveOutcome, Entrant, LifeState, Side, RAGE_DAMAGE,
    RAGE_ROUNDS, REGENERATION_HP,
};
use crate::content::{
    Ability, AttackSpec, CastingTime, Condition, ContentPack, DamageType, DiceExpr, OnHitEffect,
    RangeKind, SpellEffect, StatBlock,
};
use crate::error::Result;

pub const ROUND_CAP: u32 = 50;

const SNEAK_ATTACK: DiceExpr = DiceExpr::new(3, 6, 0);
const MARTIAL_ADVANTAGE: DiceExpr = DiceExpr::new(2, 6, 0);
const SECOND_WIND: DiceExpr = DiceExpr::new(1, 10, 5);
const BLESS_DIE: u32 = 4;
const BLESS_MEAN: f64 = 2.5;
const HASTE_AC: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Winner {
    Party,
    Enemy,
    Draw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub combatant: String,
    pub change: String,
}

/// One line of the combat log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombatEvent {
    pub round: u32,
    pub actor: String,
    pub action: String,
    pub targets: Vec<String>,
    pub rolls: Vec<i32>,
    pub damage: i32,
    pub state_changes: Vec<StateChange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombatResult {
    pub winner: Winner,
    pub rounds: u32,
    pub party_deaths: u32,
    pub tpk: bool,
    pub damage_to_party: i64,
    pub remaining_party_hp_fraction: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<CombatEvent>,
}

impl CombatResult {
    /// The log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombatOptions {
    pub round_cap: u32,
    pub record_log: bool,
    pub utility: UtilityTable,
}

impl Default for CombatOptions {
    fn default() -> Self {
        Self {
            round_cap: ROUND_CAP,
            record_log: true,
            utility: UtilityTable::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Action,
    BonusAction,
    /// The single extra weapon swing granted by haste.
    HasteAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Attack {
        attack: usize,
        target: usize,
        swings: u8,
    },
    Cast {
        spell: usize,
        targets: Vec<usize>,
    },
    SecondWind,
    Rage,
    Dodge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub action: Action,
    pub slot: Slot,
}

#[derive(Debug, Clone, Copy)]
pub struct Economy {
    pub action: bool,
    pub bonus: bool,
    pub haste: bool,
}

impl Economy {
    pub fn full(hasted: bool) -> Self {
        Self {
            action: true,
            bonus: true,
            haste: hasted,
        }
    }

    pub fn has(&self, slot: Slot) -> bool {
        match slot {
            Slot::Action => self.action,
            Slot::BonusAction => self.bonus,
            Slot::HasteAction => self.haste,
        }
    }

    fn consume(&mut self, slot: Slot) {
        match slot {
            Slot::Action => self.action = false,
            Slot::BonusAction => self.bonus = false,
            Slot::HasteAction => self.haste = false,
        }
    }
}

#[derive(Debug, Default)]
struct Recorder {
    enabled: bool,
    events: Vec<CombatEvent>,
    rolls: Vec<i32>,
    changes: Vec<StateChange>,
}

pub struct CombatState<'p> {
    pub pack: &'p ContentPack,
    pub utility: &'p UtilityTable,
    pub combatants: Vec<CombatantState<'p>>,
    /// Initiative order; summons are inserted right after their summoner.
    pub order: Vec<usize>,
    pub round: u32,
    rec: Recorder,
}

impl<'p> CombatState<'p> {
    pub fn new(
        pack: &'p ContentPack,
        utility: &'p UtilityTable,
        party_side: &[Entrant<'p>],
        enemy_side: &[Entrant<'p>],
    ) -> Self {
        let mut state = Self {
            pack,
            utility,
            combatants: Vec::with_capacity(party_side.len() + enemy_side.len() + 4),
            order: Vec::new(),
            round: 0,
            rec: Recorder::default(),
        };
        for (i, e) in party_side.iter().enumerate() {
            state.add(format!("p{i}:{}", e.base.id), e.base, Side::Party, e.hp);
        }
        for (i, e) in enemy_side.iter().enumerate() {
            state.add(format!("e{i}:{}", e.base.id), e.base, Side::Enemy, e.hp);
        }
        state.order = (0..state.combatants.len()).collect();
        state
    }

    /// Validates both rosters and seats them.
    pub fn from_rosters(
        pack: &'p ContentPack,
        utility: &'p UtilityTable,
        party: &Party,
        encounter: &Encounter,
    ) -> Result<Self> {
        let (p, e) = entrants(pack, party, encounter)?;
        Ok(Self::new(pack, utility, &p, &e))
    }

    fn add(&mut self, label: String, base: &'p StatBlock, side: Side, hp: i32) -> usize {
        let id = self.combatants.len();
        let mut c = CombatantState::new(id, label, base, side, hp);
        c.spells = base
            .spells
            .iter()
            .filter_map(|s| self.pack.spell_index(s))
            .collect();
        self.combatants.push(c);
        id
    }

    pub fn set_recording(&mut self, on: bool) {
        self.rec.enabled = on;
    }

    pub fn events(&self) -> &[CombatEvent] {
        &self.rec.events
    }

    pub fn winner(&self) -> Option<Winner> {
        let alive = |side| self.combatants.iter().any(|c| c.side == side && c.is_active());
        if !alive(Side::Enemy) {
            Some(Winner::Party)
        } else if !alive(Side::Party) {
            Some(Winner::Enemy)
        } else {
            None
        }
    }

    /// d20 + initiative bonus; ties go to higher dexterity, then a d20
    /// roll-off, then roster order.
    pub fn roll_initiative(&mut self, rng: &mut RngStream) {
        let mut keys = Vec::with_capacity(self.combatants.len());
        for c in &mut self.combatants {
            c.initiative_roll = rng.d20() as i32 + c.base.initiative_bonus;
            let rolloff = rng.d20();
            keys.push((c.initiative_roll, c.base.abilities.dex, rolloff, c.id));
        }
        keys.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(b.1.cmp(&a.1))
                .then(b.2.cmp(&a.2))
                .then(a.3.cmp(&b.3))
        });
        self.order = keys.iter().map(|k| k.3).collect();
        if self.rec.enabled {
            self.rec.rolls = self.order.iter().map(|&i| self.combatants[i].initiative_roll).collect();
            let order = self.order.clone();
            self.emit(None, "initiative", &order, 0);
        }
    }

    /// Runs rounds until one side has no ACTIVE combatant or the cap is hit.
    pub fn run(&mut self, rng: &mut RngStream, round_cap: u32) -> CombatResult {
        self.roll_initiative(rng);
        let mut winner = self.winner();
        while winner.is_none() && self.round < round_cap {
            self.round += 1;
            let mut i = 0;
            while i < self.order.len() {
                let id = self.order[i];
                self.turn(id, rng);
                winner = self.winner();
                if winner.is_some() {
                    break;
                }
                i += 1;
            }
        }
        self.finish(winner.unwrap_or(Winner::Draw))
    }

    /// Processes one combatant's full turn and returns the events it produced.
    pub fn take_turn(&mut self, id: usize, rng: &mut RngStream) -> Vec<CombatEvent> {
        let was = self.rec.enabled;
        let start = self.rec.events.len();
        self.rec.enabled = true;
        self.turn(id, rng);
        let events = self.rec.events[start..].to_vec();
        if !was {
            self.rec.events.truncate(start);
        }
        self.rec.enabled = was;
        events
    }

    fn turn(&mut self, id: usize, rng: &mut RngStream) {
        match self.combatants[id].life_state {
            LifeState::Unconscious => {
                self.resolve_death_processing(id, rng);
            }
            LifeState::Active => self.active_turn(id, rng),
            _ => {}
        }
    }

    fn active_turn(&mut self, id: usize, rng: &mut RngStream) {
        let c = &mut self.combatants[id];
        c.rider_used = false;
        c.remove_condition(Condition::Dodging);
        if c.base.has_ability("regeneration") {
            let blocked = mem::replace(&mut c.regen_blocked, false);
            if !blocked && c.hp_current < c.hp_max() {
                let healed = self.heal(id, REGENERATION_HP);
                self.emit(Some(id), "regeneration", &[id], -healed);
            }
        }

        if self.combatants[id].has(Condition::Exhaustion) {
            self.emit(Some(id), "lethargic", &[], 0);
        } else {
            let mut econ = Economy::full(self.combatants[id].has(Condition::Hasted));
            let mut acted = false;
            while self.combatants[id].is_active() && self.winner().is_none() {
                let Some(choice) = self.choose(id, &econ, rng) else {
                    break;
                };
                econ.consume(choice.slot);
                if choice.slot == Slot::Action && self.combatants[id].action_surges > 0 {
                    self.combatants[id].action_surges -= 1;
                    econ.action = true;
                    self.change(id, "action-surge".into());
                }
                self.execute(id, &choice.action, rng);
                acted = true;
            }
            if !acted && self.combatants[id].is_active() {
                self.execute(id, &Action::Dodge, rng);
            }
        }
        self.end_of_turn(id);
    }

    fn end_of_turn(&mut self, id: usize) {
        let c = &mut self.combatants[id];
        let mut expired = Vec::new();
        for ac in &mut c.conditions {
            if ac.condition == Condition::Dodging {
                continue;
            }
            ac.rounds -= 1;
            if ac.rounds == 0 {
                expired.push(ac.condition);
            }
        }
        c.conditions
            .retain(|ac| ac.rounds > 0 || ac.condition == Condition::Dodging);
        for cond in expired {
            self.change(id, format!("-{cond}"));
            if cond == Condition::Hasted {
                self.combatants[id].add_condition(Condition::Exhaustion, 1);
                self.change(id, "+exhaustion(1)".into());
            }
        }
        if !self.rec.changes.is_empty() {
            self.emit(Some(id), "turn_end", &[], 0);
        }
    }

    /// Death handling for a combatant at 0 HP. An ACTIVE combatant that has
    /// just reached 0 HP is REMOVED (monsters, summons) or falls UNCONSCIOUS
    /// (PCs); an UNCONSCIOUS PC makes one death saving throw.
    pub fn resolve_death_processing(
        &mut self,
        id: usize,
        rng: &mut RngStream,
    ) -> Option<DeathSaveOutcome> {
        let c = &mut self.combatants[id];
        match c.life_state {
            LifeState::Active if c.hp_current == 0 => {
                c.conditions.clear();
                c.death_save_successes = 0;
                c.death_save_failures = 0;
                let next = if c.is_pc() && c.is_roster_member() {
                    LifeState::Unconscious
                } else {
                    LifeState::Removed
                };
                self.transition(id, next);
                None
            }
            LifeState::Unconscious => {
                let roll = rng.d20();
                self.roll(roll as i32);
                let outcome = resolve_death_save(&mut self.combatants[id], roll);
                let after = self.combatants[id].life_state;
                if after != LifeState::Unconscious {
                    self.change(id, format!("UNCONSCIOUS->{}", life_name(after)));
                }
                self.emit(Some(id), "death_save", &[], 0);
                outcome
            }
            _ => None,
        }
    }

    fn transition(&mut self, id: usize, next: LifeState) {
        let c = &mut self.combatants[id];
        let prev = mem::replace(&mut c.life_state, next);
        if prev != next {
            self.change(id, format!("{}->{}", life_name(prev), life_name(next)));
        }
    }

    fn finish(&mut self, winner: Winner) -> CombatResult {
        for id in 0..self.combatants.len() {
            let c = &self.combatants[id];
            if c.side != Side::Party || !c.is_roster_member() {
                continue;
            }
            match (winner, c.life_state) {
                (Winner::Party, LifeState::Unconscious) => self.transition(id, LifeState::Stable),
                (Winner::Enemy, LifeState::Unconscious | LifeState::Stable) => {
                    self.transition(id, LifeState::Dead)
                }
                _ => {}
            }
        }
        if !self.rec.changes.is_empty() {
            self.emit(None, "combat_end", &[], 0);
        }
        let log = mem::take(&mut self.rec.events);

        let roster = || {
            self.combatants
                .iter()
                .filter(|c| c.side == Side::Party && c.is_roster_member())
        };
        let hp: i64 = roster().map(|c| c.hp_current as i64).sum();
        let hp_max: i64 = roster().map(|c| c.hp_max() as i64).sum();
        CombatResult {
            winner,
            rounds: self.round.max(1),
            party_deaths: roster().filter(|c| c.life_state.is_terminal()).count() as u32,
            tpk: winner == Winner::Enemy,
            damage_to_party: roster().map(|c| c.damage_taken as i64).sum(),
            remaining_party_hp_fraction: if hp_max > 0 { hp as f64 / hp_max as f64 } else { 0.0 },
            log,
        }
    }

    // ----- action selection -----

    fn hostiles(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        let side = self.combatants[id].side.opponent();
        self.combatants
            .iter()
            .filter(move |c| c.side == side && c.is_active())
            .map(|c| c.id)
    }

    fn allies(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        let side = self.combatants[id].side;
        self.combatants
            .iter()
            .filter(move |c| c.side == side && !c.life_state.is_terminal())
            .map(|c| c.id)
    }

    fn ally_active(&self, id: usize) -> bool {
        let side = self.combatants[id].side;
        self.combatants
            .iter()
            .any(|c| c.id != id && c.side == side && c.is_active())
    }

    fn has_active_summon(&self, id: usize) -> bool {
        self.combatants
            .iter()
            .any(|c| c.summoned_by == Some(id) && c.is_active())
    }

    /// Every legal action for the combatant given the remaining economy.
    pub fn candidates(&self, id: usize, econ: &Economy) -> Vec<Candidate> {
        let me = &self.combatants[id];
        let hostiles: Vec<usize> = self.hostiles(id).collect();
        let mut out = Vec::new();
        for (ai, atk) in me.base.attacks.iter().enumerate() {
            if me.attack_uses[ai] == Some(0) {
                continue;
            }
            let slot = if atk.bonus_action { Slot::BonusAction } else { Slot::Action };
            if econ.has(slot) {
                for &t in &hostiles {
                    out.push(Candidate {
                        action: Action::Attack { attack: ai, target: t, swings: atk.multiattack },
                        slot,
                    });
                }
            }
            if !atk.bonus_action && econ.haste {
                for &t in &hostiles {
                    out.push(Candidate {
                        action: Action::Attack { attack: ai, target: t, swings: 1 },
                        slot: Slot::HasteAction,
                    });
                }
            }
        }
        for &si in &me.spells {
            let spell = &self.pack.spells[si];
            let slot = match spell.casting_time {
                CastingTime::Action => Slot::Action,
                CastingTime::BonusAction => Slot::BonusAction,
            };
            if !econ.has(slot) || !me.can_cast(spell.level) {
                continue;
            }
            let mut push = |targets: Vec<usize>| {
                out.push(Candidate {
                    action: Action::Cast { spell: si, targets },
                    slot,
                })
            };
            match &spell.effect {
                SpellEffect::Attack { .. } => hostiles.iter().for_each(|&t| push(vec![t])),
                SpellEffect::Summon { .. } => {
                    if !self.has_active_summon(id) {
                        push(Vec::new());
                    }
                }
                SpellEffect::SaveDamage { max_targets, .. }
                | SpellEffect::Condition { max_targets, .. } => {
                    let t = self.rank_targets(id, si, hostiles.iter().copied(), *max_targets);
                    if !t.is_empty() {
                        push(t);
                    }
                }
                SpellEffect::Heal { max_targets, .. } | SpellEffect::Buff { max_targets, .. } => {
                    let t = self.rank_targets(id, si, self.allies(id), *max_targets);
                    if !t.is_empty() {
                        push(t);
                    }
                }
            }
        }
        if econ.bonus {
            if me.second_wind_uses > 0 && me.hp_current < me.hp_max() {
                out.push(Candidate { action: Action::SecondWind, slot: Slot::BonusAction });
            }
            if me.rage_uses > 0 && !me.has(Condition::Raging) {
                out.push(Candidate { action: Action::Rage, slot: Slot::BonusAction });
            }
        }
        out
    }

    /// Up to `max` targets with positive value, best first, ties by id.
    fn rank_targets(
        &self,
        caster: usize,
        spell: usize,
        pool: impl Iterator<Item = usize>,
        max: u8,
    ) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = pool
            .map(|t| (self.spell_target_value(caster, spell, t), t))
            .filter(|(v, _)| *v > 0.0)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(max as usize);
        let mut ids: Vec<usize> = scored.into_iter().map(|(_, t)| t).collect();
        ids.sort_unstable();
        ids
    }

    /// Highest jittered positive score, or `None` when nothing is worth doing.
    fn choose(&self, id: usize, econ: &Economy, rng: &mut RngStream) -> Option<Candidate> {
        let mut best: Option<(f64, Candidate)> = None;
        for cand in self.candidates(id, econ) {
            let s = self.score_action(id, &cand.action);
            if s <= 0.0 {
                continue;
            }
            let j = self.utility.jittered(s, rng.unit());
            if best.as_ref().is_none_or(|(b, _)| j > *b) {
                best = Some((j, cand));
            }
        }
        best.map(|(_, c)| c)
    }

    // ----- scoring -----

    /// Utility of an action before jitter; ≤ 0 means "not worth doing".
    pub fn score_action(&self, id: usize, action: &Action) -> f64 {
        let me = &self.combatants[id];
        let u = self.utility;
        match action {
            Action::Attack { attack, target, swings } => {
                let atk = &me.base.attacks[*attack];
                if me.attack_uses[*attack] == Some(0) {
                    return 0.0;
                }
                self.strike_value(id, *target, atk.to_hit_bonus, self.weapon_mean(id, atk), atk.damage_type, *swings, true)
            }
            Action::Cast { spell, targets } => {
                let sp = &self.pack.spells[*spell];
                if !me.can_cast(sp.level) {
                    return 0.0;
                }
                let value = match &sp.effect {
                    SpellEffect::Attack { dice, damage_type, rays, add_modifier } => {
                        let Some(&t) = targets.first() else { return 0.0 };
                        let m = if *add_modifier { me.base.spellcasting_modifier() } else { 0 };
                        self.strike_value(id, t, me.base.spell_attack_bonus(), dice.mean() + m as f64, *damage_type, *rays, false)
                    }
                    SpellEffect::Summon { monster, count } => {
                        if self.has_active_summon(id) {
                            return 0.0;
                        }
                        let Ok(m) = self.pack.monster(monster) else { return 0.0 };
                        u.summon_weight * *count as f64 * self.threat(m) * u.horizon_rounds
                    }
                    _ => targets.iter().map(|&t| self.spell_target_value(id, *spell, t)).sum(),
                };
                if value <= 0.0 {
                    return 0.0;
                }
                value - u.slot_cost_per_level * sp.level as f64
            }
            Action::SecondWind => {
                if me.second_wind_uses == 0 {
                    return 0.0;
                }
                self.heal_value(id, SECOND_WIND.mean())
            }
            Action::Rage => {
                if me.rage_uses == 0 || me.has(Condition::Raging) {
                    return 0.0;
                }
                let swings = me
                    .base
                    .attacks
                    .iter()
                    .filter(|a| a.range_kind == RangeKind::Melee && !a.bonus_action)
                    .map(|a| a.multiattack)
                    .max()
                    .unwrap_or(0);
                let rounds = u.horizon_rounds.min(RAGE_ROUNDS as f64);
                u.buff_weight * RAGE_DAMAGE as f64 * swings as f64 * u.nominal_hit_chance * rounds
            }
            Action::Dodge => 0.0,
        }
    }

    fn weapon_mean(&self, id: usize, atk: &AttackSpec) -> f64 {
        let me = &self.combatants[id];
        let rage = if atk.range_kind == RangeKind::Melee && me.has(Condition::Raging) {
            RAGE_DAMAGE
        } else {
            0
        };
        atk.damage_dice.mean() + rage as f64
    }

    /// Expected value of `swings` attack rolls against `target`.
    #[allow(clippy::too_many_arguments)]
    fn strike_value(
        &self,
        actor: usize,
        target: usize,
        to_hit: i32,
        mean: f64,
        damage_type: DamageType,
        swings: u8,
        weapon: bool,
    ) -> f64 {
        let a = &self.combatants[actor];
        let t = &self.combatants[target];
        if !t.is_active() || t.side == a.side || swings == 0 {
            return 0.0;
        }
        let adv = self.advantage(actor, target);
        let bless = if a.has(Condition::Blessed) { BLESS_MEAN } else { 0.0 };
        let p = hit_probability(self.effective_ac(target) as f64, to_hit as f64 + bless, adv);
        let factor = self.damage_factor(target, damage_type);
        let per_hit = mean * factor;
        let rider = if weapon { self.rider_mean(actor, adv) * factor } else { 0.0 };
        let p_any = any_success(p, swings);
        let expected = swings as f64 * p * per_hit + rider * p_any;
        let hp = t.hp_current as f64;
        let mut value = expected.min(hp);
        if swings as f64 * per_hit + rider >= hp {
            value += self.utility.kill_bonus * p_any;
        }
        value
    }

    /// Per-target value of a targeted (non-attack-roll) spell.
    fn spell_target_value(&self, caster: usize, spell: usize, target: usize) -> f64 {
        let c = &self.combatants[caster];
        let t = &self.combatants[target];
        let u = self.utility;
        let sp = &self.pack.spells[spell];
        let hostile = t.side != c.side;
        match &sp.effect {
            SpellEffect::SaveDamage { save, dice, damage_type, half_on_success, .. } => {
                if !hostile || !t.is_active() {
                    return 0.0;
                }
                let pf = self.save_fail(c.base.spell_save_dc(), target, *save);
                let mean = dice.mean() * self.damage_factor(target, *damage_type);
                let on_save = if *half_on_success { 0.5 } else { 0.0 };
                let hp = t.hp_current as f64;
                let mut v = (mean * (pf + (1.0 - pf) * on_save)).min(hp);
                if mean >= hp {
                    v += u.kill_bonus * pf;
                }
                v
            }
            SpellEffect::Heal { dice, add_modifier, .. } => {
                if hostile {
                    return 0.0;
                }
                let m = if *add_modifier { c.base.spellcasting_modifier() } else { 0 };
                self.heal_value(target, dice.mean() + m as f64)
            }
            SpellEffect::Condition { save, condition, rounds, .. } => {
                if !hostile || !t.is_active() || t.has(*condition) {
                    return 0.0;
                }
                let pf = self.save_fail(c.base.spell_save_dc(), target, *save);
                let rounds = u.horizon_rounds.min(*rounds as f64);
                u.control_weight * pf * self.threat(t.base) * u.severity(*condition) * rounds
            }
            SpellEffect::Buff { condition, rounds, .. } => {
                if hostile || !t.is_active() || t.has(*condition) {
                    return 0.0;
                }
                let rounds = u.horizon_rounds.min(*rounds as f64);
                let per_round = match condition {
                    Condition::Hasted => self.best_swing(t.base) * u.nominal_hit_chance,
                    Condition::Blessed => self.threat(t.base) * BLESS_MEAN / 20.0,
                    _ => self.threat(t.base) * 0.25,
                };
                u.buff_weight * per_round * rounds
            }
            SpellEffect::Attack { .. } | SpellEffect::Summon { .. } => 0.0,
        }
    }

    fn heal_value(&self, target: usize, mean: f64) -> f64 {
        let t = &self.combatants[target];
        if t.life_state.is_terminal() {
            return 0.0;
        }
        let missing = (t.hp_max() - t.hp_current) as f64;
        if missing <= 0.0 {
            return 0.0;
        }
        let u = self.utility;
        let effective = mean.min(missing);
        let mut v = u.heal_weight * effective * (1.0 + u.heal_urgency * missing / t.hp_max() as f64);
        if t.hp_current == 0 {
            v += u.revive_bonus;
        }
        v
    }

    /// Mean damage of the best single weapon swing.
    fn best_swing(&self, base: &StatBlock) -> f64 {
        base.attacks
            .iter()
            .filter(|a| !a.bonus_action)
            .map(|a| a.damage_dice.mean())
            .fold(0.0, f64::max)
    }

    /// Expected damage per round the stat block deals at a nominal hit rate.
    pub fn threat(&self, base: &StatBlock) -> f64 {
        let mut best = base
            .attacks
            .iter()
            .filter(|a| !a.bonus_action)
            .map(|a| a.multiattack as f64 * a.damage_dice.mean())
            .fold(0.0, f64::max);
        for s in base.spells.iter().filter_map(|s| self.pack.spell(s)) {
            if s.level != 0 {
                continue;
            }
            let v = match &s.effect {
                SpellEffect::Attack { dice, rays, add_modifier, .. } => {
                    let m = if *add_modifier { base.spellcasting_modifier() } else { 0 };
                    *rays as f64 * (dice.mean() + m as f64)
                }
                SpellEffect::SaveDamage { dice, .. } => dice.mean(),
                _ => 0.0,
            };
            best = best.max(v);
        }
        best * self.utility.nominal_hit_chance
    }

    fn rider_mean(&self, actor: usize, adv: i32) -> f64 {
        let a = &self.combatants[actor];
        if a.rider_used {
            return 0.0;
        }
        let ally = self.ally_active(actor);
        let mut v = 0.0;
        if a.base.has_ability("sneak-attack") && (adv > 0 || ally) {
            v += SNEAK_ATTACK.mean();
        }
        if a.base.has_ability("martial-advantage") && ally {
            v += MARTIAL_ADVANTAGE.mean();
        }
        v
    }

    fn save_fail(&self, dc: i32, target: usize, save: Ability) -> f64 {
        let t = &self.combatants[target];
        let bless = if t.has(Condition::Blessed) { BLESS_MEAN } else { 0.0 };
        save_fail_probability(dc as f64, t.base.save_bonus(save) as f64 + bless)
    }

    /// +1 advantage, -1 disadvantage, 0 neither (or both).
    pub fn advantage(&self, actor: usize, target: usize) -> i32 {
        let a = &self.combatants[actor];
        let t = &self.combatants[target];
        let adv = t.has(Condition::Restrained)
            || (a.base.has_ability("pack-tactics") && self.ally_active(actor));
        let dis = a.has(Condition::Poisoned)
            || a.has(Condition::Frightened)
            || a.has(Condition::Restrained)
            || t.has(Condition::Dodging);
        adv as i32 - dis as i32
    }

    fn effective_ac(&self, target: usize) -> i32 {
        let t = &self.combatants[target];
        t.base.ac + if t.has(Condition::Hasted) { HASTE_AC } else { 0 }
    }

    fn damage_factor(&self, target: usize, damage_type: DamageType) -> f64 {
        let t = &self.combatants[target];
        if t.base.immunities.contains(&damage_type) {
            0.0
        } else if t.base.resistances.contains(&damage_type)
            || (damage_type.is_physical() && t.has(Condition::Raging))
        {
            0.5
        } else {
            1.0
        }
    }

    // ----- execution -----

    fn execute(&mut self, id: usize, action: &Action, rng: &mut RngStream) {
        match action {
            Action::Attack { attack, target, swings } => {
                let base: &'p StatBlock = self.combatants[id].base;
                let atk = &base.attacks[*attack];
                if let Some(u) = &mut self.combatants[id].attack_uses[*attack] {
                    *u = u.saturating_sub(1);
                }
                let mean = self.weapon_mean(id, atk);
                let melee = atk.range_kind == RangeKind::Melee;
                let rage = if melee && self.combatants[id].has(Condition::Raging) { RAGE_DAMAGE } else { 0 };
                let dice = atk.damage_dice.with_modifier(rage);
                let strike = Strike {
                    to_hit: atk.to_hit_bonus,
                    dice,
                    damage_type: atk.damage_type,
                    weapon: true,
                    on_hit: atk.on_hit.as_ref(),
                };
                let (hit, dmg) = self.volley(id, *target, *swings, mean, &strike, rng);
                self.emit(Some(id), &format!("attack:{}", atk.name), &hit, dmg);
            }
            Action::Cast { spell, targets } => self.cast(id, *spell, targets, rng),
            Action::SecondWind => {
                self.combatants[id].second_wind_uses -= 1;
                let amount = rng.roll(&SECOND_WIND);
                self.roll(amount);
                let healed = self.heal(id, amount);
                self.emit(Some(id), "second-wind", &[id], -healed);
            }
            Action::Rage => {
                let c = &mut self.combatants[id];
                c.rage_uses -= 1;
                c.add_condition(Condition::Raging, RAGE_ROUNDS);
                self.change(id, format!("+raging({RAGE_ROUNDS})"));
                self.emit(Some(id), "rage", &[id], 0);
            }
            Action::Dodge => {
                self.combatants[id].add_condition(Condition::Dodging, 1);
                self.emit(Some(id), "dodge", &[], 0);
            }
        }
    }

    /// Repeated attack rolls, retargeting when the target drops.
    fn volley(
        &mut self,
        actor: usize,
        target: usize,
        swings: u8,
        mean: f64,
        strike: &Strike<'p>,
        rng: &mut RngStream,
    ) -> (Vec<usize>, i32) {
        let mut target = target;
        let mut hit = Vec::new();
        let mut total = 0;
        for _ in 0..swings {
            if !self.combatants[target].is_active() {
                match self.retarget(actor, strike, mean) {
                    Some(t) => target = t,
                    None => break,
                }
            }
            total += self.strike(actor, target, strike, rng);
            if !hit.contains(&target) {
                hit.push(target);
            }
        }
        (hit, total)
    }

    fn retarget(&self, actor: usize, strike: &Strike<'p>, mean: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for t in self.hostiles(actor) {
            let v = self.strike_value(actor, t, strike.to_hit, mean, strike.damage_type, 1, strike.weapon);
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, t));
            }
        }
        best.map(|(_, t)| t)
    }

    /// One attack roll and its consequences. Returns HP removed.
    fn strike(&mut self, actor: usize, target: usize, s: &Strike<'p>, rng: &mut RngStream) -> i32 {
        let adv = self.advantage(actor, target);
        let first = rng.d20();
        self.roll(first as i32);
        let nat = if adv != 0 {
            let second = rng.d20();
            self.roll(second as i32);
            if adv > 0 { first.max(second) } else { first.min(second) }
        } else {
            first
        };
        let mut total = nat as i32 + s.to_hit;
        if self.combatants[actor].has(Condition::Blessed) {
            let b = rng.die(BLESS_DIE) as i32;
            self.roll(b);
            total += b;
        }
        let crit = nat == 20;
        if nat == 1 || (!crit && total < self.effective_ac(target)) {
            return 0;
        }
        let mut dmg = self.roll_damage(&s.dice, crit, rng);
        if s.weapon && !self.combatants[actor].rider_used {
            let ally = self.ally_active(actor);
            let base = self.combatants[actor].base;
            if base.has_ability("sneak-attack") && (adv > 0 || ally) {
                dmg += self.roll_damage(&SNEAK_ATTACK, crit, rng);
                self.combatants[actor].rider_used = true;
            }
            if base.has_ability("martial-advantage") && ally {
                dmg += self.roll_damage(&MARTIAL_ADVANTAGE, crit, rng);
                self.combatants[actor].rider_used = true;
            }
        }
        let dealt = self.apply_damage(target, dmg, s.damage_type, crit, rng);
        if let Some(effect) = s.on_hit {
            if self.combatants[target].is_active() {
                self.inflict(target, effect.save, effect.dc, effect.condition, effect.rounds, rng);
            }
        }
        dealt
    }

    fn roll_damage(&mut self, dice: &DiceExpr, crit: bool, rng: &mut RngStream) -> i32 {
        let expr = if crit {
            DiceExpr::new(dice.count * 2, dice.sides, dice.modifier)
        } else {
            *dice
        };
        let v = rng.roll(&expr).max(0);
        self.roll(v);
        v
    }

    fn saving_throw(&mut self, target: usize, ability: Ability, rng: &mut RngStream) -> i32 {
        let mut v = rng.d20() as i32 + self.combatants[target].base.save_bonus(ability);
        if self.combatants[target].has(Condition::Blessed) {
            v += rng.die(BLESS_DIE) as i32;
        }
        self.roll(v);
        v
    }

    fn inflict(
        &mut self,
        target: usize,
        save: Ability,
        dc: i32,
        condition: Condition,
        rounds: u8,
        rng: &mut RngStream,
    ) {
        if self.saving_throw(target, save, rng) < dc {
            self.combatants[target].add_condition(condition, rounds);
            self.change(target, format!("+{condition}({rounds})"));
        }
    }

    fn cast(&mut self, id: usize, si: usize, targets: &[usize], rng: &mut RngStream) {
        let pack = self.pack;
        let spell = &pack.spells[si];
        let caster = self.combatants[id].base;
        if let Some(slot) = self.combatants[id].slot_for(spell.level) {
            self.combatants[id].spell_slots[slot] -= 1;
        }
        let dc = caster.spell_save_dc();
        let mut total = 0;
        let mut hit = targets.to_vec();
        match &spell.effect {
            SpellEffect::Attack { dice, damage_type, rays, add_modifier } => {
                let m = if *add_modifier { caster.spellcasting_modifier() } else { 0 };
                let strike = Strike {
                    to_hit: caster.spell_attack_bonus(),
                    dice: dice.with_modifier(m),
                    damage_type: *damage_type,
                    weapon: false,
                    on_hit: None,
                };
                let (h, dmg) = self.volley(id, targets[0], *rays, dice.mean() + m as f64, &strike, rng);
                hit = h;
                total = dmg;
            }
            SpellEffect::SaveDamage { save, dice, damage_type, half_on_success, .. } => {
                let dmg = self.roll_damage(dice, false, rng);
                for &t in targets {
                    if !self.combatants[t].is_active() {
                        continue;
                    }
                    let amount = if self.saving_throw(t, *save, rng) >= dc {
                        if *half_on_success { dmg / 2 } else { 0 }
                    } else {
                        dmg
                    };
                    total += self.apply_damage(t, amount, *damage_type, false, rng);
                }
            }
            SpellEffect::Heal { dice, add_modifier, .. } => {
                let m = if *add_modifier { caster.spellcasting_modifier() } else { 0 };
                for &t in targets {
                    let amount = rng.roll(&dice.with_modifier(m)).max(0);
                    self.roll(amount);
                    total -= self.heal(t, amount);
                }
            }
            SpellEffect::Condition { save, condition, rounds, .. } => {
                for &t in targets {
                    if self.combatants[t].is_active() {
                        self.inflict(t, *save, dc, *condition, *rounds, rng);
                    }
                }
            }
            SpellEffect::Buff { condition, rounds, .. } => {
                for &t in targets {
                    if self.combatants[t].is_active() {
                        self.combatants[t].add_condition(*condition, *rounds);
                        self.change(t, format!("+{condition}({rounds})"));
                    }
                }
            }
            SpellEffect::Summon { monster, count } => {
                hit = self.summon(id, monster, *count);
            }
        }
        self.emit(Some(id), &format!("cast:{}", spell.id), &hit, total);
    }

    fn summon(&mut self, summoner: usize, monster: &str, count: u8) -> Vec<usize> {
        let Ok(base) = self.pack.monster(monster) else {
            return Vec::new();
        };
        let side = self.combatants[summoner].side;
        let init = self.combatants[summoner].initiative_roll;
        let mut pos = self.order.iter().position(|&x| x == summoner).map_or(self.order.len(), |p| p + 1);
        let mut ids = Vec::new();
        for _ in 0..count {
            let id = self.combatants.len();
            let id = self.add(format!("s{id}:{}", base.id), base, side, base.hp_max);
            let c = &mut self.combatants[id];
            c.summoned_by = Some(summoner);
            c.initiative_roll = init;
            self.order.insert(pos, id);
            pos += 1;
            self.change(id, "+summoned".into());
            ids.push(id);
        }
        ids
    }

    /// Applies resistances and immunities, then removes HP. Returns HP lost.
    pub fn apply_damage(
        &mut self,
        target: usize,
        amount: i32,
        damage_type: DamageType,
        crit: bool,
        rng: &mut RngStream,
    ) -> i32 {
        let factor = self.damage_factor(target, damage_type);
        let t = &mut self.combatants[target];
        if !t.is_active() || amount <= 0 || factor == 0.0 {
            return 0;
        }
        let dmg = if factor < 1.0 { amount / 2 } else { amount };
        if dmg == 0 {
            return 0;
        }
        if matches!(damage_type, DamageType::Fire | DamageType::Acid) {
            t.regen_blocked = true;
        }
        let mut dealt = dmg.min(t.hp_current);
        t.hp_current -= dealt;
        t.damage_taken += dealt;
        if t.hp_current == 0 {
            if t.base.has_ability("undead-fortitude") && damage_type != DamageType::Radiant && !crit {
                let save = rng.d20() as i32 + t.base.save_bonus(Ability::Con);
                if save >= 5 + dmg {
                    t.hp_current = 1;
                    t.damage_taken -= 1;
                    dealt -= 1;
                    self.roll(save);
                    self.change(target, "undead-fortitude".into());
                    return dealt;
                }
                self.roll(save);
            }
            self.resolve_death_processing(target, rng);
        }
        dealt
    }

    /// Restores HP, reviving a downed combatant. Returns HP restored.
    pub fn heal(&mut self, target: usize, amount: i32) -> i32 {
        let t = &mut self.combatants[target];
        if t.life_state.is_terminal() {
            return 0;
        }
        let actual = amount.clamp(0, t.hp_max() - t.hp_current);
        if actual == 0 {
            return 0;
        }
        t.hp_current += actual;
        t.healing_received += actual;
        if t.life_state != LifeState::Active {
            t.death_save_successes = 0;
            t.death_save_failures = 0;
            self.transition(target, LifeState::Active);
        }
        actual
    }

    // ----- log recording -----

    fn roll(&mut self, v: i32) {
        if self.rec.enabled {
            self.rec.rolls.push(v);
        }
    }

    fn change(&mut self, id: usize, change: String) {
        if self.rec.enabled {
            self.rec.changes.push(StateChange {
                combatant: self.combatants[id].label.clone(),
                change,
            });
        }
    }

    fn emit(&mut self, actor: Option<usize>, action: &str, targets: &[usize], damage: i32) {
        if !self.rec.enabled {
            return;
        }
        let event = CombatEvent {
            round: self.round,
            actor: actor.map_or_else(|| "-".to_string(), |a| self.combatants[a].label.clone()),
            action: action.to_string(),
            targets: targets.iter().map(|&t| self.combatants[t].label.clone()).collect(),
            rolls: mem::take(&mut self.rec.rolls),
            damage,
            state_changes: mem::take(&mut self.rec.changes),
        };
        self.rec.events.push(event);
    }
}

struct Strike<'p> {
    to_hit: i32,
    dice: DiceExpr,
    damage_type: DamageType,
    weapon: bool,
    on_hit: Option<&'p OnHitEffect>,
}

fn life_name(s: LifeState) -> &'static str {
    match s {
        LifeState::Active => "ACTIVE",
        LifeState::Unconscious => "UNCONSCIOUS",
        LifeState::Stable => "STABLE",
        LifeState::Dead => "DEAD",
        LifeState::Removed => "REMOVED",
    }
}

pub(crate) fn entrants<'p>(
    pack: &'p ContentPack,
    party: &Party,
    encounter: &Encounter,
) -> Result<(Vec<Entrant<'p>>, Vec<Entrant<'p>>)> {
    party.validate(pack)?;
    encounter.validate(pack)?;
    let p = party
        .members
        .iter()
        .map(|m| {
            Ok(Entrant {
                base: pack.pc_template(&m.template)?,
                hp: m.hp_current,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let e = encounter
        .enemies
        .iter()
        .map(|id| pack.monster(id).map(Entrant::full))
        .collect::<Result<Vec<_>>>()?;
    Ok((p, e))
}

/// Runs one combat with the default options (log recorded).
pub fn run_combat(
    pack: &ContentPack,
    party: &Party,
    encounter: &Encounter,
    seed: u64,
) -> Result<CombatResult> {
    run_combat_with(pack, party, encounter, seed, &CombatOptions::default())
}

pub fn run_combat_with(
    pack: &ContentPack,
    party: &Party,
    encounter: &Encounter,
    seed: u64,
    opts: &CombatOptions,
) -> Result<CombatResult> {
    let (p, e) = entrants(pack, party, encounter)?;
    Ok(run_skirmish(pack, &p, &e, seed, opts))
}

/// Combat between arbitrary rosters, e.g. monster mirror matches. The first
/// roster plays the party side.
pub fn run_skirmish<'p>(
    pack: &'p ContentPack,
    party_side: &[Entrant<'p>],
    enemy_side: &[Entrant<'p>],
    seed: u64,
    opts: &CombatOptions,
) -> CombatResult {
    let mut rng = RngStream::new(seed);
    let mut state = CombatState::new(pack, &opts.utility, party_side, enemy_side);
    state.set_recording(opts.record_log);
    state.run(&mut rng, opts.round_cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pack() -> ContentPack {
        ContentPack::bundled().unwrap()
    }

    fn seat<'p>(
        pack: &'p ContentPack,
        utility: &'p UtilityTable,
        party: &[&str],
        enemies: &[&str],
    ) -> CombatState<'p> {
        let p: Vec<_> = party.iter().map(|id| Entrant::full(pack.pc_template(id).unwrap())).collect();
        let e: Vec<_> = enemies.iter().map(|id| Entrant::full(pack.monster(id).unwrap())).collect();
        let mut s = CombatState::new(pack, utility, &p, &e);
        s.round = 1;
        s
    }

    #[test]
    fn single_target_gets_attacked() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["fighter"], &["kobold"]);
        let events = s.take_turn(0, &mut RngStream::new(3));
        assert_eq!(events[0].action, "attack:Longsword");
        assert_eq!(events[0].targets, vec!["e0:kobold".to_string()]);
    }

    #[test]
    fn expected_damage_score() {
        // p_hit = (21 - (11 - 0)) / 20 = 0.5 against the ogre; 2d6 averages 7.
        let mut pack = pack();
        let goblin = pack.monsters.iter_mut().find(|m| m.id == "goblin").unwrap();
        goblin.attacks.truncate(1);
        goblin.attacks[0].to_hit_bonus = 0;
        goblin.attacks[0].damage_dice = "2d6".parse().unwrap();
        let goblin = goblin.clone();
        let ogre = pack.monster("ogre").unwrap();
        assert_eq!(ogre.ac, 11);
        let u = UtilityTable::default();
        let s = CombatState::new(&pack, &u, &[Entrant::full(&goblin)], &[Entrant::full(ogre)]);
        let score = s.score_action(0, &Action::Attack { attack: 0, target: 1, swings: 1 });
        assert!((score - 3.5).abs() < 1e-12, "{score}");
    }

    #[test]
    fn attack_on_downed_target_is_worthless() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["fighter"], &["orc", "orc"]);
        s.combatants[1].hp_current = 0;
        s.combatants[1].life_state = LifeState::Removed;
        assert!(s.score_action(0, &Action::Attack { attack: 0, target: 1, swings: 2 }) <= 0.0);
        assert!(s.score_action(0, &Action::Attack { attack: 0, target: 2, swings: 2 }) > 0.0);
    }

    #[test]
    fn healer_prefers_reviving_downed_ally() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["cleric", "fighter"], &["orc"]);
        s.combatants[1].hp_current = 0;
        s.combatants[1].life_state = LifeState::Unconscious;
        let cure = pack.spell_index("cure-wounds").unwrap();
        let heal = s.score_action(0, &Action::Cast { spell: cure, targets: vec![1] });
        let mace = s.score_action(0, &Action::Attack { attack: 0, target: 2, swings: 1 });
        let flame = pack.spell_index("sacred-flame").unwrap();
        let flame = s.score_action(0, &Action::Cast { spell: flame, targets: vec![2] });
        assert!(heal > 30.0 && heal > mace && heal > flame, "{heal} {mace} {flame}");

        let events = s.take_turn(0, &mut RngStream::new(11));
        assert!(events[0].action.starts_with("cast:"), "{:?}", events[0]);
        assert_eq!(events[0].targets, vec!["p1:fighter".to_string()]);
        assert!(s.combatants[1].is_active());
    }

    #[test]
    fn nothing_worth_doing_dodges() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["fighter"], &["ogre"]);
        s.combatants[1].attack_uses[0] = Some(0);
        let events = s.take_turn(1, &mut RngStream::new(1));
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].action, "dodge");
        assert!(s.combatants[1].has(Condition::Dodging));
    }

    #[test]
    fn identical_targets_split_evenly() {
        let pack = pack();
        let u = UtilityTable::default();
        let s = seat(&pack, &u, &["wizard"], &["ogre", "ogre"]);
        let mut rng = RngStream::new(5);
        let econ = Economy { action: true, bonus: false, haste: false };
        let dagger = |t| Candidate { action: Action::Attack { attack: 0, target: t, swings: 1 }, slot: Slot::Action };
        let mut s = s;
        s.combatants[0].spells.clear();
        let n = 10_000;
        let mut first = 0;
        for _ in 0..n {
            let c = s.choose(0, &econ, &mut rng).unwrap();
            assert!(c == dagger(1) || c == dagger(2));
            first += (c == dagger(1)) as u32;
        }
        let f = first as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.02, "{f}");
    }

    #[test]
    fn enemy_at_zero_is_removed() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["fighter"], &["orc"]);
        let mut rng = RngStream::new(0);
        let dealt = s.apply_damage(1, 100, DamageType::Slashing, false, &mut rng);
        assert_eq!(dealt, 15);
        assert_eq!(s.combatants[1].life_state, LifeState::Removed);
        let dealt = s.apply_damage(0, 100, DamageType::Slashing, false, &mut rng);
        assert_eq!(dealt, 49);
        assert_eq!(s.combatants[0].life_state, LifeState::Unconscious);
    }

    #[test]
    fn summons_disappear_at_zero() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["druid"], &["ogre"]);
        let wolves = s.summon(0, "wolf", 2);
        assert_eq!(wolves.len(), 2);
        assert_eq!(&s.order[..3], &[0, wolves[0], wolves[1]]);
        s.apply_damage(wolves[0], 50, DamageType::Bludgeoning, false, &mut RngStream::new(0));
        assert_eq!(s.combatants[wolves[0]].life_state, LifeState::Removed);
    }

    #[test]
    fn haste_ends_in_lethargy() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["fighter"], &["ogre"]);
        s.combatants[0].add_condition(Condition::Hasted, 1);
        s.end_of_turn(0);
        assert!(!s.combatants[0].has(Condition::Hasted));
        assert!(s.combatants[0].has(Condition::Exhaustion));
        let events = s.take_turn(0, &mut RngStream::new(2));
        assert_eq!(events[0].action, "lethargic");
        assert!(!s.combatants[0].has(Condition::Exhaustion));
    }

    #[test]
    fn regeneration_blocked_by_fire() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["wizard"], &["troll"]);
        let mut rng = RngStream::new(0);
        s.apply_damage(1, 20, DamageType::Fire, false, &mut rng);
        s.take_turn(1, &mut rng);
        assert_eq!(s.combatants[1].hp_current, 64);
        s.apply_damage(1, 20, DamageType::Slashing, false, &mut rng);
        s.take_turn(1, &mut rng);
        assert_eq!(s.combatants[1].hp_current, 54);
    }

    #[test]
    fn resistance_halves_and_rage_resists_physical() {
        let pack = pack();
        let u = UtilityTable::default();
        let mut s = seat(&pack, &u, &["barbarian"], &["werewolf"]);
        let mut rng = RngStream::new(0);
        assert_eq!(s.apply_damage(1, 11, DamageType::Slashing, false, &mut rng), 5);
        s.combatants[0].add_condition(Condition::Raging, 10);
        assert_eq!(s.apply_damage(0, 11, DamageType::Piercing, false, &mut rng), 5);
        assert_eq!(s.apply_damage(0, 11, DamageType::Fire, false, &mut rng), 11);
    }
}
