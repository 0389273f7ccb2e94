use ntrl::content::{ContentPack, DiceExpr, StatBlock};
use ntrl::sim::{
    batch_results, run_batch, run_batch_with, run_combat, run_combat_with, run_skirmish, sim_seed,
    BatchOptions, CombatOptions, CombatState, Encounter, Entrant, LifeState, Party, RngStream,
    Side, UtilityTable, Winner, ROUND_CAP,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn pack() -> &'static ContentPack {
    static PACK: OnceLock<ContentPack> = OnceLock::new();
    PACK.get_or_init(|| ContentPack::bundled().unwrap())
}

fn quiet() -> CombatOptions {
    CombatOptions {
        record_log: false,
        ..CombatOptions::default()
    }
}

fn standard_party() -> Party {
    Party::from_templates(pack(), &["fighter", "cleric", "wizard", "rogue"]).unwrap()
}

#[test]
fn seed_42_logs_are_byte_identical() {
    let party = standard_party();
    let enc = Encounter::new(vec!["bugbear".into(), "hobgoblin".into(), "hobgoblin".into(), "wolf".into()]);
    let a = run_combat(pack(), &party, &enc, 42).unwrap();
    let b = run_combat(pack(), &party, &enc, 42).unwrap();
    assert!(!a.log.is_empty());
    assert_eq!(a.log_jsonl(), b.log_jsonl());
    assert_eq!(a, b);
    let c = run_combat(pack(), &party, &enc, 43).unwrap();
    assert_ne!(a.log_jsonl(), c.log_jsonl());
}

#[test]
fn parallel_batch_matches_serial() {
    let party = standard_party();
    let enc = Encounter::new(vec!["owlbear".into(), "gnoll".into(), "gnoll".into()]);
    let serial = run_batch(pack(), &party, &enc, 200, 9).unwrap();
    let opts = BatchOptions {
        parallel: true,
        ..BatchOptions::default()
    };
    let parallel = run_batch_with(pack(), &party, &enc, 200, 9, &opts).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(
        serde_json::to_string(&serial).unwrap(),
        serde_json::to_string(&parallel).unwrap()
    );
}

#[test]
fn single_sim_batch_is_that_combat() {
    let party = standard_party();
    let enc = Encounter::new(vec!["ogre".into(), "orc".into()]);
    let m = run_batch(pack(), &party, &enc, 1, 77).unwrap();
    let r = run_combat_with(pack(), &party, &enc, sim_seed(77, 0), &quiet()).unwrap();
    assert_eq!(m.n_sims, 1);
    assert_eq!(m.win_probability, (r.winner == Winner::Party) as u8 as f64);
    assert_eq!(m.fight_longevity, r.rounds as f64);
    assert_eq!(m.tpk_count, r.tpk as u32);
    assert_eq!(m.total_player_deaths, r.party_deaths);
    assert_eq!(m.total_damage_to_party, r.damage_to_party as f64);
    assert!((m.remaining_party_hp_pct - 100.0 * r.remaining_party_hp_fraction).abs() < 1e-9);
    // DEADLY 4 x 1100 minus (450 + 100) x 1.5.
    assert_eq!(m.team_xp_difference, 4400 - 825);
}

#[test]
fn zero_sims_rejected() {
    let enc = Encounter::new(vec!["ogre".into()]);
    assert!(run_batch(pack(), &standard_party(), &enc, 0, 1).is_err());
}

fn mirror_win_rate(id: &str, n: u64) -> (f64, u64) {
    let m = pack().monster(id).unwrap();
    let side = [Entrant::full(m)];
    let mut wins = 0;
    let mut draws = 0;
    for s in 0..n {
        match run_skirmish(pack(), &side, &side, sim_seed(0xD0E1, s), &quiet()).winner {
            Winner::Party => wins += 1,
            Winner::Draw => draws += 1,
            Winner::Enemy => {}
        }
    }
    (wins as f64 / n as f64, draws)
}

#[test]
fn mirror_duels_are_fair() {
    let n = 10_000;
    let two_sigma = 2.0 * (0.25 / n as f64).sqrt();
    for id in ["ogre", "veteran"] {
        let (rate, draws) = mirror_win_rate(id, n as u64);
        assert_eq!(draws, 0);
        assert!((rate - 0.5).abs() <= 0.02, "{id}: {rate}");
        assert!((rate - 0.5).abs() <= two_sigma, "{id}: {rate} outside 2 sigma ({two_sigma})");
    }
}

/// Largest damage one turn of `m` can deal: every swing of its best attack
/// crits for maximum dice.
fn worst_case_turn_damage(m: &StatBlock) -> i32 {
    m.attacks
        .iter()
        .map(|a| {
            let crit = DiceExpr::new(a.damage_dice.count * 2, a.damage_dice.sides, a.damage_dice.modifier);
            a.multiattack as i32 * crit.max()
        })
        .max()
        .unwrap()
}

#[test]
fn four_pcs_always_beat_a_kobold() {
    let kobold = pack().monster("kobold").unwrap();
    let per_turn = worst_case_turn_damage(kobold);
    assert_eq!(per_turn, 10);
    let party = standard_party();
    let total_hp: i32 = party.members.iter().map(|m| m.hp_current).sum();
    // Turns of maximum output needed before all four PCs could be down.
    let turns_for_tpk = (total_hp + per_turn - 1) / per_turn;
    assert_eq!(turns_for_tpk, 16);

    let enc = Encounter::new(vec!["kobold".into()]);
    let opts = BatchOptions::default();
    let results = batch_results(pack(), &party, &enc, 100, 1, &opts).unwrap();
    for r in &results {
        assert!(r.damage_to_party <= (per_turn as u32 * r.rounds) as i64);
        assert!(r.rounds < turns_for_tpk as u32, "kobold survived {} rounds", r.rounds);
        assert_eq!(r.winner, Winner::Party);
    }
    let m = run_batch(pack(), &party, &enc, 100, 1).unwrap();
    assert_eq!(m.win_probability, 1.0);
}

#[test]
fn extra_strongest_monster_never_helps_the_party() {
    let party = Party::from_templates(pack(), &["fighter", "cleric", "wizard", "rogue", "paladin"]).unwrap();
    let n = 1000;
    for enc in [
        vec!["orc", "orc"],
        vec!["ogre", "gnoll", "gnoll"],
        vec!["owlbear", "wolf"],
        vec!["bugbear", "goblin", "goblin", "goblin"],
    ] {
        let base = Encounter::new(enc.iter().map(|s| s.to_string()).collect());
        let strongest = enc
            .iter()
            .max_by_key(|id| pack().monster(id).unwrap().xp_value)
            .unwrap()
            .to_string();
        let mut bigger = base.clone();
        bigger.enemies.push(strongest);
        let a = run_batch(pack(), &party, &base, n, 5).unwrap();
        let b = run_batch(pack(), &party, &bigger, n, 5).unwrap();
        let p = a.win_probability.max(b.win_probability);
        let noise = 3.0 * (2.0 * p * (1.0 - p) / n as f64).sqrt() + 1e-9;
        assert!(
            b.win_probability <= a.win_probability + noise,
            "{enc:?}: {} -> {}",
            a.win_probability,
            b.win_probability
        );
    }
}

fn allowed(transition: &str) -> bool {
    matches!(
        transition,
        "ACTIVE->UNCONSCIOUS"
            | "ACTIVE->REMOVED"
            | "UNCONSCIOUS->STABLE"
            | "UNCONSCIOUS->DEAD"
            | "UNCONSCIOUS->ACTIVE"
            | "STABLE->ACTIVE"
            | "STABLE->DEAD"
    )
}

fn party_strategy() -> impl Strategy<Value = Party> {
    let n_templates = pack().pc_templates.len();
    prop::collection::vec((0..n_templates, 0.05f64..=1.0), 3..=8).prop_map(|specs| Party {
        members: specs
            .into_iter()
            .map(|(i, frac)| {
                let t = &pack().pc_templates[i];
                ntrl::sim::PartyMember {
                    template: t.id.clone(),
                    hp_current: ((t.hp_max as f64 * frac).round() as i32).clamp(1, t.hp_max),
                    hp_max: t.hp_max,
                }
            })
            .collect(),
    })
}

fn encounter_strategy() -> impl Strategy<Value = Encounter> {
    prop::collection::vec(0..pack().monsters.len(), 1..=8)
        .prop_map(|idx| Encounter::from_indices(pack(), &idx))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn combat_invariants(party in party_strategy(), enc in encounter_strategy(), seed in any::<u64>()) {
        let utility = UtilityTable::default();
        let mut state = CombatState::from_rosters(pack(), &utility, &party, &enc).unwrap();
        state.set_recording(true);
        let r = state.run(&mut RngStream::new(seed), ROUND_CAP);

        prop_assert!(r.rounds >= 1 && r.rounds <= ROUND_CAP);
        prop_assert_eq!(r.winner == Winner::Draw, r.rounds == ROUND_CAP && state.winner().is_none());
        prop_assert!(!r.tpk || r.winner == Winner::Enemy);
        prop_assert!((0.0..=1.0).contains(&r.remaining_party_hp_fraction));

        let pcs: Vec<_> = state
            .combatants
            .iter()
            .filter(|c| c.side == Side::Party && c.summoned_by.is_none())
            .collect();
        let conserved: i64 = pcs
            .iter()
            .map(|c| (c.hp_start - c.hp_current + c.healing_received) as i64)
            .sum();
        prop_assert_eq!(r.damage_to_party, conserved);
        let hp: i32 = pcs.iter().map(|c| c.hp_current).sum();
        let hp_max: i32 = pcs.iter().map(|c| c.hp_max()).sum();
        prop_assert!((r.remaining_party_hp_fraction - hp as f64 / hp_max as f64).abs() < 1e-12);
        prop_assert_eq!(r.party_deaths as usize, pcs.iter().filter(|c| c.life_state == LifeState::Dead).count());

        for c in &state.combatants {
            prop_assert_eq!(c.is_active(), c.hp_current > 0, "{}", c.label);
            prop_assert!(c.death_save_successes <= 3 && c.death_save_failures <= 3);
            if c.side == Side::Enemy || c.summoned_by.is_some() {
                prop_assert!(matches!(c.life_state, LifeState::Active | LifeState::Removed));
            }
        }
        for e in &r.log {
            for ch in &e.state_changes {
                if ch.change.contains("->") {
                    prop_assert!(allowed(&ch.change), "{}: {}", ch.combatant, ch.change);
                }
            }
        }
    }

    #[test]
    fn batch_is_deterministic(party in party_strategy(), enc in encounter_strategy(), seed in any::<u64>()) {
        let a = run_batch(pack(), &party, &enc, 8, seed).unwrap();
        let b = run_batch(pack(), &party, &enc, 8, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.tpk_count <= a.n_sims);
        prop_assert!((0.0..=100.0).contains(&a.remaining_party_hp_pct));
        prop_assert!((0.0..=1.0).contains(&a.win_probability));
    }

    #[test]
    fn roll_within_bounds(count in 1u32..20, sides in 1u32..30, modifier in -10i32..10, seed in any::<u64>()) {
        let e = DiceExpr::new(count, sides, modifier);
        let mut rng = RngStream::new(seed);
        for _ in 0..20 {
            let v = rng.roll(&e);
            prop_assert!(v >= e.min() && v <= e.max());
        }
    }
}
