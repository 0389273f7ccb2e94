use std::sync::OnceLock;

use ntrl::content::{
    adjusted_encounter_xp, party_xp_budget, raw_encounter_xp, ContentPack, DifficultyTier,
};
use ntrl::sim::{Encounter, Party};
use proptest::prelude::*;

fn pack() -> &'static ContentPack {
    static PACK: OnceLock<ContentPack> = OnceLock::new();
    PACK.get_or_init(|| ContentPack::bundled().unwrap())
}

fn tier() -> impl Strategy<Value = DifficultyTier> {
    prop_oneof![
        Just(DifficultyTier::Easy),
        Just(DifficultyTier::Medium),
        Just(DifficultyTier::Hard),
        Just(DifficultyTier::Deadly),
    ]
}

proptest! {
    #[test]
    fn adjusted_dominates_raw(idx in prop::collection::vec(0..26usize, 1..=8)) {
        let e = Encounter::from_indices(pack(), &idx);
        prop_assert!(adjusted_encounter_xp(&e, pack()).unwrap() >= raw_encounter_xp(&e, pack()).unwrap());
    }

    #[test]
    fn adding_a_monster_never_lowers_adjusted_xp(idx in prop::collection::vec(0..26usize, 1..=7), extra in 0..26usize) {
        let e = Encounter::from_indices(pack(), &idx);
        let mut bigger = idx.clone();
        bigger.push(extra);
        let f = Encounter::from_indices(pack(), &bigger);
        prop_assert!(adjusted_encounter_xp(&f, pack()).unwrap() >= adjusted_encounter_xp(&e, pack()).unwrap());
    }

    #[test]
    fn budget_is_linear_in_party_size(classes in prop::collection::vec(0..12usize, 3..=8), tier in tier()) {
        let ids: Vec<&str> = classes.iter().map(|&i| pack().pc_templates[i].id.as_str()).collect();
        let party = Party::from_templates(pack(), &ids).unwrap();
        let b = party_xp_budget(&party, tier, pack()).unwrap();
        prop_assert_eq!(b.total, b.per_character * ids.len() as u32);
        prop_assert_eq!(b.per_character, pack().xp_tables.per_character(5, tier).unwrap());
    }
}

#[test]
fn canonical_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    pack().write_canonical(dir.path()).unwrap();
    let reloaded = ContentPack::load(dir.path()).unwrap();
    assert_eq!(reloaded.canonical_files(), pack().canonical_files());
    assert_eq!(reloaded.digest(), pack().digest());
}

#[test]
fn bundled_pack_shape() {
    let p = pack();
    assert_eq!(p.monsters.len(), 26);
    assert_eq!(p.pc_templates.len(), 12);
    assert!(p.pc_templates.iter().all(|t| t.level() == Some(5) && t.xp_value == 0));
    assert!(p.monsters.iter().all(|m| m.xp_value > 0 && !m.attacks.is_empty()));
}
