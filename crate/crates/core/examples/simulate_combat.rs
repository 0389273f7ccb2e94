//! Run one logged combat, then a 100-simulation batch, for a fixed party
//! against a chosen encounter.
//!
//!     cargo run --example simulate_combat [-- SEED MONSTER...]

use ntrl::content::ContentPack;
use ntrl::sim::{run_batch, run_combat, Encounter, Party};

fn main() -> ntrl::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let mut enemies: Vec<String> = args.collect();
    if enemies.is_empty() {
        enemies = vec!["orc".into(), "orc".into(), "ogre".into()];
    }

    let pack = ContentPack::bundled()?;
    let party = Party::from_templates(&pack, &["fighter", "cleric", "wizard", "rogue"])?;
    let encounter = Encounter::new(enemies);

    let result = run_combat(&pack, &party, &encounter, seed)?;
    print!("{}", result.log_jsonl());
    println!(
        "winner {:?} after {} rounds, {} party deaths, {:.0}% party HP left",
        result.winner,
        result.rounds,
        result.party_deaths,
        result.remaining_party_hp_fraction * 100.0
    );

    let metrics = run_batch(&pack, &party, &encounter, 100, seed)?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}
