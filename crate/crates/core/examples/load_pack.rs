//! Load and validate a content pack, print the monster pool with XP values and
//! a DEADLY budget for a sample party.
//!
//!     cargo run --example load_pack [-- PACK_DIR] [--write-canonical OUT_DIR]

use ntrl::content::{adjusted_encounter_xp, party_xp_budget, ContentPack, DifficultyTier};
use ntrl::sim::{Encounter, Party};

fn main() -> ntrl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut pack_dir = None;
    let mut out_dir = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--write-canonical" => out_dir = it.next().cloned(),
            other => pack_dir = Some(other.to_string()),
        }
    }
    let pack = match &pack_dir {
        Some(dir) => ContentPack::load(dir)?,
        None => ContentPack::bundled()?,
    };
    println!("pack digest {}", pack.digest());
    println!("{} monsters, {} PC templates, {} spells", pack.monsters.len(), pack.pc_templates.len(), pack.spells.len());
    for m in &pack.monsters {
        println!("  {:<16} hp {:>3}  ac {:>2}  xp {:>5}", m.id, m.hp_max, m.ac, m.xp_value);
    }

    let party = Party::from_templates(&pack, &["fighter", "wizard", "cleric", "rogue"])?;
    let budget = party_xp_budget(&party, DifficultyTier::Deadly, &pack)?;
    println!("DEADLY budget for 4 PCs: {} ({} each)", budget.total, budget.per_character);
    let e = Encounter::new(vec!["orc".into(); 4]);
    println!("4 orcs: adjusted XP {}", adjusted_encounter_xp(&e, &pack)?);

    if let Some(out) = out_dir {
        pack.write_canonical(&out)?;
        println!("canonical pack written to {out}");
    }
    Ok(())
}
