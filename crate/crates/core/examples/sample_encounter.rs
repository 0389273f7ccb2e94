//! Sample encounters from an NTRL policy for one party and show the
//! per-step action distribution. Uses a checkpoint when given, otherwise an
//! untrained (uniform) network.
//!
//!     cargo run --example sample_encounter [-- CHECKPOINT]

use ntrl::content::ContentPack;
use ntrl::net::{ArchConfig, Checkpoint, NtrlPolicy, PolicyNetwork};
use ntrl::policies::{EncounterPolicy, GenerationContext};
use ntrl::sim::{Party, RngStream};

fn main() -> ntrl::Result<()> {
    let pack = ContentPack::bundled()?;
    let arch = ArchConfig::for_pack(&pack);
    let policy = match std::env::args().nth(1) {
        Some(path) => NtrlPolicy::from_checkpoint(&Checkpoint::load_for(path, &arch)?, &pack)?,
        None => NtrlPolicy::new(PolicyNetwork::new(arch, 0), &pack)?,
    };
    let mut party = Party::from_templates(&pack, &["fighter", "cleric", "wizard", "rogue", "ranger"])?;
    party.members[0].hp_current /= 3;

    for seed in 0..5 {
        let mut rng = RngStream::new(seed);
        let p = policy.generate(&mut GenerationContext::new(&party, &pack, &mut rng))?;
        println!(
            "seed {seed}: {:?} adjusted XP {} of budget {}",
            p.encounter.enemies(),
            p.adjusted_xp,
            p.budget.total
        );
        if let Some(dists) = &p.probabilities {
            for (step, d) in dists.iter().enumerate() {
                let (best, pmax) = d
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap();
                let label = pack.monsters.get(best).map_or("STOP", |m| m.id.as_str());
                println!("  step {step}: most likely {label} ({pmax:.3}), STOP {:.3}", d[d.len() - 1]);
            }
        }
    }
    Ok(())
}
