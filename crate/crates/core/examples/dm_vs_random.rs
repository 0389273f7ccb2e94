//! Compare the DM heuristic with the random baseline on shared seeded
//! parties (training-condition HP).
//!
//!     cargo run --release --example dm_vs_random [-- PARTIES SIMS SEED]

use ntrl::content::ContentPack;
use ntrl::policies::{evaluate_policy, DmPolicy, EvalOptions, RndPolicy};

fn main() -> ntrl::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let opts = EvalOptions {
        n_parties: args.first().copied().unwrap_or(100) as u32,
        n_sims: args.get(1).copied().unwrap_or(25) as u32,
        base_seed: args.get(2).copied().unwrap_or(0),
        ..EvalOptions::default()
    };
    let pack = ContentPack::bundled()?;
    let dm = evaluate_policy(&DmPolicy::new(), &pack, &opts)?.summary;
    let rnd = evaluate_policy(&RndPolicy, &pack, &opts)?.summary;
    println!("{:<22} {:>10} {:>10}", "", "DM", "RND");
    let rows = [
        ("win probability", dm.win_probability, rnd.win_probability),
        ("TPK rate", dm.tpk_rate, rnd.tpk_rate),
        ("fight longevity", dm.fight_longevity, rnd.fight_longevity),
        ("remaining HP %", dm.remaining_party_hp_pct, rnd.remaining_party_hp_pct),
        ("|XP difference|", dm.abs_team_xp_difference, rnd.abs_team_xp_difference),
        ("enemies", dm.enemies, rnd.enemies),
        ("reward", dm.reward, rnd.reward),
    ];
    for (name, a, b) in rows {
        println!("{name:<22} {a:>10.3} {b:>10.3}");
    }
    Ok(())
}
