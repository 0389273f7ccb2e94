use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{entrants, run_skirmish, CombatOptions, CombatResult, Winner};
use super::rng::mix_seed;
use super::roster::{Encounter, Party};
use crate::content::{adjusted_encounter_xp, party_xp_budget, ContentPack, DifficultyTier};
use crate::error::{Error, Result};

/// Aggregated metrics over a batch of simulations of one (party, encounter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchMetrics {
    pub win_probability: f64,
    /// Mean rounds per combat.
    pub fight_longevity: f64,
    pub tpk_count: u32,
    /// Party XP budget minus the encounter's adjusted XP.
    pub team_xp_difference: i64,
    /// Mean end-of-fight party HP as a percentage of maximum.
    pub remaining_party_hp_pct: f64,
    /// Summed over simulations.
    pub total_player_deaths: u32,
    pub n_sims: u32,
    /// Mean HP lost by the party per combat.
    pub total_damage_to_party: f64,
}

impl BatchMetrics {
    /// Aggregates results in slice order.
    pub fn aggregate(results: &[CombatResult], team_xp_difference: i64) -> Self {
        let n = results.len().max(1) as f64;
        let wins = results.iter().filter(|r| r.winner == Winner::Party).count();
        Self {
            win_probability: wins as f64 / n,
            fight_longevity: results.iter().map(|r| r.rounds as f64).sum::<f64>() / n,
            tpk_count: results.iter().filter(|r| r.tpk).count() as u32,
            team_xp_difference,
            remaining_party_hp_pct: (results
                .iter()
                .map(|r| r.remaining_party_hp_fraction)
                .sum::<f64>()
                / n
                * 100.0)
                .clamp(0.0, 100.0),
            total_player_deaths: results.iter().map(|r| r.party_deaths).sum(),
            n_sims: results.len() as u32,
            total_damage_to_party: results.iter().map(|r| r.damage_to_party as f64).sum::<f64>() / n,
        }
    }

    pub fn tpk_rate(&self) -> f64 {
        self.tpk_count as f64 / self.n_sims.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOptions {
    /// Tier of the budget behind `team_xp_difference`.
    pub tier: DifficultyTier,
    /// Spread simulations over the rayon pool. Results are identical either way.
    pub parallel: bool,
    pub combat: CombatOptions,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            tier: DifficultyTier::Deadly,
            parallel: false,
            combat: CombatOptions {
                record_log: false,
                ..CombatOptions::default()
            },
        }
    }
}

/// Seed of simulation `index` within a batch.
pub fn sim_seed(base_seed: u64, index: u64) -> u64 {
    mix_seed(base_seed, index)
}

pub fn run_batch(
    pack: &ContentPack,
    party: &Party,
    encounter: &Encounter,
    n_sims: u32,
    base_seed: u64,
) -> Result<BatchMetrics> {
    run_batch_with(pack, party, encounter, n_sims, base_seed, &BatchOptions::default())
}

pub fn run_batch_with(
    pack: &ContentPack,
    party: &Party,
    encounter: &Encounter,
    n_sims: u32,
    base_seed: u64,
    opts: &BatchOptions,
) -> Result<BatchMetrics> {
    let results = batch_results(pack, party, encounter, n_sims, base_seed, opts)?;
    let budget = party_xp_budget(party, opts.tier, pack)?;
    let adjusted = adjusted_encounter_xp(encounter, pack)?;
    Ok(BatchMetrics::aggregate(&results, budget.total as i64 - adjusted as i64))
}

/// Per-simulation results, in simulation-index order.
pub fn batch_results(
    pack: &ContentPack,
    party: &Party,
    encounter: &Encounter,
    n_sims: u32,
    base_seed: u64,
    opts: &BatchOptions,
) -> Result<Vec<CombatResult>> {
    if n_sims == 0 {
        return Err(Error::InvalidConfig("n_sims must be at least 1".into()));
    }
    let (p, e) = entrants(pack, party, encounter)?;
    let one = |i: u32| run_skirmish(pack, &p, &e, sim_seed(base_seed, i as u64), &opts.combat);
    Ok(if opts.parallel {
        (0..n_sims).into_par_iter().map(one).collect()
    } else {
        (0..n_sims).map(one).collect()
    })
}
