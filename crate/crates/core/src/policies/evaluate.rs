use serde::{Deserialize, Serialize};

use super::{EncounterPolicy, EncounterProposal, GenerationContext};
use crate::content::{ContentPack, DifficultyTier};
use crate::error::{Error, Result};
use crate::sim::{run_batch_with, stream_seed, BatchMetrics, BatchOptions, Party, RngStream};
use crate::training::{apply_hp_variation, compute_reward, generate_party, HpVariationConfig, RewardConfig};

/// Party `index` of an evaluation seeded with `base_seed`, after HP variation
/// when configured. Identical for every policy.
pub fn evaluation_party(
    pack: &ContentPack,
    base_seed: u64,
    index: u64,
    hp_variation: Option<&HpVariationConfig>,
) -> Party {
    let party = generate_party(pack, &mut RngStream::new(stream_seed(base_seed, "party", index)));
    match hp_variation {
        Some(cfg) => apply_hp_variation(&party, cfg, &mut RngStream::new(stream_seed(base_seed, "hp", index))),
        None => party,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub n_parties: u32,
    pub n_sims: u32,
    pub base_seed: u64,
    pub tier: DifficultyTier,
    /// `None` keeps every party at full HP.
    pub hp_variation: Option<HpVariationConfig>,
    pub reward: RewardConfig,
    pub parallel: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_parties: 100,
            n_sims: 100,
            base_seed: 0,
            tier: DifficultyTier::Deadly,
            hp_variation: Some(HpVariationConfig::default()),
            reward: RewardConfig::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyEvaluation {
    pub index: u64,
    pub party_digest: String,
    pub proposal: EncounterProposal,
    pub metrics: BatchMetrics,
    pub reward: f64,
}

/// Means over parties. `tpk_rate` is TPKs per simulation; `player_deaths`
/// is the mean per-batch death total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_parties: u32,
    pub n_sims: u32,
    pub win_probability: f64,
    pub fight_longevity: f64,
    pub tpk_count: f64,
    pub tpk_rate: f64,
    pub team_xp_difference: f64,
    pub abs_team_xp_difference: f64,
    pub remaining_party_hp_pct: f64,
    pub total_damage_to_party: f64,
    pub player_deaths: f64,
    pub budget: f64,
    pub enemies: f64,
    pub reward: f64,
}

impl Summary {
    pub fn from_parties(rows: &[PartyEvaluation]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: &dyn Fn(&PartyEvaluation) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let sims: u32 = rows.iter().map(|r| r.metrics.n_sims).sum();
        let tpks: u32 = rows.iter().map(|r| r.metrics.tpk_count).sum();
        Self {
            n_parties: rows.len() as u32,
            n_sims: rows.first().map_or(0, |r| r.metrics.n_sims),
            win_probability: mean(&|r| r.metrics.win_probability),
            fight_longevity: mean(&|r| r.metrics.fight_longevity),
            tpk_count: mean(&|r| r.metrics.tpk_count as f64),
            tpk_rate: tpks as f64 / sims.max(1) as f64,
            team_xp_difference: mean(&|r| r.metrics.team_xp_difference as f64),
            abs_team_xp_difference: mean(&|r| r.metrics.team_xp_difference.abs() as f64),
            remaining_party_hp_pct: mean(&|r| r.metrics.remaining_party_hp_pct),
            total_damage_to_party: mean(&|r| r.metrics.total_damage_to_party),
            player_deaths: mean(&|r| r.metrics.total_player_deaths as f64),
            budget: mean(&|r| r.proposal.budget.total as f64),
            enemies: mean(&|r| r.proposal.encounter.len() as f64),
            reward: mean(&|r| r.reward),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub parties: Vec<PartyEvaluation>,
    pub summary: Summary,
}

/// Runs `policy` on a seeded party sequence. Two policies evaluated with the
/// same options face the same parties and the same simulation seeds.
pub fn evaluate_policy(
    policy: &dyn EncounterPolicy,
    pack: &ContentPack,
    opts: &EvalOptions,
) -> Result<PolicyEvaluation> {
    if opts.n_parties == 0 || opts.n_sims == 0 {
        return Err(Error::InvalidConfig("n_parties and n_sims must be at least 1".into()));
    }
    if let Some(cfg) = &opts.hp_variation {
        cfg.validate()?;
    }
    let batch = BatchOptions {
        tier: opts.tier,
        parallel: opts.parallel,
        ..BatchOptions::default()
    };
    let mut parties = Vec::with_capacity(opts.n_parties as usize);
    for i in 0..opts.n_parties as u64 {
        let party = evaluation_party(pack, opts.base_seed, i, opts.hp_variation.as_ref());
        let mut rng = RngStream::new(stream_seed(opts.base_seed, "policy", i));
        let mut ctx = GenerationContext {
            party: &party,
            pack,
            tier: opts.tier,
            rng: &mut rng,
        };
        let proposal = policy.generate(&mut ctx)?;
        let sims_seed = stream_seed(opts.base_seed, "sims", i);
        let metrics = run_batch_with(pack, &party, &proposal.encounter, opts.n_sims, sims_seed, &batch)?;
        parties.push(PartyEvaluation {
            index: i,
            party_digest: party.digest(),
            reward: compute_reward(&metrics, &opts.reward),
            proposal,
            metrics,
        });
    }
    let summary = Summary::from_parties(&parties);
    Ok(PolicyEvaluation { parties, summary })
}
