//! Encounter generators behind one interface: the DMG-budget DM heuristic,
//! the uniform random baseline, and (from [`crate::net`]) the learned policy.

mod dm;
mod evaluate;
mod rnd;

use serde::{Deserialize, Serialize};

pub use dm::{dm_search, DmPolicy, PoolEntry};
pub use evaluate::{evaluate_policy, evaluation_party, EvalOptions, PartyEvaluation, PolicyEvaluation, Summary};
pub use rnd::RndPolicy;

use crate::content::{adjusted_encounter_xp, party_xp_budget, raw_encounter_xp, ContentPack, DifficultyTier, XpBudget};
use crate::error::Result;
use crate::sim::{Encounter, Party, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Dm,
    Rnd,
    Ntrl,
    Human,
}

pub struct GenerationContext<'a> {
    pub party: &'a Party,
    pub pack: &'a ContentPack,
    pub tier: DifficultyTier,
    pub rng: &'a mut RngStream,
}

impl<'a> GenerationContext<'a> {
    pub fn new(party: &'a Party, pack: &'a ContentPack, rng: &'a mut RngStream) -> Self {
        Self {
            party,
            pack,
            tier: DifficultyTier::Deadly,
            rng,
        }
    }

    pub fn budget(&self) -> Result<XpBudget> {
        party_xp_budget(self.party, self.tier, self.pack)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterProposal {
    pub encounter: Encounter,
    pub raw_xp: u64,
    pub adjusted_xp: u64,
    pub budget: XpBudget,
    pub provenance: Provenance,
    /// Per-draw action distributions (26 classes + STOP), learned policy only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<Vec<f64>>>,
}

impl EncounterProposal {
    pub fn new(
        encounter: Encounter,
        pack: &ContentPack,
        budget: XpBudget,
        provenance: Provenance,
    ) -> Result<Self> {
        encounter.validate(pack)?;
        Ok(Self {
            raw_xp: raw_encounter_xp(&encounter, pack)?,
            adjusted_xp: adjusted_encounter_xp(&encounter, pack)?,
            encounter,
            budget,
            provenance,
            probabilities: None,
        })
    }

    /// `budget.total - adjusted_xp`.
    pub fn xp_difference(&self) -> i64 {
        self.budget.total as i64 - self.adjusted_xp as i64
    }
}

pub trait EncounterPolicy: Send + Sync {
    fn provenance(&self) -> Provenance;
    fn generate(&self, ctx: &mut GenerationContext<'_>) -> Result<EncounterProposal>;
}
