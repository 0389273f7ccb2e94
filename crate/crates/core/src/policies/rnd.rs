use super::{EncounterPolicy, EncounterProposal, GenerationContext, Provenance};
use crate::error::Result;
use crate::sim::{Encounter, MAX_ENEMIES};

/// Enemy count uniform in 1..=8, each enemy uniform over the pool. Ignores
/// the budget.
#[derive(Debug, Default, Clone, Copy)]
pub struct RndPolicy;

impl EncounterPolicy for RndPolicy {
    fn provenance(&self) -> Provenance {
        Provenance::Rnd
    }

    fn generate(&self, ctx: &mut GenerationContext<'_>) -> Result<EncounterProposal> {
        let budget = ctx.budget()?;
        let n = 1 + ctx.rng.below(MAX_ENEMIES as u32) as usize;
        let pool = ctx.pack.monsters.len() as u32;
        let idx: Vec<usize> = (0..n).map(|_| ctx.rng.below(pool) as usize).collect();
        let enc = Encounter::from_indices(ctx.pack, &idx);
        EncounterProposal::new(enc, ctx.pack, budget, Provenance::Rnd)
    }
}
