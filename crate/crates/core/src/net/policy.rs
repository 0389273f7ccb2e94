use super::arch::ArchConfig;
use super::checkpoint::Checkpoint;
use super::network::PolicyNetwork;
use crate::content::ContentPack;
use crate::error::{Error, Result};
use crate::policies::{EncounterPolicy, EncounterProposal, GenerationContext, Provenance};

/// The learned policy at inference time.
#[derive(Debug, Clone)]
pub struct NtrlPolicy {
    pub net: PolicyNetwork<f32>,
}

impl NtrlPolicy {
    pub fn new(net: PolicyNetwork<f32>, pack: &ContentPack) -> Result<Self> {
        if net.arch != ArchConfig::for_pack(pack) {
            return Err(Error::VersionMismatch(
                "network architecture does not match the content pack".into(),
            ));
        }
        Ok(Self { net })
    }

    pub fn from_checkpoint(ck: &Checkpoint, pack: &ContentPack) -> Result<Self> {
        Self::new(ck.network()?, pack)
    }
}

impl EncounterPolicy for NtrlPolicy {
    fn provenance(&self) -> Provenance {
        Provenance::Ntrl
    }

    fn generate(&self, ctx: &mut GenerationContext<'_>) -> Result<EncounterProposal> {
        let budget = ctx.budget()?;
        let (enc, _, dists) = self.net.sample_encounter(ctx.party, ctx.pack, ctx.rng)?;
        let mut p = EncounterProposal::new(enc, ctx.pack, budget, Provenance::Ntrl)?;
        p.probabilities = Some(dists);
        Ok(p)
    }
}
