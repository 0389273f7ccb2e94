use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::content::ContentPack;
use crate::error::{Error, Result};

pub const MIN_PARTY: usize = 3;
pub const MAX_PARTY: usize = 8;
pub const MAX_ENEMIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartyMember {
    /// PC template id, which doubles as the character class.
    pub template: String,
    pub hp_current: i32,
    pub hp_max: i32,
}

/// 3 to 8 level-5 PCs. Deserialized parties are unchecked until
/// [`Party::validate`] runs against a pack.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Party {
    pub members: Vec<PartyMember>,
}

impl Party {
    pub fn new(members: Vec<PartyMember>, pack: &ContentPack) -> Result<Self> {
        let party = Party { members };
        party.validate(pack)?;
        Ok(party)
    }

    /// Party at full HP from template ids.
    pub fn from_templates<S: AsRef<str>>(pack: &ContentPack, ids: &[S]) -> Result<Self> {
        let members = ids
            .iter()
            .map(|id| {
                let t = pack.pc_template(id.as_ref())?;
                Ok(PartyMember {
                    template: t.id.clone(),
                    hp_current: t.hp_max,
                    hp_max: t.hp_max,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Party::new(members, pack)
    }

    pub fn validate(&self, pack: &ContentPack) -> Result<()> {
        let n = self.members.len();
        if !(MIN_PARTY..=MAX_PARTY).contains(&n) {
            return Err(Error::InvalidParty(format!(
                "party size {n} outside [{MIN_PARTY}, {MAX_PARTY}]"
            )));
        }
        for (i, m) in self.members.iter().enumerate() {
            let t = pack.pc_template(&m.template)?;
            if m.hp_max != t.hp_max {
                return Err(Error::InvalidParty(format!(
                    "members[{i}].hp_max {} differs from template {}",
                    m.hp_max, t.hp_max
                )));
            }
            if m.hp_current < 1 || m.hp_current > m.hp_max {
                return Err(Error::InvalidParty(format!(
                    "members[{i}].hp_current {} outside [1, {}]",
                    m.hp_current, m.hp_max
                )));
            }
        }
        self.level(pack).map(|_| ())
    }

    /// Shared level of all members.
    pub fn level(&self, pack: &ContentPack) -> Result<u8> {
        let mut level = None;
        for m in &self.members {
            let l = pack
                .pc_template(&m.template)?
                .level()
                .ok_or_else(|| Error::UnknownClass(m.template.clone()))?;
            match level {
                None => level = Some(l),
                Some(prev) if prev != l => {
                    return Err(Error::InvalidParty("members have mixed levels".into()))
                }
                _ => {}
            }
        }
        level.ok_or_else(|| Error::InvalidParty("empty party".into()))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn at_full_hp(&self) -> Party {
        let mut p = self.clone();
        for m in &mut p.members {
            m.hp_current = m.hp_max;
        }
        p
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("party serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// 1 to 8 monster ids from the pool, repetition allowed, order preserved.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Encounter {
    pub enemies: Vec<String>,
}

impl Encounter {
    pub fn new(enemies: Vec<String>) -> Self {
        Self { enemies }
    }

    pub fn from_indices(pack: &ContentPack, indices: &[usize]) -> Self {
        Self::new(indices.iter().map(|&i| pack.monsters[i].id.clone()).collect())
    }

    pub fn enemies(&self) -> &[String] {
        &self.enemies
    }

    pub fn len(&self) -> usize {
        self.enemies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.enemies.is_empty()
    }

    pub fn validate(&self, pack: &ContentPack) -> Result<()> {
        if self.enemies.is_empty() {
            return Err(Error::EmptyEncounter);
        }
        if self.enemies.len() > MAX_ENEMIES {
            return Err(Error::InvalidEncounter(format!(
                "{} enemies exceeds the maximum of {MAX_ENEMIES}",
                self.enemies.len()
            )));
        }
        for id in &self.enemies {
            pack.monster(id)?;
        }
        Ok(())
    }

    /// Sorted ids; equal keys mean equal multisets.
    pub fn multiset_key(&self) -> Vec<String> {
        let mut k = self.enemies.clone();
        k.sort();
        k
    }
}
