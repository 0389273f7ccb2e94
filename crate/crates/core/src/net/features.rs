use serde::{Deserialize, Serialize};

use super::arch::{ArchConfig, NUMERIC_FEATURES, SLOT_LEVELS};
use crate::content::{Ability, ContentPack, KNOWN_SPECIAL_ABILITIES};
use crate::error::{Error, Result};
use crate::sim::Party;

/// Encoded party, padded to `max_members` rows. Padding rows are all zero
/// with mask 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyFeatures {
    pub numeric: Vec<Vec<f64>>,
    /// One-hot character class.
    pub class: Vec<Vec<f64>>,
    pub saves: Vec<Vec<f64>>,
    pub resistances: Vec<Vec<f64>>,
    pub spells: Vec<Vec<f64>>,
    pub specials: Vec<Vec<f64>>,
    pub mask: Vec<u8>,
}

impl PartyFeatures {
    pub fn members(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }

    pub fn check_shape(&self, arch: &ArchConfig) -> Result<()> {
        let rows = arch.max_members;
        let groups: [(&str, &Vec<Vec<f64>>, usize); 6] = [
            ("numeric", &self.numeric, arch.numeric_dim),
            ("class", &self.class, arch.n_pc_classes),
            ("saves", &self.saves, arch.n_saves),
            ("resistances", &self.resistances, arch.n_resistances),
            ("spells", &self.spells, arch.n_spells),
            ("specials", &self.specials, arch.n_specials),
        ];
        for (name, g, width) in groups {
            if g.len() != rows || g.iter().any(|r| r.len() != width) {
                return Err(Error::ShapeMismatch(format!("{name}: expected {rows} rows of width {width}")));
            }
        }
        if self.mask.len() != rows {
            return Err(Error::ShapeMismatch(format!("mask: expected {rows} entries")));
        }
        if self.members() == 0 {
            return Err(Error::ShapeMismatch("party has no members".into()));
        }
        Ok(())
    }
}

pub fn encode_party(party: &Party, pack: &ContentPack, arch: &ArchConfig) -> Result<PartyFeatures> {
    if party.len() > arch.max_members {
        return Err(Error::ShapeMismatch(format!(
            "party of {} exceeds {} rows",
            party.len(),
            arch.max_members
        )));
    }
    let zeros = |w: usize| vec![vec![0.0; w]; arch.max_members];
    let mut f = PartyFeatures {
        numeric: zeros(arch.numeric_dim),
        class: zeros(arch.n_pc_classes),
        saves: zeros(arch.n_saves),
        resistances: zeros(arch.n_resistances),
        spells: zeros(arch.n_spells),
        specials: zeros(arch.n_specials),
        mask: vec![0; arch.max_members],
    };
    let s = &arch.scales;
    for (row, member) in party.members.iter().enumerate() {
        let class = pack
            .pc_class(&member.template)
            .ok_or_else(|| Error::UnknownClass(member.template.clone()))?;
        if class >= arch.n_pc_classes {
            return Err(Error::ShapeMismatch(format!("class index {class} outside the embedding table")));
        }
        let t = &pack.pc_templates[class];
        let mut num = Vec::with_capacity(NUMERIC_FEATURES);
        num.push(member.hp_current as f64 / s.hp);
        num.push(member.hp_max as f64 / s.hp);
        num.push(t.ac as f64 / s.ac);
        num.extend(t.abilities.as_array().iter().map(|&a| a as f64 / s.ability));
        num.push(t.proficiency_bonus as f64 / s.proficiency);
        num.extend((0..SLOT_LEVELS).map(|l| t.spell_slots.get(l).copied().unwrap_or(0) as f64 / s.slots));
        num.push(t.level().unwrap_or(0) as f64 / s.level);
        debug_assert_eq!(num.len(), NUMERIC_FEATURES);
        f.numeric[row] = num;
        f.class[row][class] = 1.0;
        for a in &t.save_proficiencies {
            f.saves[row][Ability::index(*a)] = 1.0;
        }
        for d in &t.resistances {
            f.resistances[row][d.index()] = 1.0;
        }
        for sp in &t.spells {
            if let Some(i) = pack.spell_index(sp).filter(|&i| i < arch.n_spells) {
                f.spells[row][i] = 1.0;
            }
        }
        for a in &t.special_abilities {
            if let Some(i) = KNOWN_SPECIAL_ABILITIES.iter().position(|k| k == a) {
                f.specials[row][i] = 1.0;
            }
        }
        f.mask[row] = 1;
    }
    Ok(f)
}
