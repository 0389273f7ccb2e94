use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    CombatantKind, LevelOrCr, SpellEffect, SpellSpec, StatBlock, XpTables,
    KNOWN_SPECIAL_ABILITIES,
};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
/// Size of the enemy action space.
pub const POOL_SIZE: usize = 26;
pub const PC_LEVEL: u8 = 5;
const MIN_PC_TEMPLATES: usize = 8;

pub const MONSTERS_FILE: &str = "monsters.json";
pub const PC_TEMPLATES_FILE: &str = "pc_templates.json";
pub const SPELLS_FILE: &str = "spells.json";
pub const XP_TABLES_FILE: &str = "xp_tables.json";

const BUNDLED_MONSTERS: &str = include_str!("../../data/pack/monsters.json");
const BUNDLED_PCS: &str = include_str!("../../data/pack/pc_templates.json");
const BUNDLED_SPELLS: &str = include_str!("../../data/pack/spells.json");
const BUNDLED_XP: &str = include_str!("../../data/pack/xp_tables.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonsterTable {
    pub schema_version: u32,
    pub monsters: Vec<StatBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcTable {
    pub schema_version: u32,
    pub pc_templates: Vec<StatBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpellTable {
    pub schema_version: u32,
    pub spells: Vec<SpellSpec>,
}

/// The validated, immutable content a simulation or policy runs against.
#[derive(Debug, Clone)]
pub struct ContentPack {
    pub monsters: Vec<StatBlock>,
    pub pc_templates: Vec<StatBlock>,
    pub spells: Vec<SpellSpec>,
    pub xp_tables: XpTables,
    monster_index: HashMap<String, usize>,
    pc_index: HashMap<String, usize>,
    spell_index: HashMap<String, usize>,
}

fn parse<T: DeserializeOwned>(file: &str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
        file: file.to_string(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn violation(file: &str, field: String, message: impl Into<String>) -> Error {
    Error::SchemaViolation {
        file: file.to_string(),
        field,
        message: message.into(),
    }
}

fn check_version(file: &str, version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(violation(
            file,
            "schema_version".into(),
            format!("expected {SCHEMA_VERSION}, found {version}"),
        ));
    }
    Ok(())
}

fn check_stat_block(file: &str, path: &str, sb: &StatBlock) -> Result<()> {
    let field = |f: &str| format!("{path}.{f}");
    if sb.hp_max <= 0 {
        return Err(violation(file, field("hp_max"), "must be > 0"));
    }
    if sb.ac < 1 {
        return Err(violation(file, field("ac"), "must be >= 1"));
    }
    if sb.proficiency_bonus < 2 {
        return Err(violation(file, field("proficiency_bonus"), "must be >= 2"));
    }
    for (ability, score) in super::Ability::ALL.iter().zip(sb.abilities.as_array()) {
        if !(1..=30).contains(&score) {
            return Err(violation(
                file,
                field(&format!("abilities.{ability:?}").to_lowercase()),
                format!("score {score} outside [1, 30]"),
            ));
        }
    }
    for (i, a) in sb.attacks.iter().enumerate() {
        if a.multiattack == 0 {
            return Err(violation(file, field(&format!("attacks[{i}].multiattack")), "must be >= 1"));
        }
    }
    if !sb.spells.is_empty() && sb.spellcasting_ability.is_none() {
        return Err(violation(
            file,
            field("spellcasting_ability"),
            "required when the stat block has spells",
        ));
    }
    Ok(())
}

impl ContentPack {
    /// Loads and validates the four pack files from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<String> {
            let path = dir.join(name);
            if !path.is_file() {
                return Err(Error::MissingFile { path });
            }
            fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        Self::from_json(
            &read(MONSTERS_FILE)?,
            &read(PC_TEMPLATES_FILE)?,
            &read(SPELLS_FILE)?,
            &read(XP_TABLES_FILE)?,
        )
    }

    /// The versioned default pack compiled into the library.
    pub fn bundled() -> Result<Self> {
        Self::from_json(BUNDLED_MONSTERS, BUNDLED_PCS, BUNDLED_SPELLS, BUNDLED_XP)
    }

    pub fn from_json(monsters: &str, pcs: &str, spells: &str, xp: &str) -> Result<Self> {
        let monsters: MonsterTable = parse(MONSTERS_FILE, monsters)?;
        let pcs: PcTable = parse(PC_TEMPLATES_FILE, pcs)?;
        let spells: SpellTable = parse(SPELLS_FILE, spells)?;
        let xp: XpTables = parse(XP_TABLES_FILE, xp)?;
        Self::from_tables(monsters, pcs, spells, xp)
    }

    pub fn from_tables(
        monsters: MonsterTable,
        pcs: PcTable,
        spells: SpellTable,
        xp_tables: XpTables,
    ) -> Result<Self> {
        check_version(MONSTERS_FILE, monsters.schema_version)?;
        check_version(PC_TEMPLATES_FILE, pcs.schema_version)?;
        check_version(SPELLS_FILE, spells.schema_version)?;
        check_version(XP_TABLES_FILE, xp_tables.schema_version)?;

        let index = |file: &str, key: &str, ids: Vec<&String>| -> Result<HashMap<String, usize>> {
            let mut map = HashMap::new();
            for (i, id) in ids.into_iter().enumerate() {
                if map.insert(id.clone(), i).is_some() {
                    return Err(violation(file, format!("{key}[{i}].id"), format!("duplicate id `{id}`")));
                }
            }
            Ok(map)
        };
        let monster_index = index(MONSTERS_FILE, "monsters", monsters.monsters.iter().map(|m| &m.id).collect())?;
        let pc_index = index(PC_TEMPLATES_FILE, "pc_templates", pcs.pc_templates.iter().map(|m| &m.id).collect())?;
        let spell_index = index(SPELLS_FILE, "spells", spells.spells.iter().map(|s| &s.id).collect())?;

        for (i, m) in monsters.monsters.iter().enumerate() {
            let path = format!("monsters[{i}]");
            check_stat_block(MONSTERS_FILE, &path, m)?;
            if m.kind != CombatantKind::Monster {
                return Err(violation(MONSTERS_FILE, format!("{path}.kind"), "must be `monster`"));
            }
            if m.xp_value == 0 {
                return Err(violation(MONSTERS_FILE, format!("{path}.xp_value"), "must be > 0"));
            }
            if m.attacks.is_empty() {
                return Err(violation(MONSTERS_FILE, format!("{path}.attacks"), "monsters need at least one attack"));
            }
        }
        for (i, p) in pcs.pc_templates.iter().enumerate() {
            let path = format!("pc_templates[{i}]");
            check_stat_block(PC_TEMPLATES_FILE, &path, p)?;
            if p.kind != CombatantKind::Pc {
                return Err(violation(PC_TEMPLATES_FILE, format!("{path}.kind"), "must be `pc`"));
            }
            if p.level_or_cr != LevelOrCr::Level(PC_LEVEL) {
                return Err(violation(PC_TEMPLATES_FILE, format!("{path}.level_or_cr"), "PC templates must be level 5"));
            }
            if p.xp_value != 0 {
                return Err(violation(PC_TEMPLATES_FILE, format!("{path}.xp_value"), "PCs carry no XP value"));
            }
        }
        if pcs.pc_templates.len() < MIN_PC_TEMPLATES {
            return Err(violation(
                PC_TEMPLATES_FILE,
                "pc_templates".into(),
                format!("need at least {MIN_PC_TEMPLATES} templates, found {}", pcs.pc_templates.len()),
            ));
        }
        let mut last = (0u8, 0.0f64);
        for (i, step) in xp_tables.multipliers.iter().enumerate() {
            let ok = if i == 0 {
                step.min_enemies == 1 && step.multiplier >= 1.0
            } else {
                step.min_enemies > last.0 && step.multiplier >= last.1
            };
            if !ok {
                return Err(violation(
                    XP_TABLES_FILE,
                    format!("multipliers[{i}]"),
                    "multiplier table must start at 1 enemy and be non-decreasing",
                ));
            }
            last = (step.min_enemies, step.multiplier);
        }
        if xp_tables.multipliers.is_empty() {
            return Err(violation(XP_TABLES_FILE, "multipliers".into(), "table is empty"));
        }

        // Cross-references.
        let known: HashSet<&str> = KNOWN_SPECIAL_ABILITIES.iter().copied().collect();
        for sb in monsters.monsters.iter().chain(&pcs.pc_templates) {
            for spell in &sb.spells {
                if !spell_index.contains_key(spell) {
                    return Err(Error::DanglingReference {
                        owner: sb.id.clone(),
                        reference: spell.clone(),
                    });
                }
            }
            for tag in &sb.special_abilities {
                if !known.contains(tag.as_str()) {
                    return Err(Error::DanglingReference {
                        owner: sb.id.clone(),
                        reference: tag.clone(),
                    });
                }
            }
        }
        for s in &spells.spells {
            if let SpellEffect::Summon { monster, .. } = &s.effect {
                if !monster_index.contains_key(monster) {
                    return Err(Error::DanglingReference {
                        owner: s.id.clone(),
                        reference: monster.clone(),
                    });
                }
            }
        }

        if monsters.monsters.len() != POOL_SIZE {
            return Err(Error::PoolSizeMismatch {
                found: monsters.monsters.len(),
                expected: POOL_SIZE,
            });
        }

        Ok(Self {
            monsters: monsters.monsters,
            pc_templates: pcs.pc_templates,
            spells: spells.spells,
            xp_tables,
            monster_index,
            pc_index,
            spell_index,
        })
    }

    pub fn monster(&self, id: &str) -> Result<&StatBlock> {
        self.monster_index
            .get(id)
            .map(|&i| &self.monsters[i])
            .ok_or_else(|| Error::InvalidEncounter(format!("`{id}` is not in the monster pool")))
    }

    pub fn monster_class(&self, id: &str) -> Option<usize> {
        self.monster_index.get(id).copied()
    }

    pub fn pc_template(&self, id: &str) -> Result<&StatBlock> {
        self.pc_index
            .get(id)
            .map(|&i| &self.pc_templates[i])
            .ok_or_else(|| Error::UnknownClass(id.to_string()))
    }

    pub fn pc_class(&self, id: &str) -> Option<usize> {
        self.pc_index.get(id).copied()
    }

    pub fn spell(&self, id: &str) -> Option<&SpellSpec> {
        self.spell_index.get(id).map(|&i| &self.spells[i])
    }

    pub fn spell_index(&self, id: &str) -> Option<usize> {
        self.spell_index.get(id).copied()
    }

    /// Pack files in canonical form (pretty JSON, struct field order, trailing
    /// newline), keyed by file name.
    pub fn canonical_files(&self) -> Vec<(&'static str, String)> {
        vec![
            (
                MONSTERS_FILE,
                pretty(&MonsterTable {
                    schema_version: SCHEMA_VERSION,
                    monsters: self.monsters.clone(),
                }),
            ),
            (
                PC_TEMPLATES_FILE,
                pretty(&PcTable {
                    schema_version: SCHEMA_VERSION,
                    pc_templates: self.pc_templates.clone(),
                }),
            ),
            (
                SPELLS_FILE,
                pretty(&SpellTable {
                    schema_version: SCHEMA_VERSION,
                    spells: self.spells.clone(),
                }),
            ),
            (XP_TABLES_FILE, pretty(&self.xp_tables)),
        ]
    }

    pub fn write_canonical(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in self.canonical_files() {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical files; identifies the pack in logs and checkpoints.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, text) in self.canonical_files() {
            h.update(name.as_bytes());
            h.update(text.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("pack tables serialize");
    s.push('\n');
    s
}
