use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use super::{EncounterPolicy, EncounterProposal, GenerationContext, Provenance};
use crate::content::{ContentPack, XpTables};
use crate::error::Result;
use crate::sim::{Encounter, MAX_ENEMIES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub id: String,
    pub xp: u32,
}

impl PoolEntry {
    pub fn from_pack(pack: &ContentPack) -> Vec<PoolEntry> {
        pack.monsters
            .iter()
            .map(|m| PoolEntry {
                id: m.id.clone(),
                xp: m.xp_value,
            })
            .collect()
    }
}

/// One representative per distinct XP value: the lexicographically smallest
/// id. Sorted by XP, largest first.
fn xp_groups(pool: &[PoolEntry]) -> Vec<(u32, String)> {
    let mut by_xp: BTreeMap<u32, &str> = BTreeMap::new();
    for e in pool {
        by_xp
            .entry(e.xp)
            .and_modify(|id| {
                if e.id.as_str() < *id {
                    *id = &e.id
                }
            })
            .or_insert(&e.id);
    }
    by_xp.into_iter().rev().map(|(xp, id)| (xp, id.to_string())).collect()
}

struct Best {
    diff: u64,
    count: usize,
    ids: Vec<String>,
}

struct Search<'a> {
    groups: &'a [(u32, String)],
    tables: &'a XpTables,
    budget: u64,
    max: usize,
    counts: Vec<usize>,
    best: Option<Best>,
}

impl Search<'_> {
    fn diff(&self, raw: u64, k: usize) -> u64 {
        self.tables.adjusted(raw, k).abs_diff(self.budget)
    }

    /// Smallest |diff| reachable from a partial assignment covering groups
    /// `..i` with `chosen` enemies and `raw` XP.
    fn bound(&self, i: usize, chosen: usize, raw: u64) -> u64 {
        let hi_xp = self.groups[i].0 as u64;
        let lo_xp = self.groups[self.groups.len() - 1].0 as u64;
        (chosen.max(1)..=self.max)
            .map(|k| {
                let extra = (k - chosen) as u64;
                let lo = self.tables.adjusted(raw + extra * lo_xp, k);
                let hi = self.tables.adjusted(raw + extra * hi_xp, k);
                if self.budget < lo {
                    lo - self.budget
                } else if self.budget > hi {
                    self.budget - hi
                } else {
                    0
                }
            })
            .min()
            .unwrap_or(u64::MAX)
    }

    fn consider(&mut self, chosen: usize, raw: u64) {
        let diff = self.diff(raw, chosen);
        if let Some(b) = &self.best {
            if (diff, chosen) > (b.diff, b.count) {
                return;
            }
        }
        let mut ids: Vec<String> = self
            .groups
            .iter()
            .zip(&self.counts)
            .flat_map(|((_, id), &n)| std::iter::repeat_n(id.clone(), n))
            .collect();
        ids.sort();
        let better = match &self.best {
            None => true,
            Some(b) => (diff, chosen, &ids) < (b.diff, b.count, &b.ids),
        };
        if better {
            self.best = Some(Best {
                diff,
                count: chosen,
                ids,
            });
        }
    }

    fn dfs(&mut self, i: usize, chosen: usize, raw: u64) {
        if i == self.groups.len() {
            if chosen > 0 {
                self.consider(chosen, raw);
            }
            return;
        }
        if chosen == self.max {
            self.consider(chosen, raw);
            return;
        }
        if let Some(b) = &self.best {
            if self.bound(i, chosen, raw) > b.diff {
                return;
            }
        }
        let xp = self.groups[i].0 as u64;
        for n in (0..=self.max - chosen).rev() {
            self.counts[i] = n;
            self.dfs(i + 1, chosen + n, raw + n as u64 * xp);
        }
        self.counts[i] = 0;
    }
}

/// Multiset of 1..=`max_enemies` monsters whose adjusted XP is closest to
/// `budget`. Ties go to fewer enemies, then to the lexicographically smallest
/// sorted id list. Returns sorted ids; empty only for an empty pool.
pub fn dm_search(pool: &[PoolEntry], tables: &XpTables, budget: u64, max_enemies: usize) -> Vec<String> {
    let groups = xp_groups(pool);
    if groups.is_empty() || max_enemies == 0 {
        return Vec::new();
    }
    let mut s = Search {
        groups: &groups,
        tables,
        budget,
        max: max_enemies,
        counts: vec![0; groups.len()],
        best: None,
    };
    s.dfs(0, 0, 0);
    s.best.map(|b| b.ids).unwrap_or_default()
}

type MemoKey = (u64, Vec<(u32, String)>);

/// The DMG heuristic: search every enemy multiset for the adjusted XP
/// closest to the party's budget at the context's difficulty tier.
#[derive(Debug, Default)]
pub struct DmPolicy {
    memo: Mutex<HashMap<MemoKey, Vec<String>>>,
}

impl DmPolicy {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EncounterPolicy for DmPolicy {
    fn provenance(&self) -> Provenance {
        Provenance::Dm
    }

    fn generate(&self, ctx: &mut GenerationContext<'_>) -> Result<EncounterProposal> {
        let budget = ctx.budget()?;
        let pool = PoolEntry::from_pack(ctx.pack);
        let key = (budget.total as u64, xp_groups(&pool));
        let cached = self.memo.lock().expect("memo lock").get(&key).cloned();
        let ids = match cached {
            Some(ids) => ids,
            None => {
                let ids = dm_search(&pool, &ctx.pack.xp_tables, budget.total as u64, MAX_ENEMIES);
                self.memo.lock().expect("memo lock").insert(key, ids.clone());
                ids
            }
        };
        EncounterProposal::new(Encounter::new(ids), ctx.pack, budget, Provenance::Dm)
    }
}
