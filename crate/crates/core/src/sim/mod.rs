//! Deterministic combat simulation and batch metrics.

mod batch;
mod engine;
mod rng;
mod roster;
mod scoring;
mod state;

pub use batch::{batch_results, run_batch, run_batch_with, sim_seed, BatchMetrics, BatchOptions};
pub use engine::{
    run_combat, run_combat_with, run_skirmish, Action, Candidate, CombatEvent, CombatOptions,
    CombatResult, CombatState, Economy, Slot, StateChange, Winner, ROUND_CAP,
};
pub use rng::{mix_seed, roll, stream_seed, RngStream, ALGORITHM};
pub use roster::{Encounter, Party, PartyMember, MAX_ENEMIES, MAX_PARTY, MIN_PARTY};
pub use scoring::{hit_probability, save_fail_probability, UtilityTable, UTILITY_TABLE_VERSION};
pub use state::{
    resolve_death_save, ActiveCondition, CombatantState, DeathSaveOutcome, Entrant, LifeState,
    Side,
};
