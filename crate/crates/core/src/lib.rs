//! Encounter generation for D&D 5e combat: a content pack with the DMG XP
//! economy, a deterministic combat simulator, DM-heuristic and random
//! baseline generators, and a REINFORCE-trained contextual-bandit policy
//! (NTRL) that composes enemy teams from the party's current state.

pub mod content;
pub mod error;
pub mod net;
pub mod policies;
pub mod sim;
pub mod training;

pub use error::{Error, Result};
