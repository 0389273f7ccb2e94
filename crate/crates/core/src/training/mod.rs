//! Party generation, HP variation, the reward, REINFORCE updates and the
//! training and evaluation runners.

mod config;
mod party;
mod reinforce;
mod reward;
mod runner;

pub use config::{ExperimentConfig, TrainConfig};
pub use party::{apply_hp_variation, apply_hp_variation_traced, generate_party, varied_hp, HpVariationConfig};
pub use reinforce::{reinforce_step, Baseline, Episode, StepOutcome};
pub use reward::{compute_reward, RewardConfig};
pub use runner::{
    evaluate_final, read_log, seed_dir, train, train_seed, CheckpointEvaluation, FinalEvaluation, PairedDm, SeedRun,
    TrainStepRecord,
};
