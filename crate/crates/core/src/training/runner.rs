use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::party::{apply_hp_variation_traced, generate_party};
use super::reinforce::{reinforce_step, Baseline, Episode};
use super::reward::compute_reward;
use crate::content::{party_xp_budget, ContentPack};
use crate::error::{Error, Result};
use crate::net::{encode_party, Adam, ArchConfig, Checkpoint, CheckpointMeta, NtrlPolicy, PolicyNetwork};
use crate::policies::{
    evaluate_policy, DmPolicy, EncounterPolicy, EvalOptions, GenerationContext, PolicyEvaluation, Summary,
};
use crate::sim::{run_batch_with, stream_seed, BatchMetrics, BatchOptions, Encounter, RngStream};

/// DM heuristic outcome on the same party and simulation seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDm {
    pub encounter: Encounter,
    pub metrics: BatchMetrics,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStepRecord {
    pub seed: u64,
    pub step: u64,
    pub party_digest: String,
    pub party_size: usize,
    pub hp_threshold: f64,
    pub budget: u32,
    pub encounter: Encounter,
    pub log_probs: Vec<f64>,
    pub metrics: Option<BatchMetrics>,
    pub reward: Option<f64>,
    pub baseline: Option<f64>,
    pub advantage: Option<f64>,
    pub loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dm: Option<PairedDm>,
    /// Set when the step failed and was skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub log: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub final_checkpoint: PathBuf,
    pub failed_steps: u64,
}

pub fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed-{seed}"))
}

/// Trains one policy per configured seed; seeds run concurrently unless
/// the config is strict.
pub fn train(cfg: &ExperimentConfig, pack: &ContentPack) -> Result<Vec<SeedRun>> {
    cfg.validate()?;
    let seeds = cfg.train.seed_values();
    if cfg.train.strict {
        seeds.iter().map(|&s| train_seed(cfg, pack, s)).collect()
    } else {
        seeds.par_iter().map(|&s| train_seed(cfg, pack, s)).collect()
    }
}

pub fn train_seed(cfg: &ExperimentConfig, pack: &ContentPack, seed: u64) -> Result<SeedRun> {
    cfg.validate()?;
    let t = &cfg.train;
    let dir = seed_dir(&t.out_dir, seed);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let log_path = dir.join("train.jsonl");
    let file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut log = BufWriter::new(file);

    let arch = ArchConfig::for_pack(pack);
    let mut net = PolicyNetwork::<f32>::new(arch.clone(), stream_seed(seed, "init", 0));
    let mut adam = Adam::new(t.adam.clone(), net.param_count());
    let mut baseline = Baseline::new(t.baseline, t.baseline_window);
    let batch_opts = BatchOptions {
        tier: t.tier,
        parallel: !t.strict,
        ..BatchOptions::default()
    };
    let dm = DmPolicy::new();
    let meta = |step: u64| CheckpointMeta {
        arch: arch.clone(),
        step,
        seed,
        reward_config_hash: cfg.reward.hash(),
        experiment_digest: Some(cfg.digest()),
        optimizer: t.adam.clone(),
    };

    let mut checkpoints = Vec::new();
    let mut failed_steps = 0;
    for step in 0..t.steps {
        let started = Instant::now();
        let party = generate_party(pack, &mut RngStream::new(stream_seed(seed, "party", step)));
        let (party, threshold) = apply_hp_variation_traced(
            &party,
            &cfg.hp_variation,
            &mut RngStream::new(stream_seed(seed, "hp", step)),
        );
        let features = encode_party(&party, pack, &arch)?;
        let (trace, _) = net.sample(&features, &mut RngStream::new(stream_seed(seed, "policy", step)))?;
        let encounter = Encounter::from_indices(pack, &trace.classes);
        let sims_seed = stream_seed(seed, "sims", step);
        let mut record = TrainStepRecord {
            seed,
            step,
            party_digest: party.digest(),
            party_size: party.len(),
            hp_threshold: threshold,
            budget: party_xp_budget(&party, t.tier, pack)?.total,
            encounter: encounter.clone(),
            log_probs: trace.log_probs.clone(),
            metrics: None,
            reward: None,
            baseline: None,
            advantage: None,
            loss: None,
            dm: None,
            error: None,
            wall_clock_ms: None,
        };
        let outcome = run_batch_with(pack, &party, &encounter, t.sims_per_step, sims_seed, &batch_opts).and_then(
            |metrics| {
                let reward = compute_reward(&metrics, &cfg.reward);
                record.metrics = Some(metrics);
                record.reward = Some(reward);
                let episode = Episode {
                    features: &features,
                    trace: &trace,
                    reward,
                };
                reinforce_step(&mut net, &[episode], &mut adam, &mut baseline, cfg.reward.reward_scale)
            },
        );
        match outcome {
            Ok(o) => {
                record.baseline = Some(o.baseline);
                record.advantage = Some(o.advantage);
                record.loss = Some(o.loss);
            }
            Err(e) => {
                failed_steps += 1;
                record.error = Some(format!("{}: {e}", e.code()));
            }
        }
        if t.paired_dm {
            let mut rng = RngStream::new(stream_seed(seed, "dm", step));
            let mut ctx = GenerationContext {
                party: &party,
                pack,
                tier: t.tier,
                rng: &mut rng,
            };
            let proposal = dm.generate(&mut ctx)?;
            let metrics = run_batch_with(pack, &party, &proposal.encounter, t.sims_per_step, sims_seed, &batch_opts)?;
            record.dm = Some(PairedDm {
                reward: compute_reward(&metrics, &cfg.reward),
                encounter: proposal.encounter,
                metrics,
            });
        }
        if !t.strict {
            record.wall_clock_ms = Some(started.elapsed().as_secs_f64() * 1000.0);
        }
        serde_json::to_writer(&mut log, &record)?;
        log.write_all(b"\n").map_err(|e| Error::io(&log_path, e))?;

        let done = step + 1;
        if t.checkpoint_every > 0 && done % t.checkpoint_every == 0 && done != t.steps {
            let path = dir.join(format!("step-{done:06}.ckpt"));
            Checkpoint::from_network(&net, meta(done)).save(&path)?;
            checkpoints.push(path);
        }
    }
    log.flush().map_err(|e| Error::io(&log_path, e))?;
    let final_checkpoint = dir.join("final.ckpt");
    Checkpoint::from_network(&net, meta(t.steps)).save(&final_checkpoint)?;
    checkpoints.push(final_checkpoint.clone());
    Ok(SeedRun {
        seed,
        log: log_path,
        checkpoints,
        final_checkpoint,
        failed_steps,
    })
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<TrainStepRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEvaluation {
    pub checkpoint: PathBuf,
    pub evaluation: PolicyEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalEvaluation {
    pub checkpoints: Vec<CheckpointEvaluation>,
    /// Means over every party of every checkpoint.
    pub pooled: Summary,
}

/// Evaluates each checkpoint on the same seeded parties. With
/// `opts.hp_variation = None` every party starts at full HP.
pub fn evaluate_final(checkpoints: &[PathBuf], pack: &ContentPack, opts: &EvalOptions) -> Result<FinalEvaluation> {
    if checkpoints.is_empty() {
        return Err(Error::InvalidConfig("at least one checkpoint is required".into()));
    }
    let arch = ArchConfig::for_pack(pack);
    let mut out = Vec::new();
    for path in checkpoints {
        let policy = NtrlPolicy::from_checkpoint(&Checkpoint::load_for(path, &arch)?, pack)?;
        out.push(CheckpointEvaluation {
            checkpoint: path.clone(),
            evaluation: evaluate_policy(&policy, pack, opts)?,
        });
    }
    let all: Vec<_> = out.iter().flat_map(|c| c.evaluation.parties.iter().cloned()).collect();
    Ok(FinalEvaluation {
        pooled: Summary::from_parties(&all),
        checkpoints: out,
    })
}
