//! `ntrl` subcommands. Each one is a thin wrapper over a library operation
//! and prints JSON on stdout; failures print an error body on stderr.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use ntrl::content::{ContentPack, DifficultyTier};
use ntrl::net::{gradcheck, Checkpoint, NtrlPolicy};
use ntrl::policies::{evaluate_policy, DmPolicy, EncounterPolicy, EvalOptions, GenerationContext, RndPolicy};
use ntrl::sim::{run_batch_with, stream_seed, BatchOptions, Encounter, Party, RngStream};
use ntrl::training::{evaluate_final, generate_party, train, ExperimentConfig};
use serde::{Deserialize, Serialize};

use crate::api::{router, AppState, ServiceConfig};
use crate::error::ErrorBody;
use crate::store::Store;

/// Gradcheck passes below this maximum relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "ntrl", version, about = "Encounter generation workbench for D&D 5e combat")]
pub struct Cli {
    /// Base seed; overrides the config file's `train.base_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Content pack directory; the bundled pack when omitted.
    #[arg(long, global = true, env = "NTRL_PACK")]
    pub pack: Option<PathBuf>,
    /// Experiment config (TOML or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Ntrl,
    Dm,
    Rnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train NTRL policies, one per seed.
    Train {
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        sims: Option<u32>,
        #[arg(long)]
        seeds: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also simulate the DM heuristic on every training party.
        #[arg(long)]
        paired_dm: bool,
        /// Single-threaded, bit-reproducible logs.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate checkpoints on shared seeded parties.
    Eval {
        #[arg(long, required = true, num_args = 1..)]
        ckpt: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        parties: u32,
        #[arg(long, default_value_t = 100)]
        sims: u32,
        #[arg(long, value_enum, default_value_t = Switch::On)]
        hp_variation: Switch,
    },
    /// Propose one encounter for a party.
    Suggest {
        #[arg(long, value_enum, default_value_t = PolicyArg::Ntrl)]
        policy: PolicyArg,
        /// Party JSON; a random party when omitted.
        #[arg(long)]
        party: Option<PathBuf>,
        #[arg(long, env = "NTRL_CKPT")]
        ckpt: Option<PathBuf>,
        #[arg(long, default_value = "deadly")]
        tier: DifficultyTier,
    },
    /// Simulate a party against an encounter.
    Simulate {
        #[arg(long)]
        party: PathBuf,
        #[arg(long)]
        encounter: PathBuf,
        #[arg(long, default_value_t = 100)]
        sims: u32,
    },
    /// Evaluate the DM heuristic or the random baseline.
    Baseline {
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 100)]
        parties: u32,
        #[arg(long, default_value_t = 100)]
        sims: u32,
        #[arg(long, value_enum, default_value_t = Switch::On)]
        hp_variation: Switch,
    },
    /// Compare analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 5)]
        nets: usize,
        #[arg(long, default_value_t = 5)]
        inputs: usize,
        /// Random coordinates per parameter block.
        #[arg(long, default_value_t = 20)]
        per_block: usize,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "NTRL_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "NTRL_CKPT")]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, env = "NTRL_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[arg(long)]
        require_nickname: bool,
    },
}

#[derive(Debug)]
pub struct CliError(ErrorBody);

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self(ErrorBody {
            code: code.into(),
            message: message.into(),
            field: None,
        })
    }

    pub fn body(&self) -> &ErrorBody {
        &self.0
    }
}

impl From<ntrl::Error> for CliError {
    fn from(e: ntrl::Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("IO", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new("JSON", e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Accepts a full party object or a bare list of class ids (full HP).
#[derive(Deserialize)]
#[serde(untagged)]
enum PartyFile {
    Party(Party),
    Classes(Vec<String>),
}

/// Accepts `{"enemies": [...]}` or a bare list of monster ids.
#[derive(Deserialize)]
#[serde(untagged)]
enum EncounterFile {
    Encounter(Encounter),
    Ids(Vec<String>),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("MISSING_FILE", format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError(ErrorBody {
            code: "SCHEMA_VIOLATION".into(),
            message: format!("{}: {}", path.display(), e.inner()),
            field: Some(e.path().to_string()),
        })
    })
}

fn load_party(path: &Path, pack: &ContentPack) -> CliResult<Party> {
    let party = match read_json::<PartyFile>(path)? {
        PartyFile::Party(p) => p,
        PartyFile::Classes(ids) => Party::from_templates(pack, &ids)?,
    };
    party.validate(pack)?;
    Ok(party)
}

fn load_encounter(path: &Path, pack: &ContentPack) -> CliResult<Encounter> {
    let enc = match read_json::<EncounterFile>(path)? {
        EncounterFile::Encounter(e) => e,
        EncounterFile::Ids(ids) => Encounter::new(ids),
    };
    enc.validate(pack)?;
    Ok(enc)
}

fn print<T: Serialize>(value: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn eval_options(cfg: &ExperimentConfig, seed: u64, parties: u32, sims: u32, hp: Switch) -> EvalOptions {
    EvalOptions {
        n_parties: parties,
        n_sims: sims,
        base_seed: seed,
        tier: cfg.train.tier,
        hp_variation: (hp == Switch::On).then(|| cfg.hp_variation.clone()),
        reward: cfg.reward.clone(),
        parallel: !cfg.train.strict,
    }
}

fn ntrl_policy(ckpt: Option<&Path>, pack: &ContentPack) -> CliResult<NtrlPolicy> {
    let path = ckpt.ok_or_else(|| CliError::new("NO_MODEL_LOADED", "--ckpt (or NTRL_CKPT) is required for the ntrl policy"))?;
    let arch = ntrl::net::ArchConfig::for_pack(pack);
    Ok(NtrlPolicy::from_checkpoint(&Checkpoint::load_for(path, &arch)?, pack)?)
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: Cli) -> CliResult<i32> {
    let pack = match &cli.pack {
        Some(dir) => ContentPack::load(dir)?,
        None => ContentPack::bundled()?,
    };
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.train.base_seed = s;
    }
    let seed = cfg.train.base_seed;

    match cli.command {
        Command::Train {
            steps,
            sims,
            seeds,
            out,
            paired_dm,
            strict,
        } => {
            let t = &mut cfg.train;
            t.steps = steps.unwrap_or(t.steps);
            t.sims_per_step = sims.unwrap_or(t.sims_per_step);
            t.seeds = seeds.unwrap_or(t.seeds);
            t.out_dir = out.unwrap_or(t.out_dir.clone());
            t.paired_dm |= paired_dm;
            t.strict |= strict;
            let pack = match &cfg.train.pack {
                Some(dir) if cli.pack.is_none() => ContentPack::load(dir)?,
                _ => pack,
            };
            print(&train(&cfg, &pack)?)?;
        }
        Command::Eval {
            ckpt,
            parties,
            sims,
            hp_variation,
        } => {
            let opts = eval_options(&cfg, seed, parties, sims, hp_variation);
            let out = evaluate_final(&ckpt, &pack, &opts)?;
            print(&serde_json::json!({
                "checkpoints": out.checkpoints.iter().map(|c| serde_json::json!({
                    "checkpoint": c.checkpoint,
                    "summary": c.evaluation.summary,
                })).collect::<Vec<_>>(),
                "pooled": out.pooled,
            }))?;
        }
        Command::Suggest {
            policy,
            party,
            ckpt,
            tier,
        } => {
            let party = match party {
                Some(path) => load_party(&path, &pack)?,
                None => generate_party(&pack, &mut RngStream::new(stream_seed(seed, "party", 0))),
            };
            let policy: Box<dyn EncounterPolicy> = match policy {
                PolicyArg::Ntrl => Box::new(ntrl_policy(ckpt.as_deref(), &pack)?),
                PolicyArg::Dm => Box::new(DmPolicy::new()),
                PolicyArg::Rnd => Box::new(RndPolicy),
            };
            let mut rng = RngStream::new(seed);
            let mut ctx = GenerationContext {
                party: &party,
                pack: &pack,
                tier,
                rng: &mut rng,
            };
            let proposal = policy.generate(&mut ctx)?;
            print(&serde_json::json!({ "party": party, "proposal": proposal }))?;
        }
        Command::Simulate { party, encounter, sims } => {
            let party = load_party(&party, &pack)?;
            let encounter = load_encounter(&encounter, &pack)?;
            let opts = BatchOptions {
                tier: cfg.train.tier,
                parallel: !cfg.train.strict,
                ..BatchOptions::default()
            };
            print(&run_batch_with(&pack, &party, &encounter, sims, seed, &opts)?)?;
        }
        Command::Baseline {
            policy,
            parties,
            sims,
            hp_variation,
        } => {
            let opts = eval_options(&cfg, seed, parties, sims, hp_variation);
            let summary = match policy {
                PolicyArg::Dm => evaluate_policy(&DmPolicy::new(), &pack, &opts)?.summary,
                PolicyArg::Rnd => evaluate_policy(&RndPolicy, &pack, &opts)?.summary,
                PolicyArg::Ntrl => return Err(CliError::new("INVALID_POLICY", "baseline takes dm or rnd; use eval for checkpoints")),
            };
            print(&summary)?;
        }
        Command::Gradcheck {
            nets,
            inputs,
            per_block,
        } => {
            let report = gradcheck(&pack, nets, inputs, per_block, seed)?;
            print(&report)?;
            if !(report.max_relative_error < GRADCHECK_TOLERANCE) {
                return Err(CliError::new(
                    "GRADCHECK_FAILED",
                    format!("max relative error {:.3e} >= {GRADCHECK_TOLERANCE:e}", report.max_relative_error),
                ));
            }
        }
        Command::Serve {
            port,
            ckpt,
            static_dir,
            data_dir,
            require_nickname,
        } => {
            let config = ServiceConfig {
                tier: cfg.train.tier,
                require_nickname,
                ..ServiceConfig::default()
            };
            let state = Arc::new(AppState::new(Ok(pack), Store::open(&data_dir)?, config));
            if let Some(path) = &ckpt {
                state.load_model(path).map_err(|e| CliError(e.body))?;
            }
            let app = router(state, static_dir.as_deref());
            let addr = SocketAddr::from(([0, 0, 0, 0], port));
            tokio::runtime::Runtime::new()?.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
            })?;
        }
    }
    Ok(0)
}

