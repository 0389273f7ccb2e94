//! HTTP JSON API. Every handler validates its input and answers rejected
//! requests with an [`ErrorBody`](crate::error::ErrorBody).

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use ntrl::content::{adjusted_encounter_xp, party_xp_budget, ContentPack, DifficultyTier, LevelOrCr, XpBudget};
use ntrl::net::{ArchConfig, Checkpoint, CheckpointMeta, NtrlPolicy};
use ntrl::policies::{DmPolicy, EncounterPolicy, EncounterProposal, GenerationContext, RndPolicy};
use ntrl::sim::{run_batch_with, stream_seed, BatchMetrics, BatchOptions, Encounter, Party, RngStream, MAX_ENEMIES};
use ntrl::training::{apply_hp_variation_traced, generate_party, HpVariationConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::{ApiError, ApiResult};
use crate::store::{now, Session, Store, Submission, SubmissionResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub default_sims: u32,
    pub max_sims: u32,
    pub submission_sims: u32,
    pub encounters_per_submission: usize,
    pub tier: DifficultyTier,
    pub require_nickname: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            default_sims: 100,
            max_sims: 1000,
            submission_sims: 100,
            encounters_per_submission: 3,
            tier: DifficultyTier::Deadly,
            require_nickname: false,
        }
    }
}

/// A checkpoint ready to serve.
#[derive(Debug)]
pub struct LoadedModel {
    pub path: PathBuf,
    pub meta: CheckpointMeta,
    pub policy: NtrlPolicy,
}

impl LoadedModel {
    pub fn load(path: &Path, pack: &ContentPack) -> ntrl::Result<Self> {
        let ck = Checkpoint::load_for(path, &ArchConfig::for_pack(pack))?;
        Ok(Self {
            path: path.to_path_buf(),
            policy: NtrlPolicy::from_checkpoint(&ck, pack)?,
            meta: ck.meta,
        })
    }
}

pub struct AppState {
    pack: Result<Arc<ContentPack>, String>,
    model: RwLock<Option<Arc<LoadedModel>>>,
    dm: DmPolicy,
    pub store: Store,
    pub config: ServiceConfig,
}

impl AppState {
    pub fn new(pack: Result<ContentPack, String>, store: Store, config: ServiceConfig) -> Self {
        Self {
            pack: pack.map(Arc::new),
            model: RwLock::new(None),
            dm: DmPolicy::new(),
            store,
            config,
        }
    }

    fn pack(&self) -> ApiResult<Arc<ContentPack>> {
        self.pack
            .clone()
            .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "PACK_UNAVAILABLE", e))
    }

    /// Swaps in a new model. Requests already holding the old one finish on it.
    pub fn load_model(&self, path: &Path) -> ApiResult<Arc<LoadedModel>> {
        let pack = self.pack()?;
        let loaded = Arc::new(LoadedModel::load(path, &pack)?);
        *self.model.write().unwrap() = Some(loaded.clone());
        Ok(loaded)
    }

    pub fn model(&self) -> Option<Arc<LoadedModel>> {
        self.model.read().unwrap().clone()
    }

    fn session(&self, id: &str) -> ApiResult<Session> {
        self.store.session(id).ok_or_else(|| ApiError::unknown_session(id))
    }
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/party/random", get(random_party))
        .route("/api/session/{id}", get(get_session))
        .route("/api/simulate", post(simulate))
        .route("/api/submissions", post(submit))
        .route("/api/suggest", post(suggest))
        .route("/api/content/monsters", get(monsters))
        .route("/api/content/classes", get(classes))
        .route("/api/content/xp", get(xp_tables))
        .route("/api/budget", get(budget))
        .route("/api/model", get(model_status).post(load_model))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Parses a JSON body, naming the offending field on failure.
fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let err = ApiError::bad_request("INVALID_REQUEST", e.inner().to_string());
        if field == "." { err } else { err.with_field(field) }
    })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn io_error(e: std::io::Error) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "IO", e.to_string())
}

fn parse_tier(raw: Option<&str>, default: DifficultyTier) -> ApiResult<DifficultyTier> {
    match raw {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| ApiError::bad_request("INVALID_TIER", format!("unknown difficulty tier `{s}`")).with_field("tier")),
    }
}

fn check_encounter(enemies: Vec<String>, pack: &ContentPack, field: &str) -> ApiResult<Encounter> {
    let enc = Encounter::new(enemies);
    let reject = |m: String| ApiError::bad_request("INVALID_ENCOUNTER", m).with_field(field);
    if enc.is_empty() || enc.len() > MAX_ENEMIES {
        return Err(reject(format!("an encounter needs 1 to {MAX_ENEMIES} enemies, got {}", enc.len())));
    }
    if let Some(id) = enc.enemies().iter().find(|id| pack.monster_class(id).is_none()) {
        return Err(reject(format!("`{id}` is not in the monster pool")));
    }
    Ok(enc)
}

/// The session party, optionally with current HP overridden. The stored
/// session is never touched.
fn party_with_hp(session: &Session, hp_current: Option<Vec<i32>>, pack: &ContentPack) -> ApiResult<Party> {
    let mut party = session.party.clone();
    if let Some(hp) = hp_current {
        let reject = |m: String| ApiError::bad_request("INVALID_PARTY", m).with_field("hp_current");
        if hp.len() != party.len() {
            return Err(reject(format!("{} HP values for {} members", hp.len(), party.len())));
        }
        for (m, v) in party.members.iter_mut().zip(hp) {
            if v < 1 || v > m.hp_max {
                return Err(reject(format!("{}: HP {v} outside 1..={}", m.template, m.hp_max)));
            }
            m.hp_current = v;
        }
    }
    party.validate(pack)?;
    Ok(party)
}

#[derive(Serialize)]
struct Health {
    ok: bool,
    pack_digest: Option<String>,
    model_loaded: bool,
}

async fn health(State(st): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        ok: st.pack.is_ok(),
        pack_digest: st.pack.as_ref().ok().map(|p| p.digest()),
        model_loaded: st.model().is_some(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionResponse {
    pub session: String,
    pub party: Party,
    pub hp_variation: bool,
    pub hp_threshold: Option<f64>,
    pub budget: XpBudget,
    pub created_at: u64,
}

fn session_response(s: &Session, pack: &ContentPack, tier: DifficultyTier) -> ApiResult<SessionResponse> {
    Ok(SessionResponse {
        session: s.id.clone(),
        party: s.party.clone(),
        hp_variation: s.hp_variation,
        hp_threshold: s.hp_threshold,
        budget: party_xp_budget(&s.party, tier, pack)?,
        created_at: s.created_at,
    })
}

async fn random_party(
    State(st): State<Arc<AppState>>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<SessionResponse>> {
    let pack = st.pack()?;
    let hp_variation = match q.get("hp_variation").map(|s| s.to_ascii_lowercase()).as_deref() {
        None | Some("off") | Some("false") | Some("0") => false,
        Some("on") | Some("true") | Some("1") => true,
        Some(other) => {
            return Err(ApiError::bad_request("INVALID_REQUEST", format!("hp_variation must be on or off, got `{other}`"))
                .with_field("hp_variation"))
        }
    };
    let party_seed: u64 = rand::random();
    let party = generate_party(&pack, &mut RngStream::new(stream_seed(party_seed, "party", 0)));
    let (party, hp_threshold) = if hp_variation {
        let mut rng = RngStream::new(stream_seed(party_seed, "hp", 0));
        let (p, t) = apply_hp_variation_traced(&party, &HpVariationConfig::default(), &mut rng);
        (p, Some(t))
    } else {
        (party, None)
    };
    let session = Session {
        id: uuid::Uuid::new_v4().simple().to_string(),
        party,
        hp_variation,
        hp_threshold,
        party_seed,
        created_at: now(),
    };
    st.store.insert_session(session.clone()).map_err(io_error)?;
    Ok(Json(session_response(&session, &pack, st.config.tier)?))
}

async fn get_session(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionResponse>> {
    let pack = st.pack()?;
    Ok(Json(session_response(&st.session(&id)?, &pack, st.config.tier)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    session: String,
    encounter: Vec<String>,
    sims: Option<u32>,
    seed: Option<u64>,
    hp_current: Option<Vec<i32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub seed: u64,
    pub encounter: Encounter,
    pub adjusted_xp: u64,
    pub budget: u32,
    #[serde(flatten)]
    pub metrics: BatchMetrics,
}

async fn simulate(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<SimulateResponse>> {
    let req: SimulateRequest = parse(&body)?;
    let pack = st.pack()?;
    let session = st.session(&req.session)?;
    let encounter = check_encounter(req.encounter, &pack, "encounter")?;
    let sims = req.sims.unwrap_or(st.config.default_sims);
    if sims == 0 || sims > st.config.max_sims {
        return Err(ApiError::bad_request("INVALID_SIMS", format!("sims must lie in 1..={}", st.config.max_sims))
            .with_field("sims"));
    }
    let party = party_with_hp(&session, req.hp_current, &pack)?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let tier = st.config.tier;
    let out = blocking(move || {
        let opts = BatchOptions {
            tier,
            parallel: true,
            ..BatchOptions::default()
        };
        let metrics = run_batch_with(&pack, &party, &encounter, sims, seed, &opts)?;
        Ok(SimulateResponse {
            seed,
            adjusted_xp: adjusted_encounter_xp(&encounter, &pack)?,
            budget: party_xp_budget(&party, tier, &pack)?.total,
            encounter,
            metrics,
        })
    })
    .await?;
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmissionRequest {
    session: String,
    encounters: Vec<Vec<String>>,
    nickname: Option<String>,
}

async fn submit(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<Submission>> {
    let req: SubmissionRequest = parse(&body)?;
    let pack = st.pack()?;
    let session = st.session(&req.session)?;
    let want = st.config.encounters_per_submission;
    if req.encounters.len() != want {
        return Err(
            ApiError::bad_request("WRONG_COUNT", format!("exactly {want} encounters required, got {}", req.encounters.len()))
                .with_field("encounters"),
        );
    }
    let nickname = req.nickname.filter(|n| !n.trim().is_empty());
    if st.config.require_nickname && nickname.is_none() {
        return Err(ApiError::bad_request("NICKNAME_REQUIRED", "a nickname is required").with_field("nickname"));
    }
    let mut encounters = Vec::with_capacity(want);
    let mut seen = HashSet::new();
    for (i, enemies) in req.encounters.into_iter().enumerate() {
        let enc = check_encounter(enemies, &pack, &format!("encounters[{i}]"))?;
        if !seen.insert(enc.multiset_key()) {
            return Err(ApiError::bad_request("DUPLICATE_ENCOUNTER", format!("encounter {i} repeats an earlier one"))
                .with_field(format!("encounters[{i}]")));
        }
        encounters.push(enc);
    }

    let st2 = st.clone();
    let submission = blocking(move || {
        let seed: u64 = rand::random();
        let sims = st2.config.submission_sims;
        let opts = BatchOptions {
            tier: st2.config.tier,
            parallel: true,
            ..BatchOptions::default()
        };
        let results = encounters
            .into_iter()
            .map(|encounter| {
                Ok(SubmissionResult {
                    metrics: run_batch_with(&pack, &session.party, &encounter, sims, seed, &opts)?,
                    adjusted_xp: adjusted_encounter_xp(&encounter, &pack)?,
                    encounter,
                })
            })
            .collect::<ApiResult<Vec<_>>>()?;
        let submission = Submission {
            id: uuid::Uuid::new_v4().simple().to_string(),
            session: session.id.clone(),
            budget: party_xp_budget(&session.party, st2.config.tier, &pack)?.total,
            party: session.party,
            seed,
            sims,
            results,
            nickname,
            created_at: now(),
        };
        st2.store.append_submission(&submission).map_err(io_error)?;
        Ok(submission)
    })
    .await?;
    Ok(Json(submission))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuggestRequest {
    session: String,
    policy: String,
    seed: Option<u64>,
    tier: Option<String>,
    hp_current: Option<Vec<i32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub seed: u64,
    /// Step count of the serving checkpoint, for `ntrl` suggestions.
    pub model_step: Option<u64>,
    #[serde(flatten)]
    pub proposal: EncounterProposal,
}

async fn suggest(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<SuggestResponse>> {
    let req: SuggestRequest = parse(&body)?;
    let pack = st.pack()?;
    let session = st.session(&req.session)?;
    let tier = parse_tier(req.tier.as_deref(), st.config.tier)?;
    let party = party_with_hp(&session, req.hp_current, &pack)?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let policy = req.policy.to_ascii_lowercase();
    let model = match policy.as_str() {
        "ntrl" => Some(st.model().ok_or_else(|| {
            ApiError::new(StatusCode::CONFLICT, "NO_MODEL_LOADED", "no NTRL checkpoint is loaded")
        })?),
        "dm" | "rnd" => None,
        other => {
            return Err(ApiError::bad_request("INVALID_POLICY", format!("policy must be ntrl, dm or rnd, got `{other}`"))
                .with_field("policy"))
        }
    };
    let st2 = st.clone();
    let out = blocking(move || {
        let mut rng = RngStream::new(seed);
        let mut ctx = GenerationContext {
            party: &party,
            pack: &pack,
            tier,
            rng: &mut rng,
        };
        let proposal = match &model {
            Some(m) => m.policy.generate(&mut ctx)?,
            None if policy == "dm" => st2.dm.generate(&mut ctx)?,
            None => RndPolicy.generate(&mut ctx)?,
        };
        Ok(SuggestResponse {
            seed,
            model_step: model.map(|m| m.meta.step),
            proposal,
        })
    })
    .await?;
    Ok(Json(out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonsterEntry {
    pub id: String,
    pub name: String,
    pub xp_value: u32,
    pub cr: Option<String>,
    pub hp_max: i32,
    pub ac: i32,
}

async fn monsters(State(st): State<Arc<AppState>>) -> ApiResult<Json<Vec<MonsterEntry>>> {
    let pack = st.pack()?;
    Ok(Json(
        pack.monsters
            .iter()
            .map(|m| MonsterEntry {
                id: m.id.clone(),
                name: m.name.clone(),
                xp_value: m.xp_value,
                cr: match &m.level_or_cr {
                    LevelOrCr::Cr(cr) => Some(cr.clone()),
                    LevelOrCr::Level(_) => None,
                },
                hp_max: m.hp_max,
                ac: m.ac,
            })
            .collect(),
    ))
}

async fn classes(State(st): State<Arc<AppState>>) -> ApiResult<Json<serde_json::Value>> {
    let pack = st.pack()?;
    Ok(Json(serde_json::to_value(&pack.pc_templates).map_err(|e| ApiError::internal(e.to_string()))?))
}

async fn xp_tables(State(st): State<Arc<AppState>>) -> ApiResult<Json<serde_json::Value>> {
    let pack = st.pack()?;
    Ok(Json(serde_json::to_value(&pack.xp_tables).map_err(|e| ApiError::internal(e.to_string()))?))
}

async fn budget(
    State(st): State<Arc<AppState>>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<XpBudget>> {
    let pack = st.pack()?;
    let id = q
        .get("session")
        .ok_or_else(|| ApiError::bad_request("MISSING_PARAMETER", "`session` is required").with_field("session"))?;
    let tier = parse_tier(q.get("tier").map(String::as_str), st.config.tier)?;
    Ok(Json(party_xp_budget(&st.session(id)?.party, tier, &pack)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelStatus {
    pub loaded: bool,
    pub path: Option<PathBuf>,
    pub meta: Option<CheckpointMeta>,
}

fn status(m: Option<Arc<LoadedModel>>) -> ModelStatus {
    ModelStatus {
        loaded: m.is_some(),
        path: m.as_ref().map(|m| m.path.clone()),
        meta: m.map(|m| m.meta.clone()),
    }
}

async fn model_status(State(st): State<Arc<AppState>>) -> Json<ModelStatus> {
    Json(status(st.model()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadModelRequest {
    path: PathBuf,
}

async fn load_model(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<ModelStatus>> {
    let req: LoadModelRequest = parse(&body)?;
    let st2 = st.clone();
    let loaded = blocking(move || st2.load_model(&req.path)).await?;
    Ok(Json(status(Some(loaded))))
}
