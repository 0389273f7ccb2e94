use std::path::Path;
use std::sync::OnceLock;

use ntrl::content::ContentPack;
use ntrl::net::{encode_party, Adam, AdamConfig, ArchConfig, Checkpoint, PolicyNetwork};
use ntrl::policies::{evaluation_party, EvalOptions};
use ntrl::sim::{BatchMetrics, Party, RngStream};
use ntrl::training::{
    apply_hp_variation_traced, compute_reward, evaluate_final, generate_party, read_log, reinforce_step, train,
    Baseline, Episode, ExperimentConfig, HpVariationConfig, RewardConfig,
};
use proptest::prelude::*;

fn pack() -> &'static ContentPack {
    static PACK: OnceLock<ContentPack> = OnceLock::new();
    PACK.get_or_init(|| ContentPack::bundled().unwrap())
}

fn small_config(out: &Path, steps: u64, sims: u32, seeds: u32) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.train.steps = steps;
    cfg.train.sims_per_step = sims;
    cfg.train.seeds = seeds;
    cfg.train.base_seed = 11;
    cfg.train.checkpoint_every = 3;
    cfg.train.out_dir = out.to_path_buf();
    cfg
}

/// Written out term by term from the reward definition.
fn reward_oracle(m: &BatchMetrics, c: &RewardConfig) -> f64 {
    let wp = c.alpha * m.win_probability;
    let fl = c.beta * if m.fight_longevity > c.longevity_cap { c.longevity_cap } else { m.fight_longevity };
    let hp = c.gamma * (100.0 - m.remaining_party_hp_pct) / 100.0;
    let dmg = c.delta * m.total_damage_to_party;
    let deaths = c.lambda * f64::from(m.total_player_deaths);
    let tpk = c.tpk_penalty * f64::from(m.tpk_count);
    wp + fl + hp + dmg + deaths + tpk
}

fn sample_party(seed: u64) -> Party {
    generate_party(pack(), &mut RngStream::new(seed))
}

/// Probability the network assigns to its own sampled trace, after one
/// REINFORCE step with the given reward against a baseline of zero.
fn probability_shift(reward: f64) -> (f64, f64, bool) {
    let arch = ArchConfig::for_pack(pack());
    let mut net = PolicyNetwork::<f64>::new(arch.clone(), 5);
    let features = encode_party(&sample_party(1), pack(), &arch).unwrap();
    let (trace, _) = net.sample(&features, &mut RngStream::new(2)).unwrap();
    let before = net.log_prob(&features, &trace).unwrap();
    let mut adam = Adam::new(AdamConfig::default(), net.param_count());
    let mut baseline = Baseline::new(false, 1);
    let episode = Episode {
        features: &features,
        trace: &trace,
        reward,
    };
    let out = reinforce_step(&mut net, &[episode], &mut adam, &mut baseline, 1.0).unwrap();
    (before, net.log_prob(&features, &trace).unwrap(), out.updated)
}

#[test]
fn positive_advantage_raises_sampled_probability() {
    let (before, after, updated) = probability_shift(1.0);
    assert!(updated);
    assert!(after > before, "{before} -> {after}");
}

#[test]
fn negative_advantage_lowers_sampled_probability() {
    let (before, after, updated) = probability_shift(-1.0);
    assert!(updated);
    assert!(after < before, "{before} -> {after}");
}

#[test]
fn zero_advantage_leaves_parameters_alone() {
    let arch = ArchConfig::for_pack(pack());
    let mut net = PolicyNetwork::<f32>::new(arch.clone(), 9);
    let snapshot = net.params().to_vec();
    let features = encode_party(&sample_party(4), pack(), &arch).unwrap();
    let (trace, _) = net.sample(&features, &mut RngStream::new(4)).unwrap();
    let mut adam = Adam::new(AdamConfig::default(), net.param_count());
    // First step: the empty baseline window returns the reward itself.
    let mut baseline = Baseline::new(true, 100);
    let episode = Episode {
        features: &features,
        trace: &trace,
        reward: 1234.0,
    };
    let out = reinforce_step(&mut net, &[episode], &mut adam, &mut baseline, 1000.0).unwrap();
    assert_eq!(out.advantage, 0.0);
    assert!(!out.updated);
    assert_eq!(adam.t, 0);
    assert_eq!(net.params(), &snapshot[..]);
}

#[test]
fn one_step_one_sim_writes_one_record_and_one_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1, 1, 1);
    let runs = train(&cfg, pack()).unwrap();
    assert_eq!(runs.len(), 1);
    let log = read_log(&runs[0].log).unwrap();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].metrics.as_ref().unwrap().n_sims, 1);
    assert_eq!(runs[0].checkpoints, vec![runs[0].final_checkpoint.clone()]);
    let ckpt = Checkpoint::load(&runs[0].final_checkpoint).unwrap();
    assert_eq!(ckpt.meta.step, 1);
    assert_eq!(ckpt.meta.seed, 11);
}

#[test]
fn strict_runs_are_byte_identical() {
    let logs: Vec<(String, Vec<u8>)> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = small_config(dir.path(), 6, 4, 2);
            cfg.train.strict = true;
            cfg.train.paired_dm = true;
            let runs = train(&cfg, pack()).unwrap();
            let text: String = runs.iter().map(|r| std::fs::read_to_string(&r.log).unwrap()).collect();
            let ckpt = std::fs::read(&runs[1].final_checkpoint).unwrap();
            (text, ckpt)
        })
        .collect();
    assert!(!logs[0].0.contains("wall_clock"));
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn checkpoint_cadence_and_logged_rewards_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), 7, 3, 1);
    cfg.train.paired_dm = true;
    let run = &train(&cfg, pack()).unwrap()[0];
    let names: Vec<String> = run
        .checkpoints
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["step-000003.ckpt", "step-000006.ckpt", "final.ckpt"]);

    let log = read_log(&run.log).unwrap();
    assert_eq!(log.len(), 7);
    for (i, rec) in log.iter().enumerate() {
        assert_eq!(rec.step, i as u64);
        assert!(rec.error.is_none());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
        assert!(close(rec.reward.unwrap(), reward_oracle(rec.metrics.as_ref().unwrap(), &cfg.reward)));
        let dm = rec.dm.as_ref().unwrap();
        assert!(close(dm.reward, reward_oracle(&dm.metrics, &cfg.reward)));
        assert_eq!(rec.log_probs.len(), rec.encounter.len() + (rec.encounter.len() < 8) as usize);
        assert!(cfg.hp_variation.thresholds.contains(&rec.hp_threshold));
    }
    assert_eq!(log[0].advantage, Some(0.0));
}

#[test]
fn evaluate_final_pools_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 4, 2, 1);
    let run = &train(&cfg, pack()).unwrap()[0];
    assert_eq!(run.checkpoints.len(), 2);
    let opts = EvalOptions {
        n_parties: 6,
        n_sims: 3,
        base_seed: 21,
        hp_variation: None,
        ..EvalOptions::default()
    };
    let out = evaluate_final(&run.checkpoints, pack(), &opts).unwrap();
    assert_eq!(out.checkpoints.len(), 2);
    for c in &out.checkpoints {
        for p in &c.evaluation.parties {
            let party = evaluation_party(pack(), 21, p.index, None);
            assert_eq!(p.party_digest, party.digest());
            assert!(party.members.iter().all(|m| m.hp_current == m.hp_max));
        }
    }
    let per: Vec<f64> = out.checkpoints.iter().map(|c| c.evaluation.summary.reward).collect();
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    assert!((out.pooled.reward - mean).abs() < 1e-9);
    assert_eq!(out.pooled.n_parties, 12);

    assert!(evaluate_final(&[], pack(), &opts).is_err());
}

#[test]
fn reward_unit_examples() {
    let zero = BatchMetrics {
        win_probability: 0.0,
        fight_longevity: 0.0,
        tpk_count: 0,
        team_xp_difference: 0,
        remaining_party_hp_pct: 100.0,
        total_player_deaths: 0,
        n_sims: 10,
        total_damage_to_party: 0.0,
    };
    let c = RewardConfig::default();
    assert_eq!(compute_reward(&zero, &c), 0.0);
    let alpha_only = RewardConfig {
        beta: 0.0,
        gamma: 0.0,
        delta: 0.0,
        lambda: 0.0,
        tpk_penalty: 0.0,
        ..c.clone()
    };
    for wp in [0.0, 0.25, 0.5, 1.0] {
        let m = BatchMetrics {
            win_probability: wp,
            ..zero.clone()
        };
        assert_eq!(compute_reward(&m, &alpha_only), 1000.0 * wp);
    }
    let mut prev = f64::INFINITY;
    for tpk in 0..=10 {
        let m = BatchMetrics { tpk_count: tpk, ..zero.clone() };
        let r = compute_reward(&m, &c);
        assert!(r < prev);
        prev = r;
    }
}

fn metrics_strategy() -> impl Strategy<Value = BatchMetrics> {
    (0u32..=100, 1u32..=100).prop_flat_map(|(wins, n)| {
        let wins = wins.min(n);
        (0.0f64..=50.0, 0u32..=n - wins, 0.0f64..=100.0, 0u32..=8 * n, 0.0f64..=400.0).prop_map(
            move |(fl, tpk, hp, deaths, dmg)| BatchMetrics {
                win_probability: f64::from(wins) / f64::from(n),
                fight_longevity: fl,
                tpk_count: tpk,
                team_xp_difference: 0,
                remaining_party_hp_pct: hp,
                total_player_deaths: deaths,
                n_sims: n,
                total_damage_to_party: dmg,
            },
        )
    })
}

fn config_strategy() -> impl Strategy<Value = RewardConfig> {
    (0.1f64..2000.0, 0.0f64..50.0, 0.0f64..1000.0, 0.0f64..20.0, 0.0f64..2.0, -500.0f64..=0.0, 1.0f64..30.0)
        .prop_map(|(alpha, beta, gamma, delta, lambda, tpk_penalty, longevity_cap)| RewardConfig {
            alpha,
            beta,
            gamma,
            delta,
            lambda,
            tpk_penalty,
            longevity_cap,
            reward_scale: 1000.0,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reward_matches_term_by_term_oracle(m in metrics_strategy(), c in config_strategy()) {
        let r = compute_reward(&m, &c);
        let o = reward_oracle(&m, &c);
        prop_assert!((r - o).abs() <= 1e-9 * (1.0 + o.abs()), "{r} vs {o}");
    }

    #[test]
    fn reward_is_linear_in_coefficients(m in metrics_strategy(), a in config_strategy(), b in config_strategy()) {
        // Same cap so the longevity term stays linear in beta.
        let b = RewardConfig { longevity_cap: a.longevity_cap, ..b };
        let sum = RewardConfig {
            alpha: a.alpha + b.alpha,
            beta: a.beta + b.beta,
            gamma: a.gamma + b.gamma,
            delta: a.delta + b.delta,
            lambda: a.lambda + b.lambda,
            tpk_penalty: a.tpk_penalty + b.tpk_penalty,
            ..a.clone()
        };
        let lhs = compute_reward(&m, &sum);
        let rhs = compute_reward(&m, &a) + compute_reward(&m, &b);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn more_tpks_never_pay(m in metrics_strategy(), c in config_strategy()) {
        let worse = BatchMetrics { tpk_count: m.tpk_count + 1, ..m.clone() };
        prop_assert!(compute_reward(&worse, &c) <= compute_reward(&m, &c));
    }

    #[test]
    fn longevity_beyond_cap_is_flat(m in metrics_strategy(), c in config_strategy(), extra in 0.0f64..100.0) {
        let at_cap = BatchMetrics { fight_longevity: c.longevity_cap, ..m.clone() };
        let beyond = BatchMetrics { fight_longevity: c.longevity_cap + extra, ..m };
        prop_assert_eq!(compute_reward(&at_cap, &c), compute_reward(&beyond, &c));
    }
}

fn check_hp_bounds(party: &Party, varied: &Party, threshold: f64, cfg: &HpVariationConfig) -> Result<(), String> {
    if !cfg.thresholds.contains(&threshold) {
        return Err(format!("threshold {threshold} not in the set"));
    }
    for (orig, m) in party.members.iter().zip(&varied.members) {
        if m.hp_max != orig.hp_max || m.template != orig.template {
            return Err("member identity changed".into());
        }
        if m.hp_current < cfg.floor.min(m.hp_max) || m.hp_current > m.hp_max {
            return Err(format!("{} outside [floor, {}]", m.hp_current, m.hp_max));
        }
        // The noisy target rounds to within half a point of the band.
        let max = f64::from(m.hp_max);
        let lo = (max * threshold * (1.0 - cfg.noise) - 0.5).floor();
        let hi = (max * threshold * (1.0 + cfg.noise) + 0.5).ceil();
        let v = f64::from(m.hp_current);
        if v > cfg.floor as f64 && (v < lo || v > hi) {
            return Err(format!("{v} outside [{lo}, {hi}] for max {max} at {threshold}"));
        }
    }
    Ok(())
}

#[test]
fn hp_variation_bounds_over_ten_thousand_parties() {
    let cfg = HpVariationConfig::default();
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..10_000u64 {
        let party = sample_party(i);
        let (varied, threshold) = apply_hp_variation_traced(&party, &cfg, &mut RngStream::new(i ^ 0xABCD));
        check_hp_bounds(&party, &varied, threshold, &cfg).unwrap();
        seen.insert((threshold * 100.0) as u32);
    }
    assert_eq!(seen.len(), cfg.thresholds.len());
}

proptest! {
    #[test]
    fn hp_variation_bounds_for_any_config(
        seed in any::<u64>(),
        thresholds in prop::collection::vec(0.01f64..=1.0, 1..6),
        noise in 0.0f64..0.45,
        floor in 1i32..5,
    ) {
        let cfg = HpVariationConfig { thresholds, noise, floor };
        cfg.validate().unwrap();
        let party = sample_party(seed);
        let (varied, threshold) = apply_hp_variation_traced(&party, &cfg, &mut RngStream::new(seed));
        prop_assert!(check_hp_bounds(&party, &varied, threshold, &cfg).is_ok(), "{:?}", check_hp_bounds(&party, &varied, threshold, &cfg));
    }
}
