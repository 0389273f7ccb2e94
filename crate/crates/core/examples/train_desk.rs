//! Desk-scale training with the DM heuristic simulated on every training
//! party, then a comparison over the last steps of each seed.
//!
//!     cargo run --release --example train_desk [-- STEPS SIMS SEEDS OUT_DIR [CONFIG]]

use ntrl::content::ContentPack;
use ntrl::training::{read_log, train, ExperimentConfig};

fn main() -> ntrl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let mut cfg = match args.get(4) {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.train.steps = arg(0, 2000);
    cfg.train.sims_per_step = arg(1, 25) as u32;
    cfg.train.seeds = arg(2, 3) as u32;
    cfg.train.checkpoint_every = 500;
    cfg.train.paired_dm = true;
    cfg.train.out_dir = args.get(3).map_or("runs/desk".into(), Into::into);

    let pack = ContentPack::bundled()?;
    let runs = train(&cfg, &pack)?;
    let window = 500.min(cfg.train.steps as usize);
    println!("seed  reward(ntrl/dm)   rounds(ntrl/dm)  hp%(ntrl/dm)   win(ntrl/dm)  tpk(ntrl/dm)  enemies");
    for run in &runs {
        let log = read_log(&run.log)?;
        let tail: Vec<_> = log.iter().rev().take(window).filter(|r| r.metrics.is_some()).collect();
        let n = tail.len() as f64;
        let mean = |f: &dyn Fn(&ntrl::training::TrainStepRecord) -> f64| tail.iter().map(|r| f(r)).sum::<f64>() / n;
        let m = |r: &ntrl::training::TrainStepRecord| r.metrics.clone().unwrap();
        let d = |r: &ntrl::training::TrainStepRecord| r.dm.clone().unwrap().metrics;
        println!(
            "{:<5} {:>7.0}/{:<7.0} {:>6.2}/{:<6.2}    {:>5.1}/{:<5.1}   {:>5.2}/{:<5.2}   {:>5.3}/{:<5.3}  {:.2}",
            run.seed,
            mean(&|r| r.reward.unwrap()),
            mean(&|r| r.dm.as_ref().unwrap().reward),
            mean(&|r| m(r).fight_longevity),
            mean(&|r| d(r).fight_longevity),
            mean(&|r| m(r).remaining_party_hp_pct),
            mean(&|r| d(r).remaining_party_hp_pct),
            mean(&|r| m(r).win_probability),
            mean(&|r| d(r).win_probability),
            mean(&|r| m(r).tpk_rate()),
            mean(&|r| d(r).tpk_rate()),
            mean(&|r| r.encounter.len() as f64),
        );
    }
    Ok(())
}
