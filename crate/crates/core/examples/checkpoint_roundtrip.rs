//! Save a policy network to a checkpoint, load it back and confirm the
//! action distributions are bit-identical; then show that a flipped byte is
//! detected.
//!
//!     cargo run --example checkpoint_roundtrip [-- OUT_FILE]

use ntrl::content::ContentPack;
use ntrl::net::{encode_party, AdamConfig, ArchConfig, Checkpoint, CheckpointMeta, PolicyNetwork};
use ntrl::sim::{Party, RngStream};
use ntrl::training::{generate_party, RewardConfig};

fn main() -> ntrl::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "roundtrip.ckpt".into());
    let pack = ContentPack::bundled()?;
    let arch = ArchConfig::for_pack(&pack);
    let net = PolicyNetwork::<f32>::random(arch.clone(), 7);
    let meta = CheckpointMeta {
        arch: arch.clone(),
        step: 0,
        seed: 7,
        reward_config_hash: RewardConfig::default().hash(),
        experiment_digest: None,
        optimizer: AdamConfig::default(),
    };
    let ck = Checkpoint::from_network(&net, meta);
    ck.save(&out)?;
    let loaded: PolicyNetwork<f32> = Checkpoint::load_for(&out, &arch)?.network()?;
    println!("{} parameters written to {out} ({} bytes)", net.param_count(), ck.to_bytes()?.len());

    let mut rng = RngStream::new(1);
    let mut identical = true;
    for _ in 0..100 {
        let party: Party = generate_party(&pack, &mut rng);
        let f = encode_party(&party, &pack, &arch)?;
        identical &= net.forward(&f, &vec![0; arch.n_enemy_classes])? == loaded.forward(&f, &vec![0; arch.n_enemy_classes])?;
    }
    println!("distributions identical over 100 parties: {identical}");

    let mut bytes = ck.to_bytes()?;
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    match Checkpoint::from_bytes(&bytes) {
        Err(e) => println!("flipped byte rejected: {} ({})", e.code(), e),
        Ok(_) => println!("flipped byte was NOT detected"),
    }
    Ok(())
}
