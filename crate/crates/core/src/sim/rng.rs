//! Seedable, portable random streams.
//!
//! Every stream is a ChaCha8 generator seeded from a 64-bit seed. Child
//! streams are derived with [`mix_seed`], a SplitMix64 finalizer over
//! `base + (index + 1) * φ64`. For a fixed base the mapping is a bijection on
//! the index, so per-simulation seeds within a batch never collide and do not
//! depend on execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::content::DiceExpr;

pub const ALGORITHM: &str = "chacha8";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named sub-streams, so that e.g. party generation and policy sampling
/// draw from independent sequences under the same experiment seed.
pub fn stream_seed(base: u64, label: &str, index: u64) -> u64 {
    let tag = label
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3));
    mix_seed(mix_seed(base, tag), index)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    draws: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            draws: 0,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn algorithm(&self) -> &'static str {
        ALGORITHM
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Independent child stream; does not consume draws from `self`.
    pub fn split(&self, index: u64) -> RngStream {
        RngStream::new(mix_seed(self.seed, index))
    }

    pub fn labelled(&self, label: &str, index: u64) -> RngStream {
        RngStream::new(stream_seed(self.seed, label, index))
    }

    /// Uniform in `1..=sides`.
    pub fn die(&mut self, sides: u32) -> u32 {
        self.draws += 1;
        self.inner.random_range(1..=sides.max(1))
    }

    pub fn d20(&mut self) -> u32 {
        self.die(20)
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: u32) -> u32 {
        self.draws += 1;
        self.inner.random_range(0..n.max(1))
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.draws += 1;
        self.inner.random::<f64>()
    }

    pub fn roll(&mut self, expr: &DiceExpr) -> i32 {
        roll(self, expr)
    }
}

pub fn roll(rng: &mut RngStream, expr: &DiceExpr) -> i32 {
    let dice: i32 = (0..expr.count).map(|_| rng.die(expr.sides) as i32).sum();
    dice + expr.modifier
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_die() {
        let mut rng = RngStream::new(1);
        assert_eq!(rng.roll(&"1d1+3".parse().unwrap()), 4);
    }

    #[test]
    fn roll_stays_in_range() {
        let mut rng = RngStream::new(99);
        let e: DiceExpr = "2d6".parse().unwrap();
        let mut seen = [false; 13];
        for _ in 0..5000 {
            let v = rng.roll(&e);
            assert!((2..=12).contains(&v));
            seen[v as usize] = true;
        }
        assert!(seen[2..].iter().all(|&s| s));
    }

    #[test]
    fn golden_d20_sequence() {
        // Recorded once from this generator; guards against silent changes
        // to the RNG algorithm or seeding.
        let mut rng = RngStream::new(42);
        let seq: Vec<u32> = (0..16).map(|_| rng.d20()).collect();
        assert_eq!(seq, GOLDEN_SEED_42);
        assert_eq!(rng.draws(), 16);
    }

    const GOLDEN_SEED_42: [u32; 16] = [5, 14, 3, 20, 16, 9, 7, 13, 15, 6, 13, 3, 7, 7, 4, 17];

    #[test]
    fn batch_seeds_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..100_000 {
            assert!(seen.insert(mix_seed(7, i)));
        }
    }

    #[test]
    fn split_does_not_consume() {
        let a = RngStream::new(5);
        let before = a.draws();
        let mut c1 = a.split(3);
        let mut c2 = a.split(3);
        assert_eq!(a.draws(), before);
        assert_eq!(c1.d20(), c2.d20());
    }
}
