//! Hierarchical seed splitting.
//!
//! Every random stream in a run is addressed by a path from the master seed:
//! `master -> trial t -> stream label -> link/device ids`. Each step mixes the
//! parent value with the child index through SplitMix64, so streams never
//! depend on how many draws another stream made or in which order workers ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stream labels under a trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Trial = 1,
    Topology = 2,
    Channel = 3,
    Noise = 4,
    Payload = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    pub fn child(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(index)))
    }

    pub fn stream(self, s: Stream) -> Seed {
        self.child(s as u64)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Seed of trial `t` under `master_seed`.
pub fn trial_seed(master_seed: u64, t: u64) -> u64 {
    Seed(master_seed).stream(Stream::Trial).child(t).0
}
