//! Seed splitting.
//!
//! A master seed is expanded into independent ChaCha8 streams keyed by
//! `(experiment, replication, purpose)`. Keys are folded through the
//! splitmix64 finalizer, so the stream of replication `r` never depends on
//! which other replications ran or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Count = 1,
    Positions = 2,
    Marks = 3,
    Insertions = 4,
    Auxiliary = 5,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `derive(master, e, r)` followed by a purpose tag.
pub fn derive(master: u64, experiment: u64, replication: u64, purpose: Purpose) -> u64 {
    let mut h = splitmix64(master);
    for word in [experiment, replication, purpose as u64] {
        h = splitmix64(h ^ word);
    }
    h
}

pub fn stream(master: u64, experiment: u64, replication: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, experiment, replication, purpose))
}

/// Seed for one replication, from which [`crate::process::sample_ppp`]
/// derives its own count, position and mark streams.
pub fn replication_seed(master: u64, experiment: u64, replication: u64) -> u64 {
    derive(master, experiment, replication, Purpose::Auxiliary)
}
