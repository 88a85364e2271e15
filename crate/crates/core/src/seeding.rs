//! Deterministic derivation of independent random streams.
//!
//! A trial seed is mixed from the master seed and the trial coordinates; each
//! stage of a trial (placement, channel draw, pilot noise, report sampling)
//! then gets its own ChaCha8 stream so that adding draws to one stage never
//! shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage labels used when forking a trial seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Channel = 2,
    Estimation = 3,
    Reports = 4,
    Baseline = 5,
}

/// SplitMix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed.
pub fn combine(words: &[u64]) -> u64 {
    words.iter().fold(0x6A09_E667_F3BC_C908, |acc, &w| mix(acc ^ mix(w)))
}

/// Seed for one Monte-Carlo trial at one sweep point.
pub fn trial_seed(master: u64, axis_index: u64, trial: u64) -> u64 {
    combine(&[master, axis_index, trial])
}

/// Independent stream for one stage of a trial.
pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(combine(&[seed, which as u64]))
}

/// Independent stream for the `index`-th sub-task of a stage.
pub fn substream(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(combine(&[seed, which as u64, index]))
}
