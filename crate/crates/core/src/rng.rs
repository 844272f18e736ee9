//! Keyed random streams.
//!
//! Every random quantity in the toolkit is drawn from a ChaCha12 stream
//! selected by `(seed, stream)`. Distinct stream ids give independent
//! sequences, so work can be split over threads in any order without
//! changing the result.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id used for the truth pilot run.
pub const PILOT_STREAM: u64 = 0xF00D_0000_0000_0000;
/// Offset separating long-run covariance replications from estimator replications.
pub const LRC_STREAM_BASE: u64 = 0x4C52_0000_0000_0000;
/// Offset for the NED coupling estimator.
pub const NED_STREAM_BASE: u64 = 0x4E45_0000_0000_0000;

/// Stream for replication `rep` at ladder rung `rung`.
pub fn ladder_stream(rung: usize, rep: usize) -> u64 {
    ((rung as u64) << 32) | rep as u64
}
