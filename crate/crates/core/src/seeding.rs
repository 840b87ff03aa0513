//! Seed fan-out.
//!
//! A run has one master seed. Each component draws from its own ChaCha8
//! stream: the generator is keyed by the master seed and the stream id is
//! fixed per component, so adding draws in one component never shifts the
//! numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Reset seeds for training episodes.
    Env = 1,
    /// Reset seeds for evaluation episodes.
    Eval = 2,
    /// Reward-model initialization and LOO noise.
    RewardModel = 3,
    /// Actor/critic initialization, exploration and update noise.
    Sac = 4,
    /// Replay and trajectory-buffer minibatch indices.
    Buffer = 5,
}

pub fn stream_rng(master_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream as u64);
    rng
}
