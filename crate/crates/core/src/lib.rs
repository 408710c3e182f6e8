//! Distributed continuous-control reinforcement learning on a surrogate of the
//! prosthetics locomotion task.
//!
//! The crate is organized bottom-up:
//!
//! * [`nn`]: dense networks with exact gradients, optimizers, checkpoints.
//! * [`env`]: the seeded surrogate walker, target-velocity process and observation transforms.
//! * [`reward`]: every reward and shaping term, reward staging and goal relabeling.
//! * [`replay`]: ring buffer, sum tree and prioritized replay.
//! * [`algo`]: TD3 with quantile critics, DDPG variants, PPO and exploration noise.
//! * [`distributed`]: wire format, transports, sampler and trainer loops.
//! * [`inference`]: ensembles, critic-guided action search and evaluation.
//! * [`run`]: run configuration, the training pipeline and learning-curve plots.

pub mod algo;
pub mod distributed;
pub mod env;
mod error;
pub mod inference;
pub mod nn;
pub mod replay;
pub mod reward;
pub mod run;
mod wire;

pub use error::{Error, Result};

/// Seeded generator used everywhere; ChaCha output is identical across platforms.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
