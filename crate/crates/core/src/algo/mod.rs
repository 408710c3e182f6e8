//! Learning rules: DDPG and TD3 with quantile critics, rotating actor-critic
//! sets, PPO with a Bernoulli policy, and exploration noise.

mod actor_critic;
mod bootstrap;
pub mod bundle;
mod multi;
mod noise;
mod ppo;
mod quantile;
mod report;

pub use actor_critic::{
    critic_input, ddpg_update, mean, td3_targets, AcConfig, ActorCritic, ActorState, CriticPair, LossReport, Policy,
    QuantileCritic,
};
pub use bundle::{decode_policy, load_policy, LoadedPolicy};
pub use bootstrap::{sample_head, sample_head_mask};
pub use multi::{multi_ac_rotate, spread_gammas, AcPairSet};
pub use noise::*;
pub use ppo::{
    bernoulli_log_prob, bernoulli_policy, clipped_surrogate, gae, logistic_squash, EpisodeCursor, EpisodeSummary,
    PpoAgent, PpoConfig, PpoReport, Rollout, Trajectory,
};
pub use quantile::{quantile_huber_loss, quantile_midpoints};
pub use report::{LossCsv, LossRow, LOSS_CSV_HEADER};
