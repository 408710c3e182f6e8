//! Seeded surrogate of the prosthetics locomotion task.

mod episode;
mod lama;
pub mod observation;
mod stats;
mod target;
pub mod walker;

pub use episode::{frameskip_step, EnvConfig, EpisodeLog, ProstheticsEnv, StepOutcome, LOG_RECORD_FLOATS};
pub use lama::{lama_pool, lama_pool_with_scores, HistoryWindow};
pub use observation::{build_observation, clip_requested, soft_target_update, ObsTransforms, Observation, OBS_DIM};
pub use stats::{RunningStats, NORMALIZE_CLIP};
pub use target::{target_step, TargetProcess, TargetStep, DEFAULT_JUMP_PROB, HEADING_JUMP, INITIAL_SPEED, SPEED_JUMP};
pub use walker::{walker_step, Mixing, Termination, WalkerState, ACTION_DIM};
