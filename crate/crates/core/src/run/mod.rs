//! Run configuration, the training pipeline, evaluation and plots.

mod config;
mod evaluate;
mod plot;
mod train;

pub use config::{Kind, RunConfig, SCHEMA};
pub use evaluate::{cmd_evaluate, inspect_replay, PolicySource};
pub use plot::{cmd_plot, moving_average, read_curve, render_svg, Curve, MOVING_AVERAGE};
pub use train::{
    cmd_train, Progress, TrainOptions, TrainSummary, CHECKPOINT_DIR, EPISODES_FILE, EPISODES_HEADER,
    LATEST_CHECKPOINT, LOSSES_FILE, PROGRESS_FILE, REPLAY_FILE, SNAPSHOT_FILE,
};
