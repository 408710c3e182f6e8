//! Reward and shaping-penalty registry, reward courses and goal relabeling.

mod formulas;
mod relabel;
mod spec;

pub use formulas::*;
pub use relabel::{relabel_synthetic_goal, relabel_with_goal, SYNTHETIC_GOAL_RANGE};
pub use spec::{stage_reward, Penalty, RewardBase, RewardSpec, StageSchedule, StepContext};
