//! Deployment-time policy composition: checkpoint ensembles with action
//! mixtures, critic-guided action search, task-specific model switching,
//! curriculum speeds and seeded evaluation.

mod ensemble;
mod evaluate;
mod schedule;
mod spec;

pub use ensemble::{critic_guided_act, ensemble_act, mixture_candidates};
pub use evaluate::{evaluate, EvalConfig, EvalReport, TrialResult, DEFAULT_TRIALS, VALIDATION_TRIALS};
pub use schedule::{
    curriculum_stage, task_switch, CurriculumSchedule, SwitchRules, TaskMode, CURRICULUM_FAST, CURRICULUM_FINAL,
    CURRICULUM_STAGES,
};
pub use spec::{EnsembleManifest, EnsembleSpec};

/// Candidate count and spread of critic-guided search.
pub const GUIDED_CANDIDATES: usize = 2000;
pub const GUIDED_SIGMA: f64 = 0.2;
