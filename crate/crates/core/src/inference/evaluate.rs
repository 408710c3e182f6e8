use serde_json::json;

use crate::env::{frameskip_step, EnvConfig, ProstheticsEnv};
use crate::error::{Error, Result};
use crate::reward::{RewardSpec, DEFAULT_BASE};

pub const DEFAULT_TRIALS: usize = 10;
/// Local validation size used to compare inference tricks.
pub const VALIDATION_TRIALS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub trials: usize,
    pub seed_base: u64,
    pub env: EnvConfig,
    pub frameskip: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            trials: DEFAULT_TRIALS,
            seed_base: 0,
            env: EnvConfig {
                reward: RewardSpec::score(),
                ..Default::default()
            },
            frameskip: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub score: f64,
    pub steps: u32,
    pub fall: bool,
}

impl TrialResult {
    pub fn to_json(&self) -> String {
        json!({
            "trial": self.trial,
            "seed": self.seed,
            "score": self.score,
            "steps": self.steps,
            "fall": self.fall,
        })
        .to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub trials: Vec<TrialResult>,
    pub mean: f64,
}

impl EvalReport {
    pub fn fall_rate(&self) -> f64 {
        self.trials.iter().filter(|t| t.fall).count() as f64 / self.trials.len() as f64
    }

    pub fn mean_steps(&self) -> f64 {
        self.trials.iter().map(|t| t.steps as f64).sum::<f64>() / self.trials.len() as f64
    }

    pub fn summary_json(&self) -> String {
        json!({
            "trials": self.trials.len(),
            "mean": self.mean,
            "fall_rate": self.fall_rate(),
            "mean_steps": self.mean_steps(),
        })
        .to_string()
    }
}

/// Runs `trials` seeded episodes with the round-two score. The policy sees
/// the observation and the frame index. A policy error ends its trial as a
/// fall at step 0 with score 0.
pub fn evaluate(policy: &mut dyn FnMut(&[f64], u32) -> Result<Vec<f64>>, cfg: &EvalConfig) -> Result<EvalReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let mut env = ProstheticsEnv::new(cfg.env.clone(), cfg.seed_base)?;
    let mut trials = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let seed = cfg.seed_base.wrapping_add(trial as u64);
        trials.push(run_trial(policy, &mut env, cfg.frameskip, trial, seed)?);
    }
    let mean = trials.iter().map(|t| t.score).sum::<f64>() / trials.len() as f64;
    Ok(EvalReport { trials, mean })
}

fn run_trial(
    policy: &mut dyn FnMut(&[f64], u32) -> Result<Vec<f64>>,
    env: &mut ProstheticsEnv,
    frameskip: u32,
    trial: usize,
    seed: u64,
) -> Result<TrialResult> {
    let faulted = TrialResult {
        trial,
        seed,
        score: 0.0,
        steps: 0,
        fall: true,
    };
    let mut obs = env.reset(seed);
    let mut score = 0.0;
    let mut steps = 0u32;
    loop {
        let action = match policy(&obs, steps) {
            Ok(a) => a,
            Err(_) => return Ok(faulted),
        };
        let out = match frameskip_step(env, &action, frameskip) {
            Ok(o) => o,
            Err(Error::Shape(_)) => return Ok(faulted),
            Err(e) => return Err(e),
        };
        score += out.score;
        steps += out.frames;
        obs = out.obs;
        if out.done.is_done() {
            assert!(
                score <= DEFAULT_BASE * steps as f64 + 1e-9,
                "score {score} above the ceiling after {steps} steps"
            );
            if !score.is_finite() {
                return Err(Error::NonFinite(format!("score of trial {trial}")));
            }
            return Ok(TrialResult {
                trial,
                seed,
                score,
                steps,
                fall: out.done.is_absorbing(),
            });
        }
    }
}
