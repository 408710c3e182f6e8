use std::io::Write;

use super::observation::{build_observation, clip_requested, soft_target_update, ObsTransforms, Observation};
use super::target::{TargetProcess, DEFAULT_JUMP_PROB, INITIAL_SPEED};
use super::walker::{walker_step, Mixing, Termination, WalkerState, ACTION_DIM, DT, EPISODE_STEPS};
use crate::error::{Error, Result};
use crate::replay::DoneKind;
use crate::reward::{RewardSpec, StepContext};

/// Seeds of the target process are offset from the episode seed by this constant.
const TARGET_SEED_SALT: u64 = 0x7a9e_51c3_0d1b_44f2;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub jump_prob: f64,
    /// Initial target heading.
    pub r0: f64,
    pub dt: f64,
    pub max_steps: u32,
    pub transforms: ObsTransforms,
    /// Training reward. The round-two score is always reported alongside.
    pub reward: RewardSpec,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            jump_prob: DEFAULT_JUMP_PROB,
            r0: 0.0,
            dt: DT,
            max_steps: EPISODE_STEPS,
            transforms: ObsTransforms::default(),
            reward: RewardSpec::score(),
        }
    }
}

impl EnvConfig {
    /// Initial heading of one radian, as printed for the original task.
    pub const LITERAL_R0: f64 = 1.0;

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.jump_prob) {
            return Err(Error::config("env.jump_prob", "must lie in [0, 1]"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("env.dt", "must be positive"));
        }
        if self.max_steps == 0 || self.max_steps > EPISODE_STEPS {
            return Err(Error::config("env.max_steps", format!("must lie in 1..={EPISODE_STEPS}")));
        }
        self.reward.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Observation,
    /// Training reward from the configured spec.
    pub reward: f64,
    /// Round-two reward with `b = 10`.
    pub score: f64,
    pub done: DoneKind,
    /// Number of simulator frames this outcome covers.
    pub frames: u32,
}

/// Writes one record per step: `t`, the 12 state floats, the 19 action
/// floats, reward and a done flag, all little-endian f64.
pub struct EpisodeLog<W: Write> {
    out: W,
}

pub const LOG_RECORD_FLOATS: usize = 1 + 12 + ACTION_DIM + 2;

impl<W: Write> EpisodeLog<W> {
    pub fn new(out: W) -> Self {
        EpisodeLog { out }
    }

    pub fn record(&mut self, state: &WalkerState, action: &[f64], reward: f64, done: bool) -> Result<()> {
        let mut buf = Vec::with_capacity(8 * LOG_RECORD_FLOATS);
        buf.extend_from_slice(&(state.t as f64).to_le_bytes());
        crate::wire::put_f64s(&mut buf, &state.to_array());
        crate::wire::put_f64s(&mut buf, action);
        buf.extend_from_slice(&reward.to_le_bytes());
        buf.extend_from_slice(&(done as u8 as f64).to_le_bytes());
        self.out.write_all(&buf)?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Surrogate of the round-two task: walker, moving target and rewards.
#[derive(Debug, Clone)]
pub struct ProstheticsEnv {
    config: EnvConfig,
    mixing: Mixing,
    state: WalkerState,
    target: TargetProcess,
    observed_target: [f64; 2],
    clamp_warnings: u64,
    done: bool,
}

impl ProstheticsEnv {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let target = TargetProcess::new(INITIAL_SPEED, config.r0, config.jump_prob, seed ^ TARGET_SEED_SALT);
        let observed_target = target.cartesian();
        Ok(ProstheticsEnv {
            config,
            mixing: Mixing::standard(),
            state: WalkerState::initial(),
            target,
            observed_target,
            clamp_warnings: 0,
            done: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &WalkerState {
        &self.state
    }

    pub fn target(&self) -> &TargetProcess {
        &self.target
    }

    pub fn target_mut(&mut self) -> &mut TargetProcess {
        &mut self.target
    }

    pub fn set_reward(&mut self, reward: RewardSpec) {
        self.config.reward = reward;
    }

    /// Action components clamped into `[0, 1]` since construction.
    pub fn clamp_warnings(&self) -> u64 {
        self.clamp_warnings
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts a new episode whose target process is seeded by `seed`.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let c = &self.config;
        self.target = TargetProcess::new(INITIAL_SPEED, c.r0, c.jump_prob, seed ^ TARGET_SEED_SALT);
        self.state = WalkerState::initial();
        self.observed_target = self.target.cartesian();
        self.done = false;
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        build_observation(&self.state, self.observed_target, &self.config.transforms)
    }

    /// One simulator frame.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != ACTION_DIM {
            return Err(Error::Shape(format!("action has {} components, expected {ACTION_DIM}", action.len())));
        }
        if self.done {
            return Err(Error::InvalidArgument("step called on a finished episode".into()));
        }
        let (next, term, clamped) = walker_step(&self.mixing, &self.state, action, self.config.dt);
        self.clamp_warnings += clamped as u64;
        self.state = next;
        let w = self.target.step().target;

        let applied: Vec<f64> = action
            .iter()
            .map(|&a| if a.is_nan() { 0.0 } else { a.clamp(0.0, 1.0) })
            .collect();
        let plain = build_observation(&self.state, w, &ObsTransforms::default());
        let ctx = StepContext::from_observation(&plain, &applied);
        let reward = self.config.reward.evaluate(&ctx)?;
        let score = RewardSpec::score().evaluate(&ctx)?;

        let t = &self.config.transforms;
        let mut observed = match t.soft_target_tau {
            Some(tau) => soft_target_update(self.observed_target, w, tau),
            None => w,
        };
        if let Some((tx, tz)) = t.clip_requested {
            observed = clip_requested(observed, self.state.v_xz, tx, tz);
        }
        self.observed_target = observed;

        let done = if term == Termination::Fall {
            DoneKind::Fall
        } else if self.state.t >= self.config.max_steps {
            DoneKind::TimeLimit
        } else {
            DoneKind::None
        };
        self.done = done.is_done();
        Ok(StepOutcome {
            obs: self.observe(),
            reward,
            score,
            done,
            frames: 1,
        })
    }
}

/// Repeats `action` for `k` frames or until the episode ends, summing rewards.
pub fn frameskip_step(env: &mut ProstheticsEnv, action: &[f64], k: u32) -> Result<StepOutcome> {
    if k == 0 {
        return Err(Error::InvalidArgument("frameskip must be at least 1".into()));
    }
    let mut total = env.step(action)?;
    for _ in 1..k {
        if total.done.is_done() {
            break;
        }
        let o = env.step(action)?;
        total.obs = o.obs;
        total.reward += o.reward;
        total.score += o.score;
        total.done = o.done;
        total.frames += 1;
    }
    Ok(total)
}
