use crate::env::observation::{FEET, HEADING, KNEES, RESIDUAL, TARGET};
use crate::env::walker::{WalkerState, HEAD_HEIGHT, LEFT, RIGHT};
use crate::error::{Error, Result};

use super::formulas::*;

/// Everything the formulas read from one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext<'a> {
    /// Pelvis planar velocity in world axes.
    pub velocity: [f64; 2],
    pub target: [f64; 2],
    pub action: &'a [f64],
    pub heading: f64,
    /// Positions relative to the pelvis, world axes.
    pub head: [f64; 3],
    pub feet: [[f64; 3]; 2],
    pub knees: [f64; 2],
    pub pelvis_rotation: [f64; 3],
    pub head_velocity: [f64; 2],
    pub torso_velocity: [f64; 2],
}

impl<'a> StepContext<'a> {
    pub fn from_state(state: &WalkerState, target: [f64; 2], action: &'a [f64]) -> Self {
        StepContext {
            velocity: state.v_xz,
            target,
            action,
            heading: state.heading,
            head: state.head(),
            feet: [state.foot(LEFT), state.foot(RIGHT)],
            knees: state.knee_angle,
            pelvis_rotation: state.pelvis_rotation(),
            head_velocity: state.v_xz,
            torso_velocity: state.v_xz,
        }
    }

    /// Rebuilds the context from an untransformed observation of the
    /// post-step state. Velocity is recovered as target minus residual.
    ///
    /// Observations built with the rotation transform do not carry the world
    /// heading and cannot be used here.
    pub fn from_observation(next_obs: &[f64], action: &'a [f64]) -> Self {
        let target = [next_obs[TARGET], next_obs[TARGET + 1]];
        let velocity = [target[0] - next_obs[RESIDUAL], target[1] - next_obs[RESIDUAL + 1]];
        let foot = |k: usize| {
            let i = FEET + 3 * k;
            [next_obs[i], next_obs[i + 1], next_obs[i + 2]]
        };
        let heading = next_obs[HEADING];
        StepContext {
            velocity,
            target,
            action,
            heading,
            // Rotation about the vertical axis leaves the head offset unchanged.
            head: [0.0, HEAD_HEIGHT, 0.0],
            feet: [foot(0), foot(1)],
            knees: [next_obs[KNEES], next_obs[KNEES + 1]],
            pelvis_rotation: [0.0, heading, 0.0],
            head_velocity: velocity,
            torso_velocity: velocity,
        }
    }

    pub fn deviation_sq(&self) -> f64 {
        (self.velocity[0] - self.target[0]).powi(2) + (self.velocity[1] - self.target[1]).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardBase {
    Round1,
    Round2,
    Inverse,
    Relative,
    ClippedHigh,
    Exponential,
    Rukia,
    MattiasScaled,
}

impl RewardBase {
    pub const ALL: [RewardBase; 8] = [
        RewardBase::Round1,
        RewardBase::Round2,
        RewardBase::Inverse,
        RewardBase::Relative,
        RewardBase::ClippedHigh,
        RewardBase::Exponential,
        RewardBase::Rukia,
        RewardBase::MattiasScaled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewardBase::Round1 => "round1",
            RewardBase::Round2 => "round2",
            RewardBase::Inverse => "inverse",
            RewardBase::Relative => "relative",
            RewardBase::ClippedHigh => "clipped_high",
            RewardBase::Exponential => "exponential",
            RewardBase::Rukia => "rukia",
            RewardBase::MattiasScaled => "mattias_scaled",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Penalty {
    /// Non-positive; added rather than subtracted.
    CrossingLegs,
    Scissors,
    Sideways,
    PelvisOrientation,
    KneeBend,
    FeetDirection,
}

impl Penalty {
    pub const ALL: [Penalty; 6] = [
        Penalty::CrossingLegs,
        Penalty::Scissors,
        Penalty::Sideways,
        Penalty::PelvisOrientation,
        Penalty::KneeBend,
        Penalty::FeetDirection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Penalty::CrossingLegs => "crossing_legs",
            Penalty::Scissors => "scissors",
            Penalty::Sideways => "sideways",
            Penalty::PelvisOrientation => "pelvis_orientation",
            Penalty::KneeBend => "knee_bend",
            Penalty::FeetDirection => "feet_direction",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Unweighted value; `knee_bend` sums both knees.
    pub fn value(self, ctx: &StepContext<'_>) -> Result<f64> {
        let [l, r] = ctx.feet;
        Ok(match self {
            Penalty::CrossingLegs => penalty_crossing_legs(ctx.head, [0.0; 3], l, r),
            Penalty::Scissors => penalty_scissors(l, r, ctx.heading),
            Penalty::Sideways => penalty_sideways(ctx.target, ctx.heading)?,
            Penalty::PelvisOrientation => penalty_pelvis_orientation(ctx.pelvis_rotation, 1.0),
            Penalty::KneeBend => ctx.knees.iter().map(|&t| penalty_knee_straight(t, 1.0, KNEE_OFFSET)).sum(),
            Penalty::FeetDirection => penalty_feet_direction(l, r, ctx.target)?,
        })
    }
}

/// A base reward plus weighted shaping penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    pub base: RewardBase,
    /// Constant `b` of the round-two reward.
    pub base_constant: f64,
    pub penalties: Vec<(Penalty, f64)>,
    pub rescale: bool,
    pub effort_coeff: f64,
    /// Positive-exponent reading of the exponential reward.
    pub exponential_literal: bool,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec::new(RewardBase::Round2)
    }
}

impl RewardSpec {
    pub fn new(base: RewardBase) -> Self {
        RewardSpec {
            base,
            base_constant: DEFAULT_BASE,
            penalties: Vec::new(),
            rescale: false,
            effort_coeff: EFFORT_COEFF,
            exponential_literal: false,
        }
    }

    /// The evaluation metric: round two with `b = 10`, no shaping.
    pub fn score() -> Self {
        Self::new(RewardBase::Round2)
    }

    pub fn with_penalty(mut self, penalty: Penalty, weight: f64) -> Self {
        match self.penalties.iter_mut().find(|(p, _)| *p == penalty) {
            Some(slot) => slot.1 = weight,
            None => self.penalties.push((penalty, weight)),
        }
        self
    }

    pub fn with_base_constant(mut self, b: f64) -> Self {
        self.base_constant = b;
        self
    }

    pub fn with_rescale(mut self, on: bool) -> Self {
        self.rescale = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (p, w) in &self.penalties {
            if !w.is_finite() {
                return Err(Error::config(format!("reward.w.{}", p.name()), "weight must be finite"));
            }
        }
        if !self.base_constant.is_finite() || !self.effort_coeff.is_finite() {
            return Err(Error::config("reward.b", "must be finite"));
        }
        Ok(())
    }

    fn base_value(&self, ctx: &StepContext<'_>) -> Result<f64> {
        let (v, w) = (ctx.velocity, ctx.target);
        let round2 = || reward_round2_with_effort(v, w, ctx.action, self.base_constant, self.effort_coeff);
        Ok(match self.base {
            RewardBase::Round1 => reward_round1(v[0]),
            RewardBase::Round2 => round2(),
            RewardBase::Inverse => reward_inverse(v, w),
            RewardBase::Relative => reward_relative(v, w)?,
            RewardBase::ClippedHigh => reward_clipped_high(round2()),
            RewardBase::Exponential => reward_exponential(v, w, self.exponential_literal),
            RewardBase::Rukia => reward_rukia(v, ctx.head_velocity, ctx.torso_velocity, w, ctx.knees)?.0,
            RewardBase::MattiasScaled => unreachable!("handled in evaluate"),
        })
    }

    /// Shaping total as a non-negative cost: weighted penalties minus the
    /// weighted (non-positive) crossing term.
    pub fn shaping_cost(&self, ctx: &StepContext<'_>) -> Result<f64> {
        let mut cost = 0.0;
        for &(p, weight) in &self.penalties {
            let value = p.value(ctx)?;
            cost += match p {
                Penalty::CrossingLegs => -weight * value,
                _ => weight * value,
            };
        }
        Ok(cost)
    }

    pub fn evaluate(&self, ctx: &StepContext<'_>) -> Result<f64> {
        let r = match self.base {
            RewardBase::MattiasScaled => reward_mattias(ctx.deviation_sq(), self.shaping_cost(ctx)?),
            _ => self.base_value(ctx)? - self.shaping_cost(ctx)?,
        };
        Ok(if self.rescale { rescale_reward(r) } else { r })
    }

    /// `(key, value)` pairs as they appear in a run configuration.
    pub fn to_config_pairs(&self, prefix: &str) -> Vec<(String, String)> {
        let mut out = vec![
            (format!("{prefix}base"), self.base.name().to_string()),
            (format!("{prefix}b"), format!("{}", self.base_constant)),
            (format!("{prefix}rescale"), self.rescale.to_string()),
            (format!("{prefix}effort"), format!("{}", self.effort_coeff)),
            (format!("{prefix}exp_literal"), self.exponential_literal.to_string()),
        ];
        for p in Penalty::ALL {
            let w = self.penalties.iter().find(|(q, _)| *q == p).map_or(0.0, |x| x.1);
            out.push((format!("{prefix}w.{}", p.name()), format!("{w}")));
        }
        out
    }
}

/// Reward courses applied one after another by global step.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSchedule {
    stages: Vec<(RewardSpec, u64)>,
}

impl StageSchedule {
    pub fn new(stages: Vec<(RewardSpec, u64)>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidArgument("stage schedule needs at least one course".into()));
        }
        if stages.iter().any(|(_, b)| *b == 0) {
            return Err(Error::InvalidArgument("course budgets must be positive".into()));
        }
        Ok(StageSchedule { stages })
    }

    pub fn single(spec: RewardSpec) -> Self {
        StageSchedule {
            stages: vec![(spec, u64::MAX)],
        }
    }

    pub fn stages(&self) -> &[(RewardSpec, u64)] {
        &self.stages
    }

    pub fn stage_index(&self, global_step: u64) -> usize {
        let mut end = 0u64;
        for (i, (_, budget)) in self.stages.iter().enumerate() {
            end = end.saturating_add(*budget);
            if global_step < end {
                return i;
            }
        }
        self.stages.len() - 1
    }
}

/// Spec whose budget window contains `global_step`; the last course persists.
pub fn stage_reward(schedule: &StageSchedule, global_step: u64) -> &RewardSpec {
    &schedule.stages[schedule.stage_index(global_step)].0
}
