use rand::Rng;

use crate::env::observation::{RESIDUAL, TARGET};
use crate::error::Result;
use crate::replay::Transition;

use super::spec::{RewardSpec, StepContext};

pub const SYNTHETIC_GOAL_RANGE: f64 = 2.5;

/// Transplants a target drawn from `U(-2.5, 2.5)^2` into both observations
/// and recomputes the reward.
pub fn relabel_synthetic_goal<R: Rng + ?Sized>(t: &Transition, rng: &mut R, spec: &RewardSpec) -> Result<Transition> {
    let goal = [
        rng.random_range(-SYNTHETIC_GOAL_RANGE..SYNTHETIC_GOAL_RANGE),
        rng.random_range(-SYNTHETIC_GOAL_RANGE..SYNTHETIC_GOAL_RANGE),
    ];
    relabel_with_goal(t, goal, spec)
}

/// Deterministic core of [`relabel_synthetic_goal`]. Observations must be untransformed.
pub fn relabel_with_goal(t: &Transition, goal: [f64; 2], spec: &RewardSpec) -> Result<Transition> {
    let mut out = t.clone();
    for obs in [&mut out.obs, &mut out.next_obs] {
        for k in 0..2 {
            let shift = goal[k] - obs[TARGET + k];
            obs[TARGET + k] = goal[k];
            obs[RESIDUAL + k] += shift;
        }
    }
    out.reward = spec.evaluate(&StepContext::from_observation(&out.next_obs, &out.action))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::observation::build_observation;
    use crate::env::walker::WalkerState;
    use crate::replay::DoneKind;

    fn sample() -> Transition {
        let mut s = WalkerState::initial();
        s.v_xz = [0.9, -0.2];
        let o = build_observation(&s, [1.25, 0.0], &Default::default());
        let mut s2 = s;
        s2.v_xz = [1.0, -0.1];
        s2.t = 1;
        let o2 = build_observation(&s2, [1.25, 0.0], &Default::default());
        let a = vec![0.0; 19];
        let r = RewardSpec::score().evaluate(&StepContext::from_observation(&o2, &a)).unwrap();
        Transition::new(o.to_vec(), a, r, o2.to_vec(), DoneKind::None)
    }

    #[test]
    fn same_goal_leaves_transition_unchanged() {
        let t = sample();
        let w = [t.next_obs[TARGET], t.next_obs[TARGET + 1]];
        assert_eq!(relabel_with_goal(&t, w, &RewardSpec::score()).unwrap(), t);
    }

    #[test]
    fn goal_at_next_velocity_gives_full_reward() {
        let t = sample();
        let v = [1.0, -0.1];
        let r = relabel_with_goal(&t, v, &RewardSpec::score()).unwrap();
        assert!((r.reward - 10.0).abs() < 1e-12);
        assert!(r.next_obs[RESIDUAL].abs() < 1e-12 && r.next_obs[RESIDUAL + 1].abs() < 1e-12);
        assert_eq!(r.obs[..TARGET], t.obs[..TARGET]);
        assert_eq!(r.action, t.action);
    }

    #[test]
    fn relabel_is_idempotent_for_a_fixed_draw() {
        let t = sample();
        let once = relabel_with_goal(&t, [-1.0, 2.0], &RewardSpec::score()).unwrap();
        let twice = relabel_with_goal(&once, [-1.0, 2.0], &RewardSpec::score()).unwrap();
        assert_eq!(once, twice);
    }
}
