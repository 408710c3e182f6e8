//! Commanded velocity: a speed and heading that jump at the events of a
//! per-step Bernoulli process.

use std::f64::consts::PI;

use rand::Rng;

use crate::{rng_from_seed, Rng as SeededRng};

pub const INITIAL_SPEED: f64 = 1.25;
pub const DEFAULT_JUMP_PROB: f64 = 1.0 / 200.0;
pub const SPEED_JUMP: f64 = 0.5;
pub const HEADING_JUMP: f64 = PI / 8.0;

#[derive(Debug, Clone)]
pub struct TargetProcess {
    /// Commanded speed, may become negative.
    pub q: f64,
    /// Commanded heading.
    pub r: f64,
    pub jump_prob: f64,
    rng: SeededRng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetStep {
    pub target: [f64; 2],
    /// `(speed increment, heading increment)` when a jump happened.
    pub jump: Option<(f64, f64)>,
}

impl TargetProcess {
    pub fn new(q: f64, r: f64, jump_prob: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&jump_prob), "jump probability must lie in [0, 1]");
        TargetProcess {
            q,
            r,
            jump_prob,
            rng: rng_from_seed(seed),
        }
    }

    /// Starts at 1.25 m/s with heading `r0`.
    pub fn standard(r0: f64, seed: u64) -> Self {
        Self::new(INITIAL_SPEED, r0, DEFAULT_JUMP_PROB, seed)
    }

    /// `(q cos r, q sin r)`.
    pub fn cartesian(&self) -> [f64; 2] {
        let (s, c) = self.r.sin_cos();
        [self.q * c, self.q * s]
    }

    pub fn apply_jump(&mut self, speed: f64, heading: f64) {
        self.q += speed;
        self.r += heading;
    }

    /// Advances one step. With probability `jump_prob`, `q += U(-0.5, 0.5)` and
    /// `r += U(-pi/8, pi/8)`.
    pub fn step(&mut self) -> TargetStep {
        let jump = if self.rng.random::<f64>() < self.jump_prob {
            let u1 = self.rng.random_range(-SPEED_JUMP..SPEED_JUMP);
            let u2 = self.rng.random_range(-HEADING_JUMP..HEADING_JUMP);
            self.apply_jump(u1, u2);
            Some((u1, u2))
        } else {
            None
        };
        TargetStep {
            target: self.cartesian(),
            jump,
        }
    }
}

/// `target_step`: advances the process and returns the Cartesian target.
pub fn target_step(tp: &mut TargetProcess) -> TargetStep {
    tp.step()
}
