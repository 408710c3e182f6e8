//! Individual reward and penalty formulas. All functions are pure.

use crate::error::{Error, Result};

pub const EFFORT_COEFF: f64 = 0.001;
pub const DEFAULT_BASE: f64 = 10.0;

fn sq_dist(v: [f64; 2], w: [f64; 2]) -> f64 {
    (v[0] - w[0]).powi(2) + (v[1] - w[1]).powi(2)
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn nonzero(w: [f64; 2]) -> Result<f64> {
    let n = norm2(w);
    if n > 0.0 {
        Ok(n)
    } else {
        Err(Error::ZeroTarget)
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// `9 - (v_x - 3)^2`.
pub fn reward_round1(v_x: f64) -> f64 {
    9.0 - (v_x - 3.0).powi(2)
}

/// `b - |v - w|^2 - 0.001 sum a^2`.
pub fn reward_round2(v: [f64; 2], w: [f64; 2], actions: &[f64], b: f64) -> f64 {
    reward_round2_with_effort(v, w, actions, b, EFFORT_COEFF)
}

pub fn reward_round2_with_effort(v: [f64; 2], w: [f64; 2], actions: &[f64], b: f64, effort: f64) -> f64 {
    let e: f64 = actions.iter().map(|a| a * a).sum();
    b - (v[0] - w[0]).powi(2) - (v[1] - w[1]).powi(2) - effort * e
}

/// `0.1 (r - 8)`.
pub fn rescale_reward(r: f64) -> f64 {
    0.1 * (r - 8.0)
}

/// `a . (b x c)`.
pub fn triple_product(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) + a[1] * (b[2] * c[0] - b[0] * c[2]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// `10 min(triple(head - pelvis, left - pelvis, right - pelvis), 0)`; never positive.
pub fn penalty_crossing_legs(head: [f64; 3], pelvis: [f64; 3], left_toe: [f64; 3], right_foot: [f64; 3]) -> f64 {
    let rel = |p: [f64; 3]| [p[0] - pelvis[0], p[1] - pelvis[1], p[2] - pelvis[2]];
    10.0 * triple_product(rel(head), rel(left_toe), rel(right_foot)).min(0.0)
}

/// Penalizes a left foot on the right of the pelvis and vice versa, in the
/// pelvis frame given by `theta`.
pub fn penalty_scissors(calcn_l: [f64; 3], foot_r: [f64; 3], theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    pos(calcn_l[0] * s + calcn_l[2] * c) + pos(-(foot_r[0] * s + foot_r[2] * c))
}

/// Cosine distance between the target velocity and the pelvis forward axis.
pub fn penalty_sideways(v_target: [f64; 2], theta: f64) -> Result<f64> {
    let n = nonzero(v_target)?;
    let (s, c) = theta.sin_cos();
    Ok(1.0 - (v_target[0] * c - v_target[1] * s) / n)
}

/// `10 / (1 + |v - w|^2)`.
pub fn reward_inverse(v: [f64; 2], w: [f64; 2]) -> f64 {
    10.0 / (1.0 + sq_dist(v, w))
}

/// `1 - |w - v|^2 / |w|^2`.
pub fn reward_relative(v: [f64; 2], w: [f64; 2]) -> Result<f64> {
    let n = nonzero(w)?;
    Ok(1.0 - sq_dist(v, w) / (n * n))
}

/// `2 r - 19` on the open interval `(9.5, 10)`, `-1` elsewhere.
pub fn reward_clipped_high(r_origin: f64) -> f64 {
    if r_origin > 9.5 && r_origin < 10.0 {
        2.0 * r_origin - 19.0
    } else {
        -1.0
    }
}

/// `exp(-|dx|) + exp(-|dz|)`; `literal` uses positive exponents instead.
pub fn reward_exponential(v: [f64; 2], w: [f64; 2], literal: bool) -> f64 {
    let sign = if literal { 1.0 } else { -1.0 };
    (sign * (v[0] - w[0]).abs()).exp() + (sign * (v[1] - w[1]).abs()).exp()
}

pub const RUKIA_SPEED_WEIGHT: f64 = 5.0;
pub const RUKIA_STRAIGHT_WEIGHT: f64 = 4.0;
pub const RUKIA_BEND_WEIGHT: f64 = 2.0;
pub const RUKIA_BEND_LIMIT: f64 = -0.4;

/// Planar cross product `a_x b_z - a_z b_x`.
pub fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Returns the total and the `[speed, straight, bend]` terms.
pub fn reward_rukia(
    v_pelvis: [f64; 2],
    v_head: [f64; 2],
    v_torso: [f64; 2],
    v_target: [f64; 2],
    knee_angles: [f64; 2],
) -> Result<(f64, [f64; 3])> {
    let n = nonzero(v_target)?;
    let speed = RUKIA_SPEED_WEIGHT
        * (0..2)
            .map(|k| pos(v_target[k].abs().sqrt() - (v_pelvis[k] - v_target[k]).abs().sqrt()))
            .sum::<f64>();
    let straight = RUKIA_STRAIGHT_WEIGHT
        * [v_head, v_torso]
            .iter()
            .map(|&v| (cross2(v_target, v) / n).powi(2))
            .sum::<f64>();
    let bend = RUKIA_BEND_WEIGHT
        * knee_angles
            .iter()
            .map(|&t| t.max(RUKIA_BEND_LIMIT).min(0.0))
            .sum::<f64>();
    Ok((speed + straight + bend, [speed, straight, bend]))
}

pub const MATTIAS_DEVIATION_SCALE: f64 = 8.0;
pub const MATTIAS_DEVIATION_CAP: f64 = 12.0;
pub const MATTIAS_PENALTY_CAP: f64 = 9.0;

/// `(10 - min(8 dev_sq, 12)) - min(penalties, 9)`, in `[-11, 10]`.
pub fn reward_mattias(dev_sq: f64, shaping_penalties: f64) -> f64 {
    (10.0 - (MATTIAS_DEVIATION_SCALE * dev_sq).min(MATTIAS_DEVIATION_CAP))
        - shaping_penalties.min(MATTIAS_PENALTY_CAP)
}

/// `k (r_x^2 + r_y^2 + r_z^2)`.
pub fn penalty_pelvis_orientation(rot: [f64; 3], k: f64) -> f64 {
    k * (rot[0] * rot[0] + rot[1] * rot[1] + rot[2] * rot[2])
}

pub const KNEE_OFFSET: f64 = 0.2;

/// `k max(theta + offset, 0)`.
pub fn penalty_knee_straight(theta: f64, k: f64, offset: f64) -> f64 {
    k * pos(theta + offset)
}

/// Scissors test against the target direction instead of the pelvis heading:
/// each foot must stay on its own side of the line through the pelvis along `w`.
pub fn penalty_feet_direction(calcn_l: [f64; 3], foot_r: [f64; 3], v_target: [f64; 2]) -> Result<f64> {
    nonzero(v_target)?;
    Ok(penalty_scissors(calcn_l, foot_r, -v_target[1].atan2(v_target[0])))
}
