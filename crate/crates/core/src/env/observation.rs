//! Observation layout and observation-engineering transforms.

use super::walker::{WalkerState, EPISODE_STEPS, LEFT, RIGHT};

pub const OBS_DIM: usize = 24;
/// Layout version; bump when any index below changes.
pub const LAYOUT_VERSION: u16 = 1;

pub const PELVIS_Y: usize = 0;
pub const BODY_VELOCITY: usize = 1;
pub const V_Y: usize = 3;
pub const HEADING: usize = 4;
pub const OMEGA: usize = 5;
/// `sin, cos` of the left phase then of the right phase.
pub const LEG_PHASE: usize = 6;
pub const KNEES: usize = 10;
/// Left foot `(x, y, z)` then right foot, relative to the pelvis.
pub const FEET: usize = 12;
pub const TARGET: usize = 18;
pub const RESIDUAL: usize = 20;
pub const TIME: usize = 22;
pub const SPEED: usize = 23;

pub type Observation = [f64; OBS_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObsTransforms {
    /// Express planar vectors in the frame whose `+x` axis is the target heading.
    pub rotate: bool,
    /// Smooth the observed target towards the real one with this coefficient.
    pub soft_target_tau: Option<f64>,
    /// Clamp the observed target into `current velocity ± (th_x, th_z)`.
    pub clip_requested: Option<(f64, f64)>,
}

/// Maps `2 t / 1000 - 1`, so `t = 0 -> -1` and `t = 1000 -> 1`.
pub fn time_feature(t: u32) -> f64 {
    2.0 * t as f64 / EPISODE_STEPS as f64 - 1.0
}

pub fn build_observation(state: &WalkerState, target: [f64; 2], transforms: &ObsTransforms) -> Observation {
    let mut o = [0.0; OBS_DIM];
    let speed = state.v_xz[0].hypot(state.v_xz[1]);
    let residual = [target[0] - state.v_xz[0], target[1] - state.v_xz[1]];
    let (frame_target, frame) = if transforms.rotate {
        let (s, c) = target[1].atan2(target[0]).sin_cos();
        ([target[0].hypot(target[1]), 0.0], Some((s, c)))
    } else {
        (target, None)
    };
    let planar = |v: [f64; 2]| match frame {
        Some((s, c)) => [c * v[0] + s * v[1], -s * v[0] + c * v[1]],
        None => v,
    };

    o[PELVIS_Y] = state.pelvis_y;
    let vb = state.body_velocity();
    o[BODY_VELOCITY] = vb[0];
    o[BODY_VELOCITY + 1] = vb[1];
    o[V_Y] = state.v_y;
    o[HEADING] = if transforms.rotate { 0.0 } else { state.heading };
    o[OMEGA] = state.omega;
    for (k, leg) in [LEFT, RIGHT].into_iter().enumerate() {
        let (s, c) = state.leg_phase[leg].sin_cos();
        o[LEG_PHASE + 2 * k] = s;
        o[LEG_PHASE + 2 * k + 1] = c;
        o[KNEES + k] = state.knee_angle[leg];
        let f = state.foot(leg);
        let [fx, fz] = planar([f[0], f[2]]);
        o[FEET + 3 * k] = fx;
        o[FEET + 3 * k + 1] = f[1];
        o[FEET + 3 * k + 2] = fz;
    }
    o[TARGET] = frame_target[0];
    o[TARGET + 1] = frame_target[1];
    let r = planar(residual);
    o[RESIDUAL] = r[0];
    o[RESIDUAL + 1] = r[1];
    o[TIME] = time_feature(state.t);
    o[SPEED] = speed;
    o
}

/// `v_curr <- tau v_curr + (1 - tau) v_real`.
pub fn soft_target_update(v_curr: [f64; 2], v_real: [f64; 2], tau: f64) -> [f64; 2] {
    [
        tau * v_curr[0] + (1.0 - tau) * v_real[0],
        tau * v_curr[1] + (1.0 - tau) * v_real[1],
    ]
}

pub const CLIP_THRESHOLD_X: f64 = 0.3;
pub const CLIP_THRESHOLD_Z: f64 = 0.15;

/// Per-axis clamp of the requested velocity into `[v_cur - th, v_cur + th]`.
pub fn clip_requested(v_req: [f64; 2], v_cur: [f64; 2], th_x: f64, th_z: f64) -> [f64; 2] {
    [
        v_req[0].clamp(v_cur[0] - th_x, v_cur[0] + th_x),
        v_req[1].clamp(v_cur[1] - th_z, v_cur[1] + th_z),
    ]
}
