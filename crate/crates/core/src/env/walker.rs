//! Planar surrogate walker.
//!
//! Nineteen activations in `[0, 1]` are mixed into a body-frame thrust, a
//! heading torque and a support level. Planar velocity follows
//! `v' = R(heading) thrust - DRAG v`, pelvis height follows
//! `y' = HEIGHT_GAIN (support * NOMINAL_HEIGHT - y)`, and both are integrated
//! with semi-implicit Euler. Leg phases advance at rates set by two dedicated
//! channels; feet and knees are fixed sinusoids of those phases.
//!
//! Channels `0..9` belong to the left leg, `9..18` mirror them on the right
//! leg and channel `18` is central:
//!
//! | left | right | role |
//! |---|---|---|
//! | 0, 1, 2 | 9, 10, 11 | support (with 18) |
//! | 3, 4 | 12, 13 | forward thrust |
//! | 5 | 14 | backward thrust |
//! | 6 | 15 | lateral thrust (+z left, -z right) |
//! | 7 | 16 | heading torque (+ left, - right) |
//! | 8 | 17 | leg phase rate |
//!
//! Coordinates follow the musculoskeletal convention: `x` forward, `y` up,
//! `z` lateral. Heading is a rotation about `y`; a body-frame vector
//! `(bx, bz)` has world components `(c bx + s bz, -s bx + c bz)`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};

pub const ACTION_DIM: usize = 19;
pub const DT: f64 = 0.01;
pub const DRAG: f64 = 1.5;
pub const HEIGHT_GAIN: f64 = 4.0;
pub const NOMINAL_HEIGHT: f64 = 1.0;
pub const FALL_HEIGHT: f64 = 0.6;
pub const EPISODE_STEPS: u32 = 1000;
pub const TURN_DAMPING: f64 = 3.0;

const FORWARD_GAIN: f64 = 6.0;
const BACKWARD_GAIN: f64 = 3.0;
const LATERAL_GAIN: f64 = 3.0;
const TORQUE_GAIN: f64 = 6.0;
const STRIDE: f64 = 0.25;
const FOOT_DROP: f64 = 0.9;
const FOOT_LIFT: f64 = 0.05;
const HIP_HALF_WIDTH: f64 = 0.1;
const KNEE_AMPLITUDE: f64 = 0.3;
pub const HEAD_HEIGHT: f64 = 0.6;
const MIXING_SEED: u64 = 0x5052_4c58_4d49_5801;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const CENTRAL_CHANNEL: usize = 18;
pub const PHASE_CHANNELS: [usize; 2] = [8, 17];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerState {
    /// Planar pelvis position `(x, z)` in metres.
    pub pelvis_xz: [f64; 2],
    pub pelvis_y: f64,
    /// Rotation about the vertical axis in radians.
    pub heading: f64,
    /// Planar pelvis velocity in world axes.
    pub v_xz: [f64; 2],
    pub v_y: f64,
    pub omega: f64,
    /// Left and right leg phases in `[0, 2 pi)`.
    pub leg_phase: [f64; 2],
    /// Knee flexion, `<= 0` when bent.
    pub knee_angle: [f64; 2],
    pub t: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    None,
    Fall,
}

impl Default for WalkerState {
    fn default() -> Self {
        Self::initial()
    }
}

impl WalkerState {
    /// Standing at nominal height, at rest, legs in anti-phase.
    pub fn initial() -> Self {
        let leg_phase = [0.0, PI];
        WalkerState {
            pelvis_xz: [0.0, 0.0],
            pelvis_y: NOMINAL_HEIGHT,
            heading: 0.0,
            v_xz: [0.0, 0.0],
            v_y: 0.0,
            omega: 0.0,
            leg_phase,
            knee_angle: leg_phase.map(knee_from_phase),
            t: 0,
        }
    }

    /// Planar velocity in the pelvis frame.
    pub fn body_velocity(&self) -> [f64; 2] {
        to_body(self.heading, self.v_xz)
    }

    /// Foot position relative to the pelvis, in world axes.
    pub fn foot(&self, leg: usize) -> [f64; 3] {
        let phi = self.leg_phase[leg];
        let side = if leg == LEFT { -HIP_HALF_WIDTH } else { HIP_HALF_WIDTH };
        let local = [STRIDE * phi.sin(), -FOOT_DROP + FOOT_LIFT * (1.0 - phi.cos()), side];
        rotate3(self.heading, local)
    }

    /// Head position relative to the pelvis, in world axes.
    pub fn head(&self) -> [f64; 3] {
        rotate3(self.heading, [0.0, HEAD_HEIGHT, 0.0])
    }

    /// Pelvis rotation angles about `(x, y, z)`.
    pub fn pelvis_rotation(&self) -> [f64; 3] {
        [0.0, self.heading, 0.0]
    }

    /// Reflection about the `x` axis: `z`, heading and turn rate change sign and legs swap.
    pub fn mirrored(&self) -> Self {
        WalkerState {
            pelvis_xz: [self.pelvis_xz[0], -self.pelvis_xz[1]],
            pelvis_y: self.pelvis_y,
            heading: -self.heading,
            v_xz: [self.v_xz[0], -self.v_xz[1]],
            v_y: self.v_y,
            omega: -self.omega,
            leg_phase: [self.leg_phase[1], self.leg_phase[0]],
            knee_angle: [self.knee_angle[1], self.knee_angle[0]],
            t: self.t,
        }
    }

    /// Fixed-order float encoding used by episode logs.
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.pelvis_xz[0],
            self.pelvis_xz[1],
            self.pelvis_y,
            self.heading,
            self.v_xz[0],
            self.v_xz[1],
            self.v_y,
            self.omega,
            self.leg_phase[0],
            self.leg_phase[1],
            self.knee_angle[0],
            self.knee_angle[1],
        ]
    }
}

/// Body-frame vector to world axes.
#[inline]
pub fn to_world(heading: f64, b: [f64; 2]) -> [f64; 2] {
    let (s, c) = heading.sin_cos();
    [c * b[0] + s * b[1], -s * b[0] + c * b[1]]
}

/// World vector to body frame.
#[inline]
pub fn to_body(heading: f64, w: [f64; 2]) -> [f64; 2] {
    let (s, c) = heading.sin_cos();
    [c * w[0] - s * w[1], s * w[0] + c * w[1]]
}

fn rotate3(heading: f64, v: [f64; 3]) -> [f64; 3] {
    let [x, z] = to_world(heading, [v[0], v[2]]);
    [x, v[1], z]
}

fn knee_from_phase(phi: f64) -> f64 {
    -KNEE_AMPLITUDE * (1.0 - phi.cos())
}

/// Swaps left and right leg channels.
pub fn mirror_action(action: &[f64]) -> Vec<f64> {
    let mut out = action.to_vec();
    for i in 0..9 {
        out.swap(i, i + 9);
    }
    out
}

/// Linear maps from the 19 activations to the actuation quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixing {
    pub thrust_x: [f64; ACTION_DIM],
    pub thrust_z: [f64; ACTION_DIM],
    pub torque: [f64; ACTION_DIM],
    pub support: [f64; ACTION_DIM],
}

impl Mixing {
    /// The frozen mixing used by every environment, drawn once from a fixed seed.
    pub fn standard() -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(MIXING_SEED);
        let mut w = |channels: &[usize]| -> Vec<f64> {
            let raw: Vec<f64> = channels.iter().map(|_| rng.random_range(0.75..1.25)).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|r| r / sum).collect()
        };
        let mut m = Mixing {
            thrust_x: [0.0; ACTION_DIM],
            thrust_z: [0.0; ACTION_DIM],
            torque: [0.0; ACTION_DIM],
            support: [0.0; ACTION_DIM],
        };
        // Left-side weights are mirrored onto the right side.
        let support = w(&[0, 1, 2, 18]);
        // The six leg channels and the central channel sum to one.
        let leg_share: f64 = support[..3].iter().sum();
        let total = 2.0 * leg_share + support[3];
        for (k, &ch) in [0usize, 1, 2].iter().enumerate() {
            m.support[ch] = support[k] / total;
            m.support[ch + 9] = support[k] / total;
        }
        m.support[CENTRAL_CHANNEL] = support[3] / total;

        let fwd = w(&[3, 4]);
        for (k, &ch) in [3usize, 4].iter().enumerate() {
            m.thrust_x[ch] = FORWARD_GAIN * fwd[k] / 2.0;
            m.thrust_x[ch + 9] = FORWARD_GAIN * fwd[k] / 2.0;
        }
        m.thrust_x[5] = -BACKWARD_GAIN / 2.0;
        m.thrust_x[14] = -BACKWARD_GAIN / 2.0;
        m.thrust_z[6] = LATERAL_GAIN;
        m.thrust_z[15] = -LATERAL_GAIN;
        m.torque[7] = TORQUE_GAIN;
        m.torque[16] = -TORQUE_GAIN;
        m
    }

    fn apply(row: &[f64; ACTION_DIM], a: &[f64]) -> f64 {
        row.iter().zip(a).map(|(w, a)| w * a).sum()
    }

    pub fn thrust(&self, a: &[f64]) -> [f64; 2] {
        [Self::apply(&self.thrust_x, a), Self::apply(&self.thrust_z, a)]
    }

    pub fn torque(&self, a: &[f64]) -> f64 {
        Self::apply(&self.torque, a)
    }

    pub fn support(&self, a: &[f64]) -> f64 {
        Self::apply(&self.support, a)
    }

    /// Channels that feed the support level.
    pub fn support_channels(&self) -> Vec<usize> {
        (0..ACTION_DIM).filter(|&i| self.support[i] != 0.0).collect()
    }
}

/// Advances the walker one step of `dt` seconds.
///
/// Returns the number of action components that had to be clamped into `[0, 1]`.
pub fn walker_step(
    mixing: &Mixing,
    state: &WalkerState,
    action: &[f64],
    dt: f64,
) -> (WalkerState, Termination, usize) {
    debug_assert_eq!(action.len(), ACTION_DIM);
    let mut clamped = 0;
    let mut a = [0.0; ACTION_DIM];
    for (dst, &src) in a.iter_mut().zip(action) {
        let c = if src.is_nan() { 0.0 } else { src.clamp(0.0, 1.0) };
        if c != src {
            clamped += 1;
        }
        *dst = c;
    }

    let mut s = *state;
    let thrust = to_world(s.heading, mixing.thrust(&a));
    for k in 0..2 {
        s.v_xz[k] += dt * (thrust[k] - DRAG * s.v_xz[k]);
        s.pelvis_xz[k] += dt * s.v_xz[k];
    }
    s.omega += dt * (mixing.torque(&a) - TURN_DAMPING * s.omega);
    s.heading += dt * s.omega;
    s.v_y = HEIGHT_GAIN * (mixing.support(&a) * NOMINAL_HEIGHT - s.pelvis_y);
    s.pelvis_y = (s.pelvis_y + dt * s.v_y).max(0.0);
    for leg in [LEFT, RIGHT] {
        let rate = TAU * (0.5 + 1.5 * a[PHASE_CHANNELS[leg]]);
        s.leg_phase[leg] = (s.leg_phase[leg] + dt * rate).rem_euclid(TAU);
        s.knee_angle[leg] = knee_from_phase(s.leg_phase[leg]);
    }
    s.t += 1;
    let term = if s.pelvis_y < FALL_HEIGHT {
        Termination::Fall
    } else {
        Termination::None
    };
    (s, term, clamped)
}
