//! Action- and parameter-space exploration noise.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExplorationMode {
    Gaussian,
    ParamNoise,
    None,
    Ou,
    Sticky,
}

impl ExplorationMode {
    pub fn name(self) -> &'static str {
        match self {
            ExplorationMode::Gaussian => "gaussian",
            ExplorationMode::ParamNoise => "param",
            ExplorationMode::None => "none",
            ExplorationMode::Ou => "ou",
            ExplorationMode::Sticky => "sticky",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            ExplorationMode::Gaussian,
            ExplorationMode::ParamNoise,
            ExplorationMode::None,
            ExplorationMode::Ou,
            ExplorationMode::Sticky,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }
}

pub const HYBRID_PROBS: [(ExplorationMode, f64); 3] = [
    (ExplorationMode::Gaussian, 0.7),
    (ExplorationMode::ParamNoise, 0.2),
    (ExplorationMode::None, 0.1),
];

/// Per-episode hybrid choice: action noise 70%, parameter noise 20%, none 10%.
pub fn choose_exploration<R: Rng + ?Sized>(rng: &mut R) -> ExplorationMode {
    let u: f64 = rng.random();
    if u < 0.7 {
        ExplorationMode::Gaussian
    } else if u < 0.9 {
        ExplorationMode::ParamNoise
    } else {
        ExplorationMode::None
    }
}

pub const MAX_GAUSSIAN_SIGMA: f64 = 0.3;

/// Action-noise scale that grows linearly from 0 for worker 0 to `max_sigma`
/// for the last worker. A lone worker gets `max_sigma`.
pub fn worker_sigma(index: usize, count: usize, max_sigma: f64) -> f64 {
    if count <= 1 {
        max_sigma
    } else {
        max_sigma * index as f64 / (count - 1) as f64
    }
}

pub fn gaussian_noise<R: Rng + ?Sized>(dim: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let n: f64 = StandardNormal.sample(rng);
            sigma * n
        })
        .collect()
}

/// `x' = x + theta (0 - x) dt + sigma sqrt(dt) N(0, I)`.
pub fn ou_step<R: Rng + ?Sized>(x: &[f64], theta: f64, sigma: f64, dt: f64, rng: &mut R) -> Vec<f64> {
    let s = sigma * dt.sqrt();
    x.iter()
        .map(|&xi| {
            let n: f64 = StandardNormal.sample(rng);
            xi - theta * xi * dt + s * n
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuNoise {
    pub state: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64, dt: f64) -> Self {
        OuNoise {
            state: vec![0.0; dim],
            theta,
            sigma,
            dt,
        }
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        self.state = ou_step(&self.state, self.theta, self.sigma, self.dt, rng);
        &self.state
    }
}

pub const STICKY_SIGMA: f64 = 0.2;
pub const STICKY_PERIOD: u32 = 15;

/// Gaussian vector held for `period` consecutive calls.
#[derive(Debug, Clone, PartialEq)]
pub struct StickyGaussian {
    pub sigma: f64,
    pub period: u32,
    current: Vec<f64>,
    countdown: u32,
}

impl StickyGaussian {
    pub fn new(dim: usize, sigma: f64, period: u32) -> Self {
        assert!(period >= 1);
        StickyGaussian {
            sigma,
            period,
            current: vec![0.0; dim],
            countdown: 0,
        }
    }

    pub fn reset(&mut self) {
        self.countdown = 0;
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        if self.countdown == 0 {
            self.current = gaussian_noise(self.current.len(), self.sigma, rng);
            self.countdown = self.period;
        }
        self.countdown -= 1;
        &self.current
    }
}

pub const PARAM_NOISE_FACTOR: f64 = 1.01;

/// Shrinks `sigma_p` by 1.01 when the induced action distance exceeds the
/// target, grows it otherwise (a tie grows).
pub fn param_noise_adapt(sigma_p: f64, action_distance: f64, target_delta: f64) -> f64 {
    if action_distance > target_delta {
        sigma_p / PARAM_NOISE_FACTOR
    } else {
        sigma_p * PARAM_NOISE_FACTOR
    }
}

/// Root-mean-square difference between two equally shaped action batches.
pub fn action_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            sum += (p - q) * (p - q);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    #[test]
    fn ou_without_noise_decays() {
        let mut rng = rng_from_seed(0);
        assert_eq!(ou_step(&[0.0, 0.0], 0.15, 0.0, 0.01, &mut rng), vec![0.0, 0.0]);
        let mut x = vec![1.0];
        for _ in 0..100 {
            x = ou_step(&x, 2.0, 0.0, 0.01, &mut rng);
        }
        assert!((x[0] - 0.98f64.powi(100)).abs() < 1e-12);
    }

    #[test]
    fn sticky_holds_for_period() {
        let mut rng = rng_from_seed(3);
        let mut s = StickyGaussian::new(4, STICKY_SIGMA, STICKY_PERIOD);
        let first = s.sample(&mut rng).to_vec();
        for _ in 1..15 {
            assert_eq!(s.sample(&mut rng), first.as_slice());
        }
        assert_ne!(s.sample(&mut rng), first.as_slice());
        let mut z = StickyGaussian::new(3, 0.0, 5);
        for _ in 0..20 {
            assert_eq!(z.sample(&mut rng), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn param_noise_branches() {
        assert_eq!(param_noise_adapt(1.0, 0.2, 0.2), 1.01);
        assert_eq!(param_noise_adapt(1.0, 0.4, 0.2), 1.0 / 1.01);
        let mut s = 1.0;
        for _ in 0..100 {
            s = param_noise_adapt(s, 1.0, 0.1);
        }
        assert!((s - 1.01f64.powi(-100)).abs() < 1e-12);
    }

    #[test]
    fn worker_sigmas_are_linear() {
        assert_eq!(worker_sigma(0, 4, 0.3), 0.0);
        assert!((worker_sigma(1, 4, 0.3) - 0.1).abs() < 1e-15);
        assert_eq!(worker_sigma(3, 4, 0.3), 0.3);
        assert_eq!(worker_sigma(0, 1, 0.3), 0.3);
    }

    #[test]
    fn exploration_choice_is_reproducible() {
        let a: Vec<_> = {
            let mut r = rng_from_seed(8);
            (0..50).map(|_| choose_exploration(&mut r)).collect()
        };
        let mut r = rng_from_seed(8);
        let b: Vec<_> = (0..50).map(|_| choose_exploration(&mut r)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distance_is_rms() {
        let a = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let b = vec![vec![1.0, -1.0], vec![1.0, 1.0]];
        assert_eq!(action_distance(&a, &b), 1.0);
    }
}
