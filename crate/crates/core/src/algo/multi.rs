use rand::Rng;

use super::actor_critic::{ddpg_update, AcConfig, ActorState, CriticPair, LossReport};
use crate::error::{Error, Result};
use crate::nn::{NetParams, OptConfig};
use crate::replay::Transition;

/// `K` actors and `K` critic pairs with their own discounts. Actor `k` learns
/// through critic `assignment[k]`; rotation shifts every actor to the next critic.
#[derive(Debug, Clone, PartialEq)]
pub struct AcPairSet {
    pub config: AcConfig,
    pub actors: Vec<ActorState>,
    pub critics: Vec<CriticPair>,
    pub assignment: Vec<usize>,
    /// Updates between rotations; 0 disables rotation.
    pub rotation_period: u64,
    pub updates: u64,
}

/// Discounts spread evenly over `[lo, hi]`.
pub fn spread_gammas(k: usize, lo: f64, hi: f64) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

/// Actor `k` moves to critic `(assignment[k] + 1) mod K`.
pub fn multi_ac_rotate(assignment: &[usize]) -> Vec<usize> {
    let k = assignment.len();
    assignment.iter().map(|&c| (c + 1) % k).collect()
}

impl AcPairSet {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        config: AcConfig,
        gammas: &[f64],
        rotation_period: u64,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return Err(Error::config("multi.gammas", "need at least one discount in (0, 1)"));
        }
        let mut actors = Vec::new();
        let mut critics = Vec::new();
        let n_critics = if config.twin { 2 } else { 1 };
        for &g in gammas {
            let a = NetParams::init(config.actor_arch(obs_dim, action_dim), rng)?;
            actors.push(ActorState::new(a, OptConfig::adam(config.actor_lr)));
            let c = (0..n_critics)
                .map(|_| NetParams::init(config.critic_arch(obs_dim, action_dim), rng))
                .collect::<Result<Vec<_>>>()?;
            critics.push(CriticPair::new(c, OptConfig::adam(config.critic_lr), g));
        }
        Ok(AcPairSet {
            assignment: (0..gammas.len()).collect(),
            config,
            actors,
            critics,
            rotation_period,
            updates: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.actors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actors.is_empty()
    }

    pub fn rotate(&mut self) {
        self.assignment = multi_ac_rotate(&self.assignment);
    }

    /// Updates every pair on the same batch, then rotates when the period elapses.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &[Transition], weights: &[f64], rng: &mut R) -> Result<Vec<LossReport>> {
        self.updates += 1;
        let update_actor = self.updates % self.config.actor_delay as u64 == 0;
        let mut reports = Vec::with_capacity(self.len());
        for (k, actor) in self.actors.iter_mut().enumerate() {
            let critic = &mut self.critics[self.assignment[k]];
            reports.push(ddpg_update(actor, critic, &self.config, batch, weights, update_actor, rng)?);
        }
        if self.rotation_period > 0 && self.updates % self.rotation_period == 0 {
            self.rotate();
        }
        Ok(reports)
    }
}
