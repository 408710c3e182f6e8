//! Deterministic actor-critic learning: DDPG and TD3 with quantile critics.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::quantile::quantile_huber_loss;
use crate::error::{Error, Result};
use crate::nn::{Activation, ArchDescriptor, NetParams, OptConfig, OptState};
use crate::replay::Transition;

/// Action proposal for an observation, per bootstrap head.
pub trait Policy {
    fn act(&self, obs: &[f64], head: usize) -> Result<Vec<f64>>;
}

/// Quantile locations of the return of `(obs, action)`.
pub trait QuantileCritic {
    fn quantiles(&self, obs: &[f64], action: &[f64], head: usize) -> Result<Vec<f64>>;
}

impl Policy for NetParams {
    fn act(&self, obs: &[f64], head: usize) -> Result<Vec<f64>> {
        self.predict_head(obs, head)
    }
}

impl QuantileCritic for NetParams {
    fn quantiles(&self, obs: &[f64], action: &[f64], head: usize) -> Result<Vec<f64>> {
        self.predict_head(&critic_input(obs, action), head)
    }
}

/// Critics see the observation followed by the action.
pub fn critic_input(obs: &[f64], action: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(obs.len() + action.len());
    x.extend_from_slice(obs);
    x.extend_from_slice(action);
    x
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Target quantile vectors for one head. The smoothed target action is
/// `clamp(pi'(s') + clamp(eps, -clip, clip), bounds)` with `eps ~ N(0, sigma)`;
/// the critic with the smaller mean supplies `Z` and the target is `r + gamma Z`,
/// with `gamma` cut only on a fall.
#[allow(clippy::too_many_arguments)]
pub fn td3_targets<R: Rng + ?Sized>(
    batch: &[Transition],
    critics: &[&dyn QuantileCritic],
    target_actor: &dyn Policy,
    gamma: f64,
    smooth_sigma: f64,
    smooth_clip: f64,
    bounds: (f64, f64),
    head: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if critics.is_empty() {
        return Err(Error::InvalidArgument("at least one critic is required".into()));
    }
    batch
        .iter()
        .map(|t| {
            let mut a = target_actor.act(&t.next_obs, head)?;
            for x in &mut a {
                let eps: f64 = if smooth_sigma > 0.0 {
                    let n: f64 = StandardNormal.sample(rng);
                    (smooth_sigma * n).clamp(-smooth_clip, smooth_clip)
                } else {
                    0.0
                };
                *x = (*x + eps).clamp(bounds.0, bounds.1);
            }
            let mut best: Option<(f64, Vec<f64>)> = None;
            for c in critics {
                let z = c.quantiles(&t.next_obs, &a, head)?;
                let q = mean(&z);
                if best.as_ref().is_none_or(|(bq, _)| q < *bq) {
                    best = Some((q, z));
                }
            }
            let z = best.expect("non-empty critic list").1;
            let g = if t.done.is_absorbing() { 0.0 } else { gamma };
            Ok(z.iter().map(|zi| t.reward + g * zi).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub layer_norm: bool,
    /// Actor output squashing into the action box.
    pub actor_output: Activation,
    /// Quantile locations per critic head; 1 gives a scalar critic.
    pub quantiles: usize,
    /// Bootstrap heads shared by actor and critics.
    pub heads: usize,
    /// Two critics with min selection (TD3) or one (DDPG).
    pub twin: bool,
    pub gamma: f64,
    /// Soft target coefficient `rho` in `target <- (1 - rho) target + rho online`.
    pub tau: f64,
    pub smooth_sigma: f64,
    pub smooth_clip: f64,
    pub kappa: f64,
    /// One actor step every `actor_delay` critic steps.
    pub actor_delay: u32,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub weight_decay: f64,
}

impl AcConfig {
    pub fn td3() -> Self {
        AcConfig {
            hidden: vec![64, 64],
            activation: Activation::Relu,
            layer_norm: true,
            actor_output: Activation::Sigmoid,
            quantiles: 1,
            heads: 1,
            twin: true,
            gamma: 0.96,
            tau: 0.01,
            smooth_sigma: 0.2,
            smooth_clip: 0.5,
            kappa: 1.0,
            actor_delay: 1,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            weight_decay: 0.0,
        }
    }

    pub fn ddpg() -> Self {
        AcConfig {
            twin: false,
            smooth_sigma: 0.0,
            ..Self::td3()
        }
    }

    pub fn actor_arch(&self, obs_dim: usize, action_dim: usize) -> ArchDescriptor {
        ArchDescriptor::mlp(obs_dim, &self.hidden, action_dim, self.activation)
            .with_output_activation(self.actor_output)
            .with_layer_norm(self.layer_norm)
            .with_heads(self.heads)
    }

    pub fn critic_arch(&self, obs_dim: usize, action_dim: usize) -> ArchDescriptor {
        ArchDescriptor::mlp(obs_dim + action_dim, &self.hidden, self.quantiles, self.activation)
            .with_layer_norm(self.layer_norm)
            .with_heads(self.heads)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, reason))
            }
        };
        check(self.quantiles >= 1, "td3.quantiles", "must be at least 1")?;
        check((1..=32).contains(&self.heads), "td3.heads", "must lie in 1..=32")?;
        check(self.gamma > 0.0 && self.gamma < 1.0, "td3.gamma", "must lie in (0, 1)")?;
        check((0.0..=1.0).contains(&self.tau), "td3.tau", "must lie in [0, 1]")?;
        check(self.smooth_sigma >= 0.0 && self.smooth_clip >= 0.0, "td3.smooth_sigma", "must be non-negative")?;
        check(self.kappa > 0.0, "td3.kappa", "must be positive")?;
        check(self.actor_delay >= 1, "td3.actor_delay", "must be at least 1")?;
        check(self.actor_lr >= 0.0 && self.critic_lr >= 0.0, "td3.actor_lr", "must be non-negative")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorState {
    pub net: NetParams,
    pub target: NetParams,
    pub opt: OptState,
}

impl ActorState {
    pub fn new(net: NetParams, opt: OptConfig) -> Self {
        let opt = OptState::new(opt, &net);
        ActorState {
            target: net.clone(),
            net,
            opt,
        }
    }
}

/// One or two online critics with their target copies.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticPair {
    pub nets: Vec<NetParams>,
    pub targets: Vec<NetParams>,
    pub opts: Vec<OptState>,
    pub quantiles: usize,
    pub gamma: f64,
}

impl CriticPair {
    pub fn new(nets: Vec<NetParams>, opt: OptConfig, gamma: f64) -> Self {
        let quantiles = nets[0].arch().output_width();
        CriticPair {
            opts: nets.iter().map(|n| OptState::new(opt, n)).collect(),
            targets: nets.clone(),
            nets,
            quantiles,
            gamma,
        }
    }

    /// Mean of critic 0's quantiles.
    pub fn q(&self, obs: &[f64], action: &[f64], head: usize) -> Result<f64> {
        Ok(mean(&self.nets[0].quantiles(obs, action, head)?))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossReport {
    pub critic_loss: f64,
    /// `-mean Q` of the actor's own actions; absent when the actor was not updated.
    pub actor_loss: Option<f64>,
    pub mean_q: f64,
    /// Per-sample `|mean target - mean prediction|` for priority updates.
    pub td_errors: Vec<f64>,
}

fn enabled_heads(t: &Transition, heads: usize) -> Vec<usize> {
    (0..heads).filter(|&h| t.head_enabled(h)).collect()
}

/// One critic regression step towards the TD3 targets, optionally one
/// deterministic policy-gradient step through critic 0, then soft target updates.
/// `weights` are importance weights (empty means all ones).
#[allow(clippy::too_many_arguments)]
pub fn ddpg_update<R: Rng + ?Sized>(
    actor: &mut ActorState,
    critic: &mut CriticPair,
    cfg: &AcConfig,
    batch: &[Transition],
    weights: &[f64],
    update_actor: bool,
    rng: &mut R,
) -> Result<LossReport> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if !weights.is_empty() && weights.len() != batch.len() {
        return Err(Error::Shape("one importance weight per sample is required".into()));
    }
    let heads = critic.nets[0].heads();
    let b = batch.len() as f64;
    let n_q = critic.quantiles;

    let targets: Vec<Vec<Vec<f64>>> = {
        let refs: Vec<&dyn QuantileCritic> = critic.targets.iter().map(|c| c as &dyn QuantileCritic).collect();
        (0..heads)
            .map(|h| {
                td3_targets(
                    batch,
                    &refs,
                    &actor.target,
                    critic.gamma,
                    cfg.smooth_sigma,
                    cfg.smooth_clip,
                    (0.0, 1.0),
                    h,
                    rng,
                )
            })
            .collect::<Result<_>>()?
    };

    let mut report = LossReport {
        td_errors: vec![0.0; batch.len()],
        ..Default::default()
    };
    let mut grads: Vec<Vec<f64>> = critic.nets.iter().map(|n| vec![0.0; n.len()]).collect();
    for (k, t) in batch.iter().enumerate() {
        let w = weights.get(k).copied().unwrap_or(1.0);
        let active = enabled_heads(t, heads);
        if active.is_empty() {
            continue;
        }
        let x = critic_input(&t.obs, &t.action);
        for (c, net) in critic.nets.iter().enumerate() {
            let (outs, cache) = net.forward(&x)?;
            let mut head_grads = Vec::with_capacity(active.len());
            for &h in &active {
                let (loss, mut g) = quantile_huber_loss(&outs[h], &targets[h][k], cfg.kappa);
                report.critic_loss += w * loss / b;
                g.iter_mut().for_each(|v| *v *= w / b);
                head_grads.push((h, g));
                if c == 0 {
                    report.mean_q += mean(&outs[h]) / (b * active.len() as f64);
                    report.td_errors[k] +=
                        (mean(&targets[h][k]) - mean(&outs[h])).abs() / active.len() as f64;
                }
            }
            let refs: Vec<(usize, &[f64])> = head_grads.iter().map(|(h, g)| (*h, g.as_slice())).collect();
            net.accumulate(&cache, &refs, &mut grads[c])?;
        }
    }
    if !report.critic_loss.is_finite() {
        return Err(Error::Divergence(format!("critic loss {}", report.critic_loss)));
    }
    for ((net, opt), g) in critic.nets.iter_mut().zip(&mut critic.opts).zip(&grads) {
        opt.step_with_lr(net, g, cfg.critic_lr)?;
    }

    if update_actor {
        let mut g_actor = vec![0.0; actor.net.len()];
        let mut q_sum = 0.0;
        let dq = vec![-1.0 / (n_q as f64 * b); n_q];
        let obs_dim = batch[0].obs.len();
        for t in batch {
            let active = enabled_heads(t, heads);
            if active.is_empty() {
                continue;
            }
            let (actions, acache) = actor.net.forward(&t.obs)?;
            let mut head_grads = Vec::with_capacity(active.len());
            for &h in &active {
                let (z, qcache) = critic.nets[0].forward_head(&critic_input(&t.obs, &actions[h]), h)?;
                q_sum += mean(&z) / active.len() as f64;
                let d_in = critic.nets[0].input_gradient(&qcache, &[(h, &dq)])?;
                head_grads.push((h, d_in[obs_dim..].to_vec()));
            }
            let refs: Vec<(usize, &[f64])> = head_grads.iter().map(|(h, g)| (*h, g.as_slice())).collect();
            actor.net.accumulate(&acache, &refs, &mut g_actor)?;
        }
        let loss = -q_sum / b;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("actor loss {loss}")));
        }
        actor.opt.step_with_lr(&mut actor.net, &g_actor, cfg.actor_lr)?;
        actor.target.soft_update_from(&actor.net, cfg.tau)?;
        report.actor_loss = Some(loss);
    }
    for (target, net) in critic.targets.iter_mut().zip(&critic.nets) {
        target.soft_update_from(net, cfg.tau)?;
    }
    Ok(report)
}

/// A single actor with its critic pair and update counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub config: AcConfig,
    pub actor: ActorState,
    pub critic: CriticPair,
    pub updates: u64,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, config: AcConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let actor = NetParams::init(config.actor_arch(obs_dim, action_dim), rng)?;
        let n_critics = if config.twin { 2 } else { 1 };
        let critics = (0..n_critics)
            .map(|_| NetParams::init(config.critic_arch(obs_dim, action_dim), rng))
            .collect::<Result<Vec<_>>>()?;
        let opt = |lr| OptConfig::adam(lr).with_weight_decay(config.weight_decay);
        Ok(ActorCritic {
            actor: ActorState::new(actor, opt(config.actor_lr)),
            critic: CriticPair::new(critics, opt(config.critic_lr), config.gamma),
            updates: 0,
            config,
        })
    }

    pub fn act(&self, obs: &[f64], head: usize) -> Result<Vec<f64>> {
        self.actor.net.act(obs, head)
    }

    pub fn update<R: Rng + ?Sized>(&mut self, batch: &[Transition], weights: &[f64], rng: &mut R) -> Result<LossReport> {
        self.updates += 1;
        let update_actor = self.updates % self.config.actor_delay as u64 == 0;
        ddpg_update(&mut self.actor, &mut self.critic, &self.config, batch, weights, update_actor, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::DoneKind;
    use crate::rng_from_seed;

    struct Fixed(Vec<f64>);
    impl QuantileCritic for Fixed {
        fn quantiles(&self, _: &[f64], _: &[f64], _: usize) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }
    struct Zero;
    impl Policy for Zero {
        fn act(&self, _: &[f64], _: usize) -> Result<Vec<f64>> {
            Ok(vec![0.0])
        }
    }

    fn one(done: DoneKind) -> Vec<Transition> {
        vec![Transition::new(vec![0.0], vec![0.0], 1.0, vec![0.0], done)]
    }

    #[test]
    fn min_critic_hand_example() {
        let mut rng = rng_from_seed(0);
        let (c1, c2) = (Fixed(vec![0.0, 2.0]), Fixed(vec![3.0, 5.0]));
        let y = td3_targets(&one(DoneKind::None), &[&c1, &c2], &Zero, 0.5, 0.0, 0.5, (0.0, 1.0), 0, &mut rng).unwrap();
        assert_eq!(y, vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn fall_cuts_bootstrap_but_time_limit_does_not() {
        let rng = rng_from_seed(0);
        let (c1, c2) = (Fixed(vec![0.0, 2.0]), Fixed(vec![3.0, 5.0]));
        let f = |d| td3_targets(&one(d), &[&c1, &c2], &Zero, 0.5, 0.0, 0.5, (0.0, 1.0), 0, &mut rng.clone()).unwrap();
        assert_eq!(f(DoneKind::Fall), vec![vec![1.0, 1.0]]);
        assert_eq!(f(DoneKind::TimeLimit), f(DoneKind::None));
    }

    #[test]
    fn zero_learning_rates_leave_parameters() {
        let mut rng = rng_from_seed(1);
        let cfg = AcConfig {
            actor_lr: 0.0,
            critic_lr: 0.0,
            tau: 0.0,
            hidden: vec![8],
            ..AcConfig::td3()
        };
        let mut ac = ActorCritic::new(3, 2, cfg, &mut rng).unwrap();
        let before = ac.clone();
        let batch: Vec<Transition> = (0..4)
            .map(|i| Transition::new(vec![i as f64; 3], vec![0.5; 2], 1.0, vec![0.1; 3], DoneKind::None))
            .collect();
        ac.update(&batch, &[], &mut rng).unwrap();
        assert_eq!(ac.actor.net, before.actor.net);
        assert_eq!(ac.critic.nets, before.critic.nets);
        assert_eq!(ac.critic.targets, before.critic.targets);
    }

    #[test]
    fn actor_gradient_follows_linear_critic() {
        // Q(s, a) = c . a: the policy gradient with respect to the action is c.
        let arch = ArchDescriptor::mlp(3, &[], 1, Activation::Linear);
        let c = [0.5, -2.0];
        let values = vec![0.0, c[0], c[1], 0.0];
        let critic = NetParams::from_values(arch, values).unwrap();
        let (_, cache) = critic.forward(&[0.7, 0.1, 0.9]).unwrap();
        let g = critic.input_gradient(&cache, &[(0, &[1.0])]).unwrap();
        assert_eq!(&g[1..], &c);
    }

    #[test]
    fn single_transition_overfit() {
        let mut rng = rng_from_seed(2);
        let cfg = AcConfig {
            hidden: vec![16],
            layer_norm: false,
            activation: Activation::Tanh,
            twin: false,
            critic_lr: 1e-2,
            ..AcConfig::ddpg()
        };
        let mut ac = ActorCritic::new(2, 1, cfg.clone(), &mut rng).unwrap();
        // A fall makes the target exactly the reward.
        let batch = vec![Transition::new(vec![0.3, -0.4], vec![0.6], 2.5, vec![0.0, 0.0], DoneKind::Fall)];
        for _ in 0..500 {
            ddpg_update(&mut ac.actor, &mut ac.critic, &cfg, &batch, &[], false, &mut rng).unwrap();
        }
        let q = ac.critic.q(&[0.3, -0.4], &[0.6], 0).unwrap();
        assert!((q - 2.5).abs() < 1e-3, "{q}");
    }

    #[test]
    fn masked_heads_receive_no_update() {
        let mut rng = rng_from_seed(3);
        let cfg = AcConfig {
            hidden: vec![6],
            heads: 2,
            ..AcConfig::td3()
        };
        let mut ac = ActorCritic::new(2, 1, cfg, &mut rng).unwrap();
        let before = ac.clone();
        let batch = vec![Transition::new(vec![0.3, -0.4], vec![0.6], 2.5, vec![0.1, 0.0], DoneKind::None).with_head_mask(0b01)];
        ac.update(&batch, &[], &mut rng).unwrap();
        let r = ac.actor.net.head_range(1);
        assert_eq!(ac.actor.net.values()[r.clone()], before.actor.net.values()[r]);
        let r = ac.critic.nets[0].head_range(1);
        assert_eq!(ac.critic.nets[0].values()[r.clone()], before.critic.nets[0].values()[r]);
        let r = ac.critic.nets[0].head_range(0);
        assert_ne!(ac.critic.nets[0].values()[r.clone()], before.critic.nets[0].values()[r]);
    }
}
