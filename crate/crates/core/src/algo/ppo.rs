//! PPO with a Bernoulli (bang-bang) policy and generalized advantage estimation.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::{frameskip_step, ProstheticsEnv, RunningStats};
use crate::error::{Error, Result};
use crate::nn::{logistic, Activation, ArchDescriptor, NetParams, OptConfig, OptState};
use crate::replay::DoneKind;

/// `1 / (1 + exp(-10 x))`.
pub fn logistic_squash(x: f64) -> f64 {
    logistic(10.0 * x)
}

/// `log sigmoid(l)`, stable for large `|l|`.
fn log_sigmoid(l: f64) -> f64 {
    if l >= 0.0 {
        -(-l).exp().ln_1p()
    } else {
        l - l.exp().ln_1p()
    }
}

/// Log-probability of a binary action under independent Bernoulli(sigmoid(logit)).
pub fn bernoulli_log_prob(logits: &[f64], action: &[f64]) -> f64 {
    logits
        .iter()
        .zip(action)
        .map(|(&l, &a)| if a > 0.5 { log_sigmoid(l) } else { log_sigmoid(-l) })
        .sum()
}

/// Samples `a_i ~ Bernoulli(sigmoid(logit_i))` and returns the log-probability.
pub fn bernoulli_policy<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
    let action: Vec<f64> = logits
        .iter()
        .map(|&l| if rng.random::<f64>() < logistic(l) { 1.0 } else { 0.0 })
        .collect();
    let lp = bernoulli_log_prob(logits, &action);
    (action, lp)
}

fn bernoulli_entropy(l: f64) -> f64 {
    let p = logistic(l);
    -(p * log_sigmoid(l) + (1.0 - p) * log_sigmoid(-l))
}

/// Advantages `A_t = sum_l (gamma lambda)^l delta_{t+l}` and value targets
/// `A_t + V_t`. `values` covers `T + 1` states; the last one is replaced by 0
/// when the segment ended in a fall and used as a bootstrap otherwise.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64, terminal: DoneKind) -> Result<(Vec<f64>, Vec<f64>)> {
    let t_len = rewards.len();
    if values.len() != t_len + 1 {
        return Err(Error::Shape(format!("{} rewards need {} values, got {}", t_len, t_len + 1, values.len())));
    }
    let last = if terminal.is_absorbing() { 0.0 } else { values[t_len] };
    let mut adv = vec![0.0; t_len];
    let mut running = 0.0;
    for t in (0..t_len).rev() {
        let next = if t + 1 == t_len { last } else { values[t + 1] };
        let delta = rewards[t] + gamma * next - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, targets))
}

/// `min(rho A, clip(rho, 1 - eps, 1 + eps) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub entropy_coeff: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Bootstrap from the value estimate when an episode is cut by the step limit.
    pub time_limit_bootstrap: bool,
    pub normalize_obs: bool,
    /// Environment frames per policy decision.
    pub frameskip: u32,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            learning_rate: 3e-4,
            clip: 0.2,
            epochs: 10,
            minibatch: 256,
            entropy_coeff: 0.01,
            gamma: 0.99,
            lambda: 0.9,
            time_limit_bootstrap: true,
            normalize_obs: true,
            frameskip: 1,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, reason: &str| if ok { Ok(()) } else { Err(Error::config(key, reason)) };
        check(self.clip > 0.0, "ppo.clip", "must be positive")?;
        check(self.epochs >= 1, "ppo.epochs", "must be at least 1")?;
        check(self.minibatch >= 1, "ppo.minibatch", "must be at least 1")?;
        check(self.gamma > 0.0 && self.gamma <= 1.0, "ppo.gamma", "must lie in (0, 1]")?;
        check((0.0..=1.0).contains(&self.lambda), "ppo.lambda", "must lie in [0, 1]")?;
        check(self.frameskip >= 1, "ppo.frameskip", "must be at least 1")?;
        check(self.learning_rate >= 0.0, "ppo.lr", "must be non-negative")
    }
}

/// One contiguous piece of an episode, collected with a fixed policy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    /// Policy inputs (already normalized).
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// `V(s_0) .. V(s_T)`.
    pub values: Vec<f64>,
    pub end: DoneKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rollout {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Concatenates trajectories with their GAE advantages. Without the
    /// time-limit bootstrap a truncated episode is treated as terminal.
    pub fn from_trajectories(trajs: &[Trajectory], gamma: f64, lambda: f64, time_limit_bootstrap: bool) -> Result<Self> {
        let mut r = Rollout::default();
        for t in trajs {
            let end = match t.end {
                DoneKind::TimeLimit if !time_limit_bootstrap => DoneKind::Fall,
                e => e,
            };
            let (adv, ret) = gae(&t.rewards, &t.values, gamma, lambda, end)?;
            r.obs.extend(t.obs.iter().cloned());
            r.actions.extend(t.actions.iter().cloned());
            r.log_probs.extend_from_slice(&t.log_probs);
            r.advantages.extend(adv);
            r.returns.extend(ret);
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PpoReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoAgent {
    pub config: PpoConfig,
    pub policy: NetParams,
    pub value: NetParams,
    pub policy_opt: OptState,
    pub value_opt: OptState,
    pub stats: RunningStats,
    pub updates: u64,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, config: PpoConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut policy = NetParams::init(ArchDescriptor::mlp(obs_dim, &config.hidden, action_dim, config.activation), rng)?;
        // Small output weights start every channel near p = 0.5.
        let head = policy.head_range(0);
        policy.values_mut()[head].iter_mut().for_each(|w| *w *= 0.01);
        let value = NetParams::init(ArchDescriptor::mlp(obs_dim, &config.hidden, 1, config.activation), rng)?;
        let opt = OptConfig::adam(config.learning_rate);
        Ok(PpoAgent {
            policy_opt: OptState::new(opt, &policy),
            value_opt: OptState::new(opt, &value),
            stats: RunningStats::new(obs_dim),
            policy,
            value,
            config,
            updates: 0,
        })
    }

    pub fn normalize(&self, obs: &[f64]) -> Vec<f64> {
        if self.config.normalize_obs {
            self.stats.normalize(obs)
        } else {
            obs.to_vec()
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, obs_norm: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
        Ok(bernoulli_policy(&self.policy.predict(obs_norm)?, rng))
    }

    /// Most likely action of a raw observation.
    pub fn act_greedy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let logits = self.policy.predict(&self.normalize(obs))?;
        Ok(logits.iter().map(|&l| if l > 0.0 { 1.0 } else { 0.0 }).collect())
    }

    pub fn state_value(&self, obs_norm: &[f64]) -> Result<f64> {
        Ok(self.value.predict(obs_norm)?[0])
    }

    /// Clipped-surrogate epochs over shuffled minibatches; advantages are
    /// standardized over the whole rollout first.
    pub fn update<R: Rng + ?Sized>(&mut self, rollout: &Rollout, rng: &mut R) -> Result<PpoReport> {
        let n = rollout.len();
        if n == 0 {
            return Err(Error::EmptyBuffer);
        }
        let mean = rollout.advantages.iter().sum::<f64>() / n as f64;
        let var = rollout.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt().max(1e-8);
        let adv: Vec<f64> = rollout.advantages.iter().map(|a| (a - mean) / sd).collect();

        let eps = self.config.clip;
        let mut report = PpoReport::default();
        let mut batches = 0usize;
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..self.config.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(self.config.minibatch) {
                let m = chunk.len() as f64;
                let mut gp = vec![0.0; self.policy.len()];
                let mut gv = vec![0.0; self.value.len()];
                let (mut pl, mut vl, mut ent, mut clipped) = (0.0, 0.0, 0.0, 0.0);
                for &i in chunk {
                    let obs = &rollout.obs[i];
                    let action = &rollout.actions[i];
                    let (out, cache) = self.policy.forward(obs)?;
                    let logits = &out[0];
                    let lp = bernoulli_log_prob(logits, action);
                    let ratio = (lp - rollout.log_probs[i]).exp();
                    if !ratio.is_finite() {
                        return Err(Error::NonFinite(format!("probability ratio of sample {i}")));
                    }
                    let a = adv[i];
                    pl -= clipped_surrogate(ratio, a, eps) / m;
                    let active = !((a > 0.0 && ratio > 1.0 + eps) || (a < 0.0 && ratio < 1.0 - eps));
                    if !active {
                        clipped += 1.0 / m;
                    }
                    // d(-L)/d logit = -rho A (a - p) on the active branch; entropy bonus adds
                    // -c dH/dl = c l p (1 - p).
                    let coef = if active { -ratio * a / m } else { 0.0 };
                    let c = self.config.entropy_coeff / m;
                    let g: Vec<f64> = logits
                        .iter()
                        .zip(action)
                        .map(|(&l, &x)| {
                            let p = logistic(l);
                            coef * (x - p) + c * l * p * (1.0 - p)
                        })
                        .collect();
                    ent += logits.iter().map(|&l| bernoulli_entropy(l)).sum::<f64>() / m;
                    self.policy.accumulate(&cache, &[(0, &g)], &mut gp)?;

                    let (v, vcache) = self.value.forward(obs)?;
                    let err = v[0][0] - rollout.returns[i];
                    vl += 0.5 * err * err / m;
                    self.value.accumulate(&vcache, &[(0, &[err / m])], &mut gv)?;
                }
                if !(pl.is_finite() && vl.is_finite()) {
                    return Err(Error::Divergence(format!("policy loss {pl}, value loss {vl}")));
                }
                self.policy_opt.step(&mut self.policy, &gp)?;
                self.value_opt.step(&mut self.value, &gv)?;
                report.policy_loss += pl;
                report.value_loss += vl;
                report.entropy += ent;
                report.clip_fraction += clipped;
                batches += 1;
            }
        }
        let b = batches as f64;
        report.policy_loss /= b;
        report.value_loss /= b;
        report.entropy /= b;
        report.clip_fraction /= b;
        self.updates += 1;
        Ok(report)
    }

    /// Runs the current policy for `steps` decisions, continuing episodes
    /// across calls through `episode` and updating observation statistics.
    pub fn collect<R: Rng + ?Sized>(
        &mut self,
        env: &mut ProstheticsEnv,
        episode: &mut EpisodeCursor,
        steps: usize,
        rng: &mut R,
    ) -> Result<(Vec<Trajectory>, Vec<EpisodeSummary>)> {
        let mut trajs = Vec::new();
        let mut finished = Vec::new();
        let mut cur = Trajectory::default();
        for _ in 0..steps {
            if episode.obs.is_none() {
                let seed = episode.next_seed;
                episode.next_seed += 1;
                episode.obs = Some(env.reset(seed).to_vec());
                episode.score = 0.0;
                episode.steps = 0;
            }
            let raw = episode.obs.clone().expect("episode in progress");
            if self.config.normalize_obs {
                self.stats.update(&raw);
            }
            let x = self.normalize(&raw);
            let (action, lp) = self.act(&x, rng)?;
            cur.values.push(self.state_value(&x)?);
            let out = frameskip_step(env, &action, self.config.frameskip)?;
            cur.obs.push(x);
            cur.actions.push(action);
            cur.log_probs.push(lp);
            cur.rewards.push(out.reward);
            episode.score += out.score;
            episode.steps += out.frames;
            if out.done.is_done() {
                let last = self.normalize(&out.obs);
                cur.values.push(self.state_value(&last)?);
                cur.end = out.done;
                trajs.push(std::mem::take(&mut cur));
                finished.push(EpisodeSummary {
                    score: episode.score,
                    steps: episode.steps,
                    fell: out.done == DoneKind::Fall,
                });
                episode.obs = None;
            } else {
                episode.obs = Some(out.obs.to_vec());
            }
        }
        if !cur.obs.is_empty() {
            let raw = episode.obs.clone().expect("episode in progress");
            cur.values.push(self.state_value(&self.normalize(&raw))?);
            cur.end = DoneKind::None;
            trajs.push(cur);
        }
        Ok((trajs, finished))
    }
}

/// Episode state carried between rollout collections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeCursor {
    pub obs: Option<Vec<f64>>,
    pub next_seed: u64,
    pub score: f64,
    pub steps: u32,
}

impl EpisodeCursor {
    pub fn new(seed_base: u64) -> Self {
        EpisodeCursor {
            next_seed: seed_base,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub score: f64,
    pub steps: u32,
    pub fell: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    #[test]
    fn squash_examples() {
        assert_eq!(logistic_squash(0.0), 0.5);
        assert!((logistic_squash(50.0) - 1.0).abs() < 1e-15);
        assert!((logistic_squash(0.37) + logistic_squash(-0.37) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_logits_give_half_probabilities() {
        let mut rng = rng_from_seed(0);
        let (a, lp) = bernoulli_policy(&[0.0; 5], &mut rng);
        assert!(a.iter().all(|&x| x == 0.0 || x == 1.0));
        assert!((lp - 5.0 * 0.5f64.ln()).abs() < 1e-12);
        let (a, _) = bernoulli_policy(&[30.0; 4], &mut rng);
        assert_eq!(a, vec![1.0; 4]);
    }

    #[test]
    fn log_prob_is_stable_for_extreme_logits() {
        assert!(bernoulli_log_prob(&[800.0], &[0.0]).is_finite());
        assert!((bernoulli_log_prob(&[-800.0], &[0.0])).abs() < 1e-300);
    }

    #[test]
    fn gae_examples() {
        let (a, _) = gae(&[2.0], &[0.5, 4.0], 0.9, 0.95, DoneKind::Fall).unwrap();
        assert_eq!(a, vec![1.5]);
        let (a, _) = gae(&[2.0], &[0.5, 4.0], 0.9, 0.95, DoneKind::TimeLimit).unwrap();
        assert!((a[0] - (2.0 + 0.9 * 4.0 - 0.5)).abs() < 1e-15);
        let r = [1.0, -2.0, 0.5, 3.0];
        let (a, ret) = gae(&r, &[0.2, 0.7, -0.1, 0.4, 9.0], 1.0, 1.0, DoneKind::Fall).unwrap();
        assert!((a[0] - (r.iter().sum::<f64>() - 0.2)).abs() < 1e-12);
        assert!((ret[0] - r.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn gae_matches_direct_sum() {
        let r = [0.3, 1.2, -0.4, 0.8, 0.1];
        let v = [0.1, 0.5, -0.2, 0.3, 0.6, 1.1];
        let (g, l) = (0.97, 0.9);
        let (a, _) = gae(&r, &v, g, l, DoneKind::TimeLimit).unwrap();
        for t in 0..r.len() {
            let direct: f64 = (t..r.len())
                .map(|k| (g * l as f64).powi((k - t) as i32) * (r[k] + g * v[k + 1] - v[k]))
                .sum();
            assert!((a[t] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_examples() {
        assert_eq!(clipped_surrogate(1.0, 0.7, 0.2), 0.7);
        assert!((clipped_surrogate(1.5, 2.0, 0.2) - 2.4).abs() < 1e-15);
        assert_eq!(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
    }

    #[test]
    fn bandit_converges_to_rewarded_action() {
        let mut rng = rng_from_seed(4);
        let cfg = PpoConfig {
            hidden: vec![8],
            epochs: 4,
            minibatch: 32,
            learning_rate: 1e-2,
            entropy_coeff: 0.0,
            normalize_obs: false,
            ..Default::default()
        };
        let mut agent = PpoAgent::new(1, 1, cfg, &mut rng).unwrap();
        let obs = vec![1.0];
        for _ in 0..200 {
            let mut trajs = Vec::new();
            for _ in 0..32 {
                let (a, lp) = agent.act(&obs, &mut rng).unwrap();
                let v = agent.state_value(&obs).unwrap();
                trajs.push(Trajectory {
                    obs: vec![obs.clone()],
                    rewards: vec![a[0]],
                    actions: vec![a],
                    log_probs: vec![lp],
                    values: vec![v, 0.0],
                    end: DoneKind::Fall,
                });
            }
            let r = Rollout::from_trajectories(&trajs, 0.99, 0.9, true).unwrap();
            agent.update(&r, &mut rng).unwrap();
        }
        let p = logistic(agent.policy.predict(&obs).unwrap()[0]);
        assert!(p > 0.95, "{p}");
    }
}
