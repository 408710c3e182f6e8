use std::collections::VecDeque;

use rand::Rng as _;

use super::message::{decode_weights, EpisodeRecord, Message, MessageKind, SampleBatch, StatsDelta};
use super::transport::Link;
use crate::algo::{
    action_distance, choose_exploration, gaussian_noise, param_noise_adapt, sample_head, sample_head_mask,
    worker_sigma, ExplorationMode, OuNoise, Policy, StickyGaussian, MAX_GAUSSIAN_SIGMA, STICKY_PERIOD, STICKY_SIGMA,
};
use crate::env::{frameskip_step, EnvConfig, ProstheticsEnv, RunningStats, ACTION_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::nn::NetParams;
use crate::replay::{Transition, ALL_HEADS};
use crate::reward::{stage_reward, StageSchedule};
use crate::{rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationConfig {
    /// Draw a mode per episode with the 70/20/10 split; otherwise use `fixed`.
    pub hybrid: bool,
    pub fixed: ExplorationMode,
    /// Gaussian scale of the last worker; earlier workers scale down linearly.
    pub max_sigma: f64,
    pub initial_sigma_p: f64,
    /// Target root-mean-square action distance of parameter noise.
    pub param_target_delta: f64,
    /// Recent states used to measure the parameter-noise distance.
    pub probe_size: usize,
    pub ou_theta: f64,
    pub ou_sigma: f64,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            hybrid: true,
            fixed: ExplorationMode::Gaussian,
            max_sigma: MAX_GAUSSIAN_SIGMA,
            initial_sigma_p: 0.05,
            param_target_delta: 0.1,
            probe_size: 64,
            ou_theta: 0.15,
            ou_sigma: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerConfig {
    pub index: usize,
    pub count: usize,
    pub seed_base: u64,
    pub frameskip: u32,
    /// Environment parameters, including the training reward spec.
    pub env: EnvConfig,
    pub exploration: ExplorationConfig,
    /// Transitions per shipped batch.
    pub batch_size: usize,
    /// Uniformly random actions for this many initial steps.
    pub random_steps: u64,
    /// Bootstrap heads; each transition carries a random head mask when above one.
    pub heads: usize,
    /// Wait for weights before acting, and for a reply after every batch.
    pub lockstep: bool,
    /// Block for initial weights before the first episode.
    pub await_weights: bool,
    /// Stop on its own after this many episodes.
    pub max_episodes: Option<u64>,
    /// Reward courses by estimated global step (own steps times worker
    /// count), switched at episode starts. `None` keeps `env.reward`.
    pub reward_stages: Option<StageSchedule>,
}

impl WorkerConfig {
    pub fn new(index: usize, count: usize, seed_base: u64, env: EnvConfig) -> Self {
        WorkerConfig {
            index,
            count,
            seed_base,
            frameskip: 1,
            env,
            exploration: ExplorationConfig::default(),
            batch_size: 256,
            random_steps: 0,
            heads: 1,
            lockstep: false,
            await_weights: true,
            max_episodes: None,
            reward_stages: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.index >= self.count {
            return Err(Error::config("distributed.workers", format!("worker index {} not below count {}", self.index, self.count)));
        }
        if self.frameskip == 0 {
            return Err(Error::config("env.frameskip", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("distributed.batch_size", "must be positive"));
        }
        if self.heads == 0 || self.heads > 32 {
            return Err(Error::config("td3.heads", "must lie in 1..=32"));
        }
        self.env.validate()
    }

    /// Seed of the worker's own generator.
    pub fn worker_seed(&self) -> u64 {
        self.seed_base
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(self.index as u64 + 1)
    }

    /// Seed of the worker's `episode`-th episode.
    pub fn episode_seed(&self, episode: u64) -> u64 {
        self.seed_base
            .wrapping_add((self.index as u64) << 40)
            .wrapping_add(episode)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SamplerReport {
    pub episodes: u64,
    pub transitions_shipped: u64,
    pub batches: u64,
    /// Weight versions in the order they were applied.
    pub versions: Vec<u64>,
    pub env_faults: u64,
}

struct Worker<'a> {
    cfg: &'a WorkerConfig,
    link: &'a mut dyn Link,
    policy: Option<NetParams>,
    version: Option<u64>,
    shutdown: bool,
    pending: Vec<Transition>,
    finished: Vec<EpisodeRecord>,
    stats: RunningStats,
    clamp_seen: u64,
    report: SamplerReport,
}

impl Worker<'_> {
    fn handle(&mut self, msg: Message) -> Result<()> {
        match msg.kind {
            MessageKind::WeightsUpdate => {
                let (version, net) = decode_weights(&msg.payload)?;
                if self.version.is_none_or(|v| version > v) {
                    self.policy = Some(net);
                    self.version = Some(version);
                    self.report.versions.push(version);
                }
            }
            MessageKind::Shutdown => self.shutdown = true,
            _ => {}
        }
        Ok(())
    }

    fn drain(&mut self) -> Result<()> {
        while let Some(msg) = self.link.try_recv()? {
            self.handle(msg)?;
        }
        Ok(())
    }

    fn ship(&mut self, env: &ProstheticsEnv) -> Result<()> {
        let clamps = env.clamp_warnings();
        let delta = StatsDelta {
            worker: self.cfg.index as u32,
            clamp_warnings: clamps - self.clamp_seen,
            env_faults: self.report.env_faults,
            stats: std::mem::replace(&mut self.stats, RunningStats::new(OBS_DIM)),
        };
        self.clamp_seen = clamps;
        self.link.send(delta.to_message())?;
        let batch = SampleBatch {
            worker: self.cfg.index as u32,
            obs_dim: OBS_DIM as u32,
            action_dim: ACTION_DIM as u32,
            transitions: std::mem::take(&mut self.pending),
            episodes: std::mem::take(&mut self.finished),
        };
        self.report.transitions_shipped += batch.transitions.len() as u64;
        self.report.batches += 1;
        self.link.send(batch.to_message())?;
        if self.cfg.lockstep && !self.shutdown {
            let reply = self.link.recv()?;
            self.handle(reply)?;
        } else {
            self.drain()?;
        }
        Ok(())
    }
}

fn add_noise(a: &mut [f64], noise: &[f64]) {
    for (x, n) in a.iter_mut().zip(noise) {
        *x = (*x + n).clamp(0.0, 1.0);
    }
}

/// Runs episodes until a shutdown request (finishing the current episode) or
/// the configured episode limit, shipping fixed-size batches. The remainder
/// goes out in a final short batch followed by a shutdown acknowledgement.
pub fn sampler_loop(cfg: &WorkerConfig, link: &mut dyn Link) -> Result<SamplerReport> {
    cfg.validate()?;
    let mut rng: Rng = rng_from_seed(cfg.worker_seed());
    let mut env = ProstheticsEnv::new(cfg.env.clone(), cfg.episode_seed(0))?;
    let mut w = Worker {
        cfg,
        link,
        policy: None,
        version: None,
        shutdown: false,
        pending: Vec::with_capacity(cfg.batch_size),
        finished: Vec::new(),
        stats: RunningStats::new(OBS_DIM),
        clamp_seen: 0,
        report: SamplerReport::default(),
    };
    if cfg.await_weights || cfg.lockstep {
        let first = w.link.recv()?;
        w.handle(first)?;
    }

    let ex = &cfg.exploration;
    let sigma = worker_sigma(cfg.index, cfg.count, ex.max_sigma);
    let mut sigma_p = ex.initial_sigma_p;
    let mut probe: VecDeque<Vec<f64>> = VecDeque::with_capacity(ex.probe_size);
    let mut ou = OuNoise::new(ACTION_DIM, ex.ou_theta, ex.ou_sigma, 1.0);
    let mut sticky = StickyGaussian::new(ACTION_DIM, STICKY_SIGMA, STICKY_PERIOD);
    let mut steps_total = 0u64;

    while !w.shutdown && cfg.max_episodes.is_none_or(|m| w.report.episodes < m) {
        if let Some(stages) = &cfg.reward_stages {
            env.set_reward(stage_reward(stages, steps_total * cfg.count as u64).clone());
        }
        let mut obs = env.reset(cfg.episode_seed(w.report.episodes));
        let mode = if ex.hybrid { choose_exploration(&mut rng) } else { ex.fixed };
        let head = sample_head(cfg.heads, &mut rng);
        ou.reset();
        sticky.reset();
        let acting: Option<NetParams> = match (&w.policy, mode) {
            (Some(p), ExplorationMode::ParamNoise) => {
                let perturbed = p.perturbed(sigma_p, &mut rng);
                if !probe.is_empty() {
                    let clean = probe.iter().map(|s| p.act(s, head)).collect::<Result<Vec<_>>>()?;
                    let noisy = probe.iter().map(|s| perturbed.act(s, head)).collect::<Result<Vec<_>>>()?;
                    sigma_p = param_noise_adapt(sigma_p, action_distance(&noisy, &clean), ex.param_target_delta);
                }
                Some(perturbed)
            }
            (Some(p), _) => Some(p.clone()),
            (None, _) => None,
        };

        let mut record = EpisodeRecord {
            score: 0.0,
            steps: 0,
            fell: false,
            mode,
        };
        loop {
            let mut action = match &acting {
                Some(p) if steps_total >= cfg.random_steps => p.act(&obs, head)?,
                _ => (0..ACTION_DIM).map(|_| rng.random::<f64>()).collect(),
            };
            match mode {
                ExplorationMode::Gaussian => add_noise(&mut action, &gaussian_noise(ACTION_DIM, sigma, &mut rng)),
                ExplorationMode::Ou => {
                    let n = ou.sample(&mut rng).to_vec();
                    add_noise(&mut action, &n)
                }
                ExplorationMode::Sticky => {
                    let n = sticky.sample(&mut rng).to_vec();
                    add_noise(&mut action, &n)
                }
                ExplorationMode::ParamNoise | ExplorationMode::None => {}
            }
            let out = match frameskip_step(&mut env, &action, cfg.frameskip) {
                Ok(o) => o,
                Err(_) => {
                    w.report.env_faults += 1;
                    break;
                }
            };
            let mask = if cfg.heads > 1 { sample_head_mask(cfg.heads, &mut rng) } else { ALL_HEADS };
            w.stats.update(&obs);
            if probe.len() == ex.probe_size.max(1) {
                probe.pop_front();
            }
            probe.push_back(obs.to_vec());
            let next = out.obs;
            w.pending
                .push(Transition::new(obs.to_vec(), action, out.reward, next.to_vec(), out.done).with_head_mask(mask));
            steps_total += 1;
            record.score += out.score;
            record.steps += out.frames;
            obs = next;
            if out.done.is_done() {
                record.fell = out.done.is_absorbing();
                w.finished.push(record);
                w.report.episodes += 1;
            }
            if w.pending.len() >= cfg.batch_size {
                w.ship(&env)?;
            }
            if out.done.is_done() {
                break;
            }
        }
        if !cfg.lockstep {
            w.drain()?;
        }
    }
    if !w.pending.is_empty() || !w.finished.is_empty() {
        w.shutdown = true;
        w.ship(&env)?;
    }
    w.link.send(Message::shutdown())?;
    Ok(w.report)
}
