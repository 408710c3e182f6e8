//! Flat `key = value` run configuration with a frozen schema.
//!
//! Keys use dotted namespaces, `#` starts a comment, and every key not in
//! [`SCHEMA`] is rejected. The snapshot written into a run directory lists
//! every key, so a snapshot alone reproduces the run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::algo::{AcConfig, ExplorationMode, PpoConfig};
use crate::distributed::{ExplorationConfig, TrainerConfig, WorkerConfig, BIND_ADDR_VAR};
use crate::env::observation::{CLIP_THRESHOLD_X, CLIP_THRESHOLD_Z};
use crate::env::{EnvConfig, ObsTransforms};
use crate::error::{Error, Result};
use crate::inference::EvalConfig;
use crate::nn::Activation;
use crate::reward::{Penalty, RewardBase, RewardSpec, StageSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Choice(&'static [&'static str]),
    /// Comma-separated positive integers.
    IntList,
    /// A float or `off`.
    OptFloat,
    /// An integer or `off`.
    OptInt,
    Text,
}

const ALGORITHMS: &[&str] = &["td3", "ddpg", "ppo"];
const BASES: &[&str] = &[
    "round1",
    "round2",
    "inverse",
    "relative",
    "clipped_high",
    "exponential",
    "rukia",
    "mattias_scaled",
];
const ACTIVATIONS: &[&str] = &["linear", "tanh", "relu", "selu", "logistic10", "sigmoid"];
const MODES: &[&str] = &["gaussian", "param", "none", "ou", "sticky"];
const TRANSPORTS: &[&str] = &["channel", "tcp"];
const TRISTATE: &[&str] = &["auto", "on", "off"];

macro_rules! reward_keys {
    ($p:literal) => {
        [
            (concat!($p, ".base"), "round2", Kind::Choice(BASES)),
            (concat!($p, ".b"), "10", Kind::Float),
            (concat!($p, ".rescale"), "false", Kind::Bool),
            (concat!($p, ".effort"), "0.001", Kind::Float),
            (concat!($p, ".exp_literal"), "false", Kind::Bool),
            (concat!($p, ".w.crossing_legs"), "0", Kind::Float),
            (concat!($p, ".w.scissors"), "0", Kind::Float),
            (concat!($p, ".w.sideways"), "0", Kind::Float),
            (concat!($p, ".w.pelvis_orientation"), "0", Kind::Float),
            (concat!($p, ".w.knee_bend"), "0", Kind::Float),
            (concat!($p, ".w.feet_direction"), "0", Kind::Float),
        ]
    };
}

const REWARD: [(&str, &str, Kind); 11] = reward_keys!("reward");
const REWARD2: [(&str, &str, Kind); 11] = reward_keys!("reward2");

/// Key, default value and type of every configuration entry.
pub const SCHEMA: &[(&str, &str, Kind)] = &[
    ("run.algorithm", "td3", Kind::Choice(ALGORITHMS)),
    ("run.seed", "0", Kind::Int),
    ("run.output_dir", "run", Kind::Text),
    ("run.total_steps", "200000", Kind::Int),
    ("run.checkpoint_every", "10000", Kind::Int),
    ("run.log_every", "100", Kind::Int),
    ("run.eval_trials", "10", Kind::Int),
    ("env.jump_prob", "0.005", Kind::Float),
    ("env.dt", "0.01", Kind::Float),
    ("env.max_steps", "1000", Kind::Int),
    ("env.frameskip", "1", Kind::Int),
    ("env.literal_r0", "false", Kind::Bool),
    ("env.rotate", "false", Kind::Bool),
    ("env.soft_target_tau", "off", Kind::OptFloat),
    ("env.clip_requested", "false", Kind::Bool),
    ("reward.switch_at", "off", Kind::OptInt),
    ("arch.hidden", "64,64", Kind::IntList),
    ("arch.activation", "relu", Kind::Choice(ACTIVATIONS)),
    ("arch.layer_norm", "true", Kind::Bool),
    ("td3.quantiles", "1", Kind::Int),
    ("td3.heads", "1", Kind::Int),
    ("td3.twin", "true", Kind::Bool),
    ("td3.gamma", "0.96", Kind::Float),
    ("td3.tau", "0.01", Kind::Float),
    ("td3.smooth_sigma", "0.2", Kind::Float),
    ("td3.smooth_clip", "0.5", Kind::Float),
    ("td3.kappa", "1", Kind::Float),
    ("td3.actor_delay", "1", Kind::Int),
    ("td3.actor_lr", "0.001", Kind::Float),
    ("td3.critic_lr", "0.001", Kind::Float),
    ("td3.weight_decay", "0", Kind::Float),
    ("train.batch_size", "64", Kind::Int),
    ("train.warmup", "1000", Kind::Int),
    ("train.random_steps", "1000", Kind::Int),
    ("train.replay_capacity", "250000", Kind::Int),
    ("train.prioritized", "false", Kind::Bool),
    ("train.alpha", "0.6", Kind::Float),
    ("train.beta", "0.4", Kind::Float),
    ("train.save_replay", "false", Kind::Bool),
    ("ppo.hidden", "64,64", Kind::IntList),
    ("ppo.activation", "tanh", Kind::Choice(ACTIVATIONS)),
    ("ppo.lr", "0.0003", Kind::Float),
    ("ppo.clip", "0.2", Kind::Float),
    ("ppo.epochs", "10", Kind::Int),
    ("ppo.minibatch", "256", Kind::Int),
    ("ppo.rollout", "4096", Kind::Int),
    ("ppo.entropy", "0.01", Kind::Float),
    ("ppo.gamma", "0.99", Kind::Float),
    ("ppo.lambda", "0.9", Kind::Float),
    ("ppo.time_limit_bootstrap", "true", Kind::Bool),
    ("ppo.normalize_obs", "true", Kind::Bool),
    ("explore.hybrid", "true", Kind::Bool),
    ("explore.mode", "gaussian", Kind::Choice(MODES)),
    ("explore.max_sigma", "0.3", Kind::Float),
    ("explore.param_sigma", "0.05", Kind::Float),
    ("explore.param_delta", "0.1", Kind::Float),
    ("distributed.workers", "1", Kind::Int),
    ("distributed.transport", "channel", Kind::Choice(TRANSPORTS)),
    ("distributed.bind_addr", "127.0.0.1:0", Kind::Text),
    ("distributed.remote", "false", Kind::Bool),
    ("distributed.transitions_per_update", "4", Kind::Int),
    ("distributed.broadcast_every", "10", Kind::Int),
    ("distributed.batch_size", "256", Kind::Int),
    ("distributed.lockstep", "auto", Kind::Choice(TRISTATE)),
];

fn schema_entry(key: &str) -> Option<&'static (&'static str, &'static str, Kind)> {
    SCHEMA.iter().chain(REWARD.iter()).chain(REWARD2.iter()).find(|e| e.0 == key)
}

fn all_entries() -> impl Iterator<Item = &'static (&'static str, &'static str, Kind)> {
    SCHEMA.iter().chain(REWARD.iter()).chain(REWARD2.iter())
}

fn check_value(key: &str, value: &str, kind: Kind) -> Result<()> {
    let bad = |what: &str| Err(Error::config(key, format!("expected {what}, got `{value}`")));
    let ok = match kind {
        Kind::Float => value.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::Int => value.parse::<u64>().is_ok(),
        Kind::Bool => value == "true" || value == "false",
        Kind::Choice(opts) => {
            if !opts.contains(&value) {
                return bad(&format!("one of {}", opts.join(", ")));
            }
            true
        }
        Kind::IntList => value.split(',').all(|s| s.trim().parse::<usize>().is_ok_and(|v| v > 0)),
        Kind::OptFloat => value == "off" || value.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::OptInt => value == "off" || value.parse::<u64>().is_ok(),
        Kind::Text => !value.is_empty(),
    };
    if ok {
        Ok(())
    } else {
        bad(match kind {
            Kind::Float => "a finite number",
            Kind::Int => "a non-negative integer",
            Kind::Bool => "true or false",
            Kind::IntList => "comma-separated positive integers",
            Kind::OptFloat => "a number or off",
            Kind::OptInt => "an integer or off",
            _ => "a non-empty value",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: all_entries().map(|(k, d, _)| (*k, d.to_string())).collect(),
        }
    }
}

impl RunConfig {
    /// Defaults overridden by the lines of `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (k, _, kind) = schema_entry(key).ok_or_else(|| Error::config(key, "unknown key"))?;
        check_value(key, value, *kind)?;
        self.values.insert(k, value.to_string());
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::config(o, "override must be `key=value`"))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("`{key}` is not in the schema"))
    }

    /// Every key in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# prlx run configuration\n");
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn float(&self, key: &str) -> f64 {
        self.get(key).parse().expect("validated on set")
    }

    pub fn int(&self, key: &str) -> u64 {
        self.get(key).parse().expect("validated on set")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.get(key) == "true"
    }

    fn opt_float(&self, key: &str) -> Option<f64> {
        self.get(key).parse().ok()
    }

    fn list(&self, key: &str) -> Vec<usize> {
        self.get(key).split(',').map(|s| s.trim().parse().expect("validated on set")).collect()
    }

    fn activation(&self, key: &str) -> Activation {
        Activation::from_name(self.get(key)).expect("validated on set")
    }

    pub fn algorithm(&self) -> &str {
        self.get("run.algorithm")
    }

    pub fn seed(&self) -> u64 {
        self.int("run.seed")
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("run.output_dir"))
    }

    pub fn workers(&self) -> usize {
        self.int("distributed.workers") as usize
    }

    pub fn lockstep(&self) -> bool {
        match self.get("distributed.lockstep") {
            "on" => true,
            "off" => false,
            _ => self.workers() == 1,
        }
    }

    /// Listen address; the environment variable wins over the file.
    pub fn bind_addr(&self) -> String {
        std::env::var(BIND_ADDR_VAR).unwrap_or_else(|_| self.get("distributed.bind_addr").to_string())
    }

    fn reward_spec(&self, prefix: &str) -> RewardSpec {
        let key = |k: &str| format!("{prefix}.{k}");
        let mut spec = RewardSpec::new(RewardBase::from_name(self.get(&key("base"))).expect("validated on set"))
            .with_base_constant(self.float(&key("b")))
            .with_rescale(self.flag(&key("rescale")));
        spec.effort_coeff = self.float(&key("effort"));
        spec.exponential_literal = self.flag(&key("exp_literal"));
        for p in Penalty::ALL {
            let w = self.float(&key(&format!("w.{}", p.name())));
            if w != 0.0 {
                spec = spec.with_penalty(p, w);
            }
        }
        spec
    }

    /// Training reward courses: `reward.*`, then `reward2.*` from
    /// `reward.switch_at` global steps on when set.
    pub fn stage_schedule(&self) -> Result<StageSchedule> {
        let first = self.reward_spec("reward");
        match self.get("reward.switch_at").parse::<u64>() {
            Ok(at) => StageSchedule::new(vec![(first, at), (self.reward_spec("reward2"), u64::MAX)])
                .map_err(|e| Error::config("reward.switch_at", e.to_string())),
            Err(_) => Ok(StageSchedule::single(first)),
        }
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        let cfg = EnvConfig {
            jump_prob: self.float("env.jump_prob"),
            r0: if self.flag("env.literal_r0") { EnvConfig::LITERAL_R0 } else { 0.0 },
            dt: self.float("env.dt"),
            max_steps: self.int("env.max_steps") as u32,
            transforms: ObsTransforms {
                rotate: self.flag("env.rotate"),
                soft_target_tau: self.opt_float("env.soft_target_tau"),
                clip_requested: self
                    .flag("env.clip_requested")
                    .then_some((CLIP_THRESHOLD_X, CLIP_THRESHOLD_Z)),
            },
            reward: self.reward_spec("reward"),
        };
        cfg.validate()?;
        if self.int("env.frameskip") == 0 {
            return Err(Error::config("env.frameskip", "must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn ac_config(&self) -> Result<AcConfig> {
        let base = if self.algorithm() == "ddpg" { AcConfig::ddpg() } else { AcConfig::td3() };
        let cfg = AcConfig {
            hidden: self.list("arch.hidden"),
            activation: self.activation("arch.activation"),
            layer_norm: self.flag("arch.layer_norm"),
            quantiles: self.int("td3.quantiles") as usize,
            heads: self.int("td3.heads") as usize,
            twin: self.flag("td3.twin") && self.algorithm() != "ddpg",
            gamma: self.float("td3.gamma"),
            tau: self.float("td3.tau"),
            smooth_sigma: if self.algorithm() == "ddpg" { 0.0 } else { self.float("td3.smooth_sigma") },
            smooth_clip: self.float("td3.smooth_clip"),
            kappa: self.float("td3.kappa"),
            actor_delay: self.int("td3.actor_delay") as u32,
            actor_lr: self.float("td3.actor_lr"),
            critic_lr: self.float("td3.critic_lr"),
            weight_decay: self.float("td3.weight_decay"),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ppo_config(&self) -> Result<PpoConfig> {
        let cfg = PpoConfig {
            hidden: self.list("ppo.hidden"),
            activation: self.activation("ppo.activation"),
            learning_rate: self.float("ppo.lr"),
            clip: self.float("ppo.clip"),
            epochs: self.int("ppo.epochs") as usize,
            minibatch: self.int("ppo.minibatch") as usize,
            entropy_coeff: self.float("ppo.entropy"),
            gamma: self.float("ppo.gamma"),
            lambda: self.float("ppo.lambda"),
            time_limit_bootstrap: self.flag("ppo.time_limit_bootstrap"),
            normalize_obs: self.flag("ppo.normalize_obs"),
            frameskip: self.int("env.frameskip") as u32,
        };
        cfg.validate()?;
        if self.int("ppo.rollout") == 0 {
            return Err(Error::config("ppo.rollout", "must be positive"));
        }
        Ok(cfg)
    }

    pub fn trainer_config(&self) -> Result<TrainerConfig> {
        let cfg = TrainerConfig {
            total_transitions: self.int("run.total_steps"),
            transitions_per_update: self.int("distributed.transitions_per_update"),
            batch_size: self.int("train.batch_size") as usize,
            warmup: self.int("train.warmup") as usize,
            broadcast_every: self.int("distributed.broadcast_every"),
            checkpoint_every: self.int("run.checkpoint_every"),
            seed: self.seed(),
            lockstep: self.lockstep(),
        };
        cfg.validate()?;
        if self.int("train.replay_capacity") == 0 {
            return Err(Error::config("train.replay_capacity", "must be positive"));
        }
        Ok(cfg)
    }

    pub fn exploration(&self) -> ExplorationConfig {
        ExplorationConfig {
            hybrid: self.flag("explore.hybrid"),
            fixed: ExplorationMode::from_name(self.get("explore.mode")).unwrap_or(ExplorationMode::Gaussian),
            max_sigma: self.float("explore.max_sigma"),
            initial_sigma_p: self.float("explore.param_sigma"),
            param_target_delta: self.float("explore.param_delta"),
            ..Default::default()
        }
    }

    /// One configuration per sampler; `seed_base` separates resumed runs.
    pub fn worker_configs(&self, seed_base: u64, random_steps: u64) -> Result<Vec<WorkerConfig>> {
        let n = self.workers();
        if n == 0 {
            return Err(Error::config("distributed.workers", "at least one sampler is required"));
        }
        let env = self.env_config()?;
        let stages = self.stage_schedule()?;
        let heads = self.int("td3.heads") as usize;
        (0..n)
            .map(|i| {
                let mut w = WorkerConfig::new(i, n, seed_base, env.clone());
                w.frameskip = self.int("env.frameskip") as u32;
                w.exploration = self.exploration();
                w.batch_size = self.int("distributed.batch_size") as usize;
                w.random_steps = random_steps / n as u64;
                w.heads = heads;
                w.lockstep = self.lockstep();
                w.reward_stages = (stages.stages().len() > 1).then(|| stages.clone());
                w.validate()?;
                Ok(w)
            })
            .collect()
    }

    /// Evaluation always scores with the round-two reward.
    pub fn eval_config(&self) -> Result<EvalConfig> {
        let mut env = self.env_config()?;
        env.reward = RewardSpec::score();
        Ok(EvalConfig {
            trials: self.int("run.eval_trials") as usize,
            seed_base: self.seed(),
            env,
            frameskip: self.int("env.frameskip") as u32,
        })
    }

    /// Checks every derived configuration for the selected algorithm.
    pub fn validate(&self) -> Result<()> {
        self.env_config()?;
        self.stage_schedule()?;
        if self.algorithm() == "ppo" {
            self.ppo_config()?;
        } else {
            self.ac_config()?;
            self.trainer_config()?;
            self.worker_configs(0, 0)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let mut ppo = RunConfig::default();
        ppo.set("run.algorithm", "ppo").unwrap();
        ppo.validate().unwrap();
    }

    #[test]
    fn unknown_key_names_itself() {
        let e = RunConfig::parse("env.jump_probability = 0.1").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "env.jump_probability"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn type_errors_name_the_key() {
        for (k, v) in [("run.seed", "-1"), ("td3.twin", "yes"), ("arch.hidden", "64,0"), ("reward.base", "x")] {
            let e = RunConfig::parse(&format!("{k} = {v}")).unwrap_err();
            assert!(matches!(e, Error::Config { ref key, .. } if key == k), "{k}");
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = RunConfig::parse("run.seed = 7\nreward.w.sideways = 1.5 # shaping\n").unwrap();
        c.apply_overrides(&["td3.gamma=0.9"]).unwrap();
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.seed(), 7);
        assert_eq!(back.env_config().unwrap().reward.penalties, vec![(Penalty::Sideways, 1.5)]);
    }

    #[test]
    fn range_errors_surface_as_config_errors() {
        let c = RunConfig::parse("td3.gamma = 1.5").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config { ref key, .. }) if key == "td3.gamma"));
        let c = RunConfig::parse("env.jump_prob = 2").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config { ref key, .. }) if key == "env.jump_prob"));
    }

    #[test]
    fn two_stage_rewards() {
        let c = RunConfig::parse("reward.base = relative\nreward.switch_at = 100\nreward2.base = clipped_high").unwrap();
        let s = c.stage_schedule().unwrap();
        assert_eq!(s.stages().len(), 2);
        assert_eq!(s.stages()[1].0.base, RewardBase::ClippedHigh);
    }

    #[test]
    fn lockstep_auto_follows_worker_count() {
        let mut c = RunConfig::default();
        assert!(c.lockstep());
        c.set("distributed.workers", "4").unwrap();
        assert!(!c.lockstep());
        c.set("distributed.lockstep", "on").unwrap();
        assert!(c.lockstep());
    }
}
