//! Ensembles and their text manifest.
//!
//! A manifest is a list of `key = value` lines; `#` starts a comment and
//! relative paths resolve against the manifest's directory.
//!
//! | key | value |
//! |---|---|
//! | `actor` | network checkpoint or agent bundle (its actor); repeatable |
//! | `critic` | network checkpoint or agent bundle (its online critics); repeatable |
//! | `agent` | agent bundle contributing its actor and online critics; repeatable |
//! | `mixtures` | comma-separated subset of `1,2,3` |
//! | `candidates` | `count, sigma` or `off` |
//! | `switch.start_steps`, `switch.side_threshold` | task-switch rules |
//! | `switch.start`, `switch.side`, `switch.normal` | comma-separated actor ids for that mode |

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::ensemble::{critic_guided_act, ensemble_act};
use super::schedule::{task_switch, SwitchRules, TaskMode};
use crate::algo::bundle::{decode_networks, AgentKind};
use crate::algo::{Policy, QuantileCritic};
use crate::env::observation::TARGET;
use crate::error::{Error, Result};
use crate::nn::{checkpoint, NetParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub actors: Vec<NetParams>,
    pub critics: Vec<NetParams>,
    pub orders: Vec<usize>,
    /// Critic-guided search around the chosen action: count and sigma.
    pub candidates: Option<(usize, f64)>,
    pub switch: Option<SwitchRules>,
    /// Actor ids per mode (start, side, normal); `None` uses every actor.
    pub mode_actors: [Option<Vec<usize>>; 3],
}

fn mode_slot(mode: TaskMode) -> usize {
    match mode {
        TaskMode::Start => 0,
        TaskMode::Side => 1,
        TaskMode::Normal => 2,
    }
}

impl EnsembleSpec {
    pub fn new(actors: Vec<NetParams>, critics: Vec<NetParams>) -> Result<Self> {
        let spec = EnsembleSpec {
            actors,
            critics,
            orders: vec![1, 2, 3],
            candidates: None,
            switch: None,
            mode_actors: [None, None, None],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.actors.is_empty() {
            return Err(Error::config("actor", "an ensemble needs at least one actor"));
        }
        if self.critics.is_empty() {
            return Err(Error::config("critic", "an ensemble needs at least one critic"));
        }
        if self.orders.is_empty() || self.orders.iter().any(|o| !(1..=3).contains(o)) {
            return Err(Error::config("mixtures", "must be a non-empty subset of 1,2,3"));
        }
        if let Some((n, sigma)) = self.candidates {
            if n == 0 || !(sigma >= 0.0) {
                return Err(Error::config("candidates", "count must be at least 1 and sigma non-negative"));
            }
        }
        for ids in self.mode_actors.iter().flatten() {
            if ids.is_empty() || ids.iter().any(|&i| i >= self.actors.len()) {
                return Err(Error::config("switch", "actor ids must be non-empty and refer to listed actors"));
            }
        }
        Ok(())
    }

    /// Mode the task-switch rules select for this step.
    pub fn mode(&self, obs: &[f64], t: u32) -> TaskMode {
        match &self.switch {
            Some(rules) if obs.len() > TARGET + 1 => task_switch(t, (obs[TARGET], obs[TARGET + 1]), rules),
            _ => TaskMode::Normal,
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], t: u32, rng: &mut R) -> Result<Vec<f64>> {
        let actors: Vec<&dyn Policy> = match &self.mode_actors[mode_slot(self.mode(obs, t))] {
            Some(ids) => ids.iter().map(|&i| &self.actors[i] as &dyn Policy).collect(),
            None => self.actors.iter().map(|a| a as &dyn Policy).collect(),
        };
        let critics: Vec<&dyn QuantileCritic> = self.critics.iter().map(|c| c as &dyn QuantileCritic).collect();
        let chosen = ensemble_act(&actors, &critics, &self.orders, obs)?;
        match self.candidates {
            Some((n, sigma)) => critic_guided_act(&chosen, &critics, obs, n, sigma, rng),
            None => Ok(chosen),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleManifest {
    pub actors: Vec<PathBuf>,
    pub critics: Vec<PathBuf>,
    pub agents: Vec<PathBuf>,
    pub orders: Vec<usize>,
    pub candidates: Option<(usize, f64)>,
    pub switch: Option<SwitchRules>,
    pub mode_actors: [Option<Vec<usize>>; 3],
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::config(key, format!("cannot parse `{s}`"))))
        .collect()
}

impl EnsembleManifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut m = EnsembleManifest {
            actors: Vec::new(),
            critics: Vec::new(),
            agents: Vec::new(),
            orders: vec![1, 2, 3],
            candidates: None,
            switch: None,
            mode_actors: [None, None, None],
        };
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "actor" => m.actors.push(base.join(value)),
                "critic" => m.critics.push(base.join(value)),
                "agent" => m.agents.push(base.join(value)),
                "mixtures" => m.orders = parse_list(key, value)?,
                "candidates" if value == "off" => m.candidates = None,
                "candidates" => {
                    let (n, s) = value
                        .split_once(',')
                        .ok_or_else(|| Error::config(key, "expected `count, sigma`"))?;
                    let n = n.trim().parse().map_err(|_| Error::config(key, "bad count"))?;
                    let s = s.trim().parse().map_err(|_| Error::config(key, "bad sigma"))?;
                    m.candidates = Some((n, s));
                }
                "switch.start_steps" => {
                    m.switch.get_or_insert_with(SwitchRules::default).start_steps =
                        value.parse().map_err(|_| Error::config(key, "expected an integer"))?
                }
                "switch.side_threshold" => {
                    m.switch.get_or_insert_with(SwitchRules::default).side_threshold =
                        value.parse().map_err(|_| Error::config(key, "expected a number"))?
                }
                "switch.start" | "switch.side" | "switch.normal" => {
                    let slot = match key {
                        "switch.start" => 0,
                        "switch.side" => 1,
                        _ => 2,
                    };
                    m.mode_actors[slot] = Some(parse_list(key, value)?);
                    m.switch.get_or_insert_with(SwitchRules::default);
                }
                _ => return Err(Error::config(key, "unknown manifest key")),
            }
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn load(&self) -> Result<EnsembleSpec> {
        let mut actors = Vec::new();
        let mut critics = Vec::new();
        for p in &self.agents {
            let (a, c) = load_agent(p)?;
            actors.push(a);
            critics.extend(c);
        }
        for p in &self.actors {
            actors.push(load_agent(p).map(|(a, _)| a).or_else(|_| checkpoint::load(p))?);
        }
        for p in &self.critics {
            match load_agent(p) {
                Ok((_, c)) => critics.extend(c),
                Err(_) => critics.push(checkpoint::load(p)?),
            }
        }
        let spec = EnsembleSpec {
            actors,
            critics,
            orders: self.orders.clone(),
            candidates: self.candidates,
            switch: self.switch,
            mode_actors: self.mode_actors.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Actor and online critics of an actor-critic bundle.
fn load_agent(path: &Path) -> Result<(NetParams, Vec<NetParams>)> {
    let (kind, mut nets) = decode_networks(&fs::read(path)?)?;
    if kind != AgentKind::ActorCritic || nets.len() < 4 {
        return Err(Error::InvalidArgument(format!("{} is not an actor-critic bundle", path.display())));
    }
    let k = (nets.len() - 2) / 2;
    let critics = nets.drain(2..2 + k).collect();
    Ok((nets.swap_remove(0), critics))
}
