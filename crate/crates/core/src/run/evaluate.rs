use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng as _;

use crate::algo::bundle::{decode_policy, LoadedPolicy, MAGIC as BUNDLE_MAGIC};
use crate::env::ACTION_DIM;
use crate::error::Result;
use crate::inference::{evaluate, EnsembleManifest, EnsembleSpec, EvalConfig, EvalReport};
use crate::nn::checkpoint::{self, MAGIC as NET_MAGIC};
use crate::nn::NetParams;
use crate::replay::{decode_snapshot, DoneKind};
use crate::rng_from_seed;

/// What `evaluate` runs.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    /// Uniform actions in `[0, 1]`.
    Random,
    /// A training checkpoint bundle, a bare network checkpoint or an ensemble
    /// manifest; told apart by the leading magic bytes.
    Path(PathBuf),
}

enum Loaded {
    Random,
    Bundle(LoadedPolicy),
    Net(NetParams),
    Ensemble(EnsembleSpec),
}

fn load(source: &PolicySource) -> Result<Loaded> {
    let path = match source {
        PolicySource::Random => return Ok(Loaded::Random),
        PolicySource::Path(p) => p,
    };
    let bytes = fs::read(path)?;
    Ok(if bytes.starts_with(BUNDLE_MAGIC) {
        Loaded::Bundle(decode_policy(&bytes)?)
    } else if bytes.starts_with(NET_MAGIC) {
        Loaded::Net(checkpoint::decode(&bytes)?)
    } else {
        Loaded::Ensemble(EnsembleManifest::read(path)?.load()?)
    })
}

/// Evaluates `source`, writing one JSON line per trial and a final summary line.
pub fn cmd_evaluate(source: &PolicySource, cfg: &EvalConfig, out: &mut dyn Write) -> Result<EvalReport> {
    let policy = load(source)?;
    let mut rng = rng_from_seed(cfg.seed_base ^ 0xe7a1);
    let mut act = |obs: &[f64], t: u32| -> Result<Vec<f64>> {
        match &policy {
            Loaded::Random => Ok((0..ACTION_DIM).map(|_| rng.random::<f64>()).collect()),
            Loaded::Bundle(p) => p.act(obs, 0),
            Loaded::Net(n) => n.predict_head(obs, 0),
            Loaded::Ensemble(e) => e.act(obs, t, &mut rng),
        }
    };
    let report = evaluate(&mut act, cfg)?;
    for t in &report.trials {
        writeln!(out, "{}", t.to_json())?;
    }
    writeln!(out, "{}", report.summary_json())?;
    Ok(report)
}

/// Human-readable summary of a replay snapshot.
pub fn inspect_replay(path: impl AsRef<Path>) -> Result<String> {
    let snap = decode_snapshot(&fs::read(path)?)?;
    let n = snap.transitions.len();
    let count = |k: DoneKind| snap.transitions.iter().filter(|t| t.done == k).count();
    let rewards: Vec<f64> = snap.transitions.iter().map(|t| t.reward).collect();
    let mut s = format!(
        "transitions: {n}\nobs_dim: {}\naction_dim: {}\nfalls: {}\ntime_limits: {}\n",
        snap.obs_dim,
        snap.action_dim,
        count(DoneKind::Fall),
        count(DoneKind::TimeLimit)
    );
    if n > 0 {
        let mean = rewards.iter().sum::<f64>() / n as f64;
        let min = rewards.iter().copied().fold(f64::INFINITY, f64::min);
        let max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        s.push_str(&format!("reward_mean: {mean}\nreward_min: {min}\nreward_max: {max}\n"));
    }
    Ok(s)
}
