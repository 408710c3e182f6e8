//! Whole-agent checkpoints: every network, target network and optimizer
//! moment, so training resumes exactly where it stopped.
//!
//! Layout: magic `PRLA`, u16 version, u8 agent kind (1 actor-critic, 2 PPO),
//! u64 update count, u32 network count, the network checkpoints, then per
//! optimizer u64 step, u64 slot count, first moments, second moments. A PPO
//! bundle ends with the observation statistics: f64 count, means, second
//! moments.

use std::fs;
use std::path::Path;

use super::actor_critic::{AcConfig, ActorCritic, ActorState, CriticPair};
use super::ppo::{PpoAgent, PpoConfig};
use crate::env::RunningStats;
use crate::error::{Error, Result};
use crate::nn::{checkpoint, NetParams, OptConfig, OptState};
use crate::wire::{put_f64s, Reader};

pub const MAGIC: &[u8; 4] = b"PRLA";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    ActorCritic = 1,
    Ppo = 2,
}

fn header(out: &mut Vec<u8>, kind: AgentKind, updates: u64, nets: &[&NetParams]) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind as u8);
    out.extend_from_slice(&updates.to_le_bytes());
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    for n in nets {
        out.extend_from_slice(&checkpoint::encode(n));
    }
}

fn put_opt(out: &mut Vec<u8>, opt: &OptState) {
    let (m, v) = opt.moments();
    out.extend_from_slice(&opt.steps().to_le_bytes());
    out.extend_from_slice(&(m.len() as u64).to_le_bytes());
    put_f64s(out, m);
    put_f64s(out, v);
}

fn read_opt(r: &mut Reader<'_>, config: OptConfig, net: &NetParams) -> Result<OptState> {
    let step = r.u64()?;
    let at = r.offset();
    let len = r.u64()? as usize;
    if len != net.len() || r.remaining() / 16 < len {
        return Err(Error::decode(at, format!("optimizer has {len} slots, network {}", net.len())));
    }
    let m = r.f64_vec(len)?;
    let v = r.f64_vec(len)?;
    OptState::from_parts(config, m, v, step)
}

/// Reads the header; returns kind, update count and networks.
fn read_header<'a>(bytes: &'a [u8]) -> Result<(AgentKind, u64, Vec<NetParams>, Reader<'a>)> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::decode(0, "bad magic, expected PRLA"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::decode(4, format!("unsupported version {version}")));
    }
    let kind = match r.u8()? {
        1 => AgentKind::ActorCritic,
        2 => AgentKind::Ppo,
        k => return Err(Error::decode(6, format!("unknown agent kind {k}"))),
    };
    let updates = r.u64()?;
    let at = r.offset();
    let n = r.u32()? as usize;
    if n > 64 {
        return Err(Error::decode(at, format!("implausible network count {n}")));
    }
    let nets = (0..n).map(|_| checkpoint::read(&mut r)).collect::<Result<Vec<_>>>()?;
    Ok((kind, updates, nets, r))
}

fn finish(r: &Reader<'_>) -> Result<()> {
    if r.remaining() != 0 {
        return Err(Error::decode(r.offset(), "trailing bytes after agent bundle"));
    }
    Ok(())
}

/// Network order: actor, actor target, critics, critic targets.
pub fn encode_actor_critic(agent: &ActorCritic) -> Vec<u8> {
    let mut nets = vec![&agent.actor.net, &agent.actor.target];
    nets.extend(agent.critic.nets.iter());
    nets.extend(agent.critic.targets.iter());
    let mut out = Vec::new();
    header(&mut out, AgentKind::ActorCritic, agent.updates, &nets);
    put_opt(&mut out, &agent.actor.opt);
    for o in &agent.critic.opts {
        put_opt(&mut out, o);
    }
    out
}

pub fn decode_actor_critic(bytes: &[u8], config: AcConfig) -> Result<ActorCritic> {
    let (kind, updates, nets, mut r) = read_header(bytes)?;
    if kind != AgentKind::ActorCritic {
        return Err(Error::decode(6, "bundle does not hold an actor-critic agent"));
    }
    let critics = if config.twin { 2 } else { 1 };
    if nets.len() != 2 + 2 * critics {
        return Err(Error::decode(15, format!("expected {} networks, found {}", 2 + 2 * critics, nets.len())));
    }
    let mut it = nets.into_iter();
    let net = it.next().expect("counted");
    let target = it.next().expect("counted");
    let c_nets: Vec<NetParams> = it.by_ref().take(critics).collect();
    let c_targets: Vec<NetParams> = it.collect();
    let opt = |lr| OptConfig::adam(lr).with_weight_decay(config.weight_decay);
    let actor_opt = read_opt(&mut r, opt(config.actor_lr), &net)?;
    let c_opts = c_nets
        .iter()
        .map(|n| read_opt(&mut r, opt(config.critic_lr), n))
        .collect::<Result<Vec<_>>>()?;
    finish(&r)?;
    let quantiles = c_nets[0].arch().output_width();
    Ok(ActorCritic {
        actor: ActorState {
            net,
            target,
            opt: actor_opt,
        },
        critic: CriticPair {
            nets: c_nets,
            targets: c_targets,
            opts: c_opts,
            quantiles,
            gamma: config.gamma,
        },
        updates,
        config,
    })
}

/// Network order: policy, value.
pub fn encode_ppo(agent: &PpoAgent) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, AgentKind::Ppo, agent.updates, &[&agent.policy, &agent.value]);
    put_opt(&mut out, &agent.policy_opt);
    put_opt(&mut out, &agent.value_opt);
    out.extend_from_slice(&agent.stats.count.to_le_bytes());
    put_f64s(&mut out, &agent.stats.mean);
    put_f64s(&mut out, &agent.stats.m2);
    out
}

pub fn decode_ppo(bytes: &[u8], config: PpoConfig) -> Result<PpoAgent> {
    let (kind, updates, nets, mut r) = read_header(bytes)?;
    if kind != AgentKind::Ppo {
        return Err(Error::decode(6, "bundle does not hold a PPO agent"));
    }
    let [policy, value]: [NetParams; 2] = nets
        .try_into()
        .map_err(|v: Vec<NetParams>| Error::decode(15, format!("expected 2 networks, found {}", v.len())))?;
    let opt = OptConfig::adam(config.learning_rate);
    let policy_opt = read_opt(&mut r, opt, &policy)?;
    let value_opt = read_opt(&mut r, opt, &value)?;
    let dim = policy.arch().input_width();
    let count = r.f64()?;
    let mean = r.f64_vec(dim)?;
    let m2 = r.f64_vec(dim)?;
    finish(&r)?;
    Ok(PpoAgent {
        config,
        policy,
        value,
        policy_opt,
        value_opt,
        stats: RunningStats { count, mean, m2 },
        updates,
    })
}

/// Kind and networks of a bundle, optimizer state skipped. Actor-critic
/// order: actor, actor target, critics, critic targets. PPO: policy, value.
pub fn decode_networks(bytes: &[u8]) -> Result<(AgentKind, Vec<NetParams>)> {
    let (kind, _, nets, _) = read_header(bytes)?;
    Ok((kind, nets))
}

/// A bundle reduced to what acting needs.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedPolicy {
    /// Deterministic actor network.
    Actor(NetParams),
    /// Bernoulli policy logits with the observation normalizer.
    Bernoulli { policy: NetParams, stats: RunningStats },
}

impl LoadedPolicy {
    /// Greedy action for a raw observation.
    pub fn act(&self, obs: &[f64], head: usize) -> Result<Vec<f64>> {
        match self {
            LoadedPolicy::Actor(net) => net.predict_head(obs, head),
            LoadedPolicy::Bernoulli { policy, stats } => {
                let logits = policy.predict(&stats.normalize(obs))?;
                Ok(logits.iter().map(|&l| if l > 0.0 { 1.0 } else { 0.0 }).collect())
            }
        }
    }
}

/// Extracts the acting policy from any agent bundle without its training
/// configuration.
pub fn decode_policy(bytes: &[u8]) -> Result<LoadedPolicy> {
    let (kind, _, mut nets, mut r) = read_header(bytes)?;
    if nets.is_empty() {
        return Err(Error::decode(15, "bundle holds no networks"));
    }
    match kind {
        AgentKind::ActorCritic => Ok(LoadedPolicy::Actor(nets.swap_remove(0))),
        AgentKind::Ppo => {
            let policy = nets.swap_remove(0);
            let value = nets.first().ok_or_else(|| Error::decode(15, "missing value network"))?;
            let dummy = OptConfig::adam(1.0);
            read_opt(&mut r, dummy, &policy)?;
            read_opt(&mut r, dummy, value)?;
            let dim = policy.arch().input_width();
            let count = r.f64()?;
            let mean = r.f64_vec(dim)?;
            let m2 = r.f64_vec(dim)?;
            finish(&r)?;
            Ok(LoadedPolicy::Bernoulli {
                policy,
                stats: RunningStats { count, mean, m2 },
            })
        }
    }
}

pub fn save_bundle(bytes: &[u8], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<LoadedPolicy> {
    decode_policy(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::{DoneKind, Transition};
    use crate::rng_from_seed;

    fn trained() -> ActorCritic {
        let mut rng = rng_from_seed(3);
        let mut cfg = AcConfig::td3();
        cfg.hidden = vec![8];
        let mut ac = ActorCritic::new(3, 2, cfg, &mut rng).unwrap();
        let batch = vec![Transition::new(vec![0.1, 0.2, 0.3], vec![0.5, 0.5], 1.0, vec![0.0; 3], DoneKind::None)];
        for _ in 0..3 {
            ac.update(&batch, &[], &mut rng).unwrap();
        }
        ac
    }

    #[test]
    fn actor_critic_round_trip_is_exact() {
        let ac = trained();
        let bytes = encode_actor_critic(&ac);
        let back = decode_actor_critic(&bytes, ac.config.clone()).unwrap();
        assert_eq!(back, ac);
        assert_eq!(encode_actor_critic(&back), bytes);
        assert_eq!(decode_policy(&bytes).unwrap(), LoadedPolicy::Actor(ac.actor.net.clone()));
    }

    #[test]
    fn ppo_round_trip_is_exact() {
        let mut rng = rng_from_seed(1);
        let mut cfg = PpoConfig::default();
        cfg.hidden = vec![4];
        let mut agent = PpoAgent::new(3, 2, cfg.clone(), &mut rng).unwrap();
        agent.stats.update(&[1.0, 2.0, 3.0]);
        agent.stats.update(&[0.0, 2.0, 1.0]);
        let bytes = encode_ppo(&agent);
        assert_eq!(decode_ppo(&bytes, cfg).unwrap(), agent);
        let p = decode_policy(&bytes).unwrap();
        assert_eq!(p.act(&[1.0, 1.0, 1.0], 0).unwrap(), agent.act_greedy(&[1.0, 1.0, 1.0]).unwrap());
    }

    #[test]
    fn wrong_kind_and_truncation_fail() {
        let ac = trained();
        let bytes = encode_actor_critic(&ac);
        assert!(decode_ppo(&bytes, PpoConfig::default()).is_err());
        for cut in [0, 7, 30, bytes.len() - 1] {
            assert!(matches!(decode_actor_critic(&bytes[..cut], ac.config.clone()), Err(Error::Decode { .. })));
        }
    }
}
