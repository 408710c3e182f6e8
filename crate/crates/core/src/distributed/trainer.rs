use super::message::{encode_weights, EpisodeRecord, MessageKind, Message, SampleBatch, StatsDelta};
use super::transport::Hub;
use crate::algo::{ActorCritic, LossReport};
use crate::env::RunningStats;
use crate::error::{Error, Result};
use crate::replay::{PrioritizedBuffer, RingBuffer, Transition};
use crate::{rng_from_seed, Rng};

/// Replay owned by the trainer.
#[derive(Debug, Clone)]
pub enum Replay {
    Uniform(RingBuffer),
    Prioritized { buffer: PrioritizedBuffer, beta: f64 },
}

impl Replay {
    pub fn len(&self) -> usize {
        match self {
            Replay::Uniform(b) => b.len(),
            Replay::Prioritized { buffer, .. } => buffer.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, t: &Transition) -> Result<usize> {
        match self {
            Replay::Uniform(b) => b.push(t),
            Replay::Prioritized { buffer, .. } => buffer.push(t),
        }
    }

    /// Batch, slot indices and importance weights (empty for uniform replay).
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<(Vec<Transition>, Vec<usize>, Vec<f64>)> {
        match self {
            Replay::Uniform(b) => {
                let (t, i) = b.sample_uniform(n, rng)?;
                Ok((t, i, Vec::new()))
            }
            Replay::Prioritized { buffer, beta } => {
                let s = buffer.sample(n, *beta, rng)?;
                Ok((s.transitions, s.indices, s.weights))
            }
        }
    }

    pub fn feedback(&mut self, indices: &[usize], td_errors: &[f64]) -> Result<()> {
        match self {
            Replay::Uniform(_) => Ok(()),
            Replay::Prioritized { buffer, .. } => buffer.update_priorities(indices, td_errors),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    /// Ask samplers to stop once this many transitions were ingested.
    pub total_transitions: u64,
    /// Ingested transitions per gradient step.
    pub transitions_per_update: u64,
    pub batch_size: usize,
    /// Replay size before the first update.
    pub warmup: usize,
    /// Broadcast weights every this many updates.
    pub broadcast_every: u64,
    /// Checkpoint every this many updates; zero disables periodic checkpoints.
    pub checkpoint_every: u64,
    pub seed: u64,
    /// Reply to every batch so a single sampler and the trainer advance in a
    /// fixed interleaving.
    pub lockstep: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            total_transitions: 200_000,
            transitions_per_update: 4,
            batch_size: 64,
            warmup: 1_000,
            broadcast_every: 10,
            checkpoint_every: 10_000,
            seed: 0,
            lockstep: false,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.transitions_per_update == 0 {
            return Err(Error::config("distributed.transitions_per_update", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be positive"));
        }
        if self.broadcast_every == 0 {
            return Err(Error::config("distributed.broadcast_every", "must be positive"));
        }
        Ok(())
    }
}

/// Callbacks for artifacts produced while training.
pub trait TrainerObserver {
    fn checkpoint(&mut self, _agent: &ActorCritic) -> Result<()> {
        Ok(())
    }
    fn episode(&mut self, _worker: usize, _record: &EpisodeRecord, _ingested: u64) -> Result<()> {
        Ok(())
    }
    fn losses(&mut self, _agent: &ActorCritic, _report: &LossReport) -> Result<()> {
        Ok(())
    }
    /// Polled after every batch; `true` asks the samplers to stop.
    fn should_stop(&self) -> bool {
        false
    }
}

/// Observer that ignores everything.
pub struct NullObserver;
impl TrainerObserver for NullObserver {}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerOutcome {
    pub ingested: u64,
    pub updates: u64,
    pub episodes: u64,
    pub stats: RunningStats,
    pub clamp_warnings: u64,
    pub env_faults: u64,
    /// Weight versions broadcast, in order.
    pub broadcasts: Vec<u64>,
}

/// Consumes batches until every sampler acknowledged shutdown. Updates run
/// at the configured ratio once the replay holds `warmup` transitions.
/// A non-finite loss checkpoints the agent, stops the samplers and returns
/// the divergence error.
pub fn trainer_loop(
    agent: &mut ActorCritic,
    replay: &mut Replay,
    hub: &mut dyn Hub,
    cfg: &TrainerConfig,
    observer: &mut dyn TrainerObserver,
) -> Result<TrainerOutcome> {
    cfg.validate()?;
    let mut rng: Rng = rng_from_seed(cfg.seed);
    let workers = hub.workers();
    let mut out = TrainerOutcome {
        ingested: 0,
        updates: 0,
        episodes: 0,
        stats: RunningStats::new(agent.actor.net.arch().input_width()),
        clamp_warnings: 0,
        env_faults: 0,
        broadcasts: Vec::new(),
    };
    let mut faults = vec![0u64; workers];
    let mut credited = 0u64;
    let mut last_sent = vec![agent.updates; workers];
    hub.broadcast(encode_weights(agent.updates, &agent.actor.net))?;
    out.broadcasts.push(agent.updates);

    let mut active = workers;
    let mut stopping = false;
    while active > 0 {
        let (w, msg) = hub.recv()?;
        match msg.kind {
            MessageKind::SampleBatch => {
                let batch = SampleBatch::decode(&msg.payload)?;
                for t in &batch.transitions {
                    replay.push(t)?;
                    out.ingested += 1;
                    if replay.len() >= cfg.warmup {
                        credited += 1;
                    }
                }
                for e in &batch.episodes {
                    out.episodes += 1;
                    observer.episode(w, e, out.ingested)?;
                }
                let mut due_broadcast = false;
                while credited >= cfg.transitions_per_update {
                    credited -= cfg.transitions_per_update;
                    let (b, idx, weights) = replay.sample(cfg.batch_size, &mut rng)?;
                    let report = match agent.update(&b, &weights, &mut rng) {
                        Ok(r) => r,
                        Err(e @ (Error::Divergence(_) | Error::NonFinite(_))) => {
                            observer.checkpoint(agent)?;
                            hub.broadcast(Message::shutdown())?;
                            return Err(e);
                        }
                        Err(e) => return Err(e),
                    };
                    replay.feedback(&idx, &report.td_errors)?;
                    out.updates += 1;
                    observer.losses(agent, &report)?;
                    if cfg.checkpoint_every > 0 && agent.updates % cfg.checkpoint_every == 0 {
                        observer.checkpoint(agent)?;
                    }
                    if agent.updates % cfg.broadcast_every == 0 {
                        due_broadcast = true;
                    }
                }
                if !stopping && (out.ingested >= cfg.total_transitions || observer.should_stop()) {
                    stopping = true;
                    hub.broadcast(Message::shutdown())?;
                } else if !stopping && cfg.lockstep {
                    let reply = if agent.updates >= last_sent[w] + cfg.broadcast_every {
                        last_sent[w] = agent.updates;
                        out.broadcasts.push(agent.updates);
                        encode_weights(agent.updates, &agent.actor.net)
                    } else {
                        Message::heartbeat(w as u32)
                    };
                    hub.send_to(w, reply)?;
                } else if !stopping && due_broadcast {
                    out.broadcasts.push(agent.updates);
                    hub.broadcast(encode_weights(agent.updates, &agent.actor.net))?;
                }
            }
            MessageKind::StatsMerge => {
                let d = StatsDelta::decode(&msg.payload)?;
                out.stats = stats_merge(&out.stats, &d.stats)?;
                out.clamp_warnings += d.clamp_warnings;
                faults[w] = d.env_faults;
            }
            MessageKind::Shutdown => active -= 1,
            MessageKind::Heartbeat | MessageKind::WeightsUpdate => {}
        }
    }
    out.env_faults = faults.iter().sum();
    Ok(out)
}

/// Pools two streaming statistics; an empty side is the identity.
pub fn stats_merge(global: &RunningStats, delta: &RunningStats) -> Result<RunningStats> {
    global.merge(delta)
}
