//! Actor-learner runtime: samplers generate episodes and ship transition
//! batches, a trainer owns the replay buffer, updates the agent and
//! broadcasts weights. Channels and sockets carry the same frames.

mod message;
mod sampler;
mod trainer;
mod transport;

use std::net::ToSocketAddrs;
use std::thread;
use std::time::Instant;

pub use message::{
    decode_weights, encode_weights, EpisodeRecord, Message, MessageKind, SampleBatch, StatsDelta, HEADER_LEN, MAGIC,
    VERSION,
};
pub use sampler::{sampler_loop, ExplorationConfig, SamplerReport, WorkerConfig};
pub use trainer::{stats_merge, trainer_loop, NullObserver, Replay, TrainerConfig, TrainerObserver, TrainerOutcome};
pub use transport::{channel_bus, read_frame, ChannelHub, ChannelLink, Hub, Link, TcpHub, TcpLink};

use crate::algo::ActorCritic;
use crate::error::{Error, Result};

/// Environment variable naming the trainer's listen address.
pub const BIND_ADDR_VAR: &str = "PRLX_BIND_ADDR";
/// Environment variable naming a sampler process's worker index.
pub const WORKER_INDEX_VAR: &str = "PRLX_WORKER_INDEX";
pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:0";

fn join_all(handles: Vec<thread::ScopedJoinHandle<'_, Result<SamplerReport>>>) -> Result<Vec<SamplerReport>> {
    handles
        .into_iter()
        .map(|h| h.join().map_err(|_| Error::Disconnected("sampler thread panicked".into()))?)
        .collect()
}

/// Trainer on the calling thread, one sampler thread per worker config,
/// connected by in-process channels.
pub fn run_in_process(
    agent: &mut ActorCritic,
    replay: &mut Replay,
    trainer: &TrainerConfig,
    workers: &[WorkerConfig],
    observer: &mut dyn TrainerObserver,
) -> Result<(TrainerOutcome, Vec<SamplerReport>)> {
    let (mut hub, links) = channel_bus(workers.len());
    thread::scope(|s| {
        let handles: Vec<_> = links
            .into_iter()
            .zip(workers)
            .map(|(mut link, cfg)| s.spawn(move || sampler_loop(cfg, &mut link)))
            .collect();
        let outcome = trainer_loop(agent, replay, &mut hub, trainer, observer);
        drop(hub);
        let reports = join_all(handles);
        Ok((outcome?, reports?))
    })
}

/// Same as [`run_in_process`] with sampler threads connected over TCP.
pub fn run_tcp(
    addr: impl ToSocketAddrs,
    agent: &mut ActorCritic,
    replay: &mut Replay,
    trainer: &TrainerConfig,
    workers: &[WorkerConfig],
    observer: &mut dyn TrainerObserver,
) -> Result<(TrainerOutcome, Vec<SamplerReport>)> {
    let mut hub = TcpHub::bind(addr, workers.len())?;
    let local = hub.local_addr()?;
    thread::scope(|s| {
        let handles: Vec<_> = workers
            .iter()
            .map(|cfg| {
                s.spawn(move || {
                    let mut link = TcpLink::connect(local, cfg.index as u32)?;
                    sampler_loop(cfg, &mut link)
                })
            })
            .collect();
        hub.accept_all()?;
        let outcome = trainer_loop(agent, replay, &mut hub, trainer, observer);
        drop(hub);
        let reports = join_all(handles);
        Ok((outcome?, reports?))
    })
}

/// Trainer side only: binds `addr`, waits for `workers` external samplers
/// (the `sampler` command) and trains. `on_bound` sees the bound address
/// before the first connection is accepted.
pub fn serve_tcp(
    addr: impl ToSocketAddrs,
    workers: usize,
    on_bound: &mut dyn FnMut(std::net::SocketAddr),
    agent: &mut ActorCritic,
    replay: &mut Replay,
    trainer: &TrainerConfig,
    observer: &mut dyn TrainerObserver,
) -> Result<TrainerOutcome> {
    let mut hub = TcpHub::bind(addr, workers)?;
    on_bound(hub.local_addr()?);
    hub.accept_all()?;
    trainer_loop(agent, replay, &mut hub, trainer, observer)
}

/// Sampler throughput in transitions per wall-clock second with no learner
/// attached: `workers` random-policy samplers run until `total` transitions
/// have been received.
pub fn measure_throughput(workers: &[WorkerConfig], total: u64) -> Result<f64> {
    let (mut hub, links) = channel_bus(workers.len());
    let start = Instant::now();
    let received = thread::scope(|s| {
        let handles: Vec<_> = links
            .into_iter()
            .zip(workers)
            .map(|(mut link, cfg)| s.spawn(move || sampler_loop(cfg, &mut link)))
            .collect();
        let mut received = 0u64;
        let mut active = workers.len();
        let mut stopping = false;
        while active > 0 {
            let (_, msg) = hub.recv()?;
            match msg.kind {
                MessageKind::SampleBatch if !stopping => {
                    received += SampleBatch::decode(&msg.payload)?.transitions.len() as u64;
                    if received >= total {
                        stopping = true;
                        hub.broadcast(Message::shutdown())?;
                    }
                }
                MessageKind::Shutdown => active -= 1,
                _ => {}
            }
        }
        join_all(handles)?;
        Ok::<u64, Error>(received)
    })?;
    Ok(received as f64 / start.elapsed().as_secs_f64())
}
