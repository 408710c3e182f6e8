use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use super::config::RunConfig;
use crate::algo::bundle::{decode_actor_critic, decode_ppo, encode_actor_critic, encode_ppo, save_bundle};
use crate::algo::{ActorCritic, EpisodeCursor, ExplorationMode, LossCsv, LossReport, LossRow, PpoAgent, Rollout};
use crate::distributed::{run_in_process, run_tcp, serve_tcp, EpisodeRecord, Replay, TrainerObserver};
use crate::env::{ProstheticsEnv, ACTION_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::replay::{decode_snapshot, encode_snapshot, PrioritizedBuffer, RingBuffer};
use crate::reward::stage_reward;
use crate::rng_from_seed;

pub const SNAPSHOT_FILE: &str = "config.snapshot";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const LOSSES_FILE: &str = "losses.csv";
pub const PROGRESS_FILE: &str = "progress";
pub const REPLAY_FILE: &str = "replay.prlr";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const LATEST_CHECKPOINT: &str = "latest.bin";
pub const EPISODES_HEADER: &str = "step,worker,score,steps,fall,mode";

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Continue from `checkpoints/latest.bin` and the progress file.
    pub resume: bool,
    /// Set from outside (a signal handler) to stop early with a clean checkpoint.
    pub stop: Option<Arc<AtomicBool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub dir: PathBuf,
    pub steps: u64,
    pub updates: u64,
    pub episodes: u64,
    pub checkpoints: Vec<PathBuf>,
}

/// Environment steps, updates and episodes completed by earlier sessions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Progress {
    pub steps: u64,
    pub updates: u64,
    pub episodes: u64,
}

impl Progress {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(PROGRESS_FILE);
        if !path.exists() {
            return Ok(Progress::default());
        }
        let mut p = Progress::default();
        for line in fs::read_to_string(path)?.lines() {
            if let Some((k, v)) = line.split_once('=') {
                let v: u64 = v.trim().parse().map_err(|_| Error::config(k.trim(), "corrupt progress file"))?;
                match k.trim() {
                    "steps" => p.steps = v,
                    "updates" => p.updates = v,
                    "episodes" => p.episodes = v,
                    _ => {}
                }
            }
        }
        Ok(p)
    }

    fn write(&self, dir: &Path) -> Result<()> {
        fs::write(
            dir.join(PROGRESS_FILE),
            format!("steps = {}\nupdates = {}\nepisodes = {}\n", self.steps, self.updates, self.episodes),
        )?;
        Ok(())
    }
}

fn mode_index(m: ExplorationMode) -> usize {
    match m {
        ExplorationMode::Gaussian => 0,
        ExplorationMode::ParamNoise => 1,
        ExplorationMode::None => 2,
        ExplorationMode::Ou => 3,
        ExplorationMode::Sticky => 4,
    }
}

struct Artifacts {
    dir: PathBuf,
    episodes: BufWriter<File>,
    losses: LossCsv<BufWriter<File>>,
    checkpoints: Vec<PathBuf>,
    mode_counts: [u64; 5],
    stop: Option<Arc<AtomicBool>>,
}

fn open_log(path: &Path, header: &str, append: bool) -> Result<(BufWriter<File>, bool)> {
    let existing = append && path.exists();
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(existing)
        .truncate(!existing)
        .open(path)?;
    let mut w = BufWriter::new(file);
    if !existing && !header.is_empty() {
        writeln!(w, "{header}")?;
    }
    Ok((w, existing))
}

impl Artifacts {
    fn open(dir: &Path, resume: bool, stop: Option<Arc<AtomicBool>>) -> Result<Self> {
        fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
        let (episodes, _) = open_log(&dir.join(EPISODES_FILE), EPISODES_HEADER, resume)?;
        let (losses, existing) = open_log(&dir.join(LOSSES_FILE), "", resume)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            episodes,
            losses: LossCsv::new(losses, existing)?,
            checkpoints: Vec::new(),
            mode_counts: [0; 5],
            stop,
        })
    }

    fn save(&mut self, updates: u64, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(CHECKPOINT_DIR).join(format!("ckpt_{updates:010}.bin"));
        save_bundle(bytes, &path)?;
        save_bundle(bytes, self.dir.join(CHECKPOINT_DIR).join(LATEST_CHECKPOINT))?;
        if !self.checkpoints.contains(&path) {
            self.checkpoints.push(path);
        }
        Ok(())
    }

    fn episode(&mut self, step: u64, worker: usize, score: f64, steps: u32, fell: bool, mode: &str) -> Result<()> {
        writeln!(self.episodes, "{step},{worker},{score},{steps},{fell},{mode}")?;
        Ok(())
    }

    fn stopping(&self) -> bool {
        self.stop.as_ref().is_some_and(|s| s.load(Ordering::SeqCst))
    }

    fn flush(&mut self) -> Result<()> {
        self.episodes.flush()?;
        self.losses.flush()
    }
}

struct AcObserver {
    art: Artifacts,
    base_steps: u64,
    log_every: u64,
    sum: LossRow,
    actor_n: u64,
    n: u64,
}

impl TrainerObserver for AcObserver {
    fn checkpoint(&mut self, agent: &ActorCritic) -> Result<()> {
        self.art.save(agent.updates, &encode_actor_critic(agent))
    }

    fn episode(&mut self, worker: usize, r: &EpisodeRecord, ingested: u64) -> Result<()> {
        self.art.mode_counts[mode_index(r.mode)] += 1;
        self.art
            .episode(self.base_steps + ingested, worker, r.score, r.steps, r.fell, r.mode.name())
    }

    fn losses(&mut self, agent: &ActorCritic, report: &LossReport) -> Result<()> {
        self.sum.critic_loss += report.critic_loss;
        self.sum.mean_q += report.mean_q;
        if let Some(a) = report.actor_loss {
            *self.sum.actor_loss.get_or_insert(0.0) += a;
            self.actor_n += 1;
        }
        self.n += 1;
        if self.log_every > 0 && agent.updates % self.log_every == 0 {
            let n = self.n as f64;
            let row = LossRow {
                step: agent.updates,
                actor_loss: self.sum.actor_loss.map(|a| a / self.actor_n as f64),
                critic_loss: self.sum.critic_loss / n,
                mean_q: self.sum.mean_q / n,
                sigma_p: 0.0,
                mode_counts: self.art.mode_counts,
            };
            self.art.losses.write(&row)?;
            self.sum = LossRow::default();
            self.actor_n = 0;
            self.n = 0;
        }
        Ok(())
    }

    fn should_stop(&self) -> bool {
        self.art.stopping()
    }
}

/// Runs the configured training pipeline into `run.output_dir`. The config
/// snapshot is written before anything else.
pub fn cmd_train(cfg: &RunConfig, opts: &TrainOptions) -> Result<TrainSummary> {
    cfg.validate()?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(SNAPSHOT_FILE), cfg.to_text())?;
    let progress = if opts.resume { Progress::read(&dir)? } else { Progress::default() };
    let art = Artifacts::open(&dir, opts.resume, opts.stop.clone())?;
    if cfg.algorithm() == "ppo" {
        train_ppo(cfg, opts, progress, art)
    } else {
        train_actor_critic(cfg, opts, progress, art)
    }
}

fn latest(dir: &Path) -> PathBuf {
    dir.join(CHECKPOINT_DIR).join(LATEST_CHECKPOINT)
}

fn train_actor_critic(cfg: &RunConfig, opts: &TrainOptions, progress: Progress, art: Artifacts) -> Result<TrainSummary> {
    let dir = cfg.output_dir();
    let ac = cfg.ac_config()?;
    let seed = cfg.seed();
    let mut agent = if opts.resume && latest(&dir).exists() {
        decode_actor_critic(&fs::read(latest(&dir))?, ac)?
    } else {
        ActorCritic::new(OBS_DIM, ACTION_DIM, ac, &mut rng_from_seed(seed))?
    };
    let capacity = cfg.int("train.replay_capacity") as usize;
    let mut replay = if cfg.flag("train.prioritized") {
        Replay::Prioritized {
            buffer: PrioritizedBuffer::new(capacity, OBS_DIM, ACTION_DIM, cfg.float("train.alpha")),
            beta: cfg.float("train.beta"),
        }
    } else {
        Replay::Uniform(RingBuffer::new(capacity, OBS_DIM, ACTION_DIM))
    };
    let replay_path = dir.join(REPLAY_FILE);
    if opts.resume && replay_path.exists() {
        for t in decode_snapshot(&fs::read(&replay_path)?)?.transitions {
            replay.push(&t)?;
        }
    }

    let total = cfg.int("run.total_steps");
    let mut trainer = cfg.trainer_config()?;
    trainer.total_transitions = total.saturating_sub(progress.steps);
    trainer.seed = seed.wrapping_add(progress.steps);
    let seed_base = seed.wrapping_add(progress.steps.wrapping_mul(1_000_003));
    let random = cfg.int("train.random_steps").saturating_sub(progress.steps);
    let workers = cfg.worker_configs(seed_base, random)?;

    let mut obs = AcObserver {
        art,
        base_steps: progress.steps,
        log_every: cfg.int("run.log_every"),
        sum: LossRow::default(),
        actor_n: 0,
        n: 0,
    };
    let mut done = progress;
    if trainer.total_transitions > 0 {
        let result = if cfg.flag("distributed.remote") {
            let mut announce = |a: std::net::SocketAddr| eprintln!("listening on {a}");
            serve_tcp(cfg.bind_addr(), workers.len(), &mut announce, &mut agent, &mut replay, &trainer, &mut obs)
                .map(|o| (o, Vec::new()))
        } else if cfg.get("distributed.transport") == "tcp" {
            run_tcp(cfg.bind_addr(), &mut agent, &mut replay, &trainer, &workers, &mut obs)
        } else {
            run_in_process(&mut agent, &mut replay, &trainer, &workers, &mut obs)
        };
        obs.art.flush()?;
        let (outcome, _) = result?;
        done.steps += outcome.ingested;
        done.episodes += outcome.episodes;
    }
    done.updates = agent.updates;
    obs.art.save(agent.updates, &encode_actor_critic(&agent))?;
    if cfg.flag("train.save_replay") {
        let ring = match &replay {
            Replay::Uniform(r) => r,
            Replay::Prioritized { buffer, .. } => buffer.ring(),
        };
        save_bundle(&encode_snapshot(ring), &replay_path)?;
    }
    done.write(&dir)?;
    obs.art.flush()?;
    Ok(TrainSummary {
        dir,
        steps: done.steps,
        updates: done.updates,
        episodes: done.episodes,
        checkpoints: obs.art.checkpoints,
    })
}

fn train_ppo(cfg: &RunConfig, opts: &TrainOptions, progress: Progress, mut art: Artifacts) -> Result<TrainSummary> {
    let dir = cfg.output_dir();
    let pc = cfg.ppo_config()?;
    let seed = cfg.seed();
    let mut agent = if opts.resume && latest(&dir).exists() {
        decode_ppo(&fs::read(latest(&dir))?, pc.clone())?
    } else {
        PpoAgent::new(OBS_DIM, ACTION_DIM, pc.clone(), &mut rng_from_seed(seed))?
    };
    let mut rng = rng_from_seed(seed.wrapping_add(progress.steps) ^ 0x5eed_5eed);
    let mut env = ProstheticsEnv::new(cfg.env_config()?, seed)?;
    let stages = cfg.stage_schedule()?;
    let mut cursor = EpisodeCursor::new(seed.wrapping_add(progress.steps.wrapping_mul(1_000_003)));
    let total = cfg.int("run.total_steps");
    let rollout = cfg.int("ppo.rollout");
    let every = cfg.int("run.checkpoint_every");
    let mut done = progress;
    while done.steps < total && !art.stopping() {
        env.set_reward(stage_reward(&stages, done.steps).clone());
        let n = rollout.min(total - done.steps);
        let (trajs, finished) = agent.collect(&mut env, &mut cursor, n as usize, &mut rng)?;
        done.steps += n;
        for e in &finished {
            art.episode(done.steps, 0, e.score, e.steps, e.fell, "policy")?;
        }
        done.episodes += finished.len() as u64;
        let batch = Rollout::from_trajectories(&trajs, pc.gamma, pc.lambda, pc.time_limit_bootstrap)?;
        let report = match agent.update(&batch, &mut rng) {
            Ok(r) => r,
            Err(e @ (Error::Divergence(_) | Error::NonFinite(_))) => {
                art.save(agent.updates, &encode_ppo(&agent))?;
                art.flush()?;
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        let mean_return = batch.returns.iter().sum::<f64>() / batch.len().max(1) as f64;
        art.losses.write(&LossRow {
            step: agent.updates,
            actor_loss: Some(report.policy_loss),
            critic_loss: report.value_loss,
            mean_q: mean_return,
            sigma_p: 0.0,
            mode_counts: [0, 0, done.episodes, 0, 0],
        })?;
        if every > 0 && agent.updates % every == 0 {
            art.save(agent.updates, &encode_ppo(&agent))?;
        }
    }
    done.updates = agent.updates;
    art.save(agent.updates, &encode_ppo(&agent))?;
    done.write(&dir)?;
    art.flush()?;
    Ok(TrainSummary {
        dir,
        steps: done.steps,
        updates: done.updates,
        episodes: done.episodes,
        checkpoints: art.checkpoints,
    })
}
