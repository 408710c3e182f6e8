use std::thread;
use std::time::Duration;

use proptest::prelude::*;
use prlx::algo::{bundle::encode_actor_critic, AcConfig, ActorCritic, ExplorationMode};
use prlx::distributed::*;
use prlx::env::{EnvConfig, RunningStats, ACTION_DIM, OBS_DIM};
use prlx::replay::{DoneKind, RingBuffer, Transition};
use prlx::reward::{Penalty, RewardSpec, StepContext};
use prlx::{rng_from_seed, Error};

fn shaped_env() -> EnvConfig {
    EnvConfig {
        reward: RewardSpec::score()
            .with_penalty(Penalty::Sideways, 1.0)
            .with_penalty(Penalty::CrossingLegs, 1.0),
        ..Default::default()
    }
}

fn random_worker(index: usize, count: usize, episodes: u64) -> WorkerConfig {
    let mut w = WorkerConfig::new(index, count, 11, shaped_env());
    w.await_weights = false;
    w.batch_size = 50;
    w.max_episodes = Some(episodes);
    w
}

/// Collects everything a lone sampler ships until it acknowledges shutdown.
fn collect(hub: &mut ChannelHub) -> (Vec<Transition>, Vec<EpisodeRecord>, Vec<RunningStats>) {
    let (mut ts, mut eps, mut stats) = (Vec::new(), Vec::new(), Vec::new());
    loop {
        let (_, msg) = hub.recv().unwrap();
        match msg.kind {
            MessageKind::SampleBatch => {
                let b = SampleBatch::decode(&msg.payload).unwrap();
                ts.extend(b.transitions);
                eps.extend(b.episodes);
            }
            MessageKind::StatsMerge => stats.push(StatsDelta::decode(&msg.payload).unwrap().stats),
            MessageKind::Shutdown => return (ts, eps, stats),
            _ => {}
        }
    }
}

#[test]
fn random_policy_rewards_match_recomputation() {
    let cfg = random_worker(0, 1, 10);
    let (mut hub, mut links) = channel_bus(1);
    let mut link = links.pop().unwrap();
    let h = thread::spawn(move || sampler_loop(&cfg, &mut link).unwrap());
    let (ts, eps, _) = collect(&mut hub);
    let report = h.join().unwrap();
    assert_eq!(report.episodes, 10);
    assert_eq!(eps.len(), 10);
    assert_eq!(ts.len() as u64, report.transitions_shipped);
    assert_eq!(ts.len() as u32, eps.iter().map(|e| e.steps).sum::<u32>());
    assert_eq!(ts.iter().filter(|t| t.done.is_done()).count(), 10);
    let spec = shaped_env().reward;
    for t in &ts {
        let recomputed = spec.evaluate(&StepContext::from_observation(&t.next_obs, &t.action)).unwrap();
        assert_eq!(recomputed.to_bits(), t.reward.to_bits());
    }
}

#[test]
fn shutdown_finishes_the_current_episode() {
    let mut cfg = random_worker(0, 1, 100);
    cfg.await_weights = false;
    let (mut hub, mut links) = channel_bus(1);
    hub.send_to(0, Message::shutdown()).unwrap();
    let mut link = links.pop().unwrap();
    let h = thread::spawn(move || sampler_loop(&cfg, &mut link).unwrap());
    let (ts, eps, _) = collect(&mut hub);
    let report = h.join().unwrap();
    assert_eq!(report.episodes, 1);
    assert_eq!(eps.len(), 1);
    assert!(ts.last().unwrap().done.is_done());
}

#[test]
fn same_seeds_same_batches() {
    let run = || {
        let cfg = random_worker(1, 2, 3);
        let (mut hub, mut links) = channel_bus(2);
        let mut link = links.pop().unwrap();
        let h = thread::spawn(move || sampler_loop(&cfg, &mut link).unwrap());
        let out = collect(&mut hub);
        h.join().unwrap();
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn worker_index_must_be_below_count() {
    let cfg = random_worker(2, 2, 1);
    let (_hub, mut links) = channel_bus(1);
    assert!(matches!(sampler_loop(&cfg, &mut links[0]), Err(Error::Config { .. })));
}

#[test]
fn fixed_mode_is_respected() {
    let mut cfg = random_worker(0, 1, 4);
    cfg.exploration.hybrid = false;
    cfg.exploration.fixed = ExplorationMode::Sticky;
    let (mut hub, mut links) = channel_bus(1);
    let mut link = links.pop().unwrap();
    let h = thread::spawn(move || sampler_loop(&cfg, &mut link).unwrap());
    let (_, eps, _) = collect(&mut hub);
    h.join().unwrap();
    assert!(eps.iter().all(|e| e.mode == ExplorationMode::Sticky));
}

fn small_agent(seed: u64) -> ActorCritic {
    let mut cfg = AcConfig::td3();
    cfg.hidden = vec![32, 32];
    ActorCritic::new(OBS_DIM, ACTION_DIM, cfg, &mut rng_from_seed(seed)).unwrap()
}

fn replay() -> Replay {
    Replay::Uniform(RingBuffer::new(50_000, OBS_DIM, ACTION_DIM))
}

#[derive(Default)]
struct Capture {
    checkpoints: Vec<(u64, Vec<u8>)>,
    episodes: u64,
}

impl TrainerObserver for Capture {
    fn checkpoint(&mut self, agent: &ActorCritic) -> prlx::Result<()> {
        self.checkpoints.push((agent.updates, encode_actor_critic(agent)));
        Ok(())
    }
    fn episode(&mut self, _: usize, _: &EpisodeRecord, _: u64) -> prlx::Result<()> {
        self.episodes += 1;
        Ok(())
    }
}

#[test]
fn zero_samplers_means_no_updates() {
    let (mut hub, links) = channel_bus(1);
    let h = thread::spawn(move || {
        let mut agent = small_agent(0);
        let cfg = TrainerConfig {
            warmup: 0,
            ..Default::default()
        };
        let r = trainer_loop(&mut agent, &mut replay(), &mut hub, &cfg, &mut NullObserver);
        (agent.updates, r)
    });
    thread::sleep(Duration::from_millis(200));
    assert!(!h.is_finished());
    drop(links);
    let (updates, r) = h.join().unwrap();
    assert_eq!(updates, 0);
    assert!(matches!(r, Err(Error::Disconnected(_))));
}

fn lockstep_configs() -> (TrainerConfig, Vec<WorkerConfig>) {
    let trainer = TrainerConfig {
        total_transitions: 4_800,
        warmup: 500,
        batch_size: 32,
        broadcast_every: 5,
        checkpoint_every: 1_000,
        seed: 3,
        lockstep: true,
        ..Default::default()
    };
    let mut w = WorkerConfig::new(0, 1, 21, shaped_env());
    w.lockstep = true;
    w.batch_size = 40;
    w.random_steps = 300;
    (trainer, vec![w])
}

#[test]
fn channel_and_socket_transports_give_identical_checkpoints() {
    let (trainer, workers) = lockstep_configs();
    let mut a = small_agent(5);
    let mut cap_a = Capture::default();
    let (out_a, rep_a) = run_in_process(&mut a, &mut replay(), &trainer, &workers, &mut cap_a).unwrap();
    let mut b = small_agent(5);
    let mut cap_b = Capture::default();
    let (out_b, rep_b) = run_tcp("127.0.0.1:0", &mut b, &mut replay(), &trainer, &workers, &mut cap_b).unwrap();
    assert!(out_a.updates >= 1_000);
    let first = |c: &Capture| c.checkpoints.iter().find(|(u, _)| *u == 1_000).unwrap().1.clone();
    assert!(first(&cap_a) == first(&cap_b), "checkpoints after 1000 updates differ");
    assert_eq!(out_a, out_b);
    assert_eq!(rep_a, rep_b);
    assert_eq!(encode_actor_critic(&a), encode_actor_critic(&b));
}

#[test]
fn no_sample_loss_and_monotone_versions() {
    let trainer = TrainerConfig {
        total_transitions: 3_000,
        warmup: 200,
        batch_size: 16,
        broadcast_every: 1,
        checkpoint_every: 0,
        ..Default::default()
    };
    let workers: Vec<_> = (0..3)
        .map(|i| {
            let mut w = WorkerConfig::new(i, 3, 5, shaped_env());
            w.batch_size = 25;
            w
        })
        .collect();
    let mut agent = small_agent(1);
    let mut cap = Capture::default();
    let (out, reports) = run_in_process(&mut agent, &mut replay(), &trainer, &workers, &mut cap).unwrap();
    let shipped: u64 = reports.iter().map(|r| r.transitions_shipped).sum();
    assert_eq!(out.ingested, shipped);
    assert_eq!(out.episodes, reports.iter().map(|r| r.episodes).sum::<u64>());
    assert_eq!(cap.episodes, out.episodes);
    assert_eq!(out.stats.count as u64, shipped);
    for r in &reports {
        assert!(r.versions.windows(2).all(|v| v[0] < v[1]), "{:?}", r.versions);
        assert_eq!(r.versions.first(), Some(&0));
    }
    assert!(out.broadcasts.windows(2).all(|v| v[0] <= v[1]));
}

#[test]
fn non_finite_loss_checkpoints_and_halts() {
    let mut agent = small_agent(2);
    agent.critic.nets[0].values_mut()[0] = f64::NAN;
    let trainer = TrainerConfig {
        total_transitions: 100_000,
        warmup: 64,
        batch_size: 8,
        ..Default::default()
    };
    let mut w = WorkerConfig::new(0, 1, 0, shaped_env());
    w.batch_size = 32;
    let mut cap = Capture::default();
    let r = run_in_process(&mut agent, &mut replay(), &trainer, &[w], &mut cap);
    assert!(matches!(r, Err(Error::Divergence(_) | Error::NonFinite(_))), "{r:?}");
    assert_eq!(cap.checkpoints.len(), 1);
    assert_eq!(r.unwrap_err().exit_code(), 3);
}

#[test]
fn throughput_measurement_runs() {
    let workers: Vec<_> = (0..2).map(|i| random_worker(i, 2, u64::MAX)).collect();
    let rate = measure_throughput(&workers, 2_000).unwrap();
    assert!(rate > 0.0);
}

fn concat_stats(xs: &[Vec<f64>]) -> RunningStats {
    let mut s = RunningStats::new(2);
    for x in xs {
        s.update(x);
    }
    s
}

#[test]
fn merge_with_empty_is_identity() {
    let a = concat_stats(&[vec![1.0, 2.0], vec![3.0, -1.0]]);
    assert_eq!(stats_merge(&a, &RunningStats::new(2)).unwrap(), a);
    assert_eq!(stats_merge(&RunningStats::new(2), &a).unwrap(), a);
    assert!(stats_merge(&a, &RunningStats::new(3)).is_err());
}

fn rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 2), 1..40)
}

proptest! {
    #[test]
    fn merge_is_symmetric(a in rows(), b in rows()) {
        let (sa, sb) = (concat_stats(&a), concat_stats(&b));
        let ab = stats_merge(&sa, &sb).unwrap();
        let ba = stats_merge(&sb, &sa).unwrap();
        for i in 0..2 {
            prop_assert!((ab.mean[i] - ba.mean[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn pooled_variance_matches_concatenation(a in rows(), b in rows()) {
        let merged = stats_merge(&concat_stats(&a), &concat_stats(&b)).unwrap();
        let all: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        let n = all.len() as f64;
        for i in 0..2 {
            let mean = all.iter().map(|x| x[i]).sum::<f64>() / n;
            let var = all.iter().map(|x| (x[i] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!((merged.mean[i] - mean).abs() <= 1e-9);
            prop_assert!((merged.m2[i] / n - var).abs() <= 1e-9 * var.max(1.0));
        }
    }

    #[test]
    fn sample_batch_round_trips(
        rewards in prop::collection::vec(-1e6f64..1e6, 0..5),
        seq in any::<u64>(),
        mask in any::<u32>(),
    ) {
        let transitions: Vec<Transition> = rewards
            .iter()
            .map(|&r| Transition::new(vec![r; 3], vec![r / 2.0], r, vec![-r; 3], DoneKind::Fall).with_head_mask(mask))
            .collect();
        let batch = SampleBatch { worker: 1, obs_dim: 3, action_dim: 1, transitions, episodes: vec![] };
        let mut msg = batch.to_message();
        msg.sequence = seq;
        let bytes = msg.encode();
        let back = Message::decode(&bytes).unwrap();
        prop_assert_eq!(&back, &msg);
        prop_assert_eq!(SampleBatch::decode(&back.payload).unwrap(), batch);
        for cut in 0..bytes.len() {
            prop_assert!(Message::decode(&bytes[..cut]).is_err());
        }
    }
}
