mod common;

use prlx::algo::*;
use prlx::nn::logistic;
use prlx::replay::{DoneKind, Transition};
use prlx::{rng_from_seed, Result};
use proptest::prelude::*;
use rand::Rng;

struct FixedCritic(Vec<f64>);

impl QuantileCritic for FixedCritic {
    fn quantiles(&self, _obs: &[f64], _action: &[f64], _head: usize) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

struct FixedActor;

impl Policy for FixedActor {
    fn act(&self, _obs: &[f64], _head: usize) -> Result<Vec<f64>> {
        Ok(vec![0.5; 3])
    }
}

fn tr(reward: f64, done: DoneKind) -> Transition {
    Transition::new(vec![0.0; 4], vec![0.0; 3], reward, vec![1.0; 4], done)
}

fn targets(critics: &[FixedCritic], t: &Transition, gamma: f64) -> Vec<f64> {
    let refs: Vec<&dyn QuantileCritic> = critics.iter().map(|c| c as &dyn QuantileCritic).collect();
    let mut rng = rng_from_seed(0);
    td3_targets(std::slice::from_ref(t), &refs, &FixedActor, gamma, 0.2, 0.5, (0.0, 1.0), 0, &mut rng)
        .unwrap()
        .remove(0)
}

fn random_critics<R: Rng>(rng: &mut R, count: usize, n: usize) -> Vec<FixedCritic> {
    (0..count)
        .map(|_| FixedCritic((0..n).map(|_| rng.random_range(-5.0..5.0)).collect()))
        .collect()
}

#[test]
fn target_uses_the_critic_with_the_smaller_mean() {
    let mut rng = rng_from_seed(12);
    for _ in 0..100 {
        let count = rng.random_range(2..4);
        let critics = random_critics(&mut rng, count, 5);
        let r = rng.random_range(-1.0..1.0);
        let got = targets(&critics, &tr(r, DoneKind::None), 0.99);
        let means: Vec<f64> = critics.iter().map(|c| c.0.iter().sum::<f64>() / 5.0).collect();
        let k = (0..count).min_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
        let want: Vec<f64> = critics[k].0.iter().map(|z| r + 0.99 * z).collect();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}

#[test]
fn only_falls_cut_the_bootstrap() {
    let critics = vec![FixedCritic(vec![1.0, 2.0]), FixedCritic(vec![3.0, 4.0])];
    let none = targets(&critics, &tr(0.5, DoneKind::None), 0.9);
    assert_eq!(targets(&critics, &tr(0.5, DoneKind::TimeLimit), 0.9), none);
    assert!((none[0] - 1.4).abs() < 1e-12 && (none[1] - 2.3).abs() < 1e-12);
    assert_eq!(targets(&critics, &tr(0.5, DoneKind::Fall), 0.9), vec![0.5, 0.5]);
}

#[test]
fn quantile_loss_gradient_matches_finite_differences() {
    let mut rng = rng_from_seed(3);
    for _ in 0..50 {
        let n = rng.random_range(1..8);
        let pred: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let tgt: Vec<f64> = (0..rng.random_range(1..8)).map(|_| rng.random_range(-3.0..3.0)).collect();
        let kappa = rng.random_range(0.2..2.0);
        let (_, grad) = quantile_huber_loss(&pred, &tgt, kappa);
        for i in 0..n {
            let h = 1e-6;
            let mut p = pred.clone();
            p[i] += h;
            let up = quantile_huber_loss(&p, &tgt, kappa).0;
            p[i] -= 2.0 * h;
            let down = quantile_huber_loss(&p, &tgt, kappa).0;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-5, "{fd} vs {}", grad[i]);
        }
    }
}

#[test]
fn single_quantile_under_huber_is_scaled_median_loss() {
    // One location at the midpoint fraction 1/2: each residual within kappa
    // costs u^2 / (4 kappa).
    let (l, g) = quantile_huber_loss(&[0.0], &[0.5, -0.5], 1.0);
    assert!((l - 0.0625).abs() < 1e-15);
    assert!(g[0].abs() < 1e-15);
    assert_eq!(quantile_midpoints(4), vec![0.125, 0.375, 0.625, 0.875]);
}

#[test]
fn bernoulli_policy_mean_matches_sigmoid() {
    let logits = [-2.0, -0.3, 0.0, 1.1, 3.0];
    let mut rng = rng_from_seed(21);
    let n = 50_000;
    let mut ones = [0.0; 5];
    for _ in 0..n {
        let (a, lp) = bernoulli_policy(&logits, &mut rng);
        assert!(a.iter().all(|x| *x == 0.0 || *x == 1.0));
        let oracle: f64 = logits
            .iter()
            .zip(&a)
            .map(|(l, x)| if *x == 1.0 { logistic(*l).ln() } else { (1.0 - logistic(*l)).ln() })
            .sum();
        assert!((lp - oracle).abs() < 1e-9);
        ones.iter_mut().zip(&a).for_each(|(o, x)| *o += x);
    }
    for (o, l) in ones.iter().zip(&logits) {
        let p = logistic(*l);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((o / n as f64 - p).abs() < 4.0 * se);
    }
}

#[test]
fn ou_reaches_its_stationary_variance() {
    let (theta, sigma, dt) = (0.15, 0.3, 0.5);
    let mut rng = rng_from_seed(8);
    let mut x = vec![0.0; 4];
    for _ in 0..1000 {
        x = ou_step(&x, theta, sigma, dt, &mut rng);
    }
    let (mut sum, mut sq, mut n) = (0.0, 0.0, 0.0);
    for _ in 0..100_000 {
        x = ou_step(&x, theta, sigma, dt, &mut rng);
        for v in &x {
            sum += v;
            sq += v * v;
            n += 1.0;
        }
    }
    let var = sq / n - (sum / n).powi(2);
    // Exact variance of the discretized AR(1) recursion.
    let phi: f64 = 1.0 - theta * dt;
    let want = sigma * sigma * dt / (1.0 - phi * phi);
    assert!((var / want - 1.0).abs() < 0.05, "{var} vs {want}");
}

#[test]
fn hybrid_exploration_frequencies() {
    let mut rng = rng_from_seed(2);
    let n = 30_000;
    let mut counts = [0.0; 3];
    for _ in 0..n {
        let m = choose_exploration(&mut rng);
        counts[HYBRID_PROBS.iter().position(|(k, _)| *k == m).unwrap()] += 1.0;
    }
    let exp: Vec<f64> = HYBRID_PROBS.iter().map(|(_, p)| p * n as f64).collect();
    assert!(common::chi_square(&counts, &exp) < common::chi_square_critical(2, 0.01));
}

#[test]
fn heads_are_uniform() {
    let mut rng = rng_from_seed(6);
    let (heads, n) = (10, 20_000);
    let mut counts = vec![0.0; heads];
    (0..n).for_each(|_| counts[sample_head(heads, &mut rng)] += 1.0);
    let exp = vec![n as f64 / heads as f64; heads];
    assert!(common::chi_square(&counts, &exp) < common::chi_square_critical(heads - 1, 0.01));
    assert_eq!(sample_head(1, &mut rng), 0);

    let mut bits = vec![0.0; heads];
    for _ in 0..n {
        let m = sample_head_mask(heads, &mut rng);
        assert_eq!(m >> heads, 0);
        (0..heads).for_each(|h| bits[h] += ((m >> h) & 1) as f64);
    }
    for b in bits {
        assert!((b / n as f64 - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }
}

#[test]
fn gae_matches_the_discounted_sum_of_residuals() {
    let mut rng = rng_from_seed(15);
    for terminal in [DoneKind::None, DoneKind::TimeLimit, DoneKind::Fall] {
        let t = 30;
        let r: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..=t).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (g, l) = (0.97, 0.9);
        let (adv, tgt) = gae(&r, &v, g, l, terminal).unwrap();
        let boot = if terminal == DoneKind::Fall { 0.0 } else { v[t] };
        let next = |i: usize| if i + 1 == t { boot } else { v[i + 1] };
        for s in 0..t {
            let want: f64 = (s..t).map(|i| (g * l as f64).powi((i - s) as i32) * (r[i] + g * next(i) - v[i])).sum();
            assert!((adv[s] - want).abs() < 1e-10);
            assert!((tgt[s] - adv[s] - v[s]).abs() < 1e-12);
        }
    }
}

#[test]
fn rotation_and_gamma_spread() {
    assert_eq!(multi_ac_rotate(&[0, 1, 2]), vec![1, 2, 0]);
    assert_eq!(multi_ac_rotate(&multi_ac_rotate(&multi_ac_rotate(&[2, 0, 1]))), vec![2, 0, 1]);
    let g = spread_gammas(3, 0.95, 0.99);
    assert!((g[1] - 0.97).abs() < 1e-12 && g[0] == 0.95 && g[2] == 0.99);
}

proptest! {
    #[test]
    fn min_selection_is_shift_invariant(seed in any::<u64>(), shift in -10.0f64..10.0, r in -1.0f64..1.0) {
        let mut rng = rng_from_seed(seed);
        let critics = random_critics(&mut rng, 2, 4);
        let shifted: Vec<FixedCritic> = critics.iter().map(|c| FixedCritic(c.0.iter().map(|z| z + shift).collect())).collect();
        let a = targets(&critics, &tr(r, DoneKind::None), 0.9);
        let b = targets(&shifted, &tr(r, DoneKind::None), 0.9);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - x - 0.9 * shift).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_loss_is_nonnegative(pred in prop::collection::vec(-5.0f64..5.0, 1..6), tgt in prop::collection::vec(-5.0f64..5.0, 1..6), kappa in 0.1f64..3.0) {
        let (l, g) = quantile_huber_loss(&pred, &tgt, kappa);
        prop_assert!(l >= 0.0);
        prop_assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn clipped_surrogate_never_exceeds_unclipped(ratio in 0.0f64..3.0, adv in -5.0f64..5.0, eps in 0.05f64..0.5) {
        prop_assert!(clipped_surrogate(ratio, adv, eps) <= ratio * adv + 1e-12);
    }
}
