use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::algo::{mean, Policy, QuantileCritic};
use crate::error::{Error, Result};

/// Every single action and every average of 2 or 3 distinct actions, as
/// selected by `orders`, in lexicographic index order within each order.
pub fn mixture_candidates(actions: &[Vec<f64>], orders: &[usize]) -> Vec<Vec<f64>> {
    let n = actions.len();
    let avg = |idx: &[usize]| -> Vec<f64> {
        let k = idx.len() as f64;
        (0..actions[idx[0]].len())
            .map(|d| idx.iter().map(|&i| actions[i][d]).sum::<f64>() / k)
            .collect()
    };
    let mut out = Vec::new();
    for &order in orders {
        match order {
            1 => out.extend(actions.iter().cloned()),
            2 => {
                for i in 0..n {
                    for j in i + 1..n {
                        out.push(avg(&[i, j]));
                    }
                }
            }
            3 => {
                for i in 0..n {
                    for j in i + 1..n {
                        for k in j + 1..n {
                            out.push(avg(&[i, j, k]));
                        }
                    }
                }
            }
            _ => {}
        }
    }
    out
}

/// Index of the largest score; the first wins ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn q(critic: &dyn QuantileCritic, obs: &[f64], a: &[f64]) -> Result<f64> {
    Ok(mean(&critic.quantiles(obs, a, 0)?))
}

/// Each actor proposes an action; mixtures of the proposals join the
/// candidate set; the candidate with the highest critic-averaged value wins.
pub fn ensemble_act(
    actors: &[&dyn Policy],
    critics: &[&dyn QuantileCritic],
    orders: &[usize],
    obs: &[f64],
) -> Result<Vec<f64>> {
    if actors.is_empty() || critics.is_empty() {
        return Err(Error::InvalidArgument("an ensemble needs at least one actor and one critic".into()));
    }
    let proposals = actors.iter().map(|a| a.act(obs, 0)).collect::<Result<Vec<_>>>()?;
    let mut candidates = mixture_candidates(&proposals, orders);
    if candidates.is_empty() {
        candidates = proposals;
    }
    if candidates.len() == 1 {
        return Ok(candidates.swap_remove(0));
    }
    let scores = candidates
        .iter()
        .map(|a| {
            let total = critics.iter().map(|c| q(*c, obs, a)).sum::<Result<f64>>()?;
            Ok(total / critics.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(candidates.swap_remove(argmax(&scores)))
}

/// The proposed action plus `n` Gaussian perturbations of it, clamped to the
/// unit box; the candidate whose most pessimistic critic value is highest wins.
pub fn critic_guided_act<R: Rng + ?Sized>(
    proposal: &[f64],
    critics: &[&dyn QuantileCritic],
    obs: &[f64],
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if critics.is_empty() {
        return Err(Error::InvalidArgument("critic-guided search needs a critic".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(proposal.to_vec());
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let mut candidates = Vec::with_capacity(n + 1);
    candidates.push(proposal.to_vec());
    for _ in 0..n {
        candidates.push(
            proposal
                .iter()
                .map(|&a| (a + normal.sample(rng)).clamp(0.0, 1.0))
                .collect(),
        );
    }
    let scores = candidates
        .iter()
        .map(|a| {
            critics
                .iter()
                .map(|c| q(*c, obs, a))
                .try_fold(f64::INFINITY, |m, v| v.map(|v| m.min(v)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(candidates.swap_remove(argmax(&scores)))
}
