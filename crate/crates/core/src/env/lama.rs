use crate::error::{Error, Result};
use crate::nn::NetParams;

/// Last, average, max and attention pooling over a window of observations
/// (oldest first). Attention scores come from a scalar-output network applied
/// to each observation; the output has length `4 D`.
pub fn lama_pool(history: &[Vec<f64>], attention: &NetParams) -> Result<Vec<f64>> {
    let scores = history
        .iter()
        .map(|h| attention.predict(h).map(|o| o[0]))
        .collect::<Result<Vec<_>>>()?;
    lama_pool_with_scores(history, &scores)
}

pub fn lama_pool_with_scores(history: &[Vec<f64>], scores: &[f64]) -> Result<Vec<f64>> {
    let last = history
        .last()
        .ok_or_else(|| Error::InvalidArgument("pooling needs a non-empty history".into()))?;
    let d = last.len();
    if history.iter().any(|h| h.len() != d) || scores.len() != history.len() {
        return Err(Error::Shape("history entries and scores must agree in size".into()));
    }
    let n = history.len() as f64;
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = weights.iter().sum();

    let mut out = Vec::with_capacity(4 * d);
    out.extend_from_slice(last);
    out.extend((0..d).map(|j| history.iter().map(|h| h[j]).sum::<f64>() / n));
    out.extend((0..d).map(|j| history.iter().map(|h| h[j]).fold(f64::NEG_INFINITY, f64::max)));
    out.extend((0..d).map(|j| history.iter().zip(&weights).map(|(h, w)| w * h[j]).sum::<f64>() / z));
    Ok(out)
}

/// Fixed-length window of recent observations.
#[derive(Debug, Clone)]
pub struct HistoryWindow {
    capacity: usize,
    items: std::collections::VecDeque<Vec<f64>>,
}

impl HistoryWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        HistoryWindow {
            capacity,
            items: Default::default(),
        }
    }

    pub fn push(&mut self, obs: &[f64]) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(obs.to_vec());
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn as_vec(&self) -> Vec<Vec<f64>> {
        self.items.iter().cloned().collect()
    }
}
