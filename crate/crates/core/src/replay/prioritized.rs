use rand::Rng;

use super::ring::RingBuffer;
use super::sumtree::SumTree;
use super::transition::Transition;
use crate::error::{Error, Result};

pub const DEFAULT_PRIORITY_EPS: f64 = 1e-3;

/// Proportional prioritized replay. Leaves hold `p^alpha`, so `alpha` is
/// fixed for the buffer's lifetime.
#[derive(Debug, Clone)]
pub struct PrioritizedBuffer {
    ring: RingBuffer,
    tree: SumTree,
    alpha: f64,
    eps: f64,
    max_priority: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrioritizedBatch {
    pub transitions: Vec<Transition>,
    pub indices: Vec<usize>,
    /// Importance weights normalized by the batch maximum.
    pub weights: Vec<f64>,
}

impl PrioritizedBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize, alpha: f64) -> Self {
        assert!(alpha >= 0.0);
        PrioritizedBuffer {
            ring: RingBuffer::new(capacity, obs_dim, action_dim),
            tree: SumTree::new(capacity),
            alpha,
            eps: DEFAULT_PRIORITY_EPS,
            max_priority: 1.0,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn ring(&self) -> &RingBuffer {
        &self.ring
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Stores with the largest priority seen so far.
    pub fn push(&mut self, t: &Transition) -> Result<usize> {
        let i = self.ring.push(t)?;
        self.write_priority(i, self.max_priority);
        Ok(i)
    }

    fn write_priority(&mut self, index: usize, p: f64) {
        self.ring.set_priority_field(index, p);
        self.tree.set(index, p.powf(self.alpha));
        self.max_priority = self.max_priority.max(p);
    }

    /// Sets the raw priority of a stored slot.
    pub fn set_priority(&mut self, index: usize, p: f64) -> Result<()> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.len(),
            });
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("priority {p} is not positive and finite")));
        }
        self.write_priority(index, p);
        Ok(())
    }

    /// Priorities become `|delta| + eps`.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) -> Result<()> {
        if indices.len() != td_errors.len() {
            return Err(Error::Shape("one TD error per index is required".into()));
        }
        for (&i, &d) in indices.iter().zip(td_errors) {
            if !d.is_finite() {
                return Err(Error::NonFinite(format!("TD error for slot {i}")));
            }
            self.set_priority(i, d.abs() + self.eps)?;
        }
        Ok(())
    }

    /// Probability of drawing slot `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.tree.get(index) / self.tree.total()
    }

    /// Stratified draw: one sample from each of `n` equal slices of total mass.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, beta: f64, rng: &mut R) -> Result<PrioritizedBatch> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let total = self.tree.total();
        let slice = total / n as f64;
        let size = self.len() as f64;
        let mut indices = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for k in 0..n {
            let mass = (k as f64 + rng.random::<f64>()) * slice;
            let i = self.tree.find(mass).min(self.len() - 1);
            indices.push(i);
            weights.push((size * self.probability(i)).powf(-beta));
        }
        let top = weights.iter().cloned().fold(0.0, f64::max);
        for w in &mut weights {
            *w /= top;
        }
        let transitions = indices.iter().map(|&i| self.ring.get(i)).collect::<Result<_>>()?;
        Ok(PrioritizedBatch {
            transitions,
            indices,
            weights,
        })
    }
}
