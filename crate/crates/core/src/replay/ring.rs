use rand::Rng;

use super::transition::{DoneKind, Transition};
use crate::error::{Error, Result};

/// Fixed-capacity transition store with flat preallocated columns. When full,
/// each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct RingBuffer {
    capacity: usize,
    obs_dim: usize,
    action_dim: usize,
    obs: Vec<f64>,
    next_obs: Vec<f64>,
    action: Vec<f64>,
    reward: Vec<f64>,
    priority: Vec<f64>,
    done: Vec<DoneKind>,
    head_mask: Vec<u32>,
    cursor: usize,
    size: usize,
}

/// Default capacity of four million transitions.
pub const DEFAULT_CAPACITY: usize = 4_000_000;

impl RingBuffer {
    pub fn new(capacity: usize, obs_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        RingBuffer {
            capacity,
            obs_dim,
            action_dim,
            obs: vec![0.0; capacity * obs_dim],
            next_obs: vec![0.0; capacity * obs_dim],
            action: vec![0.0; capacity * action_dim],
            reward: vec![0.0; capacity],
            priority: vec![0.0; capacity],
            done: vec![DoneKind::None; capacity],
            head_mask: vec![0; capacity],
            cursor: 0,
            size: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Addresses and reserved lengths of the backing columns; constant for the
    /// buffer's lifetime.
    pub fn storage_report(&self) -> [(usize, usize); 3] {
        [
            (self.obs.as_ptr() as usize, self.obs.capacity()),
            (self.next_obs.as_ptr() as usize, self.next_obs.capacity()),
            (self.action.as_ptr() as usize, self.action.capacity()),
        ]
    }

    /// Slot that the next push writes.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn push(&mut self, t: &Transition) -> Result<usize> {
        if t.obs.len() != self.obs_dim || t.next_obs.len() != self.obs_dim || t.action.len() != self.action_dim {
            return Err(Error::Shape(format!(
                "transition dimensions ({}, {}, {}) do not match buffer ({}, {})",
                t.obs.len(),
                t.action.len(),
                t.next_obs.len(),
                self.obs_dim,
                self.action_dim
            )));
        }
        let i = self.cursor;
        let (o, a) = (self.obs_dim, self.action_dim);
        self.obs[i * o..(i + 1) * o].copy_from_slice(&t.obs);
        self.next_obs[i * o..(i + 1) * o].copy_from_slice(&t.next_obs);
        self.action[i * a..(i + 1) * a].copy_from_slice(&t.action);
        self.reward[i] = t.reward;
        self.priority[i] = t.priority;
        self.done[i] = t.done;
        self.head_mask[i] = t.head_mask;
        self.cursor = (i + 1) % self.capacity;
        self.size = (self.size + 1).min(self.capacity);
        Ok(i)
    }

    pub fn get(&self, index: usize) -> Result<Transition> {
        if index >= self.size {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.size,
            });
        }
        let (o, a) = (self.obs_dim, self.action_dim);
        Ok(Transition {
            obs: self.obs[index * o..(index + 1) * o].to_vec(),
            action: self.action[index * a..(index + 1) * a].to_vec(),
            reward: self.reward[index],
            next_obs: self.next_obs[index * o..(index + 1) * o].to_vec(),
            done: self.done[index],
            priority: self.priority[index],
            head_mask: self.head_mask[index],
        })
    }

    pub(crate) fn set_priority_field(&mut self, index: usize, p: f64) {
        self.priority[index] = p;
    }

    /// Slot indices from oldest to newest.
    pub fn chronological(&self) -> impl Iterator<Item = usize> + '_ {
        let start = if self.size < self.capacity { 0 } else { self.cursor };
        (0..self.size).map(move |k| (start + k) % self.capacity)
    }

    /// `n` independent uniform draws over occupied slots.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(Vec<Transition>, Vec<usize>)> {
        if self.size == 0 {
            return Err(Error::EmptyBuffer);
        }
        let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..self.size)).collect();
        let batch = indices.iter().map(|&i| self.get(i)).collect::<Result<_>>()?;
        Ok((batch, indices))
    }
}
