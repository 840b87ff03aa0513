use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    /// Normalized action in `[-1, 1]^d`.
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Column-stacked minibatch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(items: &[&Transition]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Shape("empty batch".into()));
        }
        let states: Vec<&[f64]> = items.iter().map(|t| t.state.as_slice()).collect();
        let actions: Vec<&[f64]> = items.iter().map(|t| t.action.as_slice()).collect();
        let next: Vec<&[f64]> = items.iter().map(|t| t.next_state.as_slice()).collect();
        Ok(Self {
            states: Matrix::from_rows(&states)?,
            actions: Matrix::from_rows(&actions)?,
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states: Matrix::from_rows(&next)?,
            dones: items.iter().map(|t| t.done).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Fixed-capacity FIFO ring buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::new(),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Oldest-first view of the stored transitions.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// Uniform draw with replacement; errors until `batch_size` transitions are stored.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Batch> {
        if batch_size == 0 || self.items.len() < batch_size {
            return Err(Error::Contract(format!(
                "cannot sample {batch_size} transitions from a buffer holding {}",
                self.items.len()
            )));
        }
        let picks: Vec<&Transition> = (0..batch_size)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect();
        Batch::from_transitions(&picks)
    }
}
