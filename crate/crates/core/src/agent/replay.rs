use rand::seq::index;
use rand::Rng;

use super::observation::OBS_DIM;

/// One experienced step: normalized per-subflow features before and after,
/// the action taken, and the reward for the slot in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<[f64; OBS_DIM]>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<[f64; OBS_DIM]>,
}

/// Fixed-capacity FIFO of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            capacity,
            items: Vec::with_capacity(capacity),
            next: 0,
            pushed: 0,
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

    /// Transitions ever stored, including evicted ones.
    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    /// Stores `t`, evicting the oldest entry when full.
    pub fn push(&mut self, t: Transition) {
        self.pushed += 1;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// `k` distinct stored indices, uniformly at random.
    pub fn sample_indices<R: Rng>(&self, rng: &mut R, k: usize) -> Vec<usize> {
        index::sample(rng, self.items.len(), k.min(self.items.len())).into_vec()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, k: usize) -> Vec<&Transition> {
        self.sample_indices(rng, k).into_iter().map(|i| &self.items[i]).collect()
    }
}
