//! Experience replay: a fixed-capacity ring of transitions with uniform
//! without-replacement minibatch sampling.

use crate::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Windowed observation the action was taken in.
    pub obs: Vec<f64>,
    pub action: usize,
    pub next_obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Validity mask at the next state, used when bootstrapping the target.
    pub next_valid: Vec<bool>,
}

pub struct ReplayBuffer {
    buf: Vec<Transition>,
    capacity: usize,
    write: usize,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be >= 1".into()));
        }
        Ok(ReplayBuffer { buf: Vec::with_capacity(capacity), capacity, write: 0, pushed: 0 })
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() < self.capacity {
            self.buf.push(t);
        } else {
            self.buf[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
        self.pushed += 1;
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.buf[idx]
    }

    /// Uniform sample of distinct indices (partial Fisher-Yates).
    pub fn sample_indices(&self, batch: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        if batch == 0 || batch > self.buf.len() {
            return Err(Error::Training(format!(
                "cannot sample {batch} from a buffer of {}",
                self.buf.len()
            )));
        }
        let n = self.buf.len();
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..batch {
            let j = i + (rng.gen::<f64>() * (n - i) as f64) as usize;
            let j = j.min(n - 1);
            idx.swap(i, j);
        }
        idx.truncate(batch);
        Ok(idx)
    }
}
