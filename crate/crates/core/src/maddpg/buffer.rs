use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// One joint step: concatenated observations of every agent, concatenated
/// per-agent actions, one reward per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionSchema {
    pub state_dim: usize,
    pub action_dim: usize,
    pub n_rewards: usize,
}

impl TransitionSchema {
    fn check(&self, t: &Transition) -> Result<()> {
        if t.state.len() != self.state_dim
            || t.next_state.len() != self.state_dim
            || t.action.len() != self.action_dim
            || t.rewards.len() != self.n_rewards
        {
            return Err(Error::Dimension(format!(
                "transition ({}, {}, {}, {}) does not match schema {:?}",
                t.state.len(),
                t.action.len(),
                t.rewards.len(),
                t.next_state.len(),
                self
            )));
        }
        if t.state
            .iter()
            .chain(&t.action)
            .chain(&t.rewards)
            .chain(&t.next_state)
            .any(|x| !x.is_finite())
        {
            return Err(Error::Invalid("non-finite value in transition".into()));
        }
        Ok(())
    }
}

/// Bounded ring of transitions; the oldest entry is overwritten when full.
///
/// Rows live in one flat array, `[state | action | rewards | next_state]`
/// each, so pushing does not allocate once the ring has reached capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    schema: TransitionSchema,
    capacity: usize,
    data: Vec<f64>,
    terminal: Vec<bool>,
    next: usize,
    inserted: u64,
}

/// A sampled mini-batch laid out as matrices, one row per sample.
#[derive(Debug, Clone)]
pub struct Batch {
    pub state: Matrix,
    pub action: Matrix,
    pub rewards: Matrix,
    pub next_state: Matrix,
    pub terminal: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(schema: TransitionSchema, rows: &[&Transition]) -> Self {
        let b = rows.len();
        let mut batch = Batch {
            state: Matrix::zeros(b, schema.state_dim),
            action: Matrix::zeros(b, schema.action_dim),
            rewards: Matrix::zeros(b, schema.n_rewards),
            next_state: Matrix::zeros(b, schema.state_dim),
            terminal: Vec::with_capacity(b),
        };
        for (r, t) in rows.iter().enumerate() {
            batch.state.row_mut(r).copy_from_slice(&t.state);
            batch.action.row_mut(r).copy_from_slice(&t.action);
            batch.rewards.row_mut(r).copy_from_slice(&t.rewards);
            batch.next_state.row_mut(r).copy_from_slice(&t.next_state);
            batch.terminal.push(t.terminal);
        }
        batch
    }

    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }
}

impl ReplayBuffer {
    pub fn new(schema: TransitionSchema, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Invalid("replay capacity must be >= 1".into()));
        }
        Ok(Self {
            schema,
            capacity,
            data: Vec::new(),
            terminal: Vec::new(),
            next: 0,
            inserted: 0,
        })
    }

    pub fn schema(&self) -> TransitionSchema {
        self.schema
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminal.is_empty()
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    fn stride(&self) -> usize {
        let s = self.schema;
        2 * s.state_dim + s.action_dim + s.n_rewards
    }

    fn row(&self, idx: usize) -> &[f64] {
        let w = self.stride();
        &self.data[idx * w..(idx + 1) * w]
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        self.schema.check(&t)?;
        let parts = [&t.state, &t.action, &t.rewards, &t.next_state];
        if self.terminal.len() < self.capacity {
            for p in parts {
                self.data.extend_from_slice(p);
            }
            self.terminal.push(t.terminal);
        } else {
            let w = self.stride();
            let mut at = self.next * w;
            for p in parts {
                self.data[at..at + p.len()].copy_from_slice(p);
                at += p.len();
            }
            self.terminal[self.next] = t.terminal;
        }
        self.next = (self.next + 1) % self.capacity;
        self.inserted += 1;
        Ok(())
    }

    /// Stored transitions from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = Transition> + '_ {
        let n = self.len();
        let split = if n < self.capacity { 0 } else { self.next };
        (split..n).chain(0..split).map(|i| self.get(i).unwrap())
    }

    /// Indices of a uniform draw with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<usize>> {
        if batch_size == 0 || self.len() < batch_size {
            return Err(Error::Underfull {
                size: self.len(),
                batch: batch_size,
            });
        }
        Ok((0..batch_size).map(|_| rng.random_range(0..self.len())).collect())
    }

    pub fn get(&self, idx: usize) -> Option<Transition> {
        if idx >= self.len() {
            return None;
        }
        let s = self.schema;
        let row = self.row(idx);
        let (state, rest) = row.split_at(s.state_dim);
        let (action, rest) = rest.split_at(s.action_dim);
        let (rewards, next_state) = rest.split_at(s.n_rewards);
        Some(Transition {
            state: state.to_vec(),
            action: action.to_vec(),
            rewards: rewards.to_vec(),
            next_state: next_state.to_vec(),
            terminal: self.terminal[idx],
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(batch_size, rng)?;
        let s = self.schema;
        let b = idx.len();
        let mut batch = Batch {
            state: Matrix::zeros(b, s.state_dim),
            action: Matrix::zeros(b, s.action_dim),
            rewards: Matrix::zeros(b, s.n_rewards),
            next_state: Matrix::zeros(b, s.state_dim),
            terminal: Vec::with_capacity(b),
        };
        for (r, &i) in idx.iter().enumerate() {
            let row = self.row(i);
            let (state, rest) = row.split_at(s.state_dim);
            let (action, rest) = rest.split_at(s.action_dim);
            let (rewards, next_state) = rest.split_at(s.n_rewards);
            batch.state.row_mut(r).copy_from_slice(state);
            batch.action.row_mut(r).copy_from_slice(action);
            batch.rewards.row_mut(r).copy_from_slice(rewards);
            batch.next_state.row_mut(r).copy_from_slice(next_state);
            batch.terminal.push(self.terminal[i]);
        }
        Ok(batch)
    }

    /// Serializes to a little-endian binary blob.
    pub fn to_bytes(&self) -> Vec<u8> {
        let s = self.schema;
        let mut out = Vec::new();
        out.extend_from_slice(BUFFER_MAGIC);
        for v in [
            s.state_dim as u64,
            s.action_dim as u64,
            s.n_rewards as u64,
            self.capacity as u64,
            self.len() as u64,
            self.next as u64,
            self.inserted,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for i in 0..self.len() {
            for x in self.row(i) {
                out.extend_from_slice(&x.to_le_bytes());
            }
            out.push(self.terminal[i] as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(format!("replay buffer: {m}"));
        if bytes.len() < BUFFER_MAGIC.len() + 56 || &bytes[..BUFFER_MAGIC.len()] != BUFFER_MAGIC {
            return Err(bad("bad header"));
        }
        let mut pos = BUFFER_MAGIC.len();
        let word = |pos: &mut usize| {
            let v = u64::from_le_bytes(bytes[*pos..*pos + 8].try_into().unwrap());
            *pos += 8;
            v
        };
        let state_dim = word(&mut pos) as usize;
        let action_dim = word(&mut pos) as usize;
        let n_rewards = word(&mut pos) as usize;
        let capacity = word(&mut pos) as usize;
        let len = word(&mut pos) as usize;
        let next = word(&mut pos) as usize;
        let inserted = word(&mut pos);
        let per = (2 * state_dim + action_dim + n_rewards) * 8 + 1;
        if bytes.len() != pos + len * per || len > capacity || next >= capacity.max(1) {
            return Err(bad("length mismatch"));
        }
        let floats = |pos: &mut usize, n: usize| -> Vec<f64> {
            let v = (0..n)
                .map(|i| f64::from_le_bytes(bytes[*pos + 8 * i..*pos + 8 * i + 8].try_into().unwrap()))
                .collect();
            *pos += 8 * n;
            v
        };
        let w = per / 8;
        let mut data = Vec::with_capacity(len * w);
        let mut terminal = Vec::with_capacity(len);
        for _ in 0..len {
            data.extend(floats(&mut pos, w));
            terminal.push(bytes[pos] != 0);
            pos += 1;
        }
        Ok(Self {
            schema: TransitionSchema {
                state_dim,
                action_dim,
                n_rewards,
            },
            capacity,
            data,
            terminal,
            next,
            inserted,
        })
    }
}

const BUFFER_MAGIC: &[u8] = b"SESSRB01";
