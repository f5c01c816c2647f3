//! Masked DQN: FIFO replay, lagged target parameters and the masked
//! bootstrap target `y⃗ = r⃗ + γ·Q⃗(s′, a*_m(s′) | w′)`.

mod learner;
mod mdp_env;

pub use learner::{
    train, write_metrics_csv, EpisodeMetrics, Learner, LearnerEnv, NoHook, StepOutcome, TrainOutput, TrainingHook,
    METRICS_VERSION,
};
pub use mdp_env::MdpEnv;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::nnapprox::{forward_flat, NetworkParams, Observation};
use crate::rlcore::{masked_argmax_flat, StrategyMask, VectorReward};
use crate::{Error, Result, Rng};

/// One `(s, a, r⃗, s′)` sample. Observations are shared with neighbouring
/// transitions of the same episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Arc<Observation>,
    pub action: usize,
    pub reward: VectorReward,
    pub next_obs: Arc<Observation>,
    pub terminal: bool,
    /// Actions available at `s′`; empty means every action.
    pub next_legal: Vec<usize>,
    /// Insertion tag assigned by the buffer.
    pub seq: u64,
}

/// Bounded FIFO of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: VecDeque<Transition>,
    next_seq: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidValue("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            storage: VecDeque::with_capacity(capacity.min(1 << 16)),
            next_seq: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    /// Appends, tagging the transition, and drops the oldest beyond capacity.
    pub fn push(&mut self, mut t: Transition) {
        t.seq = self.next_seq;
        self.next_seq += 1;
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    /// `b` distinct transitions drawn uniformly.
    pub fn sample(&self, b: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        if b > self.storage.len() {
            return Err(Error::InsufficientSamples {
                have: self.storage.len(),
                need: b,
            });
        }
        Ok(rand::seq::index::sample(rng, self.storage.len(), b)
            .into_iter()
            .map(|i| &self.storage[i])
            .collect())
    }
}

/// Linear ε decay from `start` to `end` over the first `decay_fraction` of episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.1,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: u64, total: u64) -> f64 {
        let horizon = self.decay_fraction * total as f64;
        if horizon <= 0.0 || episode as f64 >= horizon {
            return self.end;
        }
        self.start + (self.end - self.start) * episode as f64 / horizon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnConfig {
    /// B
    pub batch: usize,
    /// M
    pub capacity: usize,
    /// N; also the horizon of the ε schedule.
    pub episodes: u64,
    /// C, counted in learner steps.
    pub target_period: u64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    /// Environment steps per learner step; 1 updates after every step.
    pub train_every: u64,
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            batch: 32,
            capacity: 100_000,
            episodes: 10_000,
            target_period: 1000,
            gamma: 0.95,
            epsilon: EpsilonSchedule::default(),
            train_every: 1,
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidValue(m));
        if self.batch == 0 || self.batch > self.capacity {
            return fail(format!("need 1 ≤ B ≤ M, got B={} M={}", self.batch, self.capacity));
        }
        if self.target_period == 0 || self.train_every == 0 {
            return fail("target period and train_every must be ≥ 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma {} outside (0,1)", self.gamma));
        }
        let e = self.epsilon;
        if ![e.start, e.end].iter().all(|v| (0.0..=1.0).contains(v)) || !(0.0..=1.0).contains(&e.decay_fraction) {
            return fail(format!("invalid epsilon schedule {e:?}"));
        }
        Ok(())
    }
}

/// Masked-bootstrap regression targets, one K-vector per transition.
pub fn compute_targets(
    batch: &[&Transition],
    target: &NetworkParams,
    mask: &StrategyMask,
    gamma: f64,
) -> Result<Vec<Vec<f64>>> {
    if batch.is_empty() {
        return Err(Error::InvalidValue("empty batch".into()));
    }
    let shape = target.shape();
    if mask.k() != shape.k {
        return Err(Error::LengthMismatch {
            expected: shape.k,
            actual: mask.k(),
        });
    }
    batch
        .iter()
        .map(|t| {
            let r = t.reward.components();
            if r.len() != shape.k {
                return Err(Error::LengthMismatch {
                    expected: shape.k,
                    actual: r.len(),
                });
            }
            if t.terminal {
                return Ok(r.to_vec());
            }
            let q = forward_flat(target, &t.next_obs)?;
            let legal = (!t.next_legal.is_empty()).then_some(t.next_legal.as_slice());
            let a = masked_argmax_flat(&q, shape.k, mask.weights(), legal)?;
            let boot = &q[a * shape.k..(a + 1) * shape.k];
            Ok(r.iter().zip(boot).map(|(r, q)| r + gamma * q).collect())
        })
        .collect()
}
