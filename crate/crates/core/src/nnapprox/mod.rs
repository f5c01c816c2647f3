//! Decomposed Q-network with hand-written gradients.
//!
//! A static MLP encodes the fixed-length part of an observation, an LSTM cell
//! runs over the history events, and a head MLP maps their concatenation to
//! `|A|·K` outputs. All parameters live in one flat `f64` buffer so that
//! optimizers, checkpoints and target-network copies are plain slice work.

mod checkpoint;
mod net;
mod optim;

pub use checkpoint::{from_bytes, load_params, save_params, to_bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use net::{forward, forward_flat, loss_and_gradient, TrainSample};
pub use optim::{clip_global_norm, sgd_step, Optimizer, OptimizerKind};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{seeded_rng, Error, Result};

/// Environment-side dimensions the network must match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub static_dim: usize,
    pub event_dim: usize,
    pub n_actions: usize,
    pub k: usize,
}

/// Hidden sizes, step size and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproximatorConfig {
    pub static_hidden: Vec<usize>,
    pub recurrent: usize,
    pub head_hidden: Vec<usize>,
    pub alpha: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Global-norm gradient clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for ApproximatorConfig {
    fn default() -> Self {
        Self {
            static_hidden: vec![64],
            recurrent: 64,
            head_hidden: vec![128],
            alpha: 1e-3,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            clip_norm: Some(10.0),
        }
    }
}

impl ApproximatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.recurrent == 0 || self.static_hidden.contains(&0) || self.head_hidden.contains(&0) {
            return Err(Error::InvalidValue("layer widths must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidValue(format!("learning rate {} must be positive", self.alpha)));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::InvalidValue(format!("clip norm {c} must be positive")));
            }
        }
        self.optimizer.validate()
    }
}

/// Offsets of one dense layer inside the flat buffer. Weights are stored
/// input-major: `w[i * fan_out + o]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Dense {
    pub w: usize,
    pub b: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Dense {
    fn end(&self) -> usize {
        self.b + self.fan_out
    }
}

/// Offsets of the LSTM cell. Gate order is input, forget, output, candidate;
/// weights are input-major over `[event; h_prev]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Lstm {
    pub w: usize,
    pub b: usize,
    pub input: usize,
    pub hidden: usize,
}

/// Architecture plus the derived parameter offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    shape: NetShape,
    static_hidden: Vec<usize>,
    recurrent: usize,
    head_hidden: Vec<usize>,
    pub(crate) static_layers: Vec<Dense>,
    pub(crate) lstm: Lstm,
    pub(crate) head_layers: Vec<Dense>,
    len: usize,
}

impl Layout {
    pub fn new(shape: NetShape, static_hidden: &[usize], recurrent: usize, head_hidden: &[usize]) -> Result<Self> {
        if shape.static_dim == 0 || shape.event_dim == 0 || shape.n_actions == 0 || shape.k == 0 {
            return Err(Error::Shape(format!("degenerate network shape {shape:?}")));
        }
        if recurrent == 0 || static_hidden.contains(&0) || head_hidden.contains(&0) {
            return Err(Error::Shape("layer widths must be positive".into()));
        }
        let mut offset = 0;
        let stack = |sizes: &[usize], offset: &mut usize| {
            sizes
                .windows(2)
                .map(|w| {
                    let d = Dense {
                        w: *offset,
                        b: *offset + w[0] * w[1],
                        fan_in: w[0],
                        fan_out: w[1],
                    };
                    *offset = d.end();
                    d
                })
                .collect::<Vec<_>>()
        };
        let static_sizes: Vec<usize> = std::iter::once(shape.static_dim).chain(static_hidden.iter().copied()).collect();
        let static_layers = stack(&static_sizes, &mut offset);
        let lstm = Lstm {
            w: offset,
            b: offset + (shape.event_dim + recurrent) * 4 * recurrent,
            input: shape.event_dim,
            hidden: recurrent,
        };
        offset = lstm.b + 4 * recurrent;
        let head_sizes: Vec<usize> = std::iter::once(static_sizes[static_sizes.len() - 1] + recurrent)
            .chain(head_hidden.iter().copied())
            .chain(std::iter::once(shape.n_actions * shape.k))
            .collect();
        let head_layers = stack(&head_sizes, &mut offset);
        Ok(Self {
            shape,
            static_hidden: static_hidden.to_vec(),
            recurrent,
            head_hidden: head_hidden.to_vec(),
            static_layers,
            lstm,
            head_layers,
            len: offset,
        })
    }

    pub fn from_config(shape: NetShape, cfg: &ApproximatorConfig) -> Result<Self> {
        Self::new(shape, &cfg.static_hidden, cfg.recurrent, &cfg.head_hidden)
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn static_hidden(&self) -> &[usize] {
        &self.static_hidden
    }

    pub fn recurrent(&self) -> usize {
        self.recurrent
    }

    pub fn head_hidden(&self) -> &[usize] {
        &self.head_hidden
    }

    /// Width of the static encoding fed to the head.
    pub(crate) fn static_out(&self) -> usize {
        self.static_hidden.last().copied().unwrap_or(self.shape.static_dim)
    }

    /// Total parameter count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Flat parameter buffer tagged with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layout: Layout,
    values: Vec<f64>,
}

impl NetworkParams {
    /// Glorot-uniform dense weights, small-uniform recurrent weights, zero biases.
    pub fn init(shape: NetShape, cfg: &ApproximatorConfig) -> Result<Self> {
        let layout = Layout::from_config(shape, cfg)?;
        let mut rng = seeded_rng(cfg.seed);
        let mut values = vec![0.0; layout.len()];
        for d in layout.static_layers.iter().chain(&layout.head_layers) {
            let bound = (6.0 / (d.fan_in + d.fan_out) as f64).sqrt();
            for v in &mut values[d.w..d.b] {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        let l = layout.lstm;
        let bound = 1.0 / (l.hidden as f64).sqrt();
        for v in &mut values[l.w..l.b] {
            *v = rng.gen_range(-bound..=bound);
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: Layout) -> Self {
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    pub fn from_values(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::LengthMismatch {
                expected: layout.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn shape(&self) -> NetShape {
        self.layout.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Overwrites these parameters with `other`'s (target-network sync).
    pub fn copy_from(&mut self, other: &NetworkParams) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Shape("cannot copy parameters across layouts".into()));
        }
        self.values.copy_from_slice(&other.values);
        Ok(())
    }

    /// Hex SHA-256 over the little-endian parameter bytes.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Static features plus a sequence of fixed-width history events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    static_features: Vec<f64>,
    event_dim: usize,
    /// Events back to back, `event_dim` values each.
    history: Vec<f64>,
}

impl Observation {
    pub fn new(static_features: Vec<f64>, event_dim: usize) -> Self {
        Self {
            static_features,
            event_dim,
            history: Vec::new(),
        }
    }

    pub fn with_events(static_features: Vec<f64>, event_dim: usize, events: &[Vec<f64>]) -> Result<Self> {
        let mut obs = Self::new(static_features, event_dim);
        for e in events {
            obs.push_event(e)?;
        }
        Ok(obs)
    }

    pub fn push_event(&mut self, event: &[f64]) -> Result<()> {
        if event.len() != self.event_dim {
            return Err(Error::LengthMismatch {
                expected: self.event_dim,
                actual: event.len(),
            });
        }
        self.history.extend_from_slice(event);
        Ok(())
    }

    pub fn static_features(&self) -> &[f64] {
        &self.static_features
    }

    pub fn event_dim(&self) -> usize {
        self.event_dim
    }

    pub fn history_len(&self) -> usize {
        if self.event_dim == 0 {
            0
        } else {
            self.history.len() / self.event_dim
        }
    }

    pub fn event(&self, t: usize) -> &[f64] {
        &self.history[t * self.event_dim..(t + 1) * self.event_dim]
    }

    pub fn history_flat(&self) -> &[f64] {
        &self.history
    }

    pub(crate) fn check(&self, shape: NetShape) -> Result<()> {
        if self.static_features.len() != shape.static_dim {
            return Err(Error::Shape(format!(
                "static features have length {}, network expects {}",
                self.static_features.len(),
                shape.static_dim
            )));
        }
        if self.history_len() > 0 && self.event_dim != shape.event_dim {
            return Err(Error::Shape(format!(
                "history events have width {}, network expects {}",
                self.event_dim, shape.event_dim
            )));
        }
        Ok(())
    }
}
