use serde::{Deserialize, Serialize};

use super::NetworkParams;
use crate::{Error, Result};

/// Update rule. Plain SGD is the default; the others are opt-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerKind {
    Sgd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidValue(format!("{name} = {v} outside [0,1)")))
            }
        };
        match *self {
            OptimizerKind::Sgd => Ok(()),
            OptimizerKind::Momentum { beta } => unit("beta", beta),
            OptimizerKind::Adam { beta1, beta2, eps } => {
                unit("beta1", beta1)?;
                unit("beta2", beta2)?;
                if eps > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidValue(format!("eps = {eps} must be positive")))
                }
            }
        }
    }
}

/// `w ← w − α·g`, returning new parameters.
pub fn sgd_step(params: &NetworkParams, grad: &[f64], alpha: f64) -> Result<NetworkParams> {
    check_step(params, grad, alpha)?;
    let mut out = params.clone();
    for (w, g) in out.values_mut().iter_mut().zip(grad) {
        *w -= alpha * g;
    }
    Ok(out)
}

fn check_step(params: &NetworkParams, grad: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidValue(format!("step size {alpha} must be positive")));
    }
    if grad.len() != params.len() {
        return Err(Error::LengthMismatch {
            expected: params.len(),
            actual: grad.len(),
        });
    }
    Ok(())
}

/// Rescales `grad` in place so its L2 norm is at most `max_norm`; returns the original norm.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Stateful optimizer owning its moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    alpha: f64,
    clip_norm: Option<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, alpha: f64, clip_norm: Option<f64>, n_params: usize) -> Result<Self> {
        kind.validate()?;
        if !(alpha > 0.0) {
            return Err(Error::InvalidValue(format!("step size {alpha} must be positive")));
        }
        let (first, second) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Momentum { .. } => (vec![0.0; n_params], Vec::new()),
            OptimizerKind::Adam { .. } => (vec![0.0; n_params], vec![0.0; n_params]),
        };
        Ok(Self {
            kind,
            alpha,
            clip_norm,
            first,
            second,
            steps: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Clips `grad` (if configured) and applies one update in place.
    pub fn step(&mut self, params: &mut NetworkParams, grad: &mut [f64]) -> Result<()> {
        check_step(params, grad, self.alpha)?;
        if let Some(c) = self.clip_norm {
            clip_global_norm(grad, c);
        }
        self.steps += 1;
        let alpha = self.alpha;
        let w = params.values_mut();
        match self.kind {
            OptimizerKind::Sgd => {
                for (w, g) in w.iter_mut().zip(grad.iter()) {
                    *w -= alpha * g;
                }
            }
            OptimizerKind::Momentum { beta } => {
                for ((w, g), v) in w.iter_mut().zip(grad.iter()).zip(&mut self.first) {
                    *v = beta * *v + g;
                    *w -= alpha * *v;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((w, g), m), v) in w.iter_mut().zip(grad.iter()).zip(&mut self.first).zip(&mut self.second) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *w -= alpha * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}
