use serde::{Deserialize, Serialize};

use super::mdp::TabularMdp;
use super::theory::{sup_distance, value_iteration_oracle, ScalarQ};
use crate::rlcore::{dot, epsilon_probs, epsilon_sample, masked_argmax_flat, StrategyMask};
use crate::{seeded_rng, Error, Result, Rng};

/// Decomposed state-action values for a finite MDP, `n_states × n_actions × K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    k: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize, k: usize) -> Self {
        Self {
            n_states,
            n_actions,
            k,
            values: vec![0.0; n_states * n_actions * k],
        }
    }

    pub fn from_values(n_states: usize, n_actions: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions * k {
            return Err(Error::Shape(format!(
                "{} values for a {n_states}x{n_actions}x{k} table",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Q table"));
        }
        Ok(Self {
            n_states,
            n_actions,
            k,
            values,
        })
    }

    pub fn for_mdp(mdp: &TabularMdp) -> Self {
        Self::zeros(mdp.n_states(), mdp.n_actions(), mdp.k())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, s: usize, a: usize) -> &[f64] {
        let base = (s * self.n_actions + a) * self.k;
        &self.values[base..base + self.k]
    }

    pub fn get_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let base = (s * self.n_actions + a) * self.k;
        &mut self.values[base..base + self.k]
    }

    /// The |A|×K block of one state, row-major.
    pub fn state_row(&self, s: usize) -> &[f64] {
        let width = self.n_actions * self.k;
        &self.values[s * width..(s + 1) * width]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Q(s,a)·m` for every pair.
    pub fn scalarized(&self, mask: &StrategyMask) -> Result<ScalarQ> {
        self.check_mask(mask)?;
        let values = self
            .values
            .chunks_exact(self.k)
            .map(|row| dot(row, mask.weights()))
            .collect();
        Ok(ScalarQ::new(self.n_states, self.n_actions, values))
    }

    pub fn greedy_action(&self, s: usize, mask: &StrategyMask) -> Result<usize> {
        self.check_state(s)?;
        self.check_mask(mask)?;
        masked_argmax_flat(self.state_row(s), self.k, mask.weights(), None)
    }

    /// Greedy masked action for every state.
    pub fn greedy_policy(&self, mask: &StrategyMask) -> Result<Vec<usize>> {
        (0..self.n_states).map(|s| self.greedy_action(s, mask)).collect()
    }

    pub(crate) fn check_shape(&self, mdp: &TabularMdp) -> Result<()> {
        if (self.n_states, self.n_actions, self.k) != (mdp.n_states(), mdp.n_actions(), mdp.k()) {
            return Err(Error::Shape(format!(
                "table {}x{}x{} does not match MDP {}x{}x{}",
                self.n_states,
                self.n_actions,
                self.k,
                mdp.n_states(),
                mdp.n_actions(),
                mdp.k()
            )));
        }
        Ok(())
    }

    fn check_mask(&self, mask: &StrategyMask) -> Result<()> {
        if mask.k() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: mask.k(),
            });
        }
        Ok(())
    }

    fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.n_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: s,
                limit: self.n_states,
            });
        }
        Ok(())
    }

    fn check_pair(&self, s: usize, a: usize) -> Result<()> {
        self.check_state(s)?;
        if a >= self.n_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                limit: self.n_actions,
            });
        }
        Ok(())
    }
}

/// One observed transition `(s, a, r⃗, s')`.
#[derive(Debug, Clone, Copy)]
pub struct TdSample<'a> {
    pub s: usize,
    pub a: usize,
    pub reward: &'a [f64],
    pub next: usize,
    pub terminal: bool,
}

fn check_sample(q: &QTable, t: &TdSample<'_>, alpha: f64) -> Result<()> {
    q.check_pair(t.s, t.a)?;
    q.check_state(t.next)?;
    if t.reward.len() != q.k {
        return Err(Error::LengthMismatch {
            expected: q.k,
            actual: t.reward.len(),
        });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidValue(format!("step size {alpha} outside (0,1]")));
    }
    Ok(())
}

/// `Q(s,a) ← (1-α)Q(s,a) + α[r + γ·bootstrap]`, with a zero bootstrap at terminals.
fn blend(q: &mut QTable, t: &TdSample<'_>, bootstrap: Option<&[f64]>, alpha: f64, gamma: f64) {
    for (i, v) in q.get_mut(t.s, t.a).iter_mut().enumerate() {
        let y = t.reward[i] + bootstrap.map_or(0.0, |b| gamma * b[i]);
        *v = (1.0 - alpha) * *v + alpha * y;
    }
}

/// Masked SARSA: bootstraps on the sampled next action `a'`.
pub fn masked_sarsa_step(
    q: &mut QTable,
    t: &TdSample<'_>,
    next_action: usize,
    alpha: f64,
    gamma: f64,
) -> Result<()> {
    check_sample(q, t, alpha)?;
    q.check_pair(t.next, next_action)?;
    let boot = (!t.terminal).then(|| q.get(t.next, next_action).to_vec());
    blend(q, t, boot.as_deref(), alpha, gamma);
    Ok(())
}

/// Masked expected SARSA: bootstraps on `Σ_a' π_m(a'|s') Q(s',a')`.
pub fn masked_expected_sarsa_step(
    q: &mut QTable,
    t: &TdSample<'_>,
    mask: &StrategyMask,
    epsilon: f64,
    alpha: f64,
    gamma: f64,
) -> Result<()> {
    check_sample(q, t, alpha)?;
    q.check_mask(mask)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidValue(format!("epsilon {epsilon} outside [0,1]")));
    }
    let boot = if t.terminal {
        None
    } else {
        let row = q.state_row(t.next);
        let greedy = masked_argmax_flat(row, q.k, mask.weights(), None)?;
        let legal: Vec<usize> = (0..q.n_actions).collect();
        let probs = epsilon_probs(q.n_actions, greedy, epsilon, &legal);
        let mut expected = vec![0.0; q.k];
        for (a, p) in probs.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            for (e, v) in expected.iter_mut().zip(q.get(t.next, a)) {
                *e += p * v;
            }
        }
        Some(expected)
    };
    blend(q, t, boot.as_deref(), alpha, gamma);
    Ok(())
}

/// Masked Q-learning: bootstraps on the full K-vector at `a*_m(s')`.
pub fn masked_q_step(
    q: &mut QTable,
    t: &TdSample<'_>,
    mask: &StrategyMask,
    alpha: f64,
    gamma: f64,
) -> Result<()> {
    check_sample(q, t, alpha)?;
    q.check_mask(mask)?;
    let boot = if t.terminal {
        None
    } else {
        let best = masked_argmax_flat(q.state_row(t.next), q.k, mask.weights(), None)?;
        Some(q.get(t.next, best).to_vec())
    };
    blend(q, t, boot.as_deref(), alpha, gamma);
    Ok(())
}

/// Step sizes `α₀/(1+visits)^ρ` with ρ ∈ (0.5, 1], which satisfy
/// `Σα = ∞, Σα² < ∞` per state-action pair, and a constant exploration rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningSchedule {
    alpha0: f64,
    rho: f64,
    epsilon: f64,
}

impl LearningSchedule {
    pub fn new(alpha0: f64, rho: f64, epsilon: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 <= 1.0) {
            return Err(Error::InvalidValue(format!("alpha0 {alpha0} outside (0,1]")));
        }
        if !(rho > 0.5 && rho <= 1.0) {
            return Err(Error::InvalidValue(format!(
                "rho {rho} outside (0.5,1]: step sizes would not be square-summable"
            )));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidValue(format!("epsilon {epsilon} outside [0,1]")));
        }
        Ok(Self { alpha0, rho, epsilon })
    }

    /// Step size for the update that follows `visits` earlier updates of the pair.
    pub fn alpha(&self, visits: u64) -> f64 {
        self.alpha0 / (1.0 + visits as f64).powf(self.rho)
    }

    pub fn epsilon(&self, _episode: u64) -> f64 {
        self.epsilon
    }
}

impl Default for LearningSchedule {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            rho: 0.7,
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TdAlgorithm {
    Sarsa,
    ExpectedSarsa,
    QLearning,
}

impl std::str::FromStr for TdAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sarsa" => Ok(Self::Sarsa),
            "expected-sarsa" | "expected_sarsa" => Ok(Self::ExpectedSarsa),
            "q" | "q-learning" => Ok(Self::QLearning),
            other => Err(Error::InvalidValue(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabularRunConfig {
    /// Total environment steps.
    pub steps: u64,
    /// Episodes are truncated (without a terminal bootstrap cut) after this many steps.
    pub max_episode_len: u64,
    /// Number of evenly spaced trace checkpoints (the final step is always recorded).
    pub checkpoints: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: u64,
    pub episode: u64,
    /// `‖Q·m − Q*_m‖∞` over non-terminal states.
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularRun {
    pub q: QTable,
    pub optimum: ScalarQ,
    pub trace: Vec<TracePoint>,
}

impl TabularRun {
    pub fn final_distance(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |p| p.sup_distance)
    }
}

/// Trains a masked TD(0) learner from zero-initialized values.
///
/// Episodes start from the MDP's start set and follow the masked ε-greedy
/// policy. The trace reports the distance to the value-iteration optimum
/// for the same mask.
pub fn run_tabular_training(
    mdp: &TabularMdp,
    algo: TdAlgorithm,
    mask: &StrategyMask,
    schedule: &LearningSchedule,
    cfg: &TabularRunConfig,
    seed: u64,
) -> Result<TabularRun> {
    if mask.k() != mdp.k() {
        return Err(Error::LengthMismatch {
            expected: mdp.k(),
            actual: mask.k(),
        });
    }
    mdp.check_connectivity()?;
    let optimum = value_iteration_oracle(mdp, mask, 1e-12)?;
    let mut q = QTable::for_mdp(mdp);
    let mut visits = vec![0u64; mdp.n_states() * mdp.n_actions()];
    let mut rng = seeded_rng(seed);
    let every = (cfg.steps / cfg.checkpoints.max(1)).max(1);
    let mut trace = Vec::new();
    let legal: Vec<usize> = (0..mdp.n_actions()).collect();
    let w = mask.weights();
    let k = mdp.k();

    let choose = |q: &QTable, s: usize, eps: f64, rng: &mut Rng| -> Result<usize> {
        let greedy = masked_argmax_flat(q.state_row(s), k, w, None)?;
        epsilon_sample(greedy, eps, &legal, rng).ok_or(Error::EmptyActionSet)
    };

    let mut step = 0u64;
    let mut episode = 0u64;
    while step < cfg.steps {
        let eps = schedule.epsilon(episode);
        let mut s = mdp.sample_start(&mut rng);
        let mut a = choose(&q, s, eps, &mut rng)?;
        let mut t = 0;
        while t < cfg.max_episode_len && step < cfg.steps {
            let o = mdp.sample(s, a, &mut rng);
            let terminal = mdp.is_terminal(o.next);
            let sample = TdSample {
                s,
                a,
                reward: &o.reward,
                next: o.next,
                terminal,
            };
            let pair = s * mdp.n_actions() + a;
            let alpha = schedule.alpha(visits[pair]);
            visits[pair] += 1;
            let next_action = if terminal {
                None
            } else {
                Some(choose(&q, o.next, eps, &mut rng)?)
            };
            match algo {
                TdAlgorithm::Sarsa => {
                    masked_sarsa_step(&mut q, &sample, next_action.unwrap_or(0), alpha, mdp.gamma())?
                }
                TdAlgorithm::ExpectedSarsa => {
                    masked_expected_sarsa_step(&mut q, &sample, mask, eps, alpha, mdp.gamma())?
                }
                TdAlgorithm::QLearning => masked_q_step(&mut q, &sample, mask, alpha, mdp.gamma())?,
            }
            step += 1;
            t += 1;
            if step % every == 0 || step == cfg.steps {
                trace.push(TracePoint {
                    step,
                    episode,
                    sup_distance: sup_distance(&q.scalarized(mask)?, &optimum, mdp),
                });
            }
            match next_action {
                Some(next) => {
                    s = o.next;
                    a = next;
                }
                None => break,
            }
        }
        episode += 1;
    }
    Ok(TabularRun { q, optimum, trace })
}
