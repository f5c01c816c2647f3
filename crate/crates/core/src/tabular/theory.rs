//! Masked Bellman operator, value-iteration oracle and the empirical
//! contraction/convergence checks built on them.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::learners::{run_tabular_training, LearningSchedule, QTable, TabularRunConfig, TdAlgorithm, TracePoint};
use super::mdp::{random_mdp, RandomMdpSpec, TabularMdp};
use crate::rlcore::{dot, masked_argmax_flat, StrategyMask};
use crate::{derive_seed, seeded_rng, Error, Result};

/// Scalar state-action table, `n_states × n_actions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarQ {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl ScalarQ {
    pub fn new(n_states: usize, n_actions: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n_states * n_actions);
        Self {
            n_states,
            n_actions,
            values,
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn state_max(&self, s: usize) -> f64 {
        self.values[s * self.n_actions..(s + 1) * self.n_actions]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index greedy action per state.
    pub fn greedy_policy(&self) -> Vec<usize> {
        (0..self.n_states)
            .map(|s| {
                let row = &self.values[s * self.n_actions..(s + 1) * self.n_actions];
                let mut best = 0;
                for a in 1..row.len() {
                    if row[a] > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }
}

/// `max_{s non-terminal, a} |x(s,a) − y(s,a)|`.
pub fn sup_distance(x: &ScalarQ, y: &ScalarQ, mdp: &TabularMdp) -> f64 {
    mdp.non_terminal_states()
        .flat_map(|s| (0..mdp.n_actions()).map(move |a| (s, a)))
        .map(|(s, a)| (x.get(s, a) - y.get(s, a)).abs())
        .fold(0.0, f64::max)
}

/// `(HQ·m)(s,a) = Σ_s' p(s'|s,a)[r(s',a,s)·m + γ Q(s', a*_m(s'))·m]`.
///
/// Terminal successors bootstrap zero; rows of terminal states are zero.
pub fn bellman_operator_h(q: &QTable, mask: &StrategyMask, mdp: &TabularMdp) -> Result<ScalarQ> {
    q.check_shape(mdp)?;
    if mask.k() != mdp.k() {
        return Err(Error::LengthMismatch {
            expected: mdp.k(),
            actual: mask.k(),
        });
    }
    let w = mask.weights();
    let k = mdp.k();
    // Masked value of the masked-greedy action at each state.
    let greedy_value: Vec<f64> = (0..mdp.n_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                return Ok(0.0);
            }
            let best = masked_argmax_flat(q.state_row(s), k, w, None)?;
            Ok(dot(q.get(s, best), w))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; mdp.n_states() * mdp.n_actions()];
    for s in mdp.non_terminal_states() {
        for a in 0..mdp.n_actions() {
            out[s * mdp.n_actions() + a] = mdp
                .outcomes(s, a)
                .iter()
                .map(|o| o.prob * (dot(&o.reward, w) + mdp.gamma() * greedy_value[o.next]))
                .sum();
        }
    }
    Ok(ScalarQ::new(mdp.n_states(), mdp.n_actions(), out))
}

const VALUE_ITERATION_CAP: usize = 1_000_000;

/// Fixed point of the scalar Bellman optimality operator on rewards `r·m`,
/// iterated until the sup-norm change drops below `tol`.
pub fn value_iteration_oracle(mdp: &TabularMdp, mask: &StrategyMask, tol: f64) -> Result<ScalarQ> {
    if !(tol > 0.0) {
        return Err(Error::InvalidValue(format!("tolerance {tol} must be positive")));
    }
    if mask.k() != mdp.k() {
        return Err(Error::LengthMismatch {
            expected: mdp.k(),
            actual: mask.k(),
        });
    }
    let w = mask.weights();
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    // Expected immediate masked reward per pair never changes; hoist it.
    let mut immediate = vec![0.0; n_s * n_a];
    for s in mdp.non_terminal_states() {
        for a in 0..n_a {
            immediate[s * n_a + a] = mdp.outcomes(s, a).iter().map(|o| o.prob * dot(&o.reward, w)).sum();
        }
    }
    let mut q = ScalarQ::new(n_s, n_a, vec![0.0; n_s * n_a]);
    for _ in 0..VALUE_ITERATION_CAP {
        let v: Vec<f64> = (0..n_s)
            .map(|s| if mdp.is_terminal(s) { 0.0 } else { q.state_max(s) })
            .collect();
        let mut next = vec![0.0; n_s * n_a];
        let mut change: f64 = 0.0;
        for s in mdp.non_terminal_states() {
            for a in 0..n_a {
                let idx = s * n_a + a;
                let boot: f64 = mdp.outcomes(s, a).iter().map(|o| o.prob * v[o.next]).sum();
                next[idx] = immediate[idx] + mdp.gamma() * boot;
                change = change.max((next[idx] - q.values[idx]).abs());
            }
        }
        q.values = next;
        if change < tol {
            return Ok(q);
        }
    }
    Err(Error::NoConvergence(VALUE_ITERATION_CAP))
}

/// One draw of the contraction inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionSample {
    /// `‖HQ¹·m − HQ²·m‖∞`
    pub lhs: f64,
    /// `‖Q¹·m − Q²·m‖∞`
    pub input_gap: f64,
    pub gamma: f64,
}

impl ContractionSample {
    pub const SLACK: f64 = 1e-12;

    pub fn holds(&self) -> bool {
        self.lhs <= self.gamma * self.input_gap + Self::SLACK
    }

    /// `lhs / input_gap`; 0 when the inputs coincide under the mask.
    pub fn ratio(&self) -> f64 {
        if self.input_gap > 0.0 {
            self.lhs / self.input_gap
        } else {
            0.0
        }
    }
}

pub fn contraction_sample(
    mdp: &TabularMdp,
    mask: &StrategyMask,
    q1: &QTable,
    q2: &QTable,
) -> Result<ContractionSample> {
    let h1 = bellman_operator_h(q1, mask, mdp)?;
    let h2 = bellman_operator_h(q2, mask, mdp)?;
    Ok(ContractionSample {
        lhs: sup_distance(&h1, &h2, mdp),
        input_gap: sup_distance(&q1.scalarized(mask)?, &q2.scalarized(mask)?, mdp),
        gamma: mdp.gamma(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub mdp_index: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub k: usize,
    pub gamma: f64,
    pub samples: usize,
    pub violations: usize,
    pub max_ratio: f64,
}

pub const SUITE_GAMMAS: [f64; 3] = [0.5, 0.9, 0.99];

/// Random MDP shape for suite member `index`: ≤8 states, ≤4 actions, K ≤ 4.
fn suite_spec(index: usize, rng: &mut crate::Rng) -> RandomMdpSpec {
    let n_states = rng.gen_range(2..=8);
    RandomMdpSpec {
        n_states,
        n_actions: rng.gen_range(1..=4),
        k: rng.gen_range(1..=4),
        gamma: SUITE_GAMMAS[index % SUITE_GAMMAS.len()],
        branching: rng.gen_range(1..=n_states),
        n_terminal: rng.gen_range(0..=1usize.min(n_states - 1)),
        reward_scale: 1.0,
    }
}

fn random_table(mdp: &TabularMdp, scale: f64, rng: &mut crate::Rng) -> QTable {
    let n = mdp.n_states() * mdp.n_actions() * mdp.k();
    let values = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
    QTable::from_values(mdp.n_states(), mdp.n_actions(), mdp.k(), values).expect("shape by construction")
}

/// Random mask with weights in `[-bound, bound]`; roughly one weight in four is exactly zero.
fn random_mask(k: usize, bound: f64, rng: &mut crate::Rng) -> StrategyMask {
    let w = (0..k)
        .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(-bound..=bound) })
        .collect();
    StrategyMask::unlabeled(w).expect("finite weights")
}

/// Checks `‖HQ¹·m − HQ²·m‖∞ ≤ γ‖Q¹·m − Q²·m‖∞ + 1e-12` on random MDPs,
/// tables and masks.
pub fn run_contraction_suite(seed: u64, n_mdps: usize, triples_per_mdp: usize) -> Result<Vec<ContractionRow>> {
    let mut rows = Vec::with_capacity(n_mdps);
    for i in 0..n_mdps {
        let mut rng = seeded_rng(derive_seed(seed, i as u64));
        let spec = suite_spec(i, &mut rng);
        let mdp = random_mdp(&spec, &mut rng)?;
        let mut violations = 0;
        let mut max_ratio: f64 = 0.0;
        for _ in 0..triples_per_mdp {
            let q1 = random_table(&mdp, 10.0, &mut rng);
            let q2 = random_table(&mdp, 10.0, &mut rng);
            let m = random_mask(mdp.k(), 2.0, &mut rng);
            let sample = contraction_sample(&mdp, &m, &q1, &q2)?;
            if !sample.holds() {
                violations += 1;
            }
            max_ratio = max_ratio.max(sample.ratio());
        }
        rows.push(ContractionRow {
            mdp_index: i,
            n_states: spec.n_states,
            n_actions: spec.n_actions,
            k: spec.k,
            gamma: spec.gamma,
            samples: triples_per_mdp,
            violations,
            max_ratio,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub mdp_index: usize,
    pub n_states: usize,
    pub n_actions: usize,
    pub k: usize,
    pub gamma: f64,
    pub mask: Vec<f64>,
    pub steps: u64,
    pub final_distance: f64,
    pub trace: Vec<TracePoint>,
}

/// Shape of the MDPs used by [`run_convergence_suite`].
pub const CONVERGENCE_SPEC: RandomMdpSpec = RandomMdpSpec {
    n_states: 4,
    n_actions: 2,
    k: 3,
    gamma: 0.5,
    branching: 2,
    n_terminal: 0,
    reward_scale: 1.0,
};

/// Step sizes `1/(1+n)^0.85` with ε = 0.5 behaviour exploration.
pub fn convergence_schedule() -> LearningSchedule {
    LearningSchedule::new(1.0, 0.85, 0.5).expect("valid constants")
}

/// Trains masked Q-learning with [`convergence_schedule`] on random MDPs
/// (masks with weights in [-1, 1]) and reports the distance to the
/// value-iteration optimum over time.
pub fn run_convergence_suite(seed: u64, n_mdps: usize, steps: u64) -> Result<Vec<ConvergenceRow>> {
    let schedule = convergence_schedule();
    let cfg = TabularRunConfig {
        steps,
        max_episode_len: 100,
        checkpoints: 20,
    };
    (0..n_mdps)
        .map(|i| {
            let mut rng = seeded_rng(derive_seed(seed ^ 0xC0_17, i as u64));
            let mdp = random_mdp(&CONVERGENCE_SPEC, &mut rng)?;
            let mask = random_mask(CONVERGENCE_SPEC.k, 1.0, &mut rng);
            let run = run_tabular_training(&mdp, TdAlgorithm::QLearning, &mask, &schedule, &cfg, rng.gen())?;
            Ok(ConvergenceRow {
                mdp_index: i,
                n_states: mdp.n_states(),
                n_actions: mdp.n_actions(),
                k: mdp.k(),
                gamma: mdp.gamma(),
                mask: mask.weights().to_vec(),
                steps,
                final_distance: run.final_distance(),
                trace: run.trace,
            })
        })
        .collect()
}
