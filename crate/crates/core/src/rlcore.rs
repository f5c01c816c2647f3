//! Decomposed values, strategy masks and the masked ε-greedy policy.
//!
//! A decomposed value carries one component per reward dimension. A
//! [`StrategyMask`] weights those components inside action selection: the
//! scalar used for ranking actions is the dot product of the K-vector with the
//! mask. Weight 1 includes a dimension, 0 ignores it, a negative weight
//! penalizes it.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Error, Result, Rng};

/// Dimension labels of the Coup reward decomposition, in vector order.
pub const COUP_DIMENSIONS: [&str; 4] = ["Win", "Challenge", "Lie", "Bait"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMask {
    weights: Vec<f64>,
    labels: Vec<String>,
}

impl StrategyMask {
    pub fn new(weights: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidValue("mask must have at least one dimension".into()));
        }
        if labels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: weights.len(),
                actual: labels.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("strategy mask"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidValue(format!("duplicate mask label {l:?}")));
            }
        }
        Ok(Self { weights, labels })
    }

    /// Mask with generated labels `d0, d1, ...`.
    pub fn unlabeled(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| format!("d{i}")).collect();
        Self::new(weights, labels)
    }

    /// Mask over the Coup dimensions (Win, Challenge, Lie, Bait).
    pub fn coup(weights: [f64; 4]) -> Result<Self> {
        Self::new(
            weights.to_vec(),
            COUP_DIMENSIONS.iter().map(|s| s.to_string()).collect(),
        )
    }

    /// All-ones mask: plain reward decomposition.
    pub fn ones(k: usize) -> Result<Self> {
        Self::unlabeled(vec![1.0; k])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    /// Same labels, every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.weights.iter().map(|w| w * factor).collect(),
            self.labels.clone(),
        )
    }

    /// Same labels with one weight replaced.
    pub fn with_weight(&self, dim: usize, weight: f64) -> Result<Self> {
        if dim >= self.k() {
            return Err(Error::IndexOutOfRange {
                what: "mask dimension",
                index: dim,
                limit: self.k(),
            });
        }
        let mut weights = self.weights.clone();
        weights[dim] = weight;
        Self::new(weights, self.labels.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorReward {
    components: Vec<f64>,
}

impl VectorReward {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("reward"));
        }
        Ok(Self { components })
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            components: vec![0.0; k],
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn add_assign(&mut self, other: &VectorReward) -> Result<()> {
        check_len(self.k(), other.k())?;
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            *a += b;
        }
        Ok(())
    }

    pub fn add_component(&mut self, dim: usize, amount: f64) {
        self.components[dim] += amount;
    }

    pub fn dot(&self, mask: &StrategyMask) -> Result<f64> {
        scalarize(&self.components, mask)
    }
}

/// An |A|×K table of decomposed state-action values for one state, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedQRow {
    values: Vec<f64>,
    n_actions: usize,
    k: usize,
    #[serde(default)]
    action_labels: Vec<String>,
}

impl DecomposedQRow {
    pub fn new(values: Vec<f64>, n_actions: usize, k: usize) -> Result<Self> {
        if n_actions.checked_mul(k) != Some(values.len()) {
            return Err(Error::Shape(format!(
                "{} values cannot form a {n_actions}x{k} row",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("decomposed Q row"));
        }
        Ok(Self {
            values,
            n_actions,
            k,
            action_labels: Vec::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("ragged Q rows".into()));
        }
        Self::new(rows.concat(), rows.len(), k)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_len(self.n_actions, labels.len())?;
        self.action_labels = labels;
        Ok(self)
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn action_labels(&self) -> &[String] {
        &self.action_labels
    }

    pub fn action(&self, a: usize) -> &[f64] {
        &self.values[a * self.k..(a + 1) * self.k]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// Scalarized value `Q(s,a)·m` for every action.
    pub fn scalarized(&self, mask: &StrategyMask) -> Result<Vec<f64>> {
        check_len(self.k, mask.k())?;
        Ok((0..self.n_actions)
            .map(|a| dot(self.action(a), mask.weights()))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub epsilon: f64,
    pub rng_seed: u64,
}

impl PolicyConfig {
    pub fn new(epsilon: f64, rng_seed: u64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon, rng_seed })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidValue(format!("epsilon {epsilon} outside [0,1]")));
    }
    Ok(())
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_k row_k · m_k`.
pub fn scalarize(row: &[f64], mask: &StrategyMask) -> Result<f64> {
    check_len(mask.k(), row.len())?;
    Ok(dot(row, mask.weights()))
}

/// Lowest-indexed action maximizing `Q(s,a)·m`.
pub fn masked_argmax(q: &DecomposedQRow, mask: &StrategyMask) -> Result<usize> {
    check_len(q.k(), mask.k())?;
    masked_argmax_flat(q.as_flat(), q.k(), mask.weights(), None)
}

/// Lowest-indexed legal action maximizing `Q(s,a)·m`.
pub fn masked_argmax_legal(
    q: &DecomposedQRow,
    mask: &StrategyMask,
    legal: &[usize],
) -> Result<usize> {
    check_len(q.k(), mask.k())?;
    masked_argmax_flat(q.as_flat(), q.k(), mask.weights(), Some(legal))
}

/// Argmax over a flat row-major |A|×K buffer, optionally restricted to `legal`.
///
/// Ties go to the lowest action index; `legal` need not be sorted.
pub fn masked_argmax_flat(
    values: &[f64],
    k: usize,
    weights: &[f64],
    legal: Option<&[usize]>,
) -> Result<usize> {
    let n_actions = if k == 0 { 0 } else { values.len() / k };
    let mut best: Option<(usize, f64)> = None;
    let mut consider = |a: usize| -> Result<()> {
        if a >= n_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                limit: n_actions,
            });
        }
        let v = dot(&values[a * k..(a + 1) * k], weights);
        match best {
            Some((ba, bv)) if v < bv || (v == bv && a > ba) => {}
            _ => best = Some((a, v)),
        }
        Ok(())
    };
    match legal {
        Some(legal) => legal.iter().try_for_each(|&a| consider(a))?,
        None => (0..n_actions).try_for_each(&mut consider)?,
    }
    best.map(|(a, _)| a).ok_or(Error::EmptyActionSet)
}

/// Probabilities of the masked ε-greedy policy over all |A| actions.
///
/// The greedy legal action gets `1-ε+ε/|L|`, every other legal action `ε/|L|`,
/// illegal actions 0, where `L` is the legal subset.
pub fn masked_epsilon_probs(
    q: &DecomposedQRow,
    mask: &StrategyMask,
    epsilon: f64,
    legal: &[usize],
) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    if legal.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    let greedy = masked_argmax_legal(q, mask, legal)?;
    Ok(epsilon_probs(q.n_actions(), greedy, epsilon, legal))
}

pub(crate) fn epsilon_probs(n_actions: usize, greedy: usize, epsilon: f64, legal: &[usize]) -> Vec<f64> {
    let share = epsilon / legal.len() as f64;
    let mut probs = vec![0.0; n_actions];
    for &a in legal {
        probs[a] = share;
    }
    probs[greedy] += 1.0 - epsilon;
    probs
}

/// Seeded masked ε-greedy sampler. One instance owns one RNG stream.
#[derive(Debug, Clone)]
pub struct MaskedEpsilonGreedy {
    epsilon: f64,
    rng: Rng,
}

impl MaskedEpsilonGreedy {
    pub fn new(cfg: PolicyConfig) -> Result<Self> {
        check_epsilon(cfg.epsilon)?;
        Ok(Self {
            epsilon: cfg.epsilon,
            rng: seeded_rng(cfg.rng_seed),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        check_epsilon(epsilon)?;
        self.epsilon = epsilon;
        Ok(())
    }

    /// Samples an action and returns it together with the full probability vector.
    pub fn select(
        &mut self,
        q: &DecomposedQRow,
        mask: &StrategyMask,
        legal: &[usize],
    ) -> Result<(usize, Vec<f64>)> {
        let probs = masked_epsilon_probs(q, mask, self.epsilon, legal)?;
        let action = sample_index(&probs, &mut self.rng);
        Ok((action, probs))
    }

    /// Samples without materializing the probability vector.
    pub fn select_flat(
        &mut self,
        values: &[f64],
        k: usize,
        weights: &[f64],
        legal: &[usize],
    ) -> Result<usize> {
        if legal.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        let greedy = masked_argmax_flat(values, k, weights, Some(legal))?;
        epsilon_sample(greedy, self.epsilon, legal, &mut self.rng)
            .ok_or(Error::EmptyActionSet)
    }
}

/// Draws from the masked ε-greedy distribution given its greedy action.
pub(crate) fn epsilon_sample(
    greedy: usize,
    epsilon: f64,
    legal: &[usize],
    rng: &mut Rng,
) -> Option<usize> {
    if legal.is_empty() {
        return None;
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        Some(legal[rng.gen_range(0..legal.len())])
    } else {
        Some(greedy)
    }
}

/// Inverse-CDF sample from a probability vector.
pub(crate) fn sample_index(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
