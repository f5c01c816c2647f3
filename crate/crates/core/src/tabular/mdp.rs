use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Rng};

/// One possible successor of a state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    /// Decomposed reward `r(s', a, s)`.
    pub reward: Vec<f64>,
}

/// Finite MDP with decomposed rewards.
///
/// Terminal states are absorbing with zero value; their outgoing rows are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    k: usize,
    gamma: f64,
    /// `outcomes[s * n_actions + a]`
    outcomes: Vec<Vec<Outcome>>,
    terminal: Vec<bool>,
    start: Vec<usize>,
}

impl TabularMdp {
    /// Validates and builds an MDP. An empty `start` means "every non-terminal state".
    pub fn new(
        n_states: usize,
        n_actions: usize,
        k: usize,
        gamma: f64,
        outcomes: Vec<Vec<Outcome>>,
        terminal: Vec<bool>,
        start: Vec<usize>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || k == 0 {
            return Err(Error::InvalidValue("MDP needs ≥1 state, action and reward dimension".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidValue(format!("gamma {gamma} outside [0,1)")));
        }
        if outcomes.len() != n_states * n_actions {
            return Err(Error::Shape(format!(
                "expected {} transition rows, got {}",
                n_states * n_actions,
                outcomes.len()
            )));
        }
        if terminal.len() != n_states {
            return Err(Error::LengthMismatch {
                expected: n_states,
                actual: terminal.len(),
            });
        }
        for (idx, row) in outcomes.iter().enumerate() {
            let s = idx / n_actions;
            for o in row {
                if o.next >= n_states {
                    return Err(Error::IndexOutOfRange {
                        what: "next state",
                        index: o.next,
                        limit: n_states,
                    });
                }
                if o.reward.len() != k {
                    return Err(Error::LengthMismatch {
                        expected: k,
                        actual: o.reward.len(),
                    });
                }
                if !o.prob.is_finite() || o.prob < 0.0 || o.reward.iter().any(|r| !r.is_finite()) {
                    return Err(Error::NonFinite("transition"));
                }
            }
            if terminal[s] {
                continue;
            }
            let total: f64 = row.iter().map(|o| o.prob).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidValue(format!(
                    "p(.|s={s}, a={}) sums to {total}",
                    idx % n_actions
                )));
            }
        }
        let start = if start.is_empty() {
            (0..n_states).filter(|&s| !terminal[s]).collect()
        } else {
            start
        };
        if let Some(&bad) = start.iter().find(|&&s| s >= n_states || terminal[s]) {
            return Err(Error::InvalidValue(format!("start state {bad} is invalid or terminal")));
        }
        if start.is_empty() {
            return Err(Error::InvalidValue("MDP has no non-terminal start state".into()));
        }
        Ok(Self {
            n_states,
            n_actions,
            k,
            gamma,
            outcomes,
            terminal,
            start,
        })
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

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn start_states(&self) -> &[usize] {
        &self.start
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.n_actions + a]
    }

    pub fn non_terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_states).filter(|&s| !self.terminal[s])
    }

    /// Same dynamics, different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            self.k,
            gamma,
            self.outcomes.clone(),
            self.terminal.clone(),
            self.start.clone(),
        )
    }

    /// Samples a successor of `(s, a)`.
    pub fn sample(&self, s: usize, a: usize, rng: &mut Rng) -> &Outcome {
        let row = self.outcomes(s, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for o in row {
            acc += o.prob;
            if u < acc {
                return o;
            }
        }
        row.iter().rev().find(|o| o.prob > 0.0).unwrap_or(&row[row.len() - 1])
    }

    pub fn sample_start(&self, rng: &mut Rng) -> usize {
        self.start[rng.gen_range(0..self.start.len())]
    }

    /// Checks that every non-terminal state is reachable from the start set.
    pub fn check_connectivity(&self) -> Result<()> {
        let mut seen = vec![false; self.n_states];
        let mut queue: VecDeque<usize> = self.start.iter().copied().collect();
        for &s in &self.start {
            seen[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.n_actions {
                for o in self.outcomes(s, a) {
                    if o.prob > 0.0 && !seen[o.next] {
                        seen[o.next] = true;
                        queue.push_back(o.next);
                    }
                }
            }
        }
        match self.non_terminal_states().find(|&s| !seen[s]) {
            Some(s) => Err(Error::InvalidValue(format!("state {s} is unreachable from the start set"))),
            None => Ok(()),
        }
    }

    /// Parses the line-oriented MDP corpus format (see [`TabularMdp::to_text`]).
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut n_states = None;
        let mut n_actions = None;
        let mut k = None;
        let mut gamma = None;
        let mut terminal_list = Vec::new();
        let mut start = Vec::new();
        let mut triples = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let one_usize = |rest: &[&str]| -> Result<usize> {
                match rest {
                    [v] => v.parse().map_err(|e| err(line_no, format!("{e}"))),
                    _ => Err(err(line_no, format!("`{key}` takes one value"))),
                }
            };
            let usizes = |rest: &[&str]| -> Result<Vec<usize>> {
                rest.iter()
                    .map(|v| v.parse().map_err(|e| err(line_no, format!("{e}"))))
                    .collect()
            };
            match key {
                "states" => n_states = Some(one_usize(&rest)?),
                "actions" => n_actions = Some(one_usize(&rest)?),
                "k" => k = Some(one_usize(&rest)?),
                "gamma" => match rest.as_slice() {
                    [v] => gamma = Some(v.parse::<f64>().map_err(|e| err(line_no, format!("{e}")))?),
                    _ => return Err(err(line_no, "`gamma` takes one value".into())),
                },
                "terminal" => terminal_list.extend(usizes(&rest)?),
                "start" => start.extend(usizes(&rest)?),
                "t" => {
                    if rest.len() < 5 {
                        return Err(err(line_no, "`t` needs s a s' p r_1..r_k".into()));
                    }
                    let idx = usizes(&rest[..3])?;
                    let nums: Vec<f64> = rest[3..]
                        .iter()
                        .map(|v| v.parse::<f64>().map_err(|e| err(line_no, format!("{e}"))))
                        .collect::<Result<_>>()?;
                    triples.push((line_no, idx[0], idx[1], idx[2], nums[0], nums[1..].to_vec()));
                }
                other => return Err(err(line_no, format!("unknown key `{other}`"))),
            }
        }
        let missing = |what: &str| err(0, format!("missing `{what}` line"));
        let n_states = n_states.ok_or_else(|| missing("states"))?;
        let n_actions = n_actions.ok_or_else(|| missing("actions"))?;
        let k = k.ok_or_else(|| missing("k"))?;
        let gamma = gamma.ok_or_else(|| missing("gamma"))?;
        let mut outcomes = vec![Vec::new(); n_states * n_actions];
        for (line_no, s, a, next, prob, reward) in triples {
            if s >= n_states || a >= n_actions {
                return Err(err(line_no, format!("state/action ({s},{a}) out of range")));
            }
            if reward.len() != k {
                return Err(err(line_no, format!("expected {k} reward components, got {}", reward.len())));
            }
            outcomes[s * n_actions + a].push(Outcome { next, prob, reward });
        }
        let mut terminal = vec![false; n_states];
        for s in terminal_list {
            if s >= n_states {
                return Err(err(0, format!("terminal state {s} out of range")));
            }
            terminal[s] = true;
        }
        Self::new(n_states, n_actions, k, gamma, outcomes, terminal, start)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Serializes to the corpus format:
    ///
    /// ```text
    /// # comments run to end of line
    /// states 2
    /// actions 1
    /// k 2
    /// gamma 0.9
    /// terminal 1          # zero or more lines
    /// start 0             # optional; defaults to all non-terminal states
    /// t 0 0 1 1.0 10 0    # t <s> <a> <s'> <p(s'|s,a)> <r_1> .. <r_k>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states {}", self.n_states);
        let _ = writeln!(out, "actions {}", self.n_actions);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "gamma {:?}", self.gamma);
        for s in (0..self.n_states).filter(|&s| self.terminal[s]) {
            let _ = writeln!(out, "terminal {s}");
        }
        let starts: Vec<String> = self.start.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "start {}", starts.join(" "));
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                for o in self.outcomes(s, a) {
                    let r: Vec<String> = o.reward.iter().map(|v| format!("{v:?}")).collect();
                    let _ = writeln!(out, "t {s} {a} {} {:?} {}", o.next, o.prob, r.join(" "));
                }
            }
        }
        out
    }
}

/// Parameters for [`random_mdp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomMdpSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub k: usize,
    pub gamma: f64,
    /// Successors per state-action pair (capped at `n_states`).
    pub branching: usize,
    /// Number of terminal states, taken from the end of the state range.
    pub n_terminal: usize,
    /// Rewards are drawn uniformly from `[-reward_scale, reward_scale]`.
    pub reward_scale: f64,
}

/// Draws a random MDP whose non-terminal states are all reachable from state 0.
///
/// Each state's first successor is drawn from a cycle through the non-terminal
/// states, which guarantees connectivity.
pub fn random_mdp(spec: &RandomMdpSpec, rng: &mut Rng) -> Result<TabularMdp> {
    let RandomMdpSpec {
        n_states,
        n_actions,
        k,
        gamma,
        branching,
        n_terminal,
        reward_scale,
    } = *spec;
    if n_terminal >= n_states {
        return Err(Error::InvalidValue("random MDP needs a non-terminal state".into()));
    }
    let live = n_states - n_terminal;
    let branching = branching.clamp(1, n_states);
    let mut outcomes = Vec::with_capacity(n_states * n_actions);
    for s in 0..n_states {
        for a in 0..n_actions {
            let mut nexts = Vec::with_capacity(branching);
            if a == 0 && s < live {
                nexts.push((s + 1) % live);
            }
            while nexts.len() < branching {
                let cand = rng.gen_range(0..n_states);
                if !nexts.contains(&cand) {
                    nexts.push(cand);
                }
            }
            let raw: Vec<f64> = nexts.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut probs: Vec<f64> = raw.iter().map(|w| w / total).collect();
            // Pin the sum to exactly one.
            let head: f64 = probs[1..].iter().sum();
            probs[0] = 1.0 - head;
            outcomes.push(
                nexts
                    .into_iter()
                    .zip(probs)
                    .map(|(next, prob)| Outcome {
                        next,
                        prob,
                        reward: (0..k).map(|_| rng.gen_range(-reward_scale..=reward_scale)).collect(),
                    })
                    .collect(),
            );
        }
    }
    let terminal = (0..n_states).map(|s| s >= live).collect();
    TabularMdp::new(n_states, n_actions, k, gamma, outcomes, terminal, Vec::new())
}
