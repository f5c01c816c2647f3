use super::{LearnerEnv, StepOutcome};
use crate::nnapprox::{NetShape, Observation};
use crate::rlcore::VectorReward;
use crate::tabular::TabularMdp;
use crate::{seeded_rng, Error, Result, Rng};

/// A finite MDP exposed as a fully observable environment: the static
/// features are the one-hot state and the history is always empty.
#[derive(Debug, Clone)]
pub struct MdpEnv {
    mdp: TabularMdp,
    max_episode_len: u64,
    state: usize,
    t: u64,
    rng: Rng,
}

impl MdpEnv {
    pub fn new(mdp: TabularMdp, max_episode_len: u64) -> Result<Self> {
        if max_episode_len == 0 {
            return Err(Error::InvalidValue("episode length cap must be positive".into()));
        }
        Ok(Self {
            state: mdp.start_states()[0],
            mdp,
            max_episode_len,
            t: 0,
            rng: seeded_rng(0),
        })
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn observe(&self, s: usize) -> Observation {
        let mut x = vec![0.0; self.mdp.n_states()];
        x[s] = 1.0;
        Observation::new(x, 1)
    }
}

impl LearnerEnv for MdpEnv {
    fn shape(&self) -> NetShape {
        NetShape {
            static_dim: self.mdp.n_states(),
            event_dim: 1,
            n_actions: self.mdp.n_actions(),
            k: self.mdp.k(),
        }
    }

    fn reset(&mut self, seed: u64) -> Result<(Observation, Vec<usize>)> {
        self.rng = seeded_rng(seed);
        self.state = self.mdp.sample_start(&mut self.rng);
        self.t = 0;
        Ok((self.observe(self.state), Vec::new()))
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if action >= self.mdp.n_actions() {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                limit: self.mdp.n_actions(),
            });
        }
        let o = self.mdp.sample(self.state, action, &mut self.rng);
        let (next, reward) = (o.next, VectorReward::new(o.reward.clone())?);
        self.state = next;
        self.t += 1;
        let terminal = self.mdp.is_terminal(next);
        Ok(StepOutcome {
            reward,
            next_obs: self.observe(next),
            terminal,
            truncated: !terminal && self.t >= self.max_episode_len,
            next_legal: Vec::new(),
        })
    }
}
