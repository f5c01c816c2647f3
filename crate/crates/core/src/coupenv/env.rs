use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::encode::{encode_observation, event_dim, static_dim};
use super::engine::{GameConfig, GameState};
use super::log::MoveRecord;
use super::{is_lie, ActionSpace, Role};
use crate::maskdqn::{LearnerEnv, StepOutcome};
use crate::nnapprox::{forward_flat, NetShape, NetworkParams, Observation};
use crate::rlcore::{masked_argmax_flat, StrategyMask, VectorReward, COUP_DIMENSIONS};
use crate::{derive_seed, seeded_rng, Error, Result, Rng};

/// How a non-learner seat picks its moves.
#[derive(Debug, Clone)]
pub enum SeatPolicy {
    /// Uniform over legal moves.
    Random,
    /// Masked argmax of a frozen network.
    Greedy { params: Arc<NetworkParams>, mask: StrategyMask },
}

impl SeatPolicy {
    pub fn choose(&self, state: &GameState, seat: usize, legal: &[usize], rng: &mut Rng) -> Result<usize> {
        match self {
            SeatPolicy::Random => Ok(legal[rng.gen_range(0..legal.len())]),
            SeatPolicy::Greedy { params, mask } => {
                let q = forward_flat(params, &encode_observation(state, seat))?;
                masked_argmax_flat(&q, params.shape().k, mask.weights(), Some(legal))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoupEnvConfig {
    pub game: GameConfig,
    /// Games still running after this many turns end with no winner.
    pub max_turns: u32,
    /// Fixed learner seat; random per episode when absent.
    pub learner_seat: Option<usize>,
}

impl Default for CoupEnvConfig {
    fn default() -> Self {
        Self {
            game: GameConfig::default(),
            max_turns: 100,
            learner_seat: None,
        }
    }
}

/// Snapshot of the learner's pending decision.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerDecision {
    pub turn: u32,
    pub seat: usize,
    pub hand: Vec<Role>,
    pub legal: Vec<usize>,
}

/// One learner against `n − 1` fixed seat policies. A learner step runs
/// everything up to the learner's next real choice; moves with a single
/// legal option are played automatically.
#[derive(Debug, Clone)]
pub struct CoupEnv {
    cfg: CoupEnvConfig,
    space: ActionSpace,
    opponents: Vec<SeatPolicy>,
    state: GameState,
    learner: usize,
    legal: Vec<usize>,
    rng: Rng,
    game_id: u64,
    recording: bool,
    moves: Vec<MoveRecord>,
}

enum Status {
    Decision,
    Over,
}

impl CoupEnv {
    pub fn new(cfg: CoupEnvConfig) -> Result<Self> {
        let n = cfg.game.n_players;
        let space = ActionSpace::new(n)?;
        if cfg.max_turns == 0 {
            return Err(Error::InvalidValue("max_turns must be positive".into()));
        }
        if let Some(s) = cfg.learner_seat.filter(|&s| s >= n) {
            return Err(Error::IndexOutOfRange {
                what: "learner seat",
                index: s,
                limit: n,
            });
        }
        Ok(Self {
            space,
            opponents: vec![SeatPolicy::Random; n - 1],
            state: GameState::new(cfg.game, 0)?,
            learner: 0,
            legal: Vec::new(),
            rng: seeded_rng(0),
            game_id: 0,
            recording: false,
            moves: Vec::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &CoupEnvConfig {
        &self.cfg
    }

    pub fn action_space(&self) -> ActionSpace {
        self.space
    }

    /// Opponents in clockwise order starting after the learner.
    pub fn set_opponents(&mut self, opponents: Vec<SeatPolicy>) -> Result<()> {
        if opponents.len() != self.cfg.game.n_players - 1 {
            return Err(Error::LengthMismatch {
                expected: self.cfg.game.n_players - 1,
                actual: opponents.len(),
            });
        }
        self.opponents = opponents;
        Ok(())
    }

    pub fn opponents(&self) -> &[SeatPolicy] {
        &self.opponents
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn learner_seat(&self) -> usize {
        self.learner
    }

    /// Seed of the game in progress.
    pub fn game_id(&self) -> u64 {
        self.game_id
    }

    pub fn decision(&self) -> LearnerDecision {
        LearnerDecision {
            turn: self.state.turn_number(),
            seat: self.learner,
            hand: self.state.seat(self.learner).hidden.clone(),
            legal: self.legal.clone(),
        }
    }

    /// Whether the learner's action `index` would claim a role it does not hold.
    pub fn is_lie_index(&self, index: usize) -> Result<bool> {
        let mv = self.space.move_at(index, self.learner)?;
        Ok(is_lie(&mv, &self.state.seat(self.learner).hidden))
    }

    /// Keep a [`MoveRecord`] for every move applied from now on.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    pub fn take_moves(&mut self) -> Vec<MoveRecord> {
        std::mem::take(&mut self.moves)
    }

    fn legal_indices(&self, seat: usize) -> Result<Vec<usize>> {
        let mut v: Vec<usize> = self
            .state
            .legal_moves(seat)?
            .iter()
            .map(|m| self.space.index_of(m, seat))
            .collect();
        v.sort_unstable();
        Ok(v)
    }

    fn apply(&mut self, seat: usize, index: usize, acc: &mut [f64]) -> Result<()> {
        let mv = self.space.move_at(index, seat)?;
        let lie = is_lie(&mv, &self.state.seat(seat).hidden);
        let turn = self.state.turn_number();
        let out = self.state.apply_move(seat, mv)?;
        for (a, r) in acc.iter_mut().zip(out.rewards[self.learner].components()) {
            *a += r;
        }
        if self.recording {
            self.moves.push(MoveRecord::new(self.game_id, turn, seat, &mv, lie, &out.rewards));
        }
        Ok(())
    }

    /// Plays other seats and forced learner moves until the learner has a choice or the episode ends.
    fn advance(&mut self, acc: &mut [f64]) -> Result<Status> {
        loop {
            if self.state.is_over()
                || !self.state.seat(self.learner).alive()
                || self.state.turn_number() >= self.cfg.max_turns
            {
                self.legal.clear();
                return Ok(Status::Over);
            }
            let seat = self.state.to_act().expect("game running");
            let legal = self.legal_indices(seat)?;
            if seat == self.learner {
                if legal.len() > 1 {
                    self.legal = legal;
                    return Ok(Status::Decision);
                }
                self.apply(seat, legal[0], acc)?;
                continue;
            }
            let n = self.cfg.game.n_players;
            let slot = (seat + n - self.learner) % n - 1;
            let choice = if legal.len() == 1 {
                legal[0]
            } else {
                self.opponents[slot].choose(&self.state, seat, &legal, &mut self.rng)?
            };
            self.apply(seat, choice, acc)?;
        }
    }

    fn observe(&self) -> Observation {
        encode_observation(&self.state, self.learner)
    }
}

impl LearnerEnv for CoupEnv {
    fn shape(&self) -> NetShape {
        let n = self.cfg.game.n_players;
        NetShape {
            static_dim: static_dim(n),
            event_dim: event_dim(n),
            n_actions: self.space.len(),
            k: COUP_DIMENSIONS.len(),
        }
    }

    fn reset(&mut self, seed: u64) -> Result<(Observation, Vec<usize>)> {
        let n = self.cfg.game.n_players;
        for attempt in 0..64 {
            let game_seed = if attempt == 0 { seed } else { derive_seed(seed, attempt) };
            self.game_id = game_seed;
            self.state = GameState::new(self.cfg.game, game_seed)?;
            self.rng = seeded_rng(derive_seed(game_seed, 0x5EA7));
            self.learner = self.cfg.learner_seat.unwrap_or_else(|| self.rng.gen_range(0..n));
            self.moves.clear();
            let mut acc = [0.0; 4];
            if let Status::Decision = self.advance(&mut acc)? {
                return Ok((self.observe(), self.legal.clone()));
            }
        }
        Err(Error::InvalidValue("learner never reached a decision".into()))
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.legal.binary_search(&action).is_err() {
            return Err(Error::IllegalMove(format!(
                "action {action} ({}) not in {:?}",
                self.space.label(action),
                self.legal
            )));
        }
        let mut acc = [0.0; 4];
        self.apply(self.learner, action, &mut acc)?;
        let status = self.advance(&mut acc)?;
        Ok(StepOutcome {
            reward: VectorReward::new(acc.to_vec())?,
            next_obs: self.observe(),
            // the turn cap is a rule of this variant, so it ends the episode outright
            terminal: matches!(status, Status::Over),
            truncated: false,
            next_legal: self.legal.clone(),
        })
    }

    fn won(&self) -> Option<bool> {
        Some(self.state.winner() == Some(self.learner))
    }
}
