//! Coup rules engine with decomposed rewards (Win, Challenge, Lie, Bait),
//! seat-relative observation encoding and a single-learner environment.

mod encode;
mod engine;
mod env;
mod log;
mod soundness;

pub use encode::{encode_event, encode_observation, event_dim, static_dim, N_EVENT_KINDS, N_PHASES};
pub use engine::{new_game, EventKind, GameConfig, GameEvent, GameState, MoveOutcome, Phase, PlayerSeat};
pub use env::{CoupEnv, CoupEnvConfig, LearnerDecision, SeatPolicy};
pub use soundness::{random_game_soundness, SoundnessReport};
pub use log::{read_log, write_log, DecisionRecord, LogHeader, LogRecord, MoveRecord, LOG_SCHEMA, LOG_VERSION};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reward dimension indices.
pub const WIN: usize = 0;
pub const CHALLENGE: usize = 1;
pub const LIE: usize = 2;
pub const BAIT: usize = 3;
pub const WIN_REWARD: f64 = 10.0;

pub const COPIES_PER_ROLE: usize = 3;
pub const DECK_SIZE: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Duke,
    Ambassador,
    Captain,
    Contessa,
    Assassin,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Duke, Role::Ambassador, Role::Captain, Role::Contessa, Role::Assassin];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Income,
    ForeignAid,
    Tax,
    Exchange,
    Steal,
    Assassinate,
    Coup,
}

impl ActionKind {
    pub const ALL: [ActionKind; 7] = [
        ActionKind::Income,
        ActionKind::ForeignAid,
        ActionKind::Tax,
        ActionKind::Exchange,
        ActionKind::Steal,
        ActionKind::Assassinate,
        ActionKind::Coup,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Role the actor claims by declaring this action.
    pub fn claim(self) -> Option<Role> {
        match self {
            ActionKind::Tax => Some(Role::Duke),
            ActionKind::Exchange => Some(Role::Ambassador),
            ActionKind::Steal => Some(Role::Captain),
            ActionKind::Assassinate => Some(Role::Assassin),
            ActionKind::Income | ActionKind::ForeignAid | ActionKind::Coup => None,
        }
    }

    /// Roles that may be claimed to block this action.
    pub fn blockers(self) -> &'static [Role] {
        match self {
            ActionKind::ForeignAid => &[Role::Duke],
            ActionKind::Steal => &[Role::Captain, Role::Ambassador],
            ActionKind::Assassinate => &[Role::Contessa],
            _ => &[],
        }
    }

    pub fn targeted(self) -> bool {
        matches!(self, ActionKind::Steal | ActionKind::Assassinate | ActionKind::Coup)
    }

    pub fn cost(self) -> u32 {
        match self {
            ActionKind::Coup => 7,
            ActionKind::Assassinate => 3,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Income => "income",
            ActionKind::ForeignAid => "foreign_aid",
            ActionKind::Tax => "tax",
            ActionKind::Exchange => "exchange",
            ActionKind::Steal => "steal",
            ActionKind::Assassinate => "assassinate",
            ActionKind::Coup => "coup",
        }
    }
}

/// A move by one seat. Targets are absolute seat indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "move")]
pub enum Move {
    Act { kind: ActionKind, target: Option<usize> },
    Block { role: Role },
    Challenge,
    Pass,
    Discard { role: Role },
    Keep { role: Role },
}

impl Move {
    pub fn act(kind: ActionKind) -> Self {
        Move::Act { kind, target: None }
    }

    pub fn targeted(kind: ActionKind, target: usize) -> Self {
        Move::Act {
            kind,
            target: Some(target),
        }
    }

    /// Role claimed by this move, if any.
    pub fn claim(&self) -> Option<Role> {
        match *self {
            Move::Act { kind, .. } => kind.claim(),
            Move::Block { role } => Some(role),
            _ => None,
        }
    }

    /// Coarse label used for histograms: the action kind, `block_<role>`, or the move name.
    pub fn type_name(&self) -> String {
        match *self {
            Move::Act { kind, .. } => kind.name().to_string(),
            Move::Block { role } => format!("block_{}", role_name(role)),
            Move::Challenge => "challenge".into(),
            Move::Pass => "pass".into(),
            Move::Discard { .. } => "discard".into(),
            Move::Keep { .. } => "keep".into(),
        }
    }
}

pub fn role_name(role: Role) -> &'static str {
    match role {
        Role::Duke => "duke",
        Role::Ambassador => "ambassador",
        Role::Captain => "captain",
        Role::Contessa => "contessa",
        Role::Assassin => "assassin",
    }
}

/// True iff `mv` claims a role that is not in `hand`. Non-claims are never lies.
pub fn is_lie(mv: &Move, hand: &[Role]) -> bool {
    mv.claim().is_some_and(|r| !hand.contains(&r))
}

/// Fixed, seat-relative indexing of every move for an `n`-player table.
///
/// Layout: income, foreign aid, tax, exchange; steal/assassinate/coup for
/// each relative target offset 1..n; the four block claims; challenge, pass;
/// discard per role; keep per role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    n_players: usize,
}

const BLOCK_ROLES: [Role; 4] = [Role::Duke, Role::Captain, Role::Ambassador, Role::Contessa];

impl ActionSpace {
    pub fn new(n_players: usize) -> Result<Self> {
        if !(2..=6).contains(&n_players) {
            return Err(Error::InvalidValue(format!("{n_players} players; Coup needs 2 to 6")));
        }
        Ok(Self { n_players })
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn len(&self) -> usize {
        17 + 3 * self.n_players
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn targeted_base(&self, kind: ActionKind) -> usize {
        let span = self.n_players - 1;
        4 + span
            * match kind {
                ActionKind::Steal => 0,
                ActionKind::Assassinate => 1,
                _ => 2,
            }
    }

    fn tail(&self) -> usize {
        4 + 3 * (self.n_players - 1)
    }

    pub fn index_of(&self, mv: &Move, seat: usize) -> usize {
        let n = self.n_players;
        match *mv {
            Move::Act { kind, target } => match (kind, target) {
                (ActionKind::Income, _) => 0,
                (ActionKind::ForeignAid, _) => 1,
                (ActionKind::Tax, _) => 2,
                (ActionKind::Exchange, _) => 3,
                (k, Some(t)) => self.targeted_base(k) + (t + n - seat) % n - 1,
                (_, None) => unreachable!("targeted action without a target"),
            },
            Move::Block { role } => self.tail() + BLOCK_ROLES.iter().position(|&r| r == role).expect("blockable role"),
            Move::Challenge => self.tail() + 4,
            Move::Pass => self.tail() + 5,
            Move::Discard { role } => self.tail() + 6 + role.index(),
            Move::Keep { role } => self.tail() + 11 + role.index(),
        }
    }

    pub fn move_at(&self, index: usize, seat: usize) -> Result<Move> {
        let n = self.n_players;
        if index >= self.len() {
            return Err(Error::IndexOutOfRange {
                what: "action index",
                index,
                limit: self.len(),
            });
        }
        let tail = self.tail();
        Ok(match index {
            0 => Move::act(ActionKind::Income),
            1 => Move::act(ActionKind::ForeignAid),
            2 => Move::act(ActionKind::Tax),
            3 => Move::act(ActionKind::Exchange),
            i if i < tail => {
                let j = i - 4;
                let kind = [ActionKind::Steal, ActionKind::Assassinate, ActionKind::Coup][j / (n - 1)];
                Move::targeted(kind, (seat + 1 + j % (n - 1)) % n)
            }
            i if i < tail + 4 => Move::Block {
                role: BLOCK_ROLES[i - tail],
            },
            i if i == tail + 4 => Move::Challenge,
            i if i == tail + 5 => Move::Pass,
            i if i < tail + 11 => Move::Discard {
                role: Role::ALL[i - tail - 6],
            },
            i => Move::Keep {
                role: Role::ALL[i - tail - 11],
            },
        })
    }

    /// Human-readable label for an index (targets shown as relative offsets).
    pub fn label(&self, index: usize) -> String {
        match self.move_at(index, 0) {
            Ok(Move::Act {
                kind,
                target: Some(t),
            }) => format!("{}+{t}", kind.name()),
            Ok(Move::Discard { role }) => format!("discard_{}", role_name(role)),
            Ok(Move::Keep { role }) => format!("keep_{}", role_name(role)),
            Ok(m) => m.type_name(),
            Err(_) => "?".into(),
        }
    }
}
