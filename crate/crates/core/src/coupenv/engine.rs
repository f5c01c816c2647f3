use std::collections::VecDeque;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ActionKind, Move, Role, BAIT, CHALLENGE, COPIES_PER_ROLE, DECK_SIZE, LIE, WIN, WIN_REWARD};
use crate::rlcore::VectorReward;
use crate::{seeded_rng, Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameConfig {
    pub n_players: usize,
    /// Standard-rulebook 10-coin forced Coup. Off by default.
    pub forced_coup: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            n_players: 3,
            forced_coup: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSeat {
    pub coins: u32,
    pub hidden: Vec<Role>,
    pub revealed: Vec<Role>,
}

impl PlayerSeat {
    pub fn alive(&self) -> bool {
        !self.hidden.is_empty()
    }
}

/// Which seat must move next and what kind of decision it faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase", content = "seat")]
pub enum Phase {
    AwaitAction(usize),
    AwaitBlock(usize),
    AwaitChallengeOnAction(usize),
    AwaitChallengeOnBlock(usize),
    AwaitDiscard(usize),
    AwaitExchangeKeep(usize),
    GameOver(usize),
}

impl Phase {
    pub fn seat(self) -> usize {
        match self {
            Phase::AwaitAction(s)
            | Phase::AwaitBlock(s)
            | Phase::AwaitChallengeOnAction(s)
            | Phase::AwaitChallengeOnBlock(s)
            | Phase::AwaitDiscard(s)
            | Phase::AwaitExchangeKeep(s)
            | Phase::GameOver(s) => s,
        }
    }

    /// Index among the six decision phases; `None` once the game is over.
    pub fn ordinal(self) -> Option<usize> {
        Some(match self {
            Phase::AwaitAction(_) => 0,
            Phase::AwaitBlock(_) => 1,
            Phase::AwaitChallengeOnAction(_) => 2,
            Phase::AwaitChallengeOnBlock(_) => 3,
            Phase::AwaitDiscard(_) => 4,
            Phase::AwaitExchangeKeep(_) => 5,
            Phase::GameOver(_) => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum EventKind {
    Action { kind: ActionKind },
    Block,
    Challenge,
    Reveal,
    Discard,
    Exchange,
}

impl EventKind {
    pub fn ordinal(self) -> usize {
        match self {
            EventKind::Action { kind } => kind.index(),
            EventKind::Block => 7,
            EventKind::Challenge => 8,
            EventKind::Reveal => 9,
            EventKind::Discard => 10,
            EventKind::Exchange => 11,
        }
    }
}

/// Public record of something that happened. Coin changes are not logged
/// separately: they follow from the declared action and show in the seat state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEvent {
    pub actor: usize,
    #[serde(flatten)]
    pub kind: EventKind,
    pub role: Option<Role>,
    pub target: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveOutcome {
    /// Reward earned by each seat from this move.
    pub rewards: Vec<VectorReward>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Poll {
    Block,
    ChallengeAction,
    ChallengeBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Then {
    EndTurn,
    ActionChallenged { proceeds: bool },
    BlockChallenged { stands: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BlockClaim {
    pub seat: usize,
    pub role: Role,
    lie: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Exchange {
    pub pool: Vec<Role>,
    pub kept: Vec<Role>,
    pub need: usize,
}

/// In-flight turn context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Pending {
    pub actor: usize,
    pub kind: ActionKind,
    pub target: Option<usize>,
    action_lie: bool,
    pub block: Option<BlockClaim>,
    poll: Poll,
    queue: VecDeque<usize>,
    then: Option<Then>,
    pub exchange: Option<Exchange>,
}

#[derive(Debug, Clone)]
pub struct GameState {
    cfg: GameConfig,
    seats: Vec<PlayerSeat>,
    deck: Vec<Role>,
    turn: usize,
    turn_number: u32,
    phase: Phase,
    pending: Option<Pending>,
    history: Vec<GameEvent>,
    rng: Rng,
    ledger: Vec<[f64; 4]>,
}

pub fn new_game(n_players: usize, seed: u64) -> Result<GameState> {
    GameState::new(
        GameConfig {
            n_players,
            ..GameConfig::default()
        },
        seed,
    )
}

impl GameState {
    pub fn new(cfg: GameConfig, seed: u64) -> Result<Self> {
        let n = cfg.n_players;
        if !(2..=6).contains(&n) {
            return Err(Error::InvalidValue(format!("{n} players; Coup needs 2 to 6")));
        }
        let mut rng = seeded_rng(seed);
        let mut deck: Vec<Role> = Role::ALL
            .iter()
            .flat_map(|&r| std::iter::repeat(r).take(COPIES_PER_ROLE))
            .collect();
        deck.shuffle(&mut rng);
        let seats = (0..n)
            .map(|_| {
                let mut hidden = vec![deck.pop().unwrap(), deck.pop().unwrap()];
                hidden.sort();
                PlayerSeat {
                    coins: 2,
                    hidden,
                    revealed: Vec::new(),
                }
            })
            .collect();
        Ok(Self {
            cfg,
            seats,
            deck,
            turn: 0,
            turn_number: 0,
            phase: Phase::AwaitAction(0),
            pending: None,
            history: Vec::new(),
            rng,
            ledger: vec![[0.0; 4]; n],
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn n_players(&self) -> usize {
        self.seats.len()
    }

    pub fn seats(&self) -> &[PlayerSeat] {
        &self.seats
    }

    pub fn seat(&self, s: usize) -> &PlayerSeat {
        &self.seats[s]
    }

    pub fn deck(&self) -> &[Role] {
        &self.deck
    }

    pub fn turn(&self) -> usize {
        self.turn
    }

    /// Completed turns so far.
    pub fn turn_number(&self) -> u32 {
        self.turn_number
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn history(&self) -> &[GameEvent] {
        &self.history
    }

    pub(crate) fn pending(&self) -> Option<&Pending> {
        self.pending.as_ref()
    }

    pub fn winner(&self) -> Option<usize> {
        match self.phase {
            Phase::GameOver(w) => Some(w),
            _ => None,
        }
    }

    pub fn is_over(&self) -> bool {
        self.winner().is_some()
    }

    /// Seat that must move, if the game is still running.
    pub fn to_act(&self) -> Option<usize> {
        (!self.is_over()).then(|| self.phase.seat())
    }

    pub fn alive_count(&self) -> usize {
        self.seats.iter().filter(|s| s.alive()).count()
    }

    /// Cards currently in the exchange pool (drawn but not yet kept or returned).
    pub fn exchange_pool(&self) -> &[Role] {
        self.pending
            .as_ref()
            .and_then(|p| p.exchange.as_ref())
            .map(|x| x.pool.as_slice())
            .unwrap_or(&[])
    }

    /// Every card in the game: deck, hands, revealed, and any exchange in progress.
    pub fn card_count(&self) -> usize {
        let x = self
            .pending
            .as_ref()
            .and_then(|p| p.exchange.as_ref())
            .map_or(0, |x| x.pool.len() + x.kept.len());
        self.deck.len() + self.seats.iter().map(|s| s.hidden.len() + s.revealed.len()).sum::<usize>() + x
    }

    /// Checks the structural invariants; used by tests and debug builds.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidValue(m));
        if self.card_count() != DECK_SIZE {
            return bad(format!("{} cards in play", self.card_count()));
        }
        for r in Role::ALL {
            let c = self.deck.iter().chain(self.exchange_pool()).filter(|&&x| x == r).count()
                + self
                    .pending
                    .as_ref()
                    .and_then(|p| p.exchange.as_ref())
                    .map_or(0, |x| x.kept.iter().filter(|&&x| x == r).count())
                + self
                    .seats
                    .iter()
                    .map(|s| s.hidden.iter().chain(&s.revealed).filter(|&&x| x == r).count())
                    .sum::<usize>();
            if c != COPIES_PER_ROLE {
                return bad(format!("{c} copies of {r:?}"));
            }
        }
        let exchanging = matches!(self.phase, Phase::AwaitExchangeKeep(_));
        for (i, s) in self.seats.iter().enumerate() {
            let in_exchange = exchanging && self.phase.seat() == i;
            if !in_exchange && s.hidden.len() + s.revealed.len() != 2 {
                return bad(format!("seat {i} holds {} cards", s.hidden.len() + s.revealed.len()));
            }
        }
        if !self.is_over() && !self.seats[self.turn].alive() && self.pending.is_none() {
            return bad(format!("turn at dead seat {}", self.turn));
        }
        Ok(())
    }

    /// Living seats after `from` in clockwise order, excluding `from`.
    fn clockwise_from(&self, from: usize) -> VecDeque<usize> {
        let n = self.n_players();
        (1..n).map(|d| (from + d) % n).filter(|&s| self.seats[s].alive()).collect()
    }

    pub fn legal_moves(&self, seat: usize) -> Result<Vec<Move>> {
        if self.to_act() != Some(seat) {
            return Err(Error::OutOfPhase {
                seat,
                phase: format!("{:?}", self.phase),
            });
        }
        let me = &self.seats[seat];
        Ok(match self.phase {
            Phase::AwaitAction(_) => {
                let others: Vec<usize> = self.clockwise_from(seat).into_iter().collect();
                let coups = others.iter().map(|&t| Move::targeted(ActionKind::Coup, t));
                if self.cfg.forced_coup && me.coins >= 10 {
                    return Ok(coups.collect());
                }
                let mut v = vec![
                    Move::act(ActionKind::Income),
                    Move::act(ActionKind::ForeignAid),
                    Move::act(ActionKind::Tax),
                    Move::act(ActionKind::Exchange),
                ];
                v.extend(
                    others
                        .iter()
                        .filter(|&&t| self.seats[t].coins > 0)
                        .map(|&t| Move::targeted(ActionKind::Steal, t)),
                );
                if me.coins >= ActionKind::Assassinate.cost() {
                    v.extend(others.iter().map(|&t| Move::targeted(ActionKind::Assassinate, t)));
                }
                if me.coins >= ActionKind::Coup.cost() {
                    v.extend(coups);
                }
                v
            }
            Phase::AwaitBlock(_) => {
                let kind = self.pending.as_ref().expect("pending action").kind;
                let mut v: Vec<Move> = kind.blockers().iter().map(|&role| Move::Block { role }).collect();
                v.push(Move::Pass);
                v
            }
            Phase::AwaitChallengeOnAction(_) | Phase::AwaitChallengeOnBlock(_) => vec![Move::Challenge, Move::Pass],
            Phase::AwaitDiscard(_) => distinct(&me.hidden).into_iter().map(|role| Move::Discard { role }).collect(),
            Phase::AwaitExchangeKeep(_) => distinct(self.exchange_pool())
                .into_iter()
                .map(|role| Move::Keep { role })
                .collect(),
            Phase::GameOver(_) => unreachable!(),
        })
    }

    /// Advances the phase machine by one move and reports what each seat earned.
    pub fn apply_move(&mut self, seat: usize, mv: Move) -> Result<MoveOutcome> {
        let legal = self.legal_moves(seat)?;
        if !legal.contains(&mv) {
            return Err(Error::IllegalMove(format!("{mv:?} by seat {seat} in {:?}", self.phase)));
        }
        self.ledger.iter_mut().for_each(|r| *r = [0.0; 4]);
        match (self.phase, mv) {
            (Phase::AwaitAction(_), Move::Act { kind, target }) => self.declare(seat, kind, target),
            (Phase::AwaitBlock(_), Move::Block { role }) => self.block(seat, role),
            (Phase::AwaitChallengeOnAction(_), Move::Challenge) => {
                let p = self.pending.as_ref().expect("pending action");
                let (actor, role) = (p.actor, p.kind.claim().expect("challengeable action"));
                self.challenge(seat, actor, role, Then::ActionChallenged { proceeds: true }, Then::ActionChallenged { proceeds: false });
            }
            (Phase::AwaitChallengeOnBlock(_), Move::Challenge) => {
                let b = self.pending.as_ref().and_then(|p| p.block).expect("pending block");
                self.challenge(seat, b.seat, b.role, Then::BlockChallenged { stands: true }, Then::BlockChallenged { stands: false });
            }
            (_, Move::Pass) => self.next_in_poll(),
            (Phase::AwaitDiscard(_), Move::Discard { role }) => self.discard(seat, role),
            (Phase::AwaitExchangeKeep(_), Move::Keep { role }) => self.keep(role),
            _ => unreachable!("legal move in unexpected phase"),
        }
        let rewards = self
            .ledger
            .iter()
            .map(|r| VectorReward::new(r.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(MoveOutcome {
            rewards,
            terminal: self.is_over(),
        })
    }

    fn push_event(&mut self, actor: usize, kind: EventKind, role: Option<Role>, target: Option<usize>) {
        self.history.push(GameEvent {
            actor,
            kind,
            role,
            target,
        });
    }

    fn pend(&mut self) -> &mut Pending {
        self.pending.as_mut().expect("pending action")
    }

    fn declare(&mut self, actor: usize, kind: ActionKind, target: Option<usize>) {
        self.seats[actor].coins -= kind.cost();
        let action_lie = kind.claim().is_some_and(|r| !self.seats[actor].hidden.contains(&r));
        self.push_event(actor, EventKind::Action { kind }, kind.claim(), target);
        self.pending = Some(Pending {
            actor,
            kind,
            target,
            action_lie,
            block: None,
            poll: Poll::Block,
            queue: VecDeque::new(),
            then: None,
            exchange: None,
        });
        if kind.blockers().is_empty() {
            self.after_block_window();
        } else {
            self.open_poll(Poll::Block, actor);
        }
    }

    fn open_poll(&mut self, poll: Poll, from: usize) {
        let queue = self.clockwise_from(from);
        let p = self.pend();
        p.poll = poll;
        p.queue = queue;
        self.next_in_poll();
    }

    fn next_in_poll(&mut self) {
        let p = self.pend();
        let poll = p.poll;
        match p.queue.pop_front() {
            Some(s) => {
                self.phase = match poll {
                    Poll::Block => Phase::AwaitBlock(s),
                    Poll::ChallengeAction => Phase::AwaitChallengeOnAction(s),
                    Poll::ChallengeBlock => Phase::AwaitChallengeOnBlock(s),
                }
            }
            None => match poll {
                Poll::Block => self.after_block_window(),
                Poll::ChallengeAction => self.resolve_action(),
                Poll::ChallengeBlock => self.block_stands(),
            },
        }
    }

    /// No block was claimed (or the block failed): the action's own claim is open to challenge.
    fn after_block_window(&mut self) {
        let p = self.pend();
        let (actor, kind) = (p.actor, p.kind);
        if kind.claim().is_some() {
            self.open_poll(Poll::ChallengeAction, actor);
        } else {
            self.resolve_action();
        }
    }

    fn block(&mut self, seat: usize, role: Role) {
        let lie = !self.seats[seat].hidden.contains(&role);
        let actor = self.pend().actor;
        self.pend().block = Some(BlockClaim { seat, role, lie });
        self.push_event(seat, EventKind::Block, Some(role), Some(actor));
        self.open_poll(Poll::ChallengeBlock, seat);
    }

    fn block_stands(&mut self) {
        let b = self.pend().block.expect("pending block");
        if b.lie {
            self.ledger[b.seat][LIE] += 1.0;
        }
        self.end_turn();
    }

    fn challenge(&mut self, challenger: usize, claimant: usize, role: Role, honest: Then, caught: Then) {
        self.push_event(challenger, EventKind::Challenge, Some(role), Some(claimant));
        let hand = &mut self.seats[claimant].hidden;
        if let Some(i) = hand.iter().position(|&r| r == role) {
            hand.remove(i);
            self.push_event(claimant, EventKind::Reveal, Some(role), None);
            self.deck.push(role);
            self.deck.shuffle(&mut self.rng);
            let card = self.deck.pop().expect("deck holds the returned card");
            let hand = &mut self.seats[claimant].hidden;
            hand.push(card);
            hand.sort();
            self.ledger[claimant][BAIT] += 1.0;
            self.start_discard(challenger, honest);
        } else {
            self.ledger[challenger][CHALLENGE] += 1.0;
            self.start_discard(claimant, caught);
        }
    }

    fn start_discard(&mut self, seat: usize, then: Then) {
        self.pend().then = Some(then);
        self.phase = Phase::AwaitDiscard(seat);
    }

    fn discard(&mut self, seat: usize, role: Role) {
        let s = &mut self.seats[seat];
        let i = s.hidden.iter().position(|&r| r == role).expect("legal discard");
        s.hidden.remove(i);
        s.revealed.push(role);
        self.push_event(seat, EventKind::Discard, Some(role), None);
        if self.alive_count() == 1 {
            let w = self.seats.iter().position(PlayerSeat::alive).expect("one survivor");
            self.ledger[w][WIN] += WIN_REWARD;
            self.pending = None;
            self.phase = Phase::GameOver(w);
            return;
        }
        match self.pend().then.take().expect("discard continuation") {
            Then::EndTurn => self.end_turn(),
            Then::ActionChallenged { proceeds: true } => self.resolve_action(),
            Then::ActionChallenged { proceeds: false } => self.end_turn(),
            Then::BlockChallenged { stands: true } => self.block_stands(),
            Then::BlockChallenged { stands: false } => {
                let p = self.pend();
                let (actor, target) = (p.actor, p.target);
                p.block = None;
                let gone = |t: Option<usize>| t.is_some_and(|t| !self.seats[t].alive());
                if !self.seats[actor].alive() || gone(target) {
                    self.end_turn();
                } else {
                    self.after_block_window();
                }
            }
        }
    }

    /// Carries out the pending action; it has survived every block and challenge.
    fn resolve_action(&mut self) {
        let p = self.pend();
        let (actor, kind, target, lie) = (p.actor, p.kind, p.target, p.action_lie);
        if !self.seats[actor].alive() || target.is_some_and(|t| !self.seats[t].alive()) {
            self.end_turn();
            return;
        }
        if lie {
            self.ledger[actor][LIE] += 1.0;
        }
        match kind {
            ActionKind::Income => self.gain(actor, 1),
            ActionKind::ForeignAid => self.gain(actor, 2),
            ActionKind::Tax => self.gain(actor, 3),
            ActionKind::Steal => {
                let t = target.expect("steal target");
                let amount = self.seats[t].coins.min(2);
                self.seats[t].coins -= amount;
                self.gain(actor, amount);
            }
            ActionKind::Exchange => {
                let draw = self.deck.len().min(2);
                let mut pool = std::mem::take(&mut self.seats[actor].hidden);
                let need = pool.len();
                for _ in 0..draw {
                    pool.push(self.deck.pop().expect("counted"));
                }
                pool.sort();
                self.pend().exchange = Some(Exchange {
                    pool,
                    kept: Vec::new(),
                    need,
                });
                self.phase = Phase::AwaitExchangeKeep(actor);
            }
            ActionKind::Assassinate | ActionKind::Coup => {
                self.start_discard(target.expect("targeted action"), Then::EndTurn);
            }
        }
    }

    fn gain(&mut self, seat: usize, amount: u32) {
        self.seats[seat].coins += amount;
        self.end_turn();
    }

    fn keep(&mut self, role: Role) {
        let actor = self.pend().actor;
        let x = self.pend().exchange.as_mut().expect("exchange in progress");
        let i = x.pool.iter().position(|&r| r == role).expect("legal keep");
        x.kept.push(x.pool.remove(i));
        if x.kept.len() < x.need {
            return;
        }
        let mut x = self.pend().exchange.take().expect("exchange in progress");
        x.kept.sort();
        self.seats[actor].hidden = x.kept;
        self.deck.append(&mut x.pool);
        self.deck.shuffle(&mut self.rng);
        self.push_event(actor, EventKind::Exchange, None, None);
        self.end_turn();
    }

    fn end_turn(&mut self) {
        self.pending = None;
        self.turn_number += 1;
        let n = self.n_players();
        self.turn = (1..=n)
            .map(|d| (self.turn + d) % n)
            .find(|&s| self.seats[s].alive())
            .expect("at least two seats alive");
        self.phase = Phase::AwaitAction(self.turn);
    }
}

#[cfg(test)]
impl GameState {
    /// Swaps a seat's hidden card with the first deck card of `role`.
    pub(crate) fn swap_hidden_for_test(&mut self, seat: usize, i: usize, role: Role) {
        let d = self.deck.iter().position(|&r| r == role).expect("role in deck");
        std::mem::swap(&mut self.deck[d], &mut self.seats[seat].hidden[i]);
    }
}

fn distinct(roles: &[Role]) -> Vec<Role> {
    let mut v = roles.to_vec();
    v.sort();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Game with chosen hands; the remaining cards go to the deck in role order.
    pub(crate) fn rigged(hands: &[[Role; 2]], coins: &[u32]) -> GameState {
        let mut g = new_game(hands.len(), 0).unwrap();
        let mut deck: Vec<Role> = Role::ALL.iter().flat_map(|&r| [r; 3]).collect();
        for (s, h) in hands.iter().enumerate() {
            for r in h {
                let i = deck.iter().position(|x| x == r).unwrap();
                deck.remove(i);
            }
            let mut hidden = h.to_vec();
            hidden.sort();
            g.seats[s].hidden = hidden;
            g.seats[s].coins = coins[s];
        }
        g.deck = deck;
        g.check_invariants().unwrap();
        g
    }

    const DC: [Role; 2] = [Role::Duke, Role::Captain];
    const CA: [Role; 2] = [Role::Contessa, Role::Assassin];
    const AA: [Role; 2] = [Role::Ambassador, Role::Ambassador];

    fn reward(o: &MoveOutcome, seat: usize) -> Vec<f64> {
        o.rewards[seat].components().to_vec()
    }

    #[test]
    fn deal_sizes() {
        for (n, deck) in [(2, 11), (3, 9), (6, 3)] {
            let g = new_game(n, 7).unwrap();
            assert_eq!(g.deck().len(), deck);
            assert!(g.seats().iter().all(|s| s.coins == 2 && s.hidden.len() == 2));
            assert_eq!(g.phase(), Phase::AwaitAction(0));
            assert_eq!(g.turn(), 0);
        }
        assert!(new_game(1, 0).is_err());
        assert!(new_game(7, 0).is_err());
        assert_eq!(new_game(3, 42).unwrap().seats(), new_game(3, 42).unwrap().seats());
    }

    #[test]
    fn fresh_action_menu() {
        let g = rigged(&[CA, DC, AA], &[2, 2, 2]);
        let legal = g.legal_moves(0).unwrap();
        for k in [ActionKind::Income, ActionKind::ForeignAid, ActionKind::Tax, ActionKind::Exchange] {
            assert!(legal.contains(&Move::act(k)));
        }
        assert!(legal.contains(&Move::targeted(ActionKind::Steal, 1)));
        assert!(legal.iter().all(|m| !matches!(m, Move::Act { kind: ActionKind::Assassinate | ActionKind::Coup, .. })));
        assert!(matches!(g.legal_moves(1), Err(Error::OutOfPhase { seat: 1, .. })));
    }

    #[test]
    fn cannot_steal_from_empty_purse() {
        let g = rigged(&[CA, DC, AA], &[2, 0, 2]);
        let legal = g.legal_moves(0).unwrap();
        assert!(!legal.contains(&Move::targeted(ActionKind::Steal, 1)));
        assert!(legal.contains(&Move::targeted(ActionKind::Steal, 2)));
    }

    #[test]
    fn income_has_no_window() {
        let mut g = rigged(&[CA, DC, AA], &[2, 2, 2]);
        let o = g.apply_move(0, Move::act(ActionKind::Income)).unwrap();
        assert_eq!(g.seat(0).coins, 3);
        assert_eq!(g.phase(), Phase::AwaitAction(1));
        assert!(o.rewards.iter().all(|r| r.components().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn foreign_aid_polls_every_other_seat_for_a_duke_block() {
        let mut g = rigged(&[CA, DC, AA], &[2, 2, 2]);
        g.apply_move(0, Move::act(ActionKind::ForeignAid)).unwrap();
        for s in [1, 2] {
            assert_eq!(g.phase(), Phase::AwaitBlock(s));
            assert_eq!(g.legal_moves(s).unwrap(), vec![Move::Block { role: Role::Duke }, Move::Pass]);
            g.apply_move(s, Move::Pass).unwrap();
        }
        assert_eq!(g.seat(0).coins, 4);
        assert_eq!(g.phase(), Phase::AwaitAction(1));
    }

    #[test]
    fn coup_costs_seven_and_forces_a_discard() {
        let mut g = rigged(&[CA, DC, AA], &[7, 2, 2]);
        g.apply_move(0, Move::targeted(ActionKind::Coup, 2)).unwrap();
        assert_eq!(g.seat(0).coins, 0);
        assert_eq!(g.phase(), Phase::AwaitDiscard(2));
        g.apply_move(2, Move::Discard { role: Role::Ambassador }).unwrap();
        assert_eq!(g.seat(2).revealed, vec![Role::Ambassador]);
        assert_eq!(g.phase(), Phase::AwaitAction(1));
    }

    #[test]
    fn caught_tax_lie_pays_the_challenger() {
        let mut g = rigged(&[CA, DC, AA], &[2, 2, 2]);
        g.apply_move(0, Move::act(ActionKind::Tax)).unwrap();
        assert_eq!(g.phase(), Phase::AwaitChallengeOnAction(1));
        let o = g.apply_move(1, Move::Challenge).unwrap();
        assert_eq!(reward(&o, 1), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(g.phase(), Phase::AwaitDiscard(0));
        g.apply_move(0, Move::Discard { role: Role::Contessa }).unwrap();
        assert_eq!(g.seat(0).coins, 2);
        assert_eq!(g.seat(0).hidden, vec![Role::Assassin]);
        assert_eq!(g.phase(), Phase::AwaitAction(1));
    }

    #[test]
    fn honest_tax_challenged_pays_bait_and_reshuffles() {
        let mut g = rigged(&[DC, CA, AA], &[2, 2, 2]);
        g.apply_move(0, Move::act(ActionKind::Tax)).unwrap();
        let o = g.apply_move(1, Move::Challenge).unwrap();
        assert_eq!(reward(&o, 0), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(reward(&o, 1), vec![0.0; 4]);
        assert_eq!(g.seat(0).hidden.len(), 2);
        assert_eq!(g.phase(), Phase::AwaitDiscard(1));
        g.apply_move(1, Move::Discard { role: Role::Assassin }).unwrap();
        assert_eq!(g.seat(0).coins, 5);
        g.check_invariants().unwrap();
    }

    #[test]
    fn unchallenged_tax_lie_earns_lie_on_completion() {
        let mut g = rigged(&[CA, DC, AA], &[2, 2, 2]);
        g.apply_move(0, Move::act(ActionKind::Tax)).unwrap();
        g.apply_move(1, Move::Pass).unwrap();
        let o = g.apply_move(2, Move::Pass).unwrap();
        assert_eq!(g.seat(0).coins, 5);
        assert_eq!(reward(&o, 0), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn blocked_lie_earns_nothing_and_block_lie_does() {
        // seat 0 lies about Captain; seat 1 lies about Ambassador to block.
        let mut g = rigged(&[CA, DC, [Role::Contessa, Role::Contessa]], &[2, 2, 2]);
        g.apply_move(0, Move::targeted(ActionKind::Steal, 1)).unwrap();
        assert_eq!(g.phase(), Phase::AwaitBlock(1));
        g.apply_move(1, Move::Block { role: Role::Ambassador }).unwrap();
        assert_eq!(g.phase(), Phase::AwaitChallengeOnBlock(2));
        g.apply_move(2, Move::Pass).unwrap();
        let o = g.apply_move(0, Move::Pass).unwrap();
        assert_eq!(reward(&o, 1), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(reward(&o, 0), vec![0.0; 4]);
        assert_eq!((g.seat(0).coins, g.seat(1).coins), (2, 2));
    }

    #[test]
    fn steal_takes_what_is_there() {
        let mut g = rigged(&[DC, CA, AA], &[2, 1, 2]);
        g.apply_move(0, Move::targeted(ActionKind::Steal, 1)).unwrap();
        g.apply_move(1, Move::Pass).unwrap();
        g.apply_move(2, Move::Pass).unwrap();
        g.apply_move(1, Move::Pass).unwrap();
        g.apply_move(2, Move::Pass).unwrap();
        assert_eq!((g.seat(0).coins, g.seat(1).coins), (3, 0));
    }

    #[test]
    fn assassination_coins_are_spent_on_declaration() {
        let mut g = rigged(&[CA, [Role::Contessa, Role::Duke], AA], &[3, 2, 2]);
        g.apply_move(0, Move::targeted(ActionKind::Assassinate, 1)).unwrap();
        assert_eq!(g.seat(0).coins, 0);
        g.apply_move(1, Move::Block { role: Role::Contessa }).unwrap();
        g.apply_move(2, Move::Pass).unwrap();
        g.apply_move(0, Move::Pass).unwrap();
        assert_eq!(g.seat(0).coins, 0);
        assert_eq!(g.seat(1).hidden.len(), 2);
        assert_eq!(g.phase(), Phase::AwaitAction(1));
    }

    #[test]
    fn failed_contessa_bluff_then_assassination_eliminates() {
        // seat 1 has two lives, bluffs Contessa, is challenged, then assassinated.
        let mut g = rigged(&[CA, DC, AA], &[3, 2, 2]);
        g.apply_move(0, Move::targeted(ActionKind::Assassinate, 1)).unwrap();
        g.apply_move(1, Move::Block { role: Role::Contessa }).unwrap();
        g.apply_move(2, Move::Pass).unwrap();
        let o = g.apply_move(0, Move::Challenge).unwrap();
        assert_eq!(reward(&o, 0)[CHALLENGE], 1.0);
        assert_eq!(g.phase(), Phase::AwaitDiscard(1));
        g.apply_move(1, Move::Discard { role: Role::Duke }).unwrap();
        // the assassination's own claim is now open to challenge
        assert_eq!(g.phase(), Phase::AwaitChallengeOnAction(1));
        g.apply_move(1, Move::Pass).unwrap();
        g.apply_move(2, Move::Pass).unwrap();
        assert_eq!(g.phase(), Phase::AwaitDiscard(1));
        g.apply_move(1, Move::Discard { role: Role::Captain }).unwrap();
        assert!(!g.seat(1).alive());
        assert_eq!(g.phase(), Phase::AwaitAction(2));
    }

    #[test]
    fn failed_block_on_last_life_ends_the_assassination() {
        let mut g = rigged(&[CA, DC, AA], &[3, 2, 2]);
        g.seats[1].hidden = vec![Role::Duke];
        g.seats[1].revealed = vec![Role::Captain];
        g.apply_move(0, Move::targeted(ActionKind::Assassinate, 1)).unwrap();
        g.apply_move(1, Move::Block { role: Role::Contessa }).unwrap();
        g.apply_move(2, Move::Pass).unwrap();
        g.apply_move(0, Move::Challenge).unwrap();
        g.apply_move(1, Move::Discard { role: Role::Duke }).unwrap();
        assert_eq!(g.phase(), Phase::AwaitAction(2));
        assert_eq!(g.history().iter().filter(|e| e.kind == EventKind::Discard).count(), 1);
    }

    #[test]
    fn exchange_keeps_hand_size() {
        let mut g = rigged(&[AA, DC, CA], &[2, 2, 2]);
        g.apply_move(0, Move::act(ActionKind::Exchange)).unwrap();
        g.apply_move(1, Move::Pass).unwrap();
        g.apply_move(2, Move::Pass).unwrap();
        assert_eq!(g.phase(), Phase::AwaitExchangeKeep(0));
        assert_eq!(g.exchange_pool().len(), 4);
        g.check_invariants().unwrap();
        let first = g.exchange_pool()[0];
        g.apply_move(0, Move::Keep { role: first }).unwrap();
        let second = g.exchange_pool()[2];
        g.apply_move(0, Move::Keep { role: second }).unwrap();
        assert_eq!(g.seat(0).hidden.len(), 2);
        assert_eq!(g.deck().len(), 9);
        assert_eq!(g.phase(), Phase::AwaitAction(1));
        g.check_invariants().unwrap();
    }

    #[test]
    fn last_survivor_gets_the_win() {
        let mut g = rigged(&[CA, DC], &[7, 2]);
        g.seats[1].hidden = vec![Role::Duke];
        g.seats[1].revealed = vec![Role::Captain];
        g.apply_move(0, Move::targeted(ActionKind::Coup, 1)).unwrap();
        let o = g.apply_move(1, Move::Discard { role: Role::Duke }).unwrap();
        assert!(o.terminal);
        assert_eq!(g.winner(), Some(0));
        assert_eq!(reward(&o, 0), vec![10.0, 0.0, 0.0, 0.0]);
        assert!(g.apply_move(0, Move::act(ActionKind::Income)).is_err());
    }

    #[test]
    fn forced_coup_flag() {
        let mut g = rigged(&[CA, DC, AA], &[10, 2, 2]);
        assert!(g.legal_moves(0).unwrap().len() > 2);
        g.cfg.forced_coup = true;
        let legal = g.legal_moves(0).unwrap();
        assert!(legal.iter().all(|m| matches!(m, Move::Act { kind: ActionKind::Coup, .. })));
    }

    #[test]
    fn illegal_moves_are_rejected() {
        let mut g = rigged(&[CA, DC, AA], &[2, 2, 2]);
        let e = g.apply_move(0, Move::targeted(ActionKind::Coup, 1)).unwrap_err();
        assert!(matches!(e, Error::IllegalMove(_)));
        assert!(g.apply_move(0, Move::Challenge).is_err());
    }
}
