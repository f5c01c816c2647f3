use rand::Rng as _;
use serde::Serialize;

use super::engine::{EventKind, GameConfig, GameState, Phase};
use super::{Move, WIN, WIN_REWARD};
use crate::{derive_seed, seeded_rng, Result};

/// Violation counts over a batch of random-policy games.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub games: u64,
    pub moves: u64,
    pub card_conservation: u64,
    pub negative_coins: u64,
    pub coin_delta: u64,
    pub winner: u64,
    pub challenge_discard: u64,
    pub replay: u64,
    /// Games that hit the move cap without a winner.
    pub unfinished: u64,
}

impl SoundnessReport {
    pub fn violations(&self) -> u64 {
        self.card_conservation
            + self.negative_coins
            + self.coin_delta
            + self.winner
            + self.challenge_discard
            + self.replay
            + self.unfinished
    }
}

const MOVE_CAP: usize = 20_000;

/// Plays `games` uniformly random games and checks every engine invariant after each move.
/// Every `replay_every`-th game is replayed from its seed and move list and compared.
pub fn random_game_soundness(cfg: GameConfig, games: u64, seed: u64, replay_every: u64) -> Result<SoundnessReport> {
    let mut rep = SoundnessReport {
        games,
        ..Default::default()
    };
    for g in 0..games {
        let game_seed = derive_seed(seed, g);
        let mut rng = seeded_rng(derive_seed(game_seed, 1));
        let mut state = GameState::new(cfg, game_seed)?;
        let mut script: Vec<(usize, Move)> = Vec::new();
        let mut wins = Vec::new();
        while let Some(seat) = state.to_act() {
            if script.len() >= MOVE_CAP {
                rep.unfinished += 1;
                break;
            }
            let legal = state.legal_moves(seat)?;
            let mv = legal[rng.gen_range(0..legal.len())];
            let coins_before: u32 = state.seats().iter().map(|s| s.coins).sum();
            let hidden_before: usize = state.seats().iter().map(|s| s.hidden.len()).sum();
            let out = state.apply_move(seat, mv)?;
            script.push((seat, mv));
            rep.moves += 1;
            if state.check_invariants().is_err() || state.card_count() != super::DECK_SIZE {
                rep.card_conservation += 1;
            }
            let coins_after: i64 = state.seats().iter().map(|s| s.coins as i64).sum();
            // coins are unsigned, so a would-be negative purse shows up as a wrapped, huge one
            if state.seats().iter().any(|s| s.coins > coins_before + 3) {
                rep.negative_coins += 1;
            }
            if ![0, 1, 2, 3, -3, -7].contains(&(coins_after - coins_before as i64)) {
                rep.coin_delta += 1;
            }
            if mv == Move::Challenge {
                rep.challenge_discard += check_challenge(&mut state, &mut rng, &mut script, hidden_before, &mut rep.moves, &mut wins)?;
            }
            wins.extend(out.rewards.iter().enumerate().filter(|(_, r)| r.components()[WIN] != 0.0).map(|(s, r)| (s, r.components()[WIN])));
        }
        if let Some(w) = state.winner() {
            let alive: Vec<usize> = (0..state.n_players()).filter(|&s| state.seat(s).alive()).collect();
            if alive != vec![w] || wins != vec![(w, WIN_REWARD)] {
                rep.winner += 1;
            }
        }
        if replay_every > 0 && g % replay_every == 0 {
            let mut again = GameState::new(cfg, game_seed)?;
            for (seat, mv) in &script {
                again.apply_move(*seat, *mv)?;
            }
            if again.seats() != state.seats() || again.history() != state.history() || again.deck() != state.deck() {
                rep.replay += 1;
            }
        }
    }
    Ok(rep)
}

/// After a challenge, exactly one seat is asked to discard; once it has, one
/// hidden card has left play. Plays that discard (randomly) and returns 1 on violation.
fn check_challenge(
    state: &mut GameState,
    rng: &mut crate::Rng,
    script: &mut Vec<(usize, Move)>,
    hidden_before: usize,
    moves: &mut u64,
    wins: &mut Vec<(usize, f64)>,
) -> Result<u64> {
    let Phase::AwaitDiscard(loser) = state.phase() else {
        return Ok(1);
    };
    let discards_before = state.history().iter().filter(|e| e.kind == EventKind::Discard).count();
    let legal = state.legal_moves(loser)?;
    let mv = legal[rng.gen_range(0..legal.len())];
    let out = state.apply_move(loser, mv)?;
    script.push((loser, mv));
    *moves += 1;
    wins.extend(out.rewards.iter().enumerate().filter(|(_, r)| r.components()[WIN] != 0.0).map(|(s, r)| (s, r.components()[WIN])));
    let hidden_after: usize = state.seats().iter().map(|s| s.hidden.len()).sum();
    let discards_after = state.history().iter().filter(|e| e.kind == EventKind::Discard).count();
    let exchange_started = matches!(state.phase(), Phase::AwaitExchangeKeep(_));
    // an exchange that starts right after the challenge moves the actor's hand into the pool
    let ok = state.check_invariants().is_ok()
        && discards_after == discards_before + 1 && (exchange_started || hidden_after + 1 == hidden_before);
    Ok(u64::from(!ok))
}
