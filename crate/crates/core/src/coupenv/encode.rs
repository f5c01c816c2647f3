use super::engine::{GameEvent, GameState};
use super::{ActionKind, Role};
use crate::nnapprox::Observation;

pub const N_PHASES: usize = 6;
pub const N_EVENT_KINDS: usize = 12;
const N_ROLES: usize = 5;

/// Per seat: coins, lives, revealed counts per role.
const SEAT_BLOCK: usize = 2 + N_ROLES;

/// Static feature count for an `n`-player table.
///
/// Layout: `n` seat blocks in seat-relative order (self first); own hidden
/// role counts; the decision context (phase, pending action kind, relative
/// actor, target and blocker, blocked-with role, own exchange pool counts and
/// cards still to keep).
pub fn static_dim(n: usize) -> usize {
    n * SEAT_BLOCK + N_ROLES + N_PHASES + ActionKind::ALL.len() + 3 * n + N_ROLES + N_ROLES + 1
}

/// Relative actor, event kind, claimed role, relative target.
pub fn event_dim(n: usize) -> usize {
    n + N_EVENT_KINDS + N_ROLES + n
}

fn rel(seat: usize, of: usize, n: usize) -> usize {
    (of + n - seat) % n
}

fn counts(roles: &[Role], out: &mut [f64]) {
    for r in roles {
        out[r.index()] += 1.0;
    }
}

pub fn encode_event(e: &GameEvent, seat: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; event_dim(n)];
    v[rel(seat, e.actor, n)] = 1.0;
    v[n + e.kind.ordinal()] = 1.0;
    if let Some(r) = e.role {
        v[n + N_EVENT_KINDS + r.index()] = 1.0;
    }
    if let Some(t) = e.target {
        v[n + N_EVENT_KINDS + N_ROLES + rel(seat, t, n)] = 1.0;
    }
    v
}

/// What `seat` may see: public seat state, its own hand and the decision it faces.
pub fn encode_observation(state: &GameState, seat: usize) -> Observation {
    let n = state.n_players();
    let mut x = vec![0.0; static_dim(n)];
    for d in 0..n {
        let s = state.seat((seat + d) % n);
        let b = d * SEAT_BLOCK;
        x[b] = s.coins as f64;
        x[b + 1] = s.hidden.len() as f64;
        counts(&s.revealed, &mut x[b + 2..b + SEAT_BLOCK]);
    }
    let mut o = n * SEAT_BLOCK;
    counts(&state.seat(seat).hidden, &mut x[o..o + N_ROLES]);
    o += N_ROLES;
    if let Some(p) = state.phase().ordinal() {
        x[o + p] = 1.0;
    }
    o += N_PHASES;
    if let Some(p) = state.pending() {
        x[o + p.kind.index()] = 1.0;
        let c = o + ActionKind::ALL.len();
        x[c + rel(seat, p.actor, n)] = 1.0;
        if let Some(t) = p.target {
            x[c + n + rel(seat, t, n)] = 1.0;
        }
        if let Some(b) = p.block {
            x[c + 2 * n + rel(seat, b.seat, n)] = 1.0;
            x[c + 3 * n + b.role.index()] = 1.0;
        }
        if let Some(ex) = p.exchange.as_ref().filter(|_| p.actor == seat) {
            let e = c + 3 * n + N_ROLES;
            counts(&ex.pool, &mut x[e..e + N_ROLES]);
            x[e + N_ROLES] = (ex.need - ex.kept.len()) as f64;
        }
    }
    let ed = event_dim(n);
    let mut obs = Observation::new(x, ed);
    for e in state.history() {
        obs.push_event(&encode_event(e, seat, n)).expect("event width");
    }
    obs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupenv::{new_game, ActionKind, Move};

    #[test]
    fn fresh_three_player_encoding() {
        let g = new_game(3, 1).unwrap();
        let obs = encode_observation(&g, 0);
        let x = obs.static_features();
        assert_eq!(x.len(), static_dim(3));
        for d in 0..3 {
            assert_eq!(x[d * SEAT_BLOCK], 2.0);
            assert_eq!(x[d * SEAT_BLOCK + 1], 2.0);
            assert!(x[d * SEAT_BLOCK + 2..(d + 1) * SEAT_BLOCK].iter().all(|&v| v == 0.0));
        }
        let own: f64 = x[3 * SEAT_BLOCK..3 * SEAT_BLOCK + N_ROLES].iter().sum();
        assert_eq!(own, 2.0);
        assert_eq!(obs.history_len(), 0);
    }

    #[test]
    fn opponent_hands_are_invisible() {
        let g = new_game(3, 5).unwrap();
        let mut h = g.clone();
        // swap an opponent's hidden card with a deck card of another role
        let opp = h.seat(1).hidden[0];
        let replacement = *h.deck().iter().find(|&&r| r != opp).unwrap();
        h.swap_hidden_for_test(1, 0, replacement);
        assert_ne!(g.seat(1).hidden, h.seat(1).hidden);
        assert_eq!(encode_observation(&g, 0), encode_observation(&h, 0));
        assert_ne!(encode_observation(&g, 1), encode_observation(&h, 1));
    }

    #[test]
    fn history_tracks_events() {
        let mut g = new_game(3, 2).unwrap();
        g.apply_move(0, Move::act(ActionKind::Tax)).unwrap();
        g.apply_move(1, Move::Pass).unwrap();
        let obs = encode_observation(&g, 2);
        assert_eq!(obs.history_len(), g.history().len());
        assert_eq!(obs.static_features().len(), static_dim(3));
        // seat 2 sees actor 0 at relative offset 1
        let e = obs.event(0);
        assert_eq!(e[1], 1.0);
        assert_eq!(e[3 + ActionKind::Tax.index()], 1.0);
        assert_eq!(e[3 + N_EVENT_KINDS + Role::Duke.index()], 1.0);
    }
}
