//! Evaluation against a frozen league, counterfactual action histograms
//! under alternative masks, and lie-weight sweeps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coupenv::{is_lie, ActionKind, ActionSpace, CoupEnv, CoupEnvConfig, DecisionRecord, LogRecord, Move};
use crate::league::{pfsp_sample_opponents, priority_refresh_games, LeagueRoster, Opponent, PfspConfig, WinRateTracker};
use crate::maskdqn::LearnerEnv;
use crate::nnapprox::{forward_flat, NetworkParams};
use crate::rlcore::{masked_argmax_flat, StrategyMask, COUP_DIMENSIONS};
use crate::{derive_seed, seeded_rng, Error, Result};

/// Learner moves bucketed by type and whether they claimed an unheld role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionCount {
    pub action_type: String,
    pub is_lie: bool,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub games: u64,
    pub wins: u64,
    /// Games stopped by the turn cap.
    pub draws: u64,
    pub win_rate: f64,
    pub dimensions: Vec<String>,
    pub totals: Vec<f64>,
    /// Percent of the summed reward per dimension; all zero when nothing was collected.
    pub shares_pct: Vec<f64>,
    pub actions: Vec<ActionCount>,
    /// Declared actions plus block claims.
    pub claim_moves: u64,
    pub lie_moves: u64,
    pub lie_fraction: f64,
}

pub fn reward_shares(totals: &[f64]) -> Vec<f64> {
    let sum: f64 = totals.iter().sum();
    if sum <= 0.0 {
        return vec![0.0; totals.len()];
    }
    totals.iter().map(|t| 100.0 * t / sum).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub games: u64,
    pub seed: u64,
    pub env: CoupEnvConfig,
    /// Keep a [`DecisionRecord`] for every learner decision (and every move).
    pub record: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            games: 5000,
            seed: 0,
            env: CoupEnvConfig::default(),
            record: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub report: EvalReport,
    pub log: Vec<LogRecord>,
}

fn bucket(mv: &Move, hand: &[crate::coupenv::Role]) -> (String, bool) {
    (mv.type_name(), is_lie(mv, hand))
}

fn counts_from(map: BTreeMap<(String, bool), u64>) -> Vec<ActionCount> {
    map.into_iter()
        .map(|((action_type, is_lie), count)| ActionCount {
            action_type,
            is_lie,
            count,
        })
        .collect()
}

/// Greedy play against league opponents drawn by PFSP with the tracker held
/// fixed and no self-play slots. Game `g` uses seed `derive_seed(seed, g)`.
pub fn eval_against_league(
    params: &NetworkParams,
    roster: &LeagueRoster,
    tracker: &WinRateTracker,
    pfsp: &PfspConfig,
    mask: &StrategyMask,
    cfg: &EvalConfig,
) -> Result<EvalOutput> {
    if roster.is_empty() {
        return Err(Error::InvalidValue("evaluation needs a nonempty league".into()));
    }
    let mut tracker = tracker.clone();
    roster.ids().into_iter().for_each(|id| tracker.register(id));
    let league_only = PfspConfig { p: 0.0, ..*pfsp };
    let mut env = CoupEnv::new(cfg.env)?;
    if env.shape() != params.shape() {
        return Err(Error::Shape(format!("network {:?} vs environment {:?}", params.shape(), env.shape())));
    }
    env.set_recording(cfg.record);
    let space = env.action_space();
    let k = COUP_DIMENSIONS.len();
    let mut totals = vec![0.0; k];
    let (mut wins, mut draws) = (0, 0);
    let mut actions: BTreeMap<(String, bool), u64> = BTreeMap::new();
    let mut log = Vec::new();
    for g in 0..cfg.games {
        let game_seed = derive_seed(cfg.seed, g);
        let mut rng = seeded_rng(derive_seed(game_seed, 7));
        let picks = pfsp_sample_opponents(roster, &tracker, &league_only, cfg.env.game.n_players - 1, &mut rng)?;
        let seats = picks
            .iter()
            .map(|p| match p {
                Opponent::Entry(id) => Ok(roster.get(*id)?.policy()),
                Opponent::LearnerCopy => unreachable!("p = 0"),
            })
            .collect::<Result<Vec<_>>>()?;
        env.set_opponents(seats)?;
        let (mut obs, mut legal) = env.reset(game_seed)?;
        loop {
            let q = forward_flat(params, &obs)?;
            let a = masked_argmax_flat(&q, k, mask.weights(), Some(&legal))?;
            let d = env.decision();
            let mv = space.move_at(a, d.seat)?;
            *actions.entry(bucket(&mv, &d.hand)).or_default() += 1;
            if cfg.record {
                log.extend(env.take_moves().into_iter().map(LogRecord::Move));
                log.push(LogRecord::Decision(DecisionRecord {
                    game: env.game_id(),
                    turn: d.turn,
                    seat: d.seat,
                    hand: d.hand,
                    legal: d.legal,
                    action: a,
                    obs,
                }));
            }
            let o = env.step(a)?;
            for (t, r) in totals.iter_mut().zip(o.reward.components()) {
                *t += r;
            }
            if o.terminal || o.truncated {
                break;
            }
            obs = o.next_obs;
            legal = o.next_legal;
        }
        if cfg.record {
            log.extend(env.take_moves().into_iter().map(LogRecord::Move));
        }
        match env.state().winner() {
            Some(w) if w == env.learner_seat() => wins += 1,
            None if env.state().seat(env.learner_seat()).alive() => draws += 1,
            _ => {}
        }
    }
    let actions = counts_from(actions);
    let (claim_moves, lie_moves) = lie_counts(&actions);
    let report = EvalReport {
        games: cfg.games,
        wins,
        draws,
        win_rate: if cfg.games == 0 { 0.0 } else { wins as f64 / cfg.games as f64 },
        dimensions: COUP_DIMENSIONS.iter().map(|s| s.to_string()).collect(),
        shares_pct: reward_shares(&totals),
        totals,
        actions,
        claim_moves,
        lie_moves,
        lie_fraction: if claim_moves == 0 { 0.0 } else { lie_moves as f64 / claim_moves as f64 },
    };
    Ok(EvalOutput { report, log })
}

/// (declared actions + block claims, lies among them).
fn lie_counts(actions: &[ActionCount]) -> (u64, u64) {
    let is_claim_type = |t: &str| t.starts_with("block_") || ActionKind::ALL.iter().any(|k| k.name() == t);
    let claims: Vec<&ActionCount> = actions.iter().filter(|c| is_claim_type(&c.action_type)).collect();
    (
        claims.iter().map(|c| c.count).sum(),
        claims.iter().filter(|c| c.is_lie).map(|c| c.count).sum(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HistogramRow {
    pub mask_id: String,
    pub action_type: String,
    pub is_lie: bool,
    pub count: u64,
}

fn decisions(log: &[LogRecord]) -> impl Iterator<Item = &DecisionRecord> {
    log.iter().filter_map(|r| match r {
        LogRecord::Decision(d) => Some(d),
        LogRecord::Move(_) => None,
    })
}

/// Histogram of the actions actually taken at each recorded decision.
pub fn realized_action_histogram(log: &[LogRecord], n_players: usize, mask_id: &str) -> Result<Vec<HistogramRow>> {
    let space = ActionSpace::new(n_players)?;
    let mut map: BTreeMap<(String, bool), u64> = BTreeMap::new();
    for d in decisions(log) {
        let mv = space.move_at(d.action, d.seat)?;
        *map.entry(bucket(&mv, &d.hand)).or_default() += 1;
    }
    Ok(rows(mask_id, map))
}

fn rows(mask_id: &str, map: BTreeMap<(String, bool), u64>) -> Vec<HistogramRow> {
    counts_from(map)
        .into_iter()
        .map(|c| HistogramRow {
            mask_id: mask_id.to_string(),
            action_type: c.action_type,
            is_lie: c.is_lie,
            count: c.count,
        })
        .collect()
}

/// For every recorded decision, the greedy action under each mask, bucketed
/// by action type and lie involvement. Rows are grouped by mask in input order.
pub fn counterfactual_action_distribution(
    log: &[LogRecord],
    params: &NetworkParams,
    masks: &[(String, StrategyMask)],
    n_players: usize,
) -> Result<Vec<HistogramRow>> {
    let space = ActionSpace::new(n_players)?;
    let shape = params.shape();
    if shape.n_actions != space.len() {
        return Err(Error::Shape(format!("network has {} actions, table needs {}", shape.n_actions, space.len())));
    }
    let mut maps = vec![BTreeMap::<(String, bool), u64>::new(); masks.len()];
    for d in decisions(log) {
        let q = forward_flat(params, &d.obs)?;
        for ((_, m), map) in masks.iter().zip(maps.iter_mut()) {
            let a = masked_argmax_flat(&q, shape.k, m.weights(), Some(&d.legal))?;
            let mv = space.move_at(a, d.seat)?;
            *map.entry(bucket(&mv, &d.hand)).or_default() += 1;
        }
    }
    Ok(masks
        .iter()
        .zip(maps)
        .flat_map(|((id, _), map)| rows(id, map))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub weight: f64,
    pub win_pct: f64,
    /// Percent of claim moves that were lies.
    pub lie_pct: f64,
    pub games: u64,
}

/// The mask (1, 0, w, 0).
pub fn lie_mask(weight: f64) -> Result<StrategyMask> {
    StrategyMask::coup([1.0, 0.0, weight, 0.0])
}

/// Evaluates mask (1, 0, w, 0) for each weight on the same game seeds.
pub fn lie_weight_sweep(
    params: &NetworkParams,
    roster: &LeagueRoster,
    tracker: &WinRateTracker,
    pfsp: &PfspConfig,
    weights: &[f64],
    cfg: &EvalConfig,
) -> Result<Vec<SweepPoint>> {
    if weights.is_empty() {
        return Err(Error::InvalidValue("no sweep weights".into()));
    }
    let cfg = EvalConfig {
        record: false,
        ..cfg.clone()
    };
    weights
        .iter()
        .map(|&w| {
            let r = eval_against_league(params, roster, tracker, pfsp, &lie_mask(w)?, &cfg)?.report;
            Ok(SweepPoint {
                weight: w,
                win_pct: 100.0 * r.win_rate,
                lie_pct: 100.0 * r.lie_fraction,
                games: r.games,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefreshOutput {
    pub refresh_games: u64,
    pub tracker: WinRateTracker,
    pub points: Vec<SweepPoint>,
}

/// Rebuilds the win-rate windows from uniformly drawn league opponents
/// (greedy play under `base_mask`), then repeats the sweep with those priorities.
pub fn refresh_priorities_then_sweep(
    params: &NetworkParams,
    roster: &LeagueRoster,
    pfsp: &PfspConfig,
    base_mask: &StrategyMask,
    weights: &[f64],
    cfg: &EvalConfig,
) -> Result<RefreshOutput> {
    let n = cfg.env.game.n_players as u64;
    let games = priority_refresh_games(pfsp.window as u64, roster.len() as u64, n)?;
    let mut tracker = WinRateTracker::new(pfsp.window);
    roster.ids().into_iter().for_each(|id| tracker.register(id));
    let uniform = PfspConfig {
        p: 0.0,
        z: 0.0,
        ..*pfsp
    };
    let mut env = CoupEnv::new(cfg.env)?;
    let k = COUP_DIMENSIONS.len();
    let refresh_seed = derive_seed(cfg.seed, u64::MAX - 1);
    for g in 0..games {
        let game_seed = derive_seed(refresh_seed, g);
        let mut rng = seeded_rng(derive_seed(game_seed, 7));
        let picks = pfsp_sample_opponents(roster, &tracker, &uniform, cfg.env.game.n_players - 1, &mut rng)?;
        let ids: Vec<u64> = picks
            .iter()
            .map(|p| match p {
                Opponent::Entry(id) => *id,
                Opponent::LearnerCopy => unreachable!("p = 0"),
            })
            .collect();
        env.set_opponents(ids.iter().map(|&id| roster.get(id).map(|e| e.policy())).collect::<Result<_>>()?)?;
        let (mut obs, mut legal) = env.reset(game_seed)?;
        loop {
            let q = forward_flat(params, &obs)?;
            let a = masked_argmax_flat(&q, k, base_mask.weights(), Some(&legal))?;
            let o = env.step(a)?;
            if o.terminal || o.truncated {
                break;
            }
            obs = o.next_obs;
            legal = o.next_legal;
        }
        tracker.record(&ids, env.won().unwrap_or(false))?;
    }
    let points = lie_weight_sweep(params, roster, &tracker, pfsp, weights, cfg)?;
    Ok(RefreshOutput {
        refresh_games: games,
        tracker,
        points,
    })
}
