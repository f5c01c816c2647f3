//! League play: frozen champion checkpoints and main exploiters, opponents
//! drawn by prioritized fictitious self-play (PFSP) with weight `(1 − x)^z`
//! on the learner's win rate `x` against each entry.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::coupenv::{CoupEnv, CoupEnvConfig, SeatPolicy};
use crate::maskdqn::{DqnConfig, EpisodeMetrics, Learner, LearnerEnv, TrainingHook};
use crate::nnapprox::{load_params, save_params, ApproximatorConfig, NetworkParams};
use crate::rlcore::StrategyMask;
use crate::{derive_seed, seeded_rng, Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    ChampionCheckpoint,
    MainExploiter,
}

/// A frozen agent. Parameters are shared and never mutated after insertion.
#[derive(Debug, Clone)]
pub struct LeagueEntry {
    pub id: u64,
    pub kind: EntryKind,
    pub created_episode: u64,
    /// Mask the agent acts under when used as an opponent.
    pub mask: StrategyMask,
    params: Arc<NetworkParams>,
    fingerprint: String,
}

impl LeagueEntry {
    pub fn params(&self) -> &Arc<NetworkParams> {
        &self.params
    }

    /// SHA-256 of the parameters at insertion.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn policy(&self) -> SeatPolicy {
        SeatPolicy::Greedy {
            params: Arc::clone(&self.params),
            mask: self.mask.clone(),
        }
    }
}

/// Append-only list of league entries; ids are insertion indices.
#[derive(Debug, Clone, Default)]
pub struct LeagueRoster {
    entries: Vec<LeagueEntry>,
}

impl LeagueRoster {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, kind: EntryKind, params: NetworkParams, mask: StrategyMask, created_episode: u64) -> u64 {
        let id = self.entries.len() as u64;
        self.entries.push(LeagueEntry {
            id,
            kind,
            created_episode,
            mask,
            fingerprint: params.fingerprint(),
            params: Arc::new(params),
        });
        id
    }

    pub fn get(&self, id: u64) -> Result<&LeagueEntry> {
        self.entries.get(id as usize).ok_or(Error::UnknownOpponent(id))
    }

    pub fn entries(&self) -> &[LeagueEntry] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, kind: EntryKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Recomputes every fingerprint; fails if any entry changed since insertion.
    pub fn verify(&self) -> Result<()> {
        match self.entries.iter().find(|e| e.params.fingerprint() != e.fingerprint) {
            Some(_) => Err(Error::Checksum),
            None => Ok(()),
        }
    }
}

/// Sliding window of the learner's results against each entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinRateTracker {
    window: usize,
    results: BTreeMap<u64, VecDeque<bool>>,
}

pub const UNSEEN_WIN_RATE: f64 = 0.5;

impl WinRateTracker {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            results: BTreeMap::new(),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn register(&mut self, id: u64) {
        self.results.entry(id).or_default();
    }

    pub fn is_registered(&self, id: u64) -> bool {
        self.results.contains_key(&id)
    }

    /// Appends the result to every listed opponent's window (each opponent once).
    pub fn record(&mut self, opponents: &[u64], learner_won: bool) -> Result<()> {
        if let Some(&bad) = opponents.iter().find(|id| !self.results.contains_key(id)) {
            return Err(Error::UnknownOpponent(bad));
        }
        let mut seen = Vec::with_capacity(opponents.len());
        for &id in opponents {
            if seen.contains(&id) {
                continue;
            }
            seen.push(id);
            let buf = self.results.get_mut(&id).expect("checked");
            buf.push_back(learner_won);
            while buf.len() > self.window {
                buf.pop_front();
            }
        }
        Ok(())
    }

    /// Learner's win rate over the window; 0.5 before any game.
    pub fn win_rate(&self, id: u64) -> Result<f64> {
        let buf = self.results.get(&id).ok_or(Error::UnknownOpponent(id))?;
        if buf.is_empty() {
            return Ok(UNSEEN_WIN_RATE);
        }
        Ok(buf.iter().filter(|&&w| w).count() as f64 / buf.len() as f64)
    }

    pub fn games(&self, id: u64) -> usize {
        self.results.get(&id).map_or(0, VecDeque::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PfspConfig {
    /// Probability that an opponent slot is a copy of the current learner.
    pub p: f64,
    /// Hardness exponent of `(1 − x)^z`.
    pub z: f64,
    /// W: games per opponent in the win-rate window.
    pub window: usize,
    /// Learner episodes between checkpoints.
    pub checkpoint_period: u64,
}

impl Default for PfspConfig {
    fn default() -> Self {
        Self {
            p: 0.3,
            z: 6.0,
            window: 1000,
            checkpoint_period: 5000,
        }
    }
}

impl PfspConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidValue(format!("p = {} outside [0,1]", self.p)));
        }
        if !(self.z >= 0.0 && self.z.is_finite()) {
            return Err(Error::InvalidValue(format!("z = {} must be ≥ 0", self.z)));
        }
        if self.window == 0 || self.checkpoint_period == 0 {
            return Err(Error::InvalidValue("window and checkpoint period must be positive".into()));
        }
        Ok(())
    }
}

pub fn pfsp_weight(win_rate: f64, z: f64) -> f64 {
    (1.0 - win_rate).powf(z)
}

/// League-draw probabilities over `ids`, proportional to `(1 − x)^z`;
/// uniform when every weight is zero. Empty for an empty league.
pub fn pfsp_probabilities(ids: &[u64], tracker: &WinRateTracker, z: f64) -> Result<Vec<f64>> {
    let w = ids
        .iter()
        .map(|&id| Ok(pfsp_weight(tracker.win_rate(id)?, z)))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = w.iter().sum();
    if ids.is_empty() {
        return Ok(w);
    }
    if total <= 0.0 {
        return Ok(vec![1.0 / ids.len() as f64; ids.len()]);
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Opponent {
    LearnerCopy,
    Entry(u64),
}

/// Draws each slot independently: a learner copy with probability `p`
/// (always, if the league is empty), else a PFSP draw from the league.
pub fn pfsp_sample_opponents(
    roster: &LeagueRoster,
    tracker: &WinRateTracker,
    cfg: &PfspConfig,
    n_opponents: usize,
    rng: &mut Rng,
) -> Result<Vec<Opponent>> {
    if n_opponents == 0 {
        return Err(Error::InvalidValue("need at least one opponent".into()));
    }
    let ids = roster.ids();
    let probs = pfsp_probabilities(&ids, tracker, cfg.z)?;
    (0..n_opponents)
        .map(|_| {
            if ids.is_empty() || rng.gen::<f64>() < cfg.p {
                return Ok(Opponent::LearnerCopy);
            }
            Ok(Opponent::Entry(ids[crate::rlcore::sample_index(&probs, rng)]))
        })
        .collect()
}

/// Games needed so every entry's window can be refilled: `⌈W·league/(n − 1)⌉`.
pub fn priority_refresh_games(window: u64, league_size: u64, players_per_game: u64) -> Result<u64> {
    if players_per_game < 2 {
        return Err(Error::InvalidValue(format!("{players_per_game} players per game")));
    }
    Ok((window * league_size).div_ceil(players_per_game - 1))
}

/// Episode hook that seats PFSP-drawn opponents and records results.
pub struct PfspHook<'a> {
    pub roster: &'a LeagueRoster,
    pub tracker: &'a mut WinRateTracker,
    pub cfg: PfspConfig,
    /// Mask learner copies act under.
    pub self_mask: StrategyMask,
    pub rng: Rng,
    current: Vec<u64>,
}

impl<'a> PfspHook<'a> {
    pub fn new(roster: &'a LeagueRoster, tracker: &'a mut WinRateTracker, cfg: PfspConfig, self_mask: StrategyMask, seed: u64) -> Self {
        for id in roster.ids() {
            tracker.register(id);
        }
        Self {
            roster,
            tracker,
            cfg,
            self_mask,
            rng: seeded_rng(seed),
            current: Vec::new(),
        }
    }
}

impl TrainingHook<CoupEnv> for PfspHook<'_> {
    fn before_episode(&mut self, _episode: u64, env: &mut CoupEnv, online: &NetworkParams) -> Result<()> {
        let n = env.config().game.n_players - 1;
        let picks = pfsp_sample_opponents(self.roster, self.tracker, &self.cfg, n, &mut self.rng)?;
        let copy = picks
            .contains(&Opponent::LearnerCopy)
            .then(|| Arc::new(online.clone()));
        self.current.clear();
        let mut seats = Vec::with_capacity(n);
        for p in picks {
            seats.push(match p {
                Opponent::LearnerCopy => SeatPolicy::Greedy {
                    params: Arc::clone(copy.as_ref().expect("made above")),
                    mask: self.self_mask.clone(),
                },
                Opponent::Entry(id) => {
                    self.current.push(id);
                    self.roster.get(id)?.policy()
                }
            });
        }
        env.set_opponents(seats)
    }

    fn after_episode(&mut self, env: &mut CoupEnv, _metrics: &EpisodeMetrics) -> Result<()> {
        let won = env.won().unwrap_or(false);
        self.tracker.record(&self.current, won)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeagueConfig {
    pub pfsp: PfspConfig,
    /// Number of checkpoint periods; each adds one champion checkpoint and one exploiter.
    pub periods: u64,
    /// Episodes per exploiter; the checkpoint period when absent.
    pub exploiter_episodes: Option<u64>,
    /// Training (and inference-as-opponent) mask over (Win, Challenge, Lie, Bait).
    pub train_mask: [f64; 4],
    pub net: ApproximatorConfig,
    /// `episodes` is ignored: the ε horizon is the run length.
    pub dqn: DqnConfig,
    pub env: CoupEnvConfig,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        Self {
            pfsp: PfspConfig::default(),
            periods: 3,
            exploiter_episodes: None,
            train_mask: [1.0, 0.0, 0.0, 0.0],
            net: ApproximatorConfig::default(),
            dqn: DqnConfig::default(),
            env: CoupEnvConfig::default(),
        }
    }
}

impl LeagueConfig {
    pub fn validate(&self) -> Result<()> {
        self.pfsp.validate()?;
        self.net.validate()?;
        self.dqn.validate()?;
        if self.periods == 0 {
            return Err(Error::InvalidValue("periods must be positive".into()));
        }
        if self.exploiter_episodes == Some(0) {
            return Err(Error::InvalidValue("exploiter_episodes must be positive".into()));
        }
        StrategyMask::coup(self.train_mask)?;
        Ok(())
    }

    pub fn champion_episodes(&self) -> u64 {
        self.periods * self.pfsp.checkpoint_period
    }

    pub fn exploiter_episodes(&self) -> u64 {
        self.exploiter_episodes.unwrap_or(self.pfsp.checkpoint_period)
    }
}

/// Progress notice passed to the observer after each training block.
#[derive(Debug, Clone, PartialEq)]
pub struct LeagueProgress {
    pub period: u64,
    pub kind: EntryKind,
    pub episodes: u64,
    pub win_rate: f64,
}

#[derive(Debug, Clone)]
pub struct LeagueRun {
    pub roster: LeagueRoster,
    /// Champion's results against the league.
    pub tracker: WinRateTracker,
    pub champion: NetworkParams,
    pub metrics: Vec<EpisodeMetrics>,
    pub exploiter_metrics: Vec<Vec<EpisodeMetrics>>,
}

fn win_rate(metrics: &[EpisodeMetrics]) -> f64 {
    if metrics.is_empty() {
        return 0.0;
    }
    metrics.iter().filter(|m| m.won == Some(true)).count() as f64 / metrics.len() as f64
}

/// Trains the champion against PFSP opponents. After each period its
/// parameters are frozen into the league, then a freshly initialized
/// exploiter trains against the league snapshot (no self-play) and is added too.
pub fn run_league_training(cfg: &LeagueConfig, observer: &mut dyn FnMut(&LeagueProgress)) -> Result<LeagueRun> {
    cfg.validate()?;
    let mask = StrategyMask::coup(cfg.train_mask)?;
    let mut env = CoupEnv::new(cfg.env)?;
    let shape = env.shape();
    let seed = cfg.dqn.seed;
    let champ_dqn = DqnConfig {
        episodes: cfg.champion_episodes(),
        ..cfg.dqn.clone()
    };
    let champ_net = ApproximatorConfig {
        seed: derive_seed(cfg.net.seed, 0),
        ..cfg.net.clone()
    };
    let mut champion = Learner::new(shape, &champ_net, champ_dqn)?;
    let mut roster = LeagueRoster::new();
    let mut tracker = WinRateTracker::new(cfg.pfsp.window);
    let mut metrics = Vec::new();
    let mut exploiter_metrics = Vec::new();
    for period in 0..cfg.periods {
        let m = {
            let mut hook = PfspHook::new(&roster, &mut tracker, cfg.pfsp, mask.clone(), derive_seed(seed, 1000 + period));
            champion.run_episodes(&mut env, &mut hook, &mask, cfg.pfsp.checkpoint_period)?
        };
        observer(&LeagueProgress {
            period,
            kind: EntryKind::ChampionCheckpoint,
            episodes: champion.episodes_done(),
            win_rate: win_rate(&m),
        });
        metrics.extend(m);
        roster.insert(EntryKind::ChampionCheckpoint, champion.params().clone(), mask.clone(), champion.episodes_done());

        let xp_seed = derive_seed(seed, 2000 + period);
        let xp_net = ApproximatorConfig {
            seed: derive_seed(cfg.net.seed, 1 + period),
            ..cfg.net.clone()
        };
        let xp_dqn = DqnConfig {
            episodes: cfg.exploiter_episodes(),
            seed: xp_seed,
            ..cfg.dqn.clone()
        };
        let mut exploiter = Learner::new(shape, &xp_net, xp_dqn)?;
        let mut xp_tracker = WinRateTracker::new(cfg.pfsp.window);
        let league_only = PfspConfig { p: 0.0, ..cfg.pfsp };
        let xm = {
            let mut hook = PfspHook::new(&roster, &mut xp_tracker, league_only, mask.clone(), derive_seed(xp_seed, 1));
            exploiter.run_episodes(&mut env, &mut hook, &mask, cfg.exploiter_episodes())?
        };
        observer(&LeagueProgress {
            period,
            kind: EntryKind::MainExploiter,
            episodes: exploiter.episodes_done(),
            win_rate: win_rate(&xm),
        });
        exploiter_metrics.push(xm);
        roster.insert(EntryKind::MainExploiter, exploiter.params().clone(), mask.clone(), champion.episodes_done());
        tracker.register(roster.len() as u64 - 1);
    }
    Ok(LeagueRun {
        roster,
        tracker,
        champion: champion.params().clone(),
        metrics,
        exploiter_metrics,
    })
}

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "league.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: u64,
    pub kind: EntryKind,
    pub created_episode: u64,
    pub mask: Vec<f64>,
    pub fingerprint: String,
    /// Relative to the manifest's directory.
    pub checkpoint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeagueManifest {
    pub version: u32,
    pub entries: Vec<ManifestEntry>,
    pub tracker: WinRateTracker,
    pub champion: Option<String>,
}

/// Writes `league.json`, one checkpoint per entry and, if given, the champion.
pub fn save_league(dir: &Path, roster: &LeagueRoster, tracker: &WinRateTracker, champion: Option<&NetworkParams>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for e in roster.entries() {
        let file = format!("entry-{:03}.ckpt", e.id);
        save_params(e.params(), &dir.join(&file))?;
        entries.push(ManifestEntry {
            id: e.id,
            kind: e.kind,
            created_episode: e.created_episode,
            mask: e.mask.weights().to_vec(),
            fingerprint: e.fingerprint.clone(),
            checkpoint: file,
        });
    }
    let champion = match champion {
        Some(p) => {
            save_params(p, &dir.join("champion.ckpt"))?;
            Some("champion.ckpt".to_string())
        }
        None => None,
    };
    let manifest = LeagueManifest {
        version: MANIFEST_VERSION,
        entries,
        tracker: tracker.clone(),
        champion,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct LoadedLeague {
    pub roster: LeagueRoster,
    pub tracker: WinRateTracker,
    pub champion: Option<NetworkParams>,
}

/// Reads a manifest written by [`save_league`], checking every fingerprint.
pub fn load_league(manifest_path: &Path) -> Result<LoadedLeague> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let m: LeagueManifest = serde_json::from_str(&text)?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::Version {
            found: m.version,
            expected: MANIFEST_VERSION,
        });
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut roster = LeagueRoster::new();
    for e in &m.entries {
        let params = load_params(&dir.join(&e.checkpoint))?;
        let mask = StrategyMask::coup(
            e.mask
                .as_slice()
                .try_into()
                .map_err(|_| Error::BadCheckpoint(format!("entry {} mask has {} weights", e.id, e.mask.len())))?,
        )?;
        let id = roster.insert(e.kind, params, mask, e.created_episode);
        if id != e.id || roster.get(id)?.fingerprint != e.fingerprint {
            return Err(Error::BadCheckpoint(format!("entry {} does not match the manifest", e.id)));
        }
    }
    let champion = m.champion.as_ref().map(|c| load_params(&dir.join(c))).transpose()?;
    Ok(LoadedLeague {
        roster,
        tracker: m.tracker,
        champion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tracker_with(rates: &[(u64, usize, usize)]) -> WinRateTracker {
        let mut t = WinRateTracker::new(1000);
        for &(id, wins, losses) in rates {
            t.register(id);
            for _ in 0..wins {
                t.record(&[id], true).unwrap();
            }
            for _ in 0..losses {
                t.record(&[id], false).unwrap();
            }
        }
        t
    }

    #[test]
    fn pfsp_example_probabilities() {
        let t = tracker_with(&[(0, 0, 4), (1, 2, 2), (2, 4, 0)]);
        let p = pfsp_probabilities(&[0, 1, 2], &t, 6.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 / 1.015625, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.015625 / 1.015625, epsilon = 1e-12);
        assert_eq!(p[2], 0.0);
        assert_abs_diff_eq!(p[0], 0.98462, epsilon = 1e-5);
    }

    #[test]
    fn all_beaten_falls_back_to_uniform() {
        let t = tracker_with(&[(0, 3, 0), (1, 5, 0)]);
        assert_eq!(pfsp_probabilities(&[0, 1], &t, 6.0).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn window_eviction_and_defaults() {
        let mut t = tracker_with(&[(0, 1000, 1000)]);
        assert_eq!(t.win_rate(0).unwrap(), 0.0);
        assert_eq!(t.games(0), 1000);
        t.register(1);
        assert_eq!(t.win_rate(1).unwrap(), 0.5);
        let t = tracker_with(&[(0, 3, 1)]);
        assert_eq!(t.win_rate(0).unwrap(), 0.75);
        let mut t = WinRateTracker::new(10);
        assert!(matches!(t.record(&[9], true), Err(Error::UnknownOpponent(9))));
        assert!(t.win_rate(9).is_err());
    }

    #[test]
    fn duplicate_opponent_counts_once() {
        let mut t = tracker_with(&[(0, 0, 0)]);
        t.record(&[0, 0], true).unwrap();
        assert_eq!(t.games(0), 1);
    }

    fn roster(n: usize) -> LeagueRoster {
        let shape = crate::nnapprox::NetShape {
            static_dim: 2,
            event_dim: 1,
            n_actions: 2,
            k: 4,
        };
        let mut r = LeagueRoster::new();
        for i in 0..n {
            let cfg = ApproximatorConfig {
                static_hidden: vec![2],
                recurrent: 1,
                head_hidden: vec![],
                seed: i as u64,
                ..ApproximatorConfig::default()
            };
            let p = NetworkParams::init(shape, &cfg).unwrap();
            r.insert(EntryKind::ChampionCheckpoint, p, StrategyMask::coup([1.0, 0.0, 0.0, 0.0]).unwrap(), i as u64);
        }
        r
    }

    #[test]
    fn sampling_rules() {
        let mut rng = seeded_rng(1);
        let empty = LeagueRoster::new();
        let t = WinRateTracker::new(10);
        let picks = pfsp_sample_opponents(&empty, &t, &PfspConfig::default(), 2, &mut rng).unwrap();
        assert_eq!(picks, vec![Opponent::LearnerCopy; 2]);

        let r = roster(3);
        let mut t = WinRateTracker::new(10);
        r.ids().into_iter().for_each(|id| t.register(id));
        let always_self = PfspConfig { p: 1.0, ..PfspConfig::default() };
        for _ in 0..50 {
            assert!(pfsp_sample_opponents(&r, &t, &always_self, 2, &mut rng)
                .unwrap()
                .iter()
                .all(|o| *o == Opponent::LearnerCopy));
        }
        let never_self = PfspConfig { p: 0.0, ..PfspConfig::default() };
        assert!(pfsp_sample_opponents(&r, &t, &never_self, 2, &mut rng)
            .unwrap()
            .iter()
            .all(|o| matches!(o, Opponent::Entry(_))));
        assert!(pfsp_sample_opponents(&r, &t, &never_self, 0, &mut rng).is_err());
    }

    #[test]
    fn self_play_rate_matches_p() {
        let r = roster(2);
        let mut t = WinRateTracker::new(10);
        r.ids().into_iter().for_each(|id| t.register(id));
        let mut rng = seeded_rng(8);
        let draws = 20_000;
        let copies = (0..draws)
            .filter(|_| pfsp_sample_opponents(&r, &t, &PfspConfig::default(), 1, &mut rng).unwrap()[0] == Opponent::LearnerCopy)
            .count();
        assert_abs_diff_eq!(copies as f64 / draws as f64, 0.3, epsilon = 0.015);
    }

    #[test]
    fn refresh_game_counts() {
        assert_eq!(priority_refresh_games(1000, 39, 3).unwrap(), 19_500);
        assert_eq!(priority_refresh_games(1000, 39, 2).unwrap(), 39_000);
        assert_eq!(priority_refresh_games(0, 7, 3).unwrap(), 0);
        assert_eq!(priority_refresh_games(10, 3, 3).unwrap(), 15);
        assert_eq!(priority_refresh_games(1, 1, 3).unwrap(), 1);
        assert!(priority_refresh_games(1, 1, 1).is_err());
    }

    #[test]
    fn roster_verify_and_manifest_round_trip() {
        let r = roster(3);
        r.verify().unwrap();
        let t = tracker_with(&[(0, 2, 1), (1, 0, 0), (2, 0, 5)]);
        let dir = tempfile::tempdir().unwrap();
        let path = save_league(dir.path(), &r, &t, Some(r.get(0).unwrap().params())).unwrap();
        let back = load_league(&path).unwrap();
        assert_eq!(back.tracker, t);
        assert_eq!(back.roster.len(), 3);
        for (a, b) in r.entries().iter().zip(back.roster.entries()) {
            assert_eq!(a.fingerprint(), b.fingerprint());
            assert_eq!(a.kind, b.kind);
        }
        assert_eq!(back.champion.unwrap().values(), r.get(0).unwrap().params().values());
    }

    #[test]
    fn config_validation() {
        assert!(PfspConfig::default().validate().is_ok());
        assert!(PfspConfig { p: 1.5, ..PfspConfig::default() }.validate().is_err());
        assert!(PfspConfig { z: -1.0, ..PfspConfig::default() }.validate().is_err());
        assert!(LeagueConfig { periods: 0, ..LeagueConfig::default() }.validate().is_err());
    }
}
