//! Acceptance run: one PASS/FAIL line per criterion, then a nonzero exit if any failed.
//!
//! Runs without the libtest harness so the lines are never captured.
//! `ACCEPTANCE_ONLY=1,4` restricts the run to the listed criteria.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use stratmask::coupenv::{
    is_lie, random_game_soundness, ActionSpace, GameConfig, LogRecord, DECK_SIZE,
};
use stratmask::experiments::{
    counterfactual_action_distribution, eval_against_league, lie_weight_sweep, realized_action_histogram, EvalConfig,
    HistogramRow,
};
use stratmask::league::{run_league_training, LeagueConfig, LeagueRun, PfspConfig};
use stratmask::maskdqn::{train, DqnConfig, EpsilonSchedule, MdpEnv, NoHook};
use stratmask::nnapprox::{
    forward_flat, loss_and_gradient, ApproximatorConfig, NetShape, NetworkParams, Observation, OptimizerKind,
    TrainSample,
};
use stratmask::rlcore::{masked_argmax_flat, StrategyMask};
use stratmask::tabular::{
    run_contraction_suite, run_convergence_suite, run_tabular_training, LearningSchedule, Outcome, TabularMdp,
    TabularRunConfig, TdAlgorithm,
};
use stratmask::seeded_rng;

// criterion 1
const CONTRACTION_MDPS: usize = 20;
const CONTRACTION_TRIPLES: usize = 1000;
const CONTRACTION_SLACK: f64 = 1e-12;
const CONTRACTION_BUDGET: Duration = Duration::from_secs(60);
// criterion 2
const CONVERGENCE_MDPS: usize = 5;
const CONVERGENCE_STEPS: u64 = 2_000_000;
const CONVERGENCE_TOL: f64 = 1e-2;
const CONVERGENCE_BUDGET: Duration = Duration::from_secs(300);
// criterion 3
const GRAD_NETS: u64 = 5;
// about the cube root of machine epsilon, which balances rounding against truncation error
const GRAD_STEP: f64 = 6e-6;
const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(60);
// criterion 4
const SOUNDNESS_GAMES: u64 = 10_000;
const SOUNDNESS_BUDGET: Duration = Duration::from_secs(60);
// criterion 5
const DQN_SEEDS: u64 = 5;
const DQN_AGREEMENT: f64 = 0.95;
// criterion 6
const LEAGUE_PERIODS: u64 = 10;
const LEAGUE_PERIOD: u64 = 5000;
const MIN_CHAMPION_EPISODES: u64 = 50_000;
const EXPLOITER_EPISODES: u64 = 2000;
const SWEEP_GAMES: u64 = 2000;
const SWEEP_WEIGHTS: [f64; 5] = [-5.0, -1.0, 0.0, 1.0, 5.0];
const MAX_LIE_PCT_AT_NEG1: f64 = 5.0;
const MAX_WIN_GAP_PP: f64 = 10.0;
// criterion 7
const RECORDED_GAMES: u64 = 300;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(budget: Duration, t: Instant) -> (bool, String) {
    let el = t.elapsed();
    (el < budget, format!("{:.1}s of {}s", el.as_secs_f64(), budget.as_secs()))
}

fn contraction() -> Verdict {
    let t = Instant::now();
    let rows = run_contraction_suite(2024, CONTRACTION_MDPS, CONTRACTION_TRIPLES).unwrap();
    let (fast, time) = within(CONTRACTION_BUDGET, t);
    let violations: usize = rows.iter().map(|r| r.violations).sum();
    let samples: usize = rows.iter().map(|r| r.samples).sum();
    let shapes_ok = rows.len() == CONTRACTION_MDPS
        && rows
            .iter()
            .all(|r| r.n_states <= 8 && r.n_actions <= 4 && r.k <= 4 && [0.5, 0.9, 0.99].contains(&r.gamma));
    let max_ratio = rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    verdict(
        violations == 0 && samples == CONTRACTION_MDPS * CONTRACTION_TRIPLES && shapes_ok && fast,
        format!("{violations} violations (slack {CONTRACTION_SLACK:e}) in {samples} triples, max distance ratio {max_ratio:.4}, {time}"),
    )
}

fn convergence() -> Verdict {
    let t = Instant::now();
    let rows = run_convergence_suite(2024, CONVERGENCE_MDPS, CONVERGENCE_STEPS).unwrap();
    let (fast, time) = within(CONVERGENCE_BUDGET, t);
    let finals: Vec<f64> = rows.iter().map(|r| r.final_distance).collect();
    let worst = finals.iter().copied().fold(0.0, f64::max);
    let coarse_monotone = rows.iter().all(|r| {
        let at = |step: u64| r.trace.iter().find(|p| p.step >= step).map_or(f64::NAN, |p| p.sup_distance);
        at(CONVERGENCE_STEPS / 20) >= at(CONVERGENCE_STEPS / 2) && at(CONVERGENCE_STEPS / 2) >= at(CONVERGENCE_STEPS)
    });
    verdict(
        rows.len() == CONVERGENCE_MDPS && worst < CONVERGENCE_TOL && fast,
        format!(
            "final sup distances {:?} (tol {CONVERGENCE_TOL:e}), shrinking at 5%/50%/100% of the run {coarse_monotone}, {time}",
            finals.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
        ),
    )
}

/// Random small network and batch; biases are perturbed so ReLUs sit off their kinks.
fn grad_case(seed: u64) -> (NetworkParams, Vec<(Observation, usize, Vec<f64>)>) {
    let mut rng = seeded_rng(1000 + seed);
    let shape = NetShape {
        static_dim: rng.gen_range(2..6),
        event_dim: rng.gen_range(2..5),
        n_actions: rng.gen_range(2..5),
        k: rng.gen_range(1..5),
    };
    let cfg = ApproximatorConfig {
        static_hidden: vec![rng.gen_range(2..6)],
        recurrent: rng.gen_range(2..5),
        head_hidden: vec![rng.gen_range(2..6)],
        seed: seed + 77,
        ..ApproximatorConfig::default()
    };
    let init = NetworkParams::init(shape, &cfg).unwrap();
    let values = init.values().iter().map(|v| v + rng.gen_range(-0.3..0.3)).collect();
    let params = NetworkParams::from_values(init.layout().clone(), values).unwrap();
    let batch = (0..4)
        .map(|_| {
            let stat = (0..shape.static_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let events: Vec<Vec<f64>> = (0..rng.gen_range(0..6))
                .map(|_| (0..shape.event_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let obs = Observation::with_events(stat, shape.event_dim, &events).unwrap();
            (obs, rng.gen_range(0..shape.n_actions), (0..shape.k).map(|_| rng.gen_range(-2.0..2.0)).collect())
        })
        .collect();
    (params, batch)
}

fn gradients() -> Verdict {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut n_params = 0;
    for seed in 0..GRAD_NETS {
        let (params, data) = grad_case(seed);
        let batch: Vec<TrainSample> = data
            .iter()
            .map(|(obs, a, y)| TrainSample {
                obs,
                action: *a,
                target: y,
            })
            .collect();
        let (_, grad) = loss_and_gradient(&params, &batch).unwrap();
        let loss = |v: Vec<f64>| loss_and_gradient(&NetworkParams::from_values(params.layout().clone(), v).unwrap(), &batch).unwrap().0;
        for i in 0..params.len() {
            let mut plus = params.values().to_vec();
            let mut minus = plus.clone();
            plus[i] += GRAD_STEP;
            minus[i] -= GRAD_STEP;
            let numeric = (loss(plus) - loss(minus)) / (2.0 * GRAD_STEP);
            let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        n_params += params.len();
    }
    let (fast, time) = within(GRAD_BUDGET, t);
    verdict(
        worst < GRAD_TOL && fast,
        format!("max relative error {worst:.2e} (tol {GRAD_TOL:e}) over {n_params} parameters in {GRAD_NETS} nets, {time}"),
    )
}

fn soundness() -> Verdict {
    let t = Instant::now();
    let rep = random_game_soundness(GameConfig::default(), SOUNDNESS_GAMES, 2024, 10).unwrap();
    let (fast, time) = within(SOUNDNESS_BUDGET, t);
    verdict(
        rep.violations() == 0 && rep.games == SOUNDNESS_GAMES && fast,
        format!(
            "{} games, {} moves, {} violations (cards {}/{DECK_SIZE}, coins {}, winner {}, challenge-discard {}), {time}",
            rep.games,
            rep.moves,
            rep.violations(),
            rep.card_conservation,
            rep.negative_coins + rep.coin_delta,
            rep.winner,
            rep.challenge_discard
        ),
    )
}

/// Six states on a line, the last absorbing; K = 2.
fn line_mdp() -> TabularMdp {
    let mut rows = Vec::new();
    for s in 0..6usize {
        rows.push(vec![
            Outcome {
                next: (s + 1).min(5),
                prob: 0.8,
                reward: vec![1.0, 0.0],
            },
            Outcome {
                next: s,
                prob: 0.2,
                reward: vec![1.0, 0.0],
            },
        ]);
        let d = if s % 2 == 0 { 3.0 } else { -3.0 };
        rows.push(vec![Outcome {
            next: (s + 2).min(5),
            prob: 1.0,
            reward: vec![0.0, d],
        }]);
        rows.push(vec![Outcome {
            next: s,
            prob: 1.0,
            reward: vec![0.2 * s as f64, 0.25],
        }]);
    }
    let mut terminal = vec![false; 6];
    terminal[5] = true;
    TabularMdp::new(6, 3, 2, 0.5, rows, terminal, vec![]).unwrap()
}

fn dqn_matches_tabular() -> Verdict {
    let t = Instant::now();
    let mdp = line_mdp();
    let mut worst: f64 = 1.0;
    let mut fracs = Vec::new();
    for weights in [vec![1.0, 0.0], vec![1.0, 1.0]] {
        let mask = StrategyMask::unlabeled(weights).unwrap();
        for seed in 0..DQN_SEEDS {
            let tab = run_tabular_training(
                &mdp,
                TdAlgorithm::QLearning,
                &mask,
                &LearningSchedule::new(1.0, 0.85, 0.5).unwrap(),
                &TabularRunConfig {
                    steps: 200_000,
                    max_episode_len: 50,
                    checkpoints: 1,
                },
                seed,
            )
            .unwrap();
            let policy = tab.q.greedy_policy(&mask).unwrap();
            let net = ApproximatorConfig {
                static_hidden: vec![32],
                recurrent: 1,
                head_hidden: vec![32],
                alpha: 1e-3,
                seed,
                optimizer: OptimizerKind::Adam {
                    beta1: 0.9,
                    beta2: 0.999,
                    eps: 1e-8,
                },
                clip_norm: Some(10.0),
            };
            let dqn = DqnConfig {
                batch: 32,
                capacity: 20_000,
                episodes: 600,
                target_period: 200,
                gamma: 0.5,
                epsilon: EpsilonSchedule {
                    start: 1.0,
                    end: 0.2,
                    decay_fraction: 0.3,
                },
                train_every: 1,
                seed,
            };
            let mut env = MdpEnv::new(mdp.clone(), 50).unwrap();
            let out = train(&mut env, &mut NoHook, &net, &dqn, &mask).unwrap();
            let live: Vec<usize> = mdp.non_terminal_states().collect();
            let hits = live
                .iter()
                .filter(|&&s| {
                    let q = forward_flat(&out.params, &env.observe(s)).unwrap();
                    masked_argmax_flat(&q, 2, mask.weights(), None).unwrap() == policy[s]
                })
                .count();
            let frac = hits as f64 / live.len() as f64;
            worst = worst.min(frac);
            fracs.push(frac);
        }
    }
    verdict(
        worst >= DQN_AGREEMENT,
        format!(
            "worst state agreement {:.0}% (need {:.0}%) over 2 masks x {DQN_SEEDS} seeds, {:.0}s",
            100.0 * worst,
            100.0 * DQN_AGREEMENT,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn desk_league() -> (LeagueConfig, LeagueRun, f64) {
    let cfg = LeagueConfig {
        pfsp: PfspConfig {
            checkpoint_period: LEAGUE_PERIOD,
            ..PfspConfig::default()
        },
        periods: LEAGUE_PERIODS,
        exploiter_episodes: Some(EXPLOITER_EPISODES),
        train_mask: [1.0, 0.0, 0.0, 0.0],
        net: ApproximatorConfig {
            static_hidden: vec![32],
            recurrent: 16,
            head_hidden: vec![32],
            alpha: 1e-3,
            optimizer: OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            ..ApproximatorConfig::default()
        },
        dqn: DqnConfig {
            batch: 32,
            capacity: 20_000,
            target_period: 500,
            train_every: 4,
            seed: 1,
            ..DqnConfig::default()
        },
        ..LeagueConfig::default()
    };
    let t = Instant::now();
    let run = run_league_training(&cfg, &mut |_| {}).unwrap();
    (cfg, run, t.elapsed().as_secs_f64())
}

fn lie_sweep(cfg: &LeagueConfig, run: &LeagueRun, train_secs: f64) -> Verdict {
    let t = Instant::now();
    let ev = EvalConfig {
        games: SWEEP_GAMES,
        seed: 99,
        ..EvalConfig::default()
    };
    let pts = lie_weight_sweep(&run.champion, &run.roster, &run.tracker, &cfg.pfsp, &SWEEP_WEIGHTS, &ev).unwrap();
    let at = |w: f64| pts.iter().find(|p| p.weight == w).unwrap();
    let (neg, zero, pos) = (at(-1.0), at(0.0), at(1.0));
    let ordered = neg.lie_pct < zero.lie_pct && zero.lie_pct < pos.lie_pct;
    let low = neg.lie_pct < MAX_LIE_PCT_AT_NEG1;
    let gap = (neg.win_pct - zero.win_pct).abs();
    let episodes = run.metrics.len() as u64;
    let curve: Vec<String> = pts
        .iter()
        .map(|p| format!("w={}: lie {:.2}% win {:.1}%", p.weight, p.lie_pct, p.win_pct))
        .collect();
    verdict(
        ordered && low && gap <= MAX_WIN_GAP_PP && episodes >= MIN_CHAMPION_EPISODES,
        format!(
            "{episodes} champion episodes, league {}; ordered {ordered}, lie(-1) < {MAX_LIE_PCT_AT_NEG1}%: {low}, win gap {gap:.1}pp (max {MAX_WIN_GAP_PP}); [{}]; train {train_secs:.0}s, sweep {:.0}s",
            run.roster.len(),
            curve.join(", "),
            t.elapsed().as_secs_f64()
        ),
    )
}

/// Realized histogram computed straight from the decision records.
fn histogram_oracle(log: &[LogRecord], n: usize) -> BTreeMap<(String, bool), u64> {
    let space = ActionSpace::new(n).unwrap();
    let mut map = BTreeMap::new();
    for r in log {
        if let LogRecord::Decision(d) = r {
            let mv = space.move_at(d.action, d.seat).unwrap();
            *map.entry((mv.type_name(), is_lie(&mv, &d.hand))).or_insert(0) += 1;
        }
    }
    map
}

fn as_map(rows: &[HistogramRow]) -> BTreeMap<(String, bool), u64> {
    rows.iter().map(|r| ((r.action_type.clone(), r.is_lie), r.count)).collect()
}

fn counterfactual_identity(cfg: &LeagueConfig, run: &LeagueRun) -> Verdict {
    let mask = StrategyMask::coup(cfg.train_mask).unwrap();
    let ev = EvalConfig {
        games: RECORDED_GAMES,
        seed: 5,
        record: true,
        ..EvalConfig::default()
    };
    let out = eval_against_league(&run.champion, &run.roster, &run.tracker, &cfg.pfsp, &mask, &ev).unwrap();
    let n = cfg.env.game.n_players;
    let realized = realized_action_histogram(&out.log, n, "realized").unwrap();
    let cf = counterfactual_action_distribution(&out.log, &run.champion, &[("identity".into(), mask)], n).unwrap();
    let oracle = histogram_oracle(&out.log, n);
    let decisions: u64 = oracle.values().sum();
    let pass = decisions > 0 && as_map(&cf) == oracle && as_map(&realized) == oracle;
    verdict(
        pass,
        format!("{decisions} logged decisions in {RECORDED_GAMES} games, {} histogram buckets", oracle.len()),
    )
}

const TINY_CONFIG: &str = r#"
seed = 11
[league]
periods = 2
exploiter_episodes = 40
[league.pfsp]
checkpoint_period = 80
window = 50
[league.net]
static_hidden = [8]
recurrent = 4
head_hidden = [8]
[eval]
games = 30
[sweep]
games = 20
weights = [-1.0, 0.0, 1.0]
[tabular]
steps = 20000
[theory]
mdps = 2
triples = 20
convergence_mdps = 1
convergence_steps = 5000
"#;

const SUBCOMMANDS: [&[&str]; 6] = [
    &["train-league"],
    &["eval", "--record"],
    &["counterfactual"],
    &["sweep", "--refresh"],
    &["train-tabular"],
    &["verify-theory"],
];

fn run_cli(config: &Path, out: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_stratmask"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    std::fs::write(&config, TINY_CONFIG).unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for args in SUBCOMMANDS {
        let before: BTreeMap<String, Vec<u8>> = if dirs[0].exists() { csv_files(&dirs[0]) } else { BTreeMap::new() };
        for d in &dirs {
            if let Err(e) = run_cli(&config, d, args) {
                return verdict(false, e);
            }
        }
        let (a, b) = (csv_files(&dirs[0]), csv_files(&dirs[1]));
        let produced: Vec<&String> = a.keys().filter(|k| before.get(*k) != a.get(*k) || !before.contains_key(*k)).collect();
        if produced.is_empty() {
            return verdict(false, format!("{} wrote no CSV", args[0]));
        }
        compared += produced.len();
        if a != b {
            mismatched.push(args[0]);
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{} subcommands, {compared} CSV files byte-compared, mismatches {mismatched:?}", SUBCOMMANDS.len()),
    )
}

fn main() {
    // cargo passes libtest flags (e.g. --nocapture); none apply here
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().map_or(true, |o| o.contains(&n));
    let mut failed = 0;
    let mut report = |n: u32, name: &str, v: Verdict| {
        println!("criterion {n} [{name}]: {} - {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    };
    if wanted(1) {
        report(1, "contraction", contraction());
    }
    if wanted(2) {
        report(2, "convergence", convergence());
    }
    if wanted(3) {
        report(3, "gradient check", gradients());
    }
    if wanted(4) {
        report(4, "engine soundness", soundness());
    }
    if wanted(5) {
        report(5, "dqn vs tabular", dqn_matches_tabular());
    }
    if wanted(6) || wanted(7) {
        let (cfg, run, secs) = desk_league();
        if wanted(6) {
            report(6, "lie-weight sweep", lie_sweep(&cfg, &run, secs));
        }
        if wanted(7) {
            report(7, "counterfactual identity", counterfactual_identity(&cfg, &run));
        }
    }
    if wanted(8) {
        report(8, "cli determinism", determinism());
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
