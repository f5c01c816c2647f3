//! `stratmask`: experiment harness for masked value learning and Coup leagues.

mod config;
mod output;
mod plot;

use std::collections::BTreeSet;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stratmask::coupenv::{read_log, write_log, LogHeader};
use stratmask::experiments::{
    counterfactual_action_distribution, eval_against_league, lie_weight_sweep, realized_action_histogram,
    refresh_priorities_then_sweep, EvalConfig, HistogramRow, SweepPoint,
};
use stratmask::league::{load_league, run_league_training, save_league, EntryKind, LoadedLeague, MANIFEST_FILE};
use stratmask::maskdqn::{write_metrics_csv, EpisodeMetrics};
use stratmask::rlcore::{StrategyMask, COUP_DIMENSIONS};
use stratmask::tabular::{
    random_mdp, run_contraction_suite, run_convergence_suite, run_tabular_training, LearningSchedule, TabularMdp,
    TabularRunConfig, TdAlgorithm,
};
use stratmask::{derive_seed, seeded_rng};

use config::FileConfig;
use output::Writer;
use plot::Series;

/// Bad invocation or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "stratmask", version, about = "Strategy-masked value learning experiments")]
struct Cli {
    /// TOML experiment config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// csv always; json additionally writes a .json mirror of each table
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write SVG charts
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Masked TD(0) on a tabular MDP, traced against the value-iteration optimum
    TrainTabular {
        /// MDP text file; a random MDP from the [tabular] config otherwise
        #[arg(long)]
        mdp: Option<PathBuf>,
        /// sarsa | expected-sarsa | q-learning
        #[arg(long)]
        algo: Option<TdAlgorithm>,
        /// Comma-separated mask weights
        #[arg(long, allow_hyphen_values = true)]
        mask: Option<String>,
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Train a champion and exploiters with PFSP and save the league
    TrainLeague {
        #[arg(long)]
        periods: Option<u64>,
        /// Champion episodes per period
        #[arg(long)]
        period: Option<u64>,
        #[arg(long)]
        exploiter_episodes: Option<u64>,
    },
    /// Greedy evaluation of the champion against its league
    Eval {
        /// League manifest (default <out-dir>/league/league.json)
        #[arg(long)]
        league: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        mask: Option<String>,
        #[arg(long)]
        games: Option<u64>,
        /// Write every learner decision and move to game_log.ndjson
        #[arg(long)]
        record: bool,
    },
    /// Re-decide logged positions under other masks
    Counterfactual {
        /// Game log (default <out-dir>/game_log.ndjson)
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        league: Option<PathBuf>,
        /// id=w1,w2,w3,w4 (repeatable; replaces the configured masks)
        #[arg(long = "mask", allow_hyphen_values = true)]
        masks: Vec<String>,
    },
    /// Win and lie rates as the lie weight varies
    Sweep {
        #[arg(long)]
        league: Option<PathBuf>,
        /// Integer range lo..hi (inclusive) or a comma list
        #[arg(long, allow_hyphen_values = true)]
        weights: Option<String>,
        #[arg(long)]
        games: Option<u64>,
        /// Rebuild PFSP priorities with uniform opponents first and sweep again
        #[arg(long)]
        refresh: bool,
    },
    /// Contraction and convergence checks on random MDPs
    VerifyTheory {
        #[arg(long)]
        mdps: Option<usize>,
        #[arg(long)]
        triples: Option<usize>,
        #[arg(long)]
        convergence_mdps: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = config::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let mut out = Writer::new(&cli.out_dir, cli.format)?;
    let ctx = Ctx {
        cfg: &cfg,
        seed,
        out_dir: &cli.out_dir,
        plot: cli.plot,
    };
    match cli.command {
        Command::TrainTabular { mdp, algo, mask, steps } => train_tabular(&ctx, &mut out, mdp, algo, mask, steps)?,
        Command::TrainLeague {
            periods,
            period,
            exploiter_episodes,
        } => train_league(&ctx, &mut out, periods, period, exploiter_episodes)?,
        Command::Eval {
            league,
            mask,
            games,
            record,
        } => eval(&ctx, &mut out, league, mask, games, record)?,
        Command::Counterfactual { log, league, masks } => counterfactual(&ctx, &mut out, log, league, masks)?,
        Command::Sweep {
            league,
            weights,
            games,
            refresh,
        } => sweep(&ctx, &mut out, league, weights, games, refresh)?,
        Command::VerifyTheory {
            mdps,
            triples,
            convergence_mdps,
            steps,
        } => verify_theory(&ctx, &mut out, mdps, triples, convergence_mdps, steps)?,
    }
    out.report();
    Ok(())
}

struct Ctx<'a> {
    cfg: &'a FileConfig,
    seed: u64,
    out_dir: &'a Path,
    plot: bool,
}

impl Ctx<'_> {
    fn league(&self, path: Option<PathBuf>) -> anyhow::Result<(LoadedLeague, stratmask::nnapprox::NetworkParams)> {
        let path = path.unwrap_or_else(|| self.out_dir.join("league").join(MANIFEST_FILE));
        if !path.exists() {
            return Err(usage(format!("league manifest {} not found (run train-league first)", path.display())));
        }
        let mut league = load_league(&path).with_context(|| format!("loading {}", path.display()))?;
        let champion = league
            .champion
            .take()
            .ok_or_else(|| anyhow::anyhow!("{} has no champion checkpoint", path.display()))?;
        Ok((league, champion))
    }

    fn eval_config(&self, games: u64) -> EvalConfig {
        EvalConfig {
            games,
            seed: self.seed,
            env: self.cfg.league.env,
            record: false,
        }
    }
}

pub fn parse_weights(s: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || usage(format!("bad weights {s:?}: expected lo..hi or a comma list"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).map(|w| w as f64).collect());
    }
    let w: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if w.is_empty() || w.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(w)
}

fn parse_mask4(s: &str) -> anyhow::Result<[f64; 4]> {
    let w = parse_weights(s)?;
    w.as_slice()
        .try_into()
        .map_err(|_| usage(format!("mask {s:?} needs 4 weights (Win, Challenge, Lie, Bait)")))
}

fn parse_named_mask(s: &str) -> anyhow::Result<(String, [f64; 4])> {
    let (id, w) = s.split_once('=').ok_or_else(|| usage(format!("mask {s:?}: expected id=w1,w2,w3,w4")))?;
    Ok((id.to_string(), parse_mask4(w)?))
}

fn num(x: f64) -> String {
    x.to_string()
}

fn train_tabular(
    ctx: &Ctx,
    out: &mut Writer,
    mdp_path: Option<PathBuf>,
    algo: Option<TdAlgorithm>,
    mask: Option<String>,
    steps: Option<u64>,
) -> anyhow::Result<()> {
    let t = &ctx.cfg.tabular;
    let mdp = match mdp_path.or_else(|| t.mdp.clone()) {
        Some(p) => {
            if !p.exists() {
                return Err(usage(format!("MDP file {} not found", p.display())));
            }
            TabularMdp::load(&p)?
        }
        None => random_mdp(&t.random_spec(), &mut seeded_rng(derive_seed(ctx.seed, 1)))?,
    };
    let weights = match mask {
        Some(s) => parse_weights(&s)?,
        None => t.mask.clone().unwrap_or_else(|| vec![1.0; mdp.k()]),
    };
    if weights.len() != mdp.k() {
        return Err(usage(format!("mask has {} weights, the MDP has {} reward dimensions", weights.len(), mdp.k())));
    }
    let mask = StrategyMask::unlabeled(weights)?;
    let algo = algo.unwrap_or(t.algorithm);
    let schedule = LearningSchedule::new(t.alpha0, t.rho, t.epsilon)?;
    let run_cfg = TabularRunConfig {
        steps: steps.unwrap_or(t.steps),
        max_episode_len: t.max_episode_len,
        checkpoints: t.checkpoints,
    };
    let run = run_tabular_training(&mdp, algo, &mask, &schedule, &run_cfg, derive_seed(ctx.seed, 2))?;
    println!("{algo:?}: final sup distance {:.3e} after {} steps", run.final_distance(), run_cfg.steps);

    let rows: Vec<Vec<String>> = run
        .trace
        .iter()
        .map(|p| vec![p.step.to_string(), p.episode.to_string(), num(p.sup_distance)])
        .collect();
    out.table("tabular_trace", &["step", "episode", "sup_distance"], &rows, &run.trace)?;

    let k = mdp.k();
    let mut header: Vec<String> = vec!["state".into(), "action".into()];
    header.extend((0..k).map(|d| format!("q{d}")));
    header.extend(["masked".into(), "optimum".into()]);
    let masked = run.q.scalarized(&mask)?;
    #[derive(Serialize)]
    struct QRow {
        state: usize,
        action: usize,
        q: Vec<f64>,
        masked: f64,
        optimum: f64,
    }
    let mut q_rows = Vec::new();
    let mut json = Vec::new();
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            let q = run.q.get(s, a).to_vec();
            let mut r = vec![s.to_string(), a.to_string()];
            r.extend(q.iter().map(|&v| num(v)));
            r.extend([num(masked.get(s, a)), num(run.optimum.get(s, a))]);
            q_rows.push(r);
            json.push(QRow {
                state: s,
                action: a,
                q,
                masked: masked.get(s, a),
                optimum: run.optimum.get(s, a),
            });
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.table("tabular_q", &header, &q_rows, &json)?;

    if ctx.plot {
        let pts = run
            .trace
            .iter()
            .map(|p| (p.step as f64, p.sup_distance.max(1e-300).log10()))
            .collect();
        let svg = plot::line_chart(
            "Distance to the masked optimum",
            "step",
            "log10 sup distance",
            &[Series {
                name: format!("{algo:?}"),
                points: pts,
            }],
        );
        out.file("tabular_trace.svg", &svg)?;
    }
    Ok(())
}

fn rolling_win_rate(metrics: &[EpisodeMetrics], window: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let wins: Vec<f64> = metrics.iter().map(|m| f64::from(u8::from(m.won == Some(true)))).collect();
    let step = (metrics.len() / 200).max(1);
    for end in (window..=metrics.len()).step_by(step) {
        let rate = wins[end - window..end].iter().sum::<f64>() / window as f64;
        pts.push((metrics[end - 1].episode as f64, 100.0 * rate));
    }
    pts
}

fn train_league(ctx: &Ctx, out: &mut Writer, periods: Option<u64>, period: Option<u64>, exploiter: Option<u64>) -> anyhow::Result<()> {
    let mut lc = ctx.cfg.league.clone();
    if let Some(p) = periods {
        lc.periods = p;
    }
    if let Some(p) = period {
        lc.pfsp.checkpoint_period = p;
    }
    if exploiter.is_some() {
        lc.exploiter_episodes = exploiter;
    }
    lc.dqn.seed = ctx.seed;
    lc.net.seed = derive_seed(ctx.seed, 3);
    lc.validate().map_err(|e| usage(format!("league config: {e}")))?;
    let start = Instant::now();
    let run = run_league_training(&lc, &mut |p| {
        let who = match p.kind {
            EntryKind::ChampionCheckpoint => "champion",
            EntryKind::MainExploiter => "exploiter",
        };
        eprintln!(
            "period {} {who}: {} episodes, win rate {:.1}% ({:.0}s)",
            p.period,
            p.episodes,
            100.0 * p.win_rate,
            start.elapsed().as_secs_f64()
        );
    })?;
    let dir = ctx.out_dir.join("league");
    let manifest = save_league(&dir, &run.roster, &run.tracker, Some(&run.champion))?;
    out.written.push(manifest);
    let labels: Vec<String> = COUP_DIMENSIONS.iter().map(|s| s.to_string()).collect();
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, &labels, &run.metrics)?;
    out.file("train_metrics.csv", std::str::from_utf8(&buf)?)?;
    if out.format == Format::Json {
        #[derive(Serialize)]
        struct Entry {
            id: u64,
            kind: EntryKind,
            created_episode: u64,
            win_rate: Option<f64>,
            games: usize,
        }
        let entries = run
            .roster
            .entries()
            .iter()
            .map(|e| {
                // the last exploiter joins after the champion's final game
                let seen = run.tracker.is_registered(e.id);
                Ok(Entry {
                    id: e.id,
                    kind: e.kind,
                    created_episode: e.created_episode,
                    win_rate: if seen { Some(run.tracker.win_rate(e.id)?) } else { None },
                    games: if seen { run.tracker.games(e.id) } else { 0 },
                })
            })
            .collect::<stratmask::Result<Vec<_>>>()?;
        out.file("league_summary.json", &(serde_json::to_string_pretty(&entries)? + "\n"))?;
    }
    if ctx.plot {
        let window = (run.metrics.len() / 20).clamp(1, 1000);
        let svg = plot::line_chart(
            "Champion training win rate",
            "episode",
            &format!("win % (rolling {window})"),
            &[Series {
                name: "champion".into(),
                points: rolling_win_rate(&run.metrics, window),
            }],
        );
        out.file("train_winrate.svg", &svg)?;
    }
    Ok(())
}

fn eval(ctx: &Ctx, out: &mut Writer, league: Option<PathBuf>, mask: Option<String>, games: Option<u64>, record: bool) -> anyhow::Result<()> {
    let (league, champion) = ctx.league(league)?;
    let weights = match mask {
        Some(s) => parse_mask4(&s)?,
        None => ctx.cfg.eval.mask,
    };
    let mask = StrategyMask::coup(weights)?;
    let ecfg = EvalConfig {
        record,
        ..ctx.eval_config(games.unwrap_or(ctx.cfg.eval.games))
    };
    let res = eval_against_league(&champion, &league.roster, &league.tracker, &ctx.cfg.league.pfsp, &mask, &ecfg)?;
    let r = &res.report;
    println!(
        "{} games: win {:.2}%, draws {}, lies {}/{} claims ({:.2}%)",
        r.games,
        100.0 * r.win_rate,
        r.draws,
        r.lie_moves,
        r.claim_moves,
        100.0 * r.lie_fraction
    );
    let rows: Vec<Vec<String>> = r
        .dimensions
        .iter()
        .zip(&r.totals)
        .zip(&r.shares_pct)
        .map(|((d, t), s)| vec![d.clone(), num(*t), num(*s)])
        .collect();
    out.table("eval", &["dimension", "total", "share_pct"], &rows, r)?;
    let rows: Vec<Vec<String>> = r
        .actions
        .iter()
        .map(|a| vec![a.action_type.clone(), a.is_lie.to_string(), a.count.to_string()])
        .collect();
    out.table("eval_actions", &["action_type", "is_lie", "count"], &rows, &r.actions)?;
    if record {
        let mut buf = Vec::new();
        write_log(&mut buf, &LogHeader::new(ctx.cfg.league.env.game.n_players), &res.log)?;
        out.file("game_log.ndjson", std::str::from_utf8(&buf)?)?;
    }
    if ctx.plot {
        let svg = plot::bar_chart(
            "Reward share by dimension",
            "% of reward",
            &r.dimensions,
            &[("champion".into(), r.shares_pct.clone())],
        );
        out.file("eval_shares.svg", &svg)?;
    }
    Ok(())
}

fn histogram_rows(rows: &[HistogramRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| vec![r.mask_id.clone(), r.action_type.clone(), r.is_lie.to_string(), r.count.to_string()])
        .collect()
}

fn counterfactual(ctx: &Ctx, out: &mut Writer, log: Option<PathBuf>, league: Option<PathBuf>, masks: Vec<String>) -> anyhow::Result<()> {
    let log_path = log.unwrap_or_else(|| ctx.out_dir.join("game_log.ndjson"));
    let file = std::fs::File::open(&log_path)
        .map_err(|e| usage(format!("cannot open game log {}: {e} (run eval --record first)", log_path.display())))?;
    let (header, records) = read_log(BufReader::new(file)).with_context(|| format!("reading {}", log_path.display()))?;
    let (_, champion) = ctx.league(league)?;
    let named: Vec<(String, [f64; 4])> = if masks.is_empty() {
        ctx.cfg.counterfactual.masks.iter().map(|m| (m.id.clone(), m.weights)).collect()
    } else {
        masks.iter().map(|s| parse_named_mask(s)).collect::<anyhow::Result<_>>()?
    };
    if named.iter().any(|(id, _)| id == "realized") {
        bail!(usage("mask id \"realized\" is reserved for the logged actions"));
    }
    let masks: Vec<(String, StrategyMask)> = named
        .into_iter()
        .map(|(id, w)| Ok((id, StrategyMask::coup(w)?)))
        .collect::<stratmask::Result<_>>()?;
    let mut rows = realized_action_histogram(&records, header.n_players, "realized")?;
    rows.extend(counterfactual_action_distribution(&records, &champion, &masks, header.n_players)?);
    let decisions: u64 = rows.iter().filter(|r| r.mask_id == "realized").map(|r| r.count).sum();
    println!("{decisions} logged decisions re-evaluated under {} masks", masks.len());
    out.table("counterfactual", &["mask_id", "action_type", "is_lie", "count"], &histogram_rows(&rows), &rows)?;
    if ctx.plot {
        let buckets: BTreeSet<(String, bool)> = rows.iter().map(|r| (r.action_type.clone(), r.is_lie)).collect();
        let buckets: Vec<(String, bool)> = buckets.into_iter().collect();
        let ids: Vec<String> = std::iter::once("realized".to_string()).chain(masks.iter().map(|m| m.0.clone())).collect();
        let series = ids
            .iter()
            .map(|id| {
                let v = buckets
                    .iter()
                    .map(|(t, l)| {
                        rows.iter()
                            .find(|r| &r.mask_id == id && &r.action_type == t && r.is_lie == *l)
                            .map_or(0.0, |r| r.count as f64)
                    })
                    .collect();
                (id.clone(), v)
            })
            .collect::<Vec<_>>();
        let cats: Vec<String> = buckets
            .iter()
            .map(|(t, l)| if *l { format!("{t} (lie)") } else { t.clone() })
            .collect();
        out.file("counterfactual.svg", &plot::bar_chart("Greedy action under each mask", "decisions", &cats, &series))?;
    }
    Ok(())
}

fn sweep_rows(points: &[SweepPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| vec![num(p.weight), num(p.win_pct), num(p.lie_pct), p.games.to_string()])
        .collect()
}

const SWEEP_HEADER: [&str; 4] = ["weight", "win_pct", "lie_pct", "games"];

fn sweep_chart(title: &str, points: &[SweepPoint]) -> String {
    plot::line_chart(
        title,
        "lie weight",
        "%",
        &[
            Series {
                name: "lie %".into(),
                points: points.iter().map(|p| (p.weight, p.lie_pct)).collect(),
            },
            Series {
                name: "win %".into(),
                points: points.iter().map(|p| (p.weight, p.win_pct)).collect(),
            },
        ],
    )
}

fn sweep(ctx: &Ctx, out: &mut Writer, league: Option<PathBuf>, weights: Option<String>, games: Option<u64>, refresh: bool) -> anyhow::Result<()> {
    let (league, champion) = ctx.league(league)?;
    let weights = match weights {
        Some(s) => parse_weights(&s)?,
        None => ctx.cfg.sweep.weights.clone(),
    };
    let ecfg = ctx.eval_config(games.unwrap_or(ctx.cfg.sweep.games));
    let pfsp = &ctx.cfg.league.pfsp;
    let points = lie_weight_sweep(&champion, &league.roster, &league.tracker, pfsp, &weights, &ecfg)?;
    for p in &points {
        println!("w {:>5}: win {:6.2}%  lie {:6.2}%", p.weight, p.win_pct, p.lie_pct);
    }
    out.table("sweep", &SWEEP_HEADER, &sweep_rows(&points), &points)?;
    if ctx.plot {
        out.file("sweep.svg", &sweep_chart("Lie weight sweep", &points))?;
    }
    if refresh {
        let base = StrategyMask::coup(ctx.cfg.eval.mask)?;
        let r = refresh_priorities_then_sweep(&champion, &league.roster, pfsp, &base, &weights, &ecfg)?;
        println!("after {} priority-refresh games:", r.refresh_games);
        for p in &r.points {
            println!("w {:>5}: win {:6.2}%  lie {:6.2}%", p.weight, p.win_pct, p.lie_pct);
        }
        out.table("sweep_refreshed", &SWEEP_HEADER, &sweep_rows(&r.points), &r.points)?;
        if ctx.plot {
            out.file("sweep_refreshed.svg", &sweep_chart("Lie weight sweep (refreshed priorities)", &r.points))?;
        }
    }
    Ok(())
}

fn verify_theory(
    ctx: &Ctx,
    out: &mut Writer,
    mdps: Option<usize>,
    triples: Option<usize>,
    conv_mdps: Option<usize>,
    steps: Option<u64>,
) -> anyhow::Result<()> {
    let th = &ctx.cfg.theory;
    let contraction = run_contraction_suite(ctx.seed, mdps.unwrap_or(th.mdps), triples.unwrap_or(th.triples))?;
    let violations: usize = contraction.iter().map(|r| r.violations).sum();
    let samples: usize = contraction.iter().map(|r| r.samples).sum();
    let max_ratio = contraction.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    println!("contraction: {violations} violations in {samples} samples, max ratio to gamma {max_ratio:.6}");
    let rows: Vec<Vec<String>> = contraction
        .iter()
        .map(|r| {
            vec![
                r.mdp_index.to_string(),
                r.n_states.to_string(),
                r.n_actions.to_string(),
                r.k.to_string(),
                num(r.gamma),
                r.samples.to_string(),
                r.violations.to_string(),
                num(r.max_ratio),
            ]
        })
        .collect();
    out.table(
        "contraction",
        &["mdp_index", "n_states", "n_actions", "k", "gamma", "samples", "violations", "max_ratio"],
        &rows,
        &contraction,
    )?;

    let steps = steps.unwrap_or(th.convergence_steps);
    let conv = run_convergence_suite(ctx.seed, conv_mdps.unwrap_or(th.convergence_mdps), steps)?;
    let worst = conv.iter().map(|r| r.final_distance).fold(0.0, f64::max);
    println!("convergence: worst final sup distance {worst:.3e} after {steps} steps");
    let rows: Vec<Vec<String>> = conv
        .iter()
        .map(|r| {
            let mask: Vec<String> = r.mask.iter().map(|&w| num(w)).collect();
            vec![
                r.mdp_index.to_string(),
                r.n_states.to_string(),
                r.n_actions.to_string(),
                r.k.to_string(),
                num(r.gamma),
                mask.join(" "),
                r.steps.to_string(),
                num(r.final_distance),
            ]
        })
        .collect();
    out.table(
        "convergence",
        &["mdp_index", "n_states", "n_actions", "k", "gamma", "mask", "steps", "final_distance"],
        &rows,
        &conv,
    )?;
    let rows: Vec<Vec<String>> = conv
        .iter()
        .flat_map(|r| {
            r.trace
                .iter()
                .map(move |p| vec![r.mdp_index.to_string(), p.step.to_string(), num(p.sup_distance)])
        })
        .collect();
    let trace_json: Vec<_> = conv.iter().map(|r| (r.mdp_index, &r.trace)).collect();
    out.table("convergence_trace", &["mdp_index", "step", "sup_distance"], &rows, &trace_json)?;
    if ctx.plot {
        let series: Vec<Series> = conv
            .iter()
            .map(|r| Series {
                name: format!("mdp {}", r.mdp_index),
                points: r
                    .trace
                    .iter()
                    .map(|p| (p.step as f64, p.sup_distance.max(1e-300).log10()))
                    .collect(),
            })
            .collect();
        out.file(
            "convergence.svg",
            &plot::line_chart("Masked Q-learning convergence", "step", "log10 sup distance", &series),
        )?;
    }
    if violations > 0 {
        bail!("{violations} contraction violations");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_syntax() {
        assert_eq!(parse_weights("-2..1").unwrap(), vec![-2.0, -1.0, 0.0, 1.0]);
        assert_eq!(parse_weights("0.5, -1").unwrap(), vec![0.5, -1.0]);
        for bad in ["", "1..", "3..1", "a,b", "inf"] {
            let e = parse_weights(bad).unwrap_err();
            assert!(e.is::<UsageError>(), "{bad}");
        }
        assert_eq!(parse_named_mask("x=1,0,-1,0").unwrap(), ("x".to_string(), [1.0, 0.0, -1.0, 0.0]));
        assert!(parse_named_mask("1,0,0,0").is_err());
        assert!(parse_mask4("1,0").is_err());
    }

    #[test]
    fn cli_parses_hyphen_ranges() {
        let cli = Cli::try_parse_from(["stratmask", "sweep", "--weights", "-5..5", "--games", "10"]).unwrap();
        match cli.command {
            Command::Sweep { weights, games, .. } => {
                assert_eq!(weights.as_deref(), Some("-5..5"));
                assert_eq!(games, Some(10));
            }
            _ => panic!(),
        }
        assert!(Cli::try_parse_from(["stratmask", "--format", "xml", "eval"]).is_err());
    }
}
