use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{compute_targets, DqnConfig, ReplayBuffer, Transition};
use crate::nnapprox::{forward_flat, loss_and_gradient, ApproximatorConfig, NetShape, NetworkParams, Observation, Optimizer, TrainSample};
use crate::rlcore::{masked_argmax_flat, StrategyMask, VectorReward};
use crate::{derive_seed, seeded_rng, Error, Result, Rng};

/// Result of one learner action.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: VectorReward,
    pub next_obs: Observation,
    /// `s′` is absorbing: bootstrap zero.
    pub terminal: bool,
    /// Episode cut short (time limit); `s′` still bootstraps.
    pub truncated: bool,
    /// Actions available at `s′`; empty means every action.
    pub next_legal: Vec<usize>,
}

/// Single-learner view of an environment: everything between two of the
/// learner's decisions happens inside `step`.
pub trait LearnerEnv {
    fn shape(&self) -> NetShape;

    /// Starts an episode and returns the learner's first observation and legal actions.
    fn reset(&mut self, seed: u64) -> Result<(Observation, Vec<usize>)>;

    fn step(&mut self, action: usize) -> Result<StepOutcome>;

    /// Whether the learner won the episode that just finished, when that means anything.
    fn won(&self) -> Option<bool> {
        None
    }
}

/// Callbacks around each training episode (opponent selection, result bookkeeping).
pub trait TrainingHook<E: ?Sized> {
    fn before_episode(&mut self, _episode: u64, _env: &mut E, _online: &NetworkParams) -> Result<()> {
        Ok(())
    }

    fn after_episode(&mut self, _env: &mut E, _metrics: &EpisodeMetrics) -> Result<()> {
        Ok(())
    }
}

pub struct NoHook;

impl<E: ?Sized> TrainingHook<E> for NoHook {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: u64,
    /// Per-dimension reward collected by the learner.
    pub reward: Vec<f64>,
    pub won: Option<bool>,
    /// Mean loss over the learner steps taken this episode.
    pub loss: Option<f64>,
    pub epsilon: f64,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: NetworkParams,
    pub metrics: Vec<EpisodeMetrics>,
}

/// Online and target parameters, optimizer state and replay buffer.
/// Kept as a value so training can resume across league periods.
#[derive(Debug, Clone)]
pub struct Learner {
    online: NetworkParams,
    target: NetworkParams,
    optimizer: Optimizer,
    buffer: ReplayBuffer,
    cfg: DqnConfig,
    rng: Rng,
    learner_steps: u64,
    env_steps: u64,
    episodes_done: u64,
}

impl Learner {
    pub fn new(shape: NetShape, net: &ApproximatorConfig, cfg: DqnConfig) -> Result<Self> {
        net.validate()?;
        Self::from_params(NetworkParams::init(shape, net)?, net, cfg)
    }

    pub fn from_params(params: NetworkParams, net: &ApproximatorConfig, cfg: DqnConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            target: params.clone(),
            optimizer: Optimizer::new(net.optimizer, net.alpha, net.clip_norm, params.len())?,
            online: params,
            buffer: ReplayBuffer::new(cfg.capacity)?,
            rng: seeded_rng(derive_seed(cfg.seed, u64::MAX)),
            cfg,
            learner_steps: 0,
            env_steps: 0,
            episodes_done: 0,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.online
    }

    pub fn target_params(&self) -> &NetworkParams {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn config(&self) -> &DqnConfig {
        &self.cfg
    }

    pub fn learner_steps(&self) -> u64 {
        self.learner_steps
    }

    pub fn episodes_done(&self) -> u64 {
        self.episodes_done
    }

    pub fn greedy_action(&self, obs: &Observation, legal: &[usize], mask: &StrategyMask) -> Result<usize> {
        greedy(&self.online, obs, legal, mask)
    }

    /// Masked ε-greedy: with probability ε a uniform legal action, else the masked argmax.
    pub fn select_action(&mut self, obs: &Observation, legal: &[usize], mask: &StrategyMask, epsilon: f64) -> Result<usize> {
        let n = if legal.is_empty() { self.online.shape().n_actions } else { legal.len() };
        if epsilon > 0.0 && self.rng.gen::<f64>() < epsilon {
            let i = self.rng.gen_range(0..n);
            return Ok(if legal.is_empty() { i } else { legal[i] });
        }
        self.greedy_action(obs, legal, mask)
    }

    /// One batched update on a replay sample; syncs the target every C steps.
    pub fn learn_step(&mut self, mask: &StrategyMask) -> Result<f64> {
        let batch = self.buffer.sample(self.cfg.batch, &mut self.rng)?;
        let targets = compute_targets(&batch, &self.target, mask, self.cfg.gamma)?;
        let samples: Vec<TrainSample> = batch
            .iter()
            .zip(&targets)
            .map(|(t, y)| TrainSample {
                obs: &t.obs,
                action: t.action,
                target: y,
            })
            .collect();
        let (loss, mut grad) = loss_and_gradient(&self.online, &samples)?;
        self.optimizer.step(&mut self.online, &mut grad)?;
        self.learner_steps += 1;
        if self.learner_steps % self.cfg.target_period == 0 {
            self.target.copy_from(&self.online)?;
        }
        Ok(loss)
    }

    /// Plays `n` episodes, storing transitions and updating as configured.
    pub fn run_episodes<E, H>(&mut self, env: &mut E, hook: &mut H, mask: &StrategyMask, n: u64) -> Result<Vec<EpisodeMetrics>>
    where
        E: LearnerEnv + ?Sized,
        H: TrainingHook<E> + ?Sized,
    {
        let shape = env.shape();
        if shape != self.online.shape() {
            return Err(Error::Shape(format!("environment {shape:?} vs network {:?}", self.online.shape())));
        }
        if mask.k() != shape.k {
            return Err(Error::LengthMismatch {
                expected: shape.k,
                actual: mask.k(),
            });
        }
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let episode = self.episodes_done;
            let epsilon = self.cfg.epsilon.at(episode, self.cfg.episodes);
            hook.before_episode(episode, env, &self.online)?;
            let (first, mut legal) = env.reset(derive_seed(self.cfg.seed, episode))?;
            let mut obs = Arc::new(first);
            let mut total = VectorReward::zeros(shape.k);
            let (mut loss_sum, mut loss_n, mut steps) = (0.0, 0u64, 0u64);
            loop {
                let action = self.select_action(&obs, &legal, mask, epsilon)?;
                let o = env.step(action)?;
                total.add_assign(&o.reward)?;
                steps += 1;
                self.env_steps += 1;
                let next = Arc::new(o.next_obs);
                self.buffer.push(Transition {
                    obs: Arc::clone(&obs),
                    action,
                    reward: o.reward,
                    next_obs: Arc::clone(&next),
                    terminal: o.terminal,
                    next_legal: o.next_legal.clone(),
                    seq: 0,
                });
                if self.buffer.len() >= self.cfg.batch && self.env_steps % self.cfg.train_every == 0 {
                    loss_sum += self.learn_step(mask)?;
                    loss_n += 1;
                }
                if o.terminal || o.truncated {
                    break;
                }
                obs = next;
                legal = o.next_legal;
            }
            let m = EpisodeMetrics {
                episode,
                reward: total.components().to_vec(),
                won: env.won(),
                loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
                epsilon,
                steps,
            };
            self.episodes_done += 1;
            hook.after_episode(env, &m)?;
            out.push(m);
        }
        Ok(out)
    }
}

fn greedy(params: &NetworkParams, obs: &Observation, legal: &[usize], mask: &StrategyMask) -> Result<usize> {
    let q = forward_flat(params, obs)?;
    let legal = (!legal.is_empty()).then_some(legal);
    masked_argmax_flat(&q, params.shape().k, mask.weights(), legal)
}

/// Runs `cfg.episodes` episodes from a fresh initialization.
pub fn train<E, H>(env: &mut E, hook: &mut H, net: &ApproximatorConfig, cfg: &DqnConfig, mask_train: &StrategyMask) -> Result<TrainOutput>
where
    E: LearnerEnv + ?Sized,
    H: TrainingHook<E> + ?Sized,
{
    let mut learner = Learner::new(env.shape(), net, cfg.clone())?;
    let metrics = learner.run_episodes(env, hook, mask_train, cfg.episodes)?;
    Ok(TrainOutput {
        params: learner.online,
        metrics,
    })
}

pub const METRICS_VERSION: u32 = 1;

/// Writes `# metrics v1` then `episode,reward_<label>..,win,loss,epsilon,steps`.
/// `win` is 1/0 or empty; `loss` is empty before the first update.
pub fn write_metrics_csv<W: Write>(mut w: W, labels: &[String], metrics: &[EpisodeMetrics]) -> std::io::Result<()> {
    writeln!(w, "# metrics v{METRICS_VERSION}")?;
    write!(w, "episode")?;
    for l in labels {
        write!(w, ",reward_{}", l.to_lowercase())?;
    }
    writeln!(w, ",win,loss,epsilon,steps")?;
    for m in metrics {
        write!(w, "{}", m.episode)?;
        for r in &m.reward {
            write!(w, ",{r}")?;
        }
        let win = m.won.map(|b| if b { "1" } else { "0" }).unwrap_or("");
        let loss = m.loss.map(|l| l.to_string()).unwrap_or_default();
        writeln!(w, ",{win},{loss},{},{}", m.epsilon, m.steps)?;
    }
    Ok(())
}
