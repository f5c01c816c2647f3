use std::sync::Arc;

use rand::Rng;
use stratmask::maskdqn::{compute_targets, train, DqnConfig, Learner, LearnerEnv, MdpEnv, NoHook, Transition};
use stratmask::nnapprox::{forward_flat, ApproximatorConfig, NetworkParams};
use stratmask::rlcore::{StrategyMask, VectorReward};
use stratmask::seeded_rng;
use stratmask::tabular::{random_mdp, RandomMdpSpec};

fn env(seed: u64, k: usize) -> MdpEnv {
    let spec = RandomMdpSpec {
        n_states: 5,
        n_actions: 3,
        k,
        gamma: 0.9,
        branching: 2,
        n_terminal: 1,
        reward_scale: 1.0,
    };
    MdpEnv::new(random_mdp(&spec, &mut seeded_rng(seed)).unwrap(), 20).unwrap()
}

fn net(seed: u64) -> ApproximatorConfig {
    ApproximatorConfig {
        static_hidden: vec![8],
        recurrent: 2,
        head_hidden: vec![8],
        alpha: 1e-2,
        seed,
        ..ApproximatorConfig::default()
    }
}

fn cfg(episodes: u64, target_period: u64) -> DqnConfig {
    DqnConfig {
        batch: 8,
        capacity: 500,
        episodes,
        target_period,
        gamma: 0.9,
        seed: 4,
        ..DqnConfig::default()
    }
}

#[test]
fn zero_episodes_leave_params_at_init() {
    let mut e = env(1, 2);
    let mask = StrategyMask::ones(2).unwrap();
    let out = train(&mut e, &mut NoHook, &net(3), &cfg(0, 10), &mask).unwrap();
    assert_eq!(out.params, NetworkParams::init(e.shape(), &net(3)).unwrap());
    assert!(out.metrics.is_empty());
}

#[test]
fn target_period_one_keeps_target_in_sync() {
    let mut e = env(2, 2);
    let mask = StrategyMask::ones(2).unwrap();
    let mut learner = Learner::new(e.shape(), &net(1), cfg(40, 1)).unwrap();
    for _ in 0..40 {
        learner.run_episodes(&mut e, &mut NoHook, &mask, 1).unwrap();
        assert_eq!(learner.params(), learner.target_params());
    }
    assert!(learner.learner_steps() > 0);
}

#[test]
fn target_lags_between_syncs() {
    let mut e = env(2, 2);
    let mask = StrategyMask::ones(2).unwrap();
    let mut learner = Learner::new(e.shape(), &net(1), cfg(40, 1_000_000)).unwrap();
    let init = learner.params().clone();
    learner.run_episodes(&mut e, &mut NoHook, &mask, 40).unwrap();
    assert_eq!(learner.target_params(), &init);
    assert_ne!(learner.params(), &init);
}

#[test]
fn frozen_buffer_loss_decreases_on_average() {
    let mut e = env(3, 3);
    let mask = StrategyMask::unlabeled(vec![1.0, -0.5, 0.0]).unwrap();
    // Fill the buffer with a handful of episodes, then train without new data.
    let no_updates = DqnConfig {
        train_every: u64::MAX,
        ..cfg(20, 1_000_000)
    };
    let mut learner = Learner::new(e.shape(), &net(5), no_updates).unwrap();
    learner.run_episodes(&mut e, &mut NoHook, &mask, 20).unwrap();
    assert_eq!(learner.learner_steps(), 0);
    let losses: Vec<f64> = (0..100).map(|_| learner.learn_step(&mask).unwrap()).collect();
    let head: f64 = losses[..20].iter().sum::<f64>() / 20.0;
    let tail: f64 = losses[80..].iter().sum::<f64>() / 20.0;
    assert!(tail < head, "loss {head} → {tail}");
}

#[test]
fn scalar_mask_gives_standard_dqn_targets() {
    let e = env(4, 1);
    let params = NetworkParams::init(e.shape(), &net(6)).unwrap();
    let mask = StrategyMask::ones(1).unwrap();
    let mut rng = seeded_rng(8);
    for s in 0..4 {
        let t = Transition {
            obs: Arc::new(e.observe(s)),
            action: 0,
            reward: VectorReward::new(vec![rng.gen_range(-1.0..1.0)]).unwrap(),
            next_obs: Arc::new(e.observe(s + 1)),
            terminal: false,
            next_legal: vec![],
            seq: 0,
        };
        let q = forward_flat(&params, &t.next_obs).unwrap();
        let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y = compute_targets(&[&t], &params, &mask, 0.9).unwrap();
        assert_eq!(y[0][0], t.reward.components()[0] + 0.9 * max);
    }
}

#[test]
fn training_is_deterministic() {
    let mask = StrategyMask::ones(2).unwrap();
    let run = || train(&mut env(5, 2), &mut NoHook, &net(2), &cfg(30, 16), &mask).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.params, b.params);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn fifo_order_survives_training() {
    let mut e = env(6, 2);
    let mask = StrategyMask::ones(2).unwrap();
    let mut learner = Learner::new(e.shape(), &net(1), cfg(200, 50)).unwrap();
    learner.run_episodes(&mut e, &mut NoHook, &mask, 200).unwrap();
    let seqs: Vec<u64> = learner.buffer().iter().map(|t| t.seq).collect();
    assert_eq!(seqs.len(), 500);
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
}
