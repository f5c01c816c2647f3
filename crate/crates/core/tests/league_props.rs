use proptest::prelude::*;
use stratmask::coupenv::CoupEnvConfig;
use stratmask::league::{
    pfsp_probabilities, run_league_training, EntryKind, LeagueConfig, PfspConfig, WinRateTracker,
};
use stratmask::maskdqn::{DqnConfig, EpsilonSchedule};
use stratmask::nnapprox::ApproximatorConfig;

fn tracker(outcomes: &[Vec<bool>]) -> (Vec<u64>, WinRateTracker) {
    let mut t = WinRateTracker::new(50);
    for (id, games) in outcomes.iter().enumerate() {
        t.register(id as u64);
        for &w in games {
            t.record(&[id as u64], w).unwrap();
        }
    }
    ((0..outcomes.len() as u64).collect(), t)
}

fn outcomes() -> impl Strategy<Value = Vec<Vec<bool>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), 0..20), 1..8)
}

proptest! {
    #[test]
    fn probabilities_sum_to_one(o in outcomes(), z in 0.0f64..12.0) {
        let (ids, t) = tracker(&o);
        let p = pfsp_probabilities(&ids, &t, z).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn larger_z_favours_the_hardest(o in outcomes(), z in 0.0f64..8.0, dz in 0.0f64..4.0) {
        let (ids, t) = tracker(&o);
        let rates: Vec<f64> = ids.iter().map(|&i| t.win_rate(i).unwrap()).collect();
        let hardest = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let mass = |z: f64| -> f64 {
            let p = pfsp_probabilities(&ids, &t, z).unwrap();
            p.iter().zip(&rates).filter(|(_, &r)| r == hardest).map(|(p, _)| p).sum()
        };
        prop_assert!(mass(z + dz) >= mass(z) - 1e-12);
    }

    #[test]
    fn zero_z_is_uniform(o in outcomes()) {
        let (ids, t) = tracker(&o);
        let p = pfsp_probabilities(&ids, &t, 0.0).unwrap();
        let u = 1.0 / ids.len() as f64;
        prop_assert!(p.iter().all(|&x| (x - u).abs() < 1e-12));
    }
}

fn tiny_league(seed: u64) -> LeagueConfig {
    LeagueConfig {
        pfsp: PfspConfig { checkpoint_period: 15, window: 20, ..PfspConfig::default() },
        periods: 3,
        exploiter_episodes: Some(10),
        train_mask: [1.0, 0.0, 0.0, 0.0],
        net: ApproximatorConfig {
            static_hidden: vec![8],
            recurrent: 4,
            head_hidden: vec![8],
            seed,
            ..ApproximatorConfig::default()
        },
        dqn: DqnConfig {
            batch: 8,
            capacity: 2_000,
            target_period: 20,
            epsilon: EpsilonSchedule::default(),
            train_every: 2,
            seed,
            ..DqnConfig::default()
        },
        env: CoupEnvConfig::default(),
    }
}

#[test]
fn league_counts_and_determinism() {
    let cfg = tiny_league(4);
    let mut log = Vec::new();
    let a = run_league_training(&cfg, &mut |p| log.push(p.clone())).unwrap();
    assert_eq!(a.roster.count(EntryKind::ChampionCheckpoint), 3);
    assert_eq!(a.roster.count(EntryKind::MainExploiter), 3);
    assert_eq!(a.metrics.len(), 45);
    assert!(a.exploiter_metrics.iter().all(|m| m.len() == 10));
    assert_eq!(log.len(), 6);
    a.roster.verify().unwrap();
    let b = run_league_training(&cfg, &mut |_| {}).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.roster.ids(), b.roster.ids());
    let fa: Vec<&str> = a.roster.entries().iter().map(|e| e.fingerprint()).collect();
    let fb: Vec<&str> = b.roster.entries().iter().map(|e| e.fingerprint()).collect();
    assert_eq!(fa, fb);
    // the champion has played league entries, so the tracker has data
    assert!(a.roster.ids().iter().any(|&id| a.tracker.games(id) > 0));
}
