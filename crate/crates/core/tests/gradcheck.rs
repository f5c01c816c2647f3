use rand::Rng;
use stratmask::nnapprox::{loss_and_gradient, ApproximatorConfig, NetShape, NetworkParams, Observation, TrainSample};
use stratmask::seeded_rng;

// about the cube root of machine epsilon, which balances rounding against truncation error
const STEP: f64 = 6e-6;

/// Relative error with the denominator floored so coordinates whose true
/// gradient is ~0 are judged on an absolute scale.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn random_case(seed: u64) -> (NetworkParams, Vec<(Observation, usize, Vec<f64>)>) {
    let mut rng = seeded_rng(seed);
    let shape = NetShape {
        static_dim: rng.gen_range(2..5),
        event_dim: rng.gen_range(2..4),
        n_actions: rng.gen_range(2..4),
        k: rng.gen_range(1..4),
    };
    let cfg = ApproximatorConfig {
        static_hidden: vec![rng.gen_range(2..5)],
        recurrent: rng.gen_range(2..4),
        head_hidden: vec![rng.gen_range(2..5)],
        seed: seed.wrapping_mul(31),
        ..ApproximatorConfig::default()
    };
    let init = NetworkParams::init(shape, &cfg).unwrap();
    // Random biases too: zero biases on zero inputs park ReLUs exactly on their kink.
    let values = init.values().iter().map(|v| v + rng.gen_range(-0.3..0.3)).collect();
    let params = NetworkParams::from_values(init.layout().clone(), values).unwrap();
    let batch = (0..3)
        .map(|_| {
            let stat = (0..shape.static_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = rng.gen_range(0..5);
            let events: Vec<Vec<f64>> = (0..len)
                .map(|_| (0..shape.event_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let obs = Observation::with_events(stat, shape.event_dim, &events).unwrap();
            let a = rng.gen_range(0..shape.n_actions);
            let y = (0..shape.k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            (obs, a, y)
        })
        .collect();
    (params, batch)
}

/// Largest relative error over every parameter coordinate.
pub fn max_relative_error(seed: u64) -> f64 {
    let (params, data) = random_case(seed);
    let batch: Vec<TrainSample> = data
        .iter()
        .map(|(obs, a, y)| TrainSample {
            obs,
            action: *a,
            target: y,
        })
        .collect();
    let (_, grad) = loss_and_gradient(&params, &batch).unwrap();
    let loss_at = |values: Vec<f64>| {
        let p = NetworkParams::from_values(params.layout().clone(), values).unwrap();
        loss_and_gradient(&p, &batch).unwrap().0
    };
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut plus = params.values().to_vec();
        let mut minus = plus.clone();
        plus[i] += STEP;
        minus[i] -= STEP;
        let numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * STEP);
        worst = worst.max(rel_err(grad[i], numeric));
    }
    worst
}

#[test]
fn gradients_match_central_differences() {
    for seed in 0..5 {
        let err = max_relative_error(seed);
        println!("seed {seed}: {err:e}");
        assert!(err < 1e-4, "seed {seed}: max relative error {err:e}");
    }
}
