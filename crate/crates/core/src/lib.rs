//! Reward decomposition and strategy masking for value-based agents.
//!
//! The crate is split by concern:
//!
//! - [`rlcore`]: decomposed values, strategy masks and masked ε-greedy policies.
//! - [`tabular`]: masked TD(0) learners on finite MDPs plus the contraction and
//!   convergence verifiers.
//! - [`nnapprox`]: a small recurrent Q-network with hand-written gradients.
//! - [`maskdqn`]: masked DQN (replay buffer, lagged target parameters, training loop).
//! - [`coupenv`]: a complete Coup rules engine with decomposed rewards.
//! - [`league`]: league play with prioritized fictitious self-play.
//! - [`experiments`]: evaluation, counterfactual action analysis and mask sweeps.

pub mod coupenv;
pub mod error;
pub mod experiments;
pub mod league;
pub mod maskdqn;
pub mod nnapprox;
pub mod rlcore;
pub mod tabular;

pub use error::{Error, Result};

/// Builds the crate's standard seeded generator.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a base seed and an index (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub type Rng = rand_chacha::ChaCha8Rng;
