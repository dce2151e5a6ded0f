//! Fixtures shared by the simulation benchmarks.

use mirl_core::agents::{AgentConfig, AgentVariant};
use mirl_core::harness::RunConfig;
use mirl_core::missingness::MissingnessSpec;
use mirl_core::tabular::{t_update_synthetic, TransitionCounts};
use rand::{Rng, SeedableRng};

/// One trial of `horizon` steps at MCAR rate `theta` with wind and flood 0.1.
pub fn trial_config(variant: AgentVariant, k: usize, theta: f64, horizon: u64) -> RunConfig {
    let mut agent = AgentConfig::new(variant);
    agent.k = k;
    let mut cfg = RunConfig::new(agent);
    cfg.horizon = horizon;
    cfg.trials = 1;
    cfg.env.params.wind_prob = 0.1;
    cfg.env.params.flood_prob = 0.1;
    cfg.missingness = MissingnessSpec::mcar(theta);
    cfg
}

/// Transition counts filled with `updates` random synthetic updates over
/// the 192 full states and 8 actions.
pub fn filled_counts(updates: usize, k: usize, seed: u64) -> TransitionCounts {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut t = TransitionCounts::new(192, 8);
    for _ in 0..updates {
        let a = rng.random_range(0..8);
        let pairs: Vec<(usize, usize)> = (0..k)
            .map(|_| (rng.random_range(0..192), rng.random_range(0..192)))
            .collect();
        t_update_synthetic(&mut t, &pairs, a, k);
    }
    t
}
