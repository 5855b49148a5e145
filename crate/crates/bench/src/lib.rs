//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use ch_core::borsuk_ulam::from_tucker_general;
use ch_core::harness::{grid_instance, single_instance, two_agent_instance};
use ch_core::reductions::bu_to_ch;
use ch_core::tucker::random_instance;
use ch_core::{ChInstance, PiecewiseConstantValuation, Valuation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 0;

/// Monotone single-agent instance with its Lipschitz parameter.
pub fn single() -> (Valuation, f64) {
    let (_, v) = single_instance(SEED, 0);
    let l = v.lipschitz();
    (v, l)
}

/// Two-agent instance (monotone, general) with the shared Lipschitz parameter.
pub fn pair() -> (Valuation, Valuation, f64) {
    let (_, a, b) = two_agent_instance(SEED, 0);
    let l = a.lipschitz().max(b.lipschitz());
    (a, b, l)
}

/// Additive `n`-agent instance at `L/ε = ratio`.
pub fn grid(n: usize, ratio: f64) -> ChInstance {
    let agents = grid_instance(SEED, n, 0);
    let l = agents.iter().map(Valuation::lipschitz).fold(0.0, f64::max);
    ChInstance::new(agents, l / ratio, Some(l)).expect("valid parameters")
}

/// Induced instance of a seeded 2D Tucker instance under the general
/// construction at `ε = 0.2`.
pub fn pipeline(grid: usize) -> ChInstance {
    let t = Arc::new(random_instance(2, grid, SEED).expect("valid shape"));
    let (f, _) = from_tucker_general(t, 0.2).expect("valid ε");
    bu_to_ch(Arc::new(f), 0.2).expect("valid ε")
}

pub fn piecewise_constant(n: usize, regions: usize) -> Vec<PiecewiseConstantValuation> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..n).map(|_| PiecewiseConstantValuation::random(&mut rng, regions)).collect()
}
