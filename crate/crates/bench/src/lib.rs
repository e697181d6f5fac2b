//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secbeam::objectives::{ObjectiveVector, RepairOutcome};
use secbeam::optimizer::{cold_population, EvolutionConfig};
use secbeam::scenario::{generate_scenario, Scenario, ScenarioSpec};

/// Desk-scale scenario with `n_uav` UAVs per swarm.
pub fn desk_scenario(n_uav: usize) -> Scenario {
    generate_scenario(
        7,
        &ScenarioSpec {
            n_uav,
            ..ScenarioSpec::desk()
        },
    )
    .expect("desk scenario")
}

pub fn population(s: &Scenario, n: usize) -> Vec<RepairOutcome> {
    let cfg = EvolutionConfig {
        population: n,
        ..EvolutionConfig::desk()
    };
    cold_population(s, &cfg)
}

/// Random points on the sphere octant `g1 < 0`, a rough stand-in for a front.
pub fn random_front(n: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (a, b, c): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            let r = (a * a + b * b + c * c).sqrt().max(1e-9);
            ObjectiveVector::new(-a / r, b / r, c / r)
        })
        .collect()
}
