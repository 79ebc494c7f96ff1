//! Shared fixtures for the benchmarks.

use mfcache::radio::{dbm_to_watts, mean_field_rate};
use mfcache::{ContentParams, InitialDensity, Lattice, PopularityInit, RadioEnvironment, SolverConfig, TerminalCondition};

/// Dense-network environment: 23 dBm transmit power, -70 dBm noise, 5.64 km ball.
pub fn environment(sbs_density: f64, user_density: f64) -> RadioEnvironment {
    RadioEnvironment::new(
        sbs_density,
        user_density,
        dbm_to_watts(23.0),
        4.0,
        16384,
        dbm_to_watts(-70.0),
        10.0 / std::f64::consts::PI.sqrt() * 1e3,
    )
    .expect("valid environment")
}

/// Solver inputs for one content on an `n × n` lattice.
pub fn solver_fixture(n: usize) -> (Lattice, SolverConfig, Vec<f64>) {
    let content = ContentParams {
        file_size: 1.0,
        discard_rate: 0.1,
        backhaul: 1.0,
        capacity: 1.0,
        storage_weight: -0.1,
        similar_contents: 20.0,
        reversion_rate: 1.0,
        volatility: 0.1,
        mean_popularity: 0.3,
    };
    let rate = mean_field_rate(&environment(0.05, 1e-4)).expect("rate");
    let mut cfg = SolverConfig::new(content, rate);
    cfg.terminal = TerminalCondition::HoldStorage;
    cfg.damping = 1.0;
    let lat = cfg.stable_lattice(n, n, 1.0).expect("lattice");
    let m0 = InitialDensity {
        popularity: PopularityInit::Point(0.3),
        storage_mean: 0.7,
        storage_sd: 0.05,
    }
    .discretize(&lat)
    .expect("initial density");
    (lat, cfg, m0)
}
