use approx::assert_relative_eq;
use mfcache::solver::io::{read_grid, write_grid};
use mfcache::{
    optimal_caching_fraction, solve_fpk_forward, solve_mfe, ContentParams, Field, InitialDensity, Lattice,
    PopularityInit, SolverConfig, TerminalCondition,
};
use proptest::prelude::*;

fn content(reversion_rate: f64, volatility: f64, mean_popularity: f64) -> ContentParams {
    ContentParams {
        file_size: 1.0,
        discard_rate: 0.1,
        backhaul: 1.0,
        capacity: 1.0,
        storage_weight: -0.1,
        similar_contents: 20.0,
        reversion_rate,
        volatility,
        mean_popularity,
    }
}

/// x-marginal moments of a slice.
fn popularity_moments(lat: &Lattice, m: &[f64]) -> (f64, f64) {
    let weights: Vec<f64> = (0..lat.nx)
        .map(|i| (0..lat.nq).map(|k| m[lat.idx(i, k)]).sum::<f64>())
        .collect();
    let total: f64 = weights.iter().sum();
    let mean = (0..lat.nx).map(|i| weights[i] * lat.x(i)).sum::<f64>() / total;
    let var = (0..lat.nx).map(|i| weights[i] * (lat.x(i) - mean).powi(2)).sum::<f64>() / total;
    (mean, var)
}

#[test]
fn fpk_relaxes_to_the_ou_stationary_law() {
    let c = content(1.0, 0.1, 0.5);
    let cfg = SolverConfig::new(c, 1.0);
    let lat = cfg.stable_lattice(256, 4, 3.0).unwrap();
    let hold = Field::constant(lat, c.discard_rate / c.file_size);
    let m0 = InitialDensity {
        popularity: PopularityInit::Point(0.3),
        storage_mean: 0.5,
        storage_sd: 0.1,
    }
    .discretize(&lat)
    .unwrap();
    let sol = solve_fpk_forward(&lat, &hold, &cfg, &m0).unwrap();
    let (mean, var) = popularity_moments(&lat, sol.density.slice(lat.nt));
    let target = 0.01 / 2.0 * (1.0 - (-2.0 * 3.0f64).exp());
    assert_relative_eq!(mean, 0.5 - 0.2 * (-3.0f64).exp(), epsilon = 2e-3);
    assert_relative_eq!(var, target, max_relative = 0.05);
    assert!(sol.max_mass_drift <= 1e-3);
}

#[test]
fn grid_dump_round_trips_a_solution() {
    let mut cfg = SolverConfig::new(content(1.0, 0.1, 0.3), 4.0);
    cfg.terminal = TerminalCondition::HoldStorage;
    cfg.damping = 1.0;
    let lat = cfg.stable_lattice(16, 16, 1.0).unwrap();
    let m0 = InitialDensity {
        popularity: PopularityInit::Point(0.3),
        storage_mean: 0.7,
        storage_sd: 0.05,
    }
    .discretize(&lat)
    .unwrap();
    let sol = solve_mfe(&lat, &cfg, &m0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.grid");
    write_grid(&path, &sol.policy, "policy").unwrap();
    let (header, back) = read_grid(&path).unwrap();
    assert_eq!(header.dims, [lat.nt + 1, 16, 16]);
    assert_eq!(back.data(), sol.policy.data());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_control_beats_a_scan(
        x in 0.001f64..1.0,
        q in 0.0f64..1.0,
        overlap in 0.0f64..2.0,
        rate in 0.1f64..10.0,
        dv in -5.0f64..50.0,
        backhaul in 0.2f64..2.0,
    ) {
        let mut c = content(1.0, 0.1, 0.3);
        c.backhaul = backhaul;
        let objective = |p: f64| c.running_cost(p, q, x, overlap, rate).unwrap() + dv * (c.discard_rate - c.file_size * p);
        let p_star = optimal_caching_fraction(&c, overlap, rate, x, dv, 1e-6);
        prop_assert!((0.0..=c.max_fraction()).contains(&p_star));
        let best = (0..1000)
            .map(|j| objective(c.max_fraction() * j as f64 / 999.0))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(objective(p_star) <= best + 1e-6);
    }
}
