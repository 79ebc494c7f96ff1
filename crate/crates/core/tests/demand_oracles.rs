use approx::assert_relative_eq;
use mfcache::rng::stream;
use mfcache::{crp_sample_request, expected_distinct_files, ou_step, CrpState, DemandState, OuParams};

#[test]
fn closed_form_distinct_counts() {
    assert_relative_eq!(expected_distinct_files(10_000, 1.0, 0.5).unwrap(), 225.675_833_419_102_5, max_relative = 1e-12);
    assert_relative_eq!(expected_distinct_files(10_000, 1.0, 0.0).unwrap(), 9.210_440_366_976_516, max_relative = 1e-12);
}

fn mean_distinct(discount: f64, requests: u64, runs: u64) -> f64 {
    let total: usize = (0..runs)
        .map(|r| {
            let mut rng = stream(17, &[r, (discount * 100.0) as u64]);
            let mut crp = CrpState::new(50_000, 1.0, discount).unwrap();
            for _ in 0..requests {
                crp_sample_request(&mut crp, &mut rng);
            }
            crp.requested_count()
        })
        .sum();
    total as f64 / runs as f64
}

#[test]
fn crp_distinct_files_track_the_asymptote() {
    for discount in [0.0, 0.5] {
        let empirical = mean_distinct(discount, 10_000, 100);
        let expected = expected_distinct_files(10_000, 1.0, discount).unwrap();
        assert_relative_eq!(empirical, expected, max_relative = 0.10);
    }
}

#[test]
fn crp_popularities_form_a_distribution() {
    let mut rng = stream(3, &[]);
    let mut crp = CrpState::new(20, 1.0, 0.5).unwrap();
    for _ in 0..500 {
        crp.sample_request(&mut rng);
        let total: f64 = crp.mean_popularities().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn ou_stationary_variance() {
    let params = OuParams::new(1.0, 0.1, 0.5, 0.01).unwrap();
    let mut samples = Vec::new();
    for chain in 0..10 {
        let mut rng = stream(29, &[chain]);
        let mut state = DemandState::new(vec![0.5]);
        for step in 0..101_000 {
            state = ou_step(&state, &[params], &mut rng);
            if step >= 1_000 {
                samples.push(state.x[0]);
            }
        }
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert_relative_eq!(mean, 0.5, epsilon = 0.01);
    assert_relative_eq!(var, params.stationary_variance(), max_relative = 0.05);
}

#[test]
fn ou_paths_stay_in_the_unit_interval() {
    let params = OuParams::new(0.5, 2.0, 0.5, 0.05).unwrap();
    let mut rng = stream(31, &[]);
    let mut state = DemandState::new(vec![0.0, 1.0, 0.5]);
    for _ in 0..5_000 {
        state = ou_step(&state, &[params; 3], &mut rng);
        assert!(state.x.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
