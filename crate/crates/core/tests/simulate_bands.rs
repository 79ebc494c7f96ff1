use mfcache::rng::stream;
use mfcache::simulate::synthetic_ledgers;
use mfcache::aggregate;

fn mean_final_width(n: usize, trials: u64) -> f64 {
    (0..trials)
        .map(|t| {
            let mut rng = stream(53, &[n as u64, t]);
            aggregate(&synthetic_ledgers(n, &mut rng)).unwrap().final_lra().width()
        })
        .sum::<f64>()
        / trials as f64
}

#[test]
fn band_width_shrinks_like_inverse_root_n() {
    let w: Vec<f64> = [5, 20, 80].iter().map(|&n| mean_final_width(n, 400)).collect();
    // Quadrupling n halves the width, up to the small-sample bias of s.
    assert!((w[0] / w[1] - 2.0).abs() < 0.2, "{w:?}");
    assert!((w[1] / w[2] - 2.0).abs() < 0.2, "{w:?}");
}

#[test]
fn bands_contain_their_mean() {
    let mut rng = stream(59, &[]);
    let s = aggregate(&synthetic_ledgers(12, &mut rng)).unwrap();
    for b in &s.lra {
        assert!(b.lo <= b.mean && b.mean <= b.hi);
    }
    assert_eq!(s.replications, 12);
}
