//! Gauss-Laguerre quadrature for expectations over unit-mean exponential
//! variables: `E[f(G)] = ∫₀^∞ f(u) e^{-u} du ≈ Σ wᵢ f(uᵢ)`.

use std::sync::OnceLock;

/// Node count used for rate expectations.
pub const LAGUERRE_NODES: usize = 128;

/// Nodes and weights of the `n`-point rule, found by Newton iteration on the
/// three-term Laguerre recurrence.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = (nf * p1 - nf * p2) / z;
            let z_prev = z;
            z = z_prev - p1 / pp;
            if (z - z_prev).abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = -1.0 / (pp * nf * p2);
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_laguerre(LAGUERRE_NODES))
}

/// `E[f(G)]` for `G ~ Exp(1)`.
pub fn exponential_expectation(f: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = rule();
    nodes.iter().zip(weights).map(|(&u, &w)| w * f(u)).sum()
}

/// `E[log(1 + s·G)]` for `G ~ Exp(1)` and `s ≥ 0`.
pub fn expected_log1p_exponential(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    exponential_expectation(|u| (s * u).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_moments() {
        // ∫ u^k e^{-u} du = k!
        let mut fact = 1.0;
        for k in 0..12 {
            if k > 0 {
                fact *= k as f64;
            }
            let got = exponential_expectation(|u| u.powi(k));
            assert_relative_eq!(got, fact, max_relative = 1e-11);
        }
    }

    #[test]
    fn smallest_nodes_match_reference() {
        // reference values from an independent eigenvalue solver
        let (nodes, _) = gauss_laguerre(128);
        assert_relative_eq!(nodes[0], 0.011251388263676821, max_relative = 1e-10);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }
}
