//! Caching policies: the mean-field equilibrium lookup, the
//! popularity-proportional baseline and uniform random caching, plus the
//! noisy popularity observation model.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::demand::X_FLOOR;
use crate::error::{invalid, Result};
use crate::model::ContentParams;
use crate::solver::PolicyField;

#[derive(Debug, Clone)]
pub enum PolicyKind {
    /// Look up the equilibrium policy of a solved game.
    MeanField(Arc<PolicyField>),
    /// `(1/L)[B − 1/(1 + ℛx)]^+`, blind to overlap.
    Baseline,
    /// Uniform on the feasible interval; `seed` selects the random stream.
    UniformRandom { seed: u64 },
}

impl PolicyKind {
    /// Short label used in file names.
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::MeanField(_) => "mf",
            PolicyKind::Baseline => "baseline",
            PolicyKind::UniformRandom { .. } => "random",
        }
    }
}

/// Everything a policy may look at besides the local state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionContext {
    pub content: ContentParams,
    pub rate: f64,
}

/// Baseline fraction `(1/L)[B − 1/(1 + ℛx)]^+`.
pub fn baseline_fraction(content: &ContentParams, rate: f64, x: f64) -> f64 {
    let level = content.backhaul - 1.0 / (1.0 + rate * x);
    level.max(0.0) / content.file_size
}

/// Caching fraction chosen by `kind` at popularity `x`, remaining storage
/// `q` and time `t`. `rng` is consumed only by the random policy. All
/// outputs pass through the shared feasibility clamp.
pub fn decide<R: Rng + ?Sized>(
    kind: &PolicyKind,
    x: f64,
    q: f64,
    t: f64,
    ctx: &DecisionContext,
    rng: &mut R,
) -> Result<f64> {
    let raw = match kind {
        PolicyKind::MeanField(field) => field.interpolate(t, x, q)?,
        PolicyKind::Baseline => baseline_fraction(&ctx.content, ctx.rate, x),
        PolicyKind::UniformRandom { .. } => rng.random::<f64>() * ctx.content.max_fraction(),
    };
    Ok(ctx.content.feasible(raw))
}

/// Imperfect popularity information: additive Gaussian error on `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpiModel {
    pub bias: f64,
    pub sd: f64,
    pub x_min: f64,
}

impl IpiModel {
    pub fn new(bias: f64, sd: f64) -> Result<Self> {
        if !(sd >= 0.0) || !bias.is_finite() {
            return Err(invalid("ipi", format!("need finite bias and sd >= 0, got bias {bias}, sd {sd}")));
        }
        Ok(Self {
            bias,
            sd,
            x_min: X_FLOOR,
        })
    }

    /// Perfect information.
    pub fn perfect() -> Self {
        Self {
            bias: 0.0,
            sd: 0.0,
            x_min: X_FLOOR,
        }
    }

    pub fn is_perfect(&self) -> bool {
        self.bias == 0.0 && self.sd == 0.0
    }
}

/// Observed popularity `clip(x + Δ, x_min, 1)` with `Δ ~ N(bias, sd²)`.
/// Perfect information returns `x` untouched and draws nothing.
pub fn observe_popularity<R: Rng + ?Sized>(x: f64, ipi: &IpiModel, rng: &mut R) -> f64 {
    if ipi.is_perfect() {
        return x;
    }
    let delta = if ipi.sd > 0.0 {
        Normal::new(ipi.bias, ipi.sd).expect("validated sd").sample(rng)
    } else {
        ipi.bias
    };
    (x + delta).clamp(ipi.x_min, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_params;
    use crate::solver::{Field, Lattice};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(rate: f64) -> DecisionContext {
        DecisionContext {
            content: sample_params(),
            rate,
        }
    }

    #[test]
    fn baseline_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(decide(&PolicyKind::Baseline, 0.0, 0.5, 0.0, &ctx(3.0), &mut rng).unwrap(), 0.0);
        let high = decide(&PolicyKind::Baseline, 1.0, 0.5, 0.0, &ctx(1e9), &mut rng).unwrap();
        assert!(high > 0.999 && high < 1.0);
        assert_relative_eq!(baseline_fraction(&sample_params(), 1.0, 1.0), 0.5);
    }

    #[test]
    fn uniform_random_mean_and_reproducibility() {
        let mut c = ctx(1.0);
        c.content.file_size = 2.0;
        let kind = PolicyKind::UniformRandom { seed: 7 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| decide(&kind, 0.5, 0.5, 0.0, &c, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert_relative_eq!(mean, 0.5 * c.content.max_fraction(), max_relative = 0.01);
        let mut again = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(decide(&kind, 0.5, 0.5, 0.0, &c, &mut again).unwrap(), draws[0]);
    }

    #[test]
    fn mean_field_lookup_and_bounds() {
        let lat = Lattice::new(4, 8, 8, 1.0, 1.0).unwrap();
        let field = Arc::new(Field::constant(lat, 0.3));
        let kind = PolicyKind::MeanField(field);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_relative_eq!(decide(&kind, 0.4, 0.6, 0.5, &ctx(1.0), &mut rng).unwrap(), 0.3);
        assert!(decide(&kind, 0.4, 2.0, 0.5, &ctx(1.0), &mut rng).is_err());
    }

    #[test]
    fn ipi_observation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(observe_popularity(0.37, &IpiModel::perfect(), &mut rng), 0.37);
        let ipi = IpiModel::new(0.2, 0.001).unwrap();
        let seen = observe_popularity(0.3, &ipi, &mut rng);
        assert!((seen - 0.5).abs() < 0.006);
        assert_eq!(observe_popularity(0.95, &ipi, &mut rng), 1.0);
        let low = IpiModel::new(-0.5, 0.0).unwrap();
        assert_eq!(observe_popularity(0.1, &low, &mut rng), X_FLOOR);
        assert!(IpiModel::new(0.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn every_policy_is_feasible(x in 0.0f64..1.0, q in 0.0f64..1.0, t in 0.0f64..1.0,
                                    rate in 0.0f64..100.0, l in 0.1f64..5.0, b in 0.05f64..3.0, seed in 0u64..1000) {
            let mut c = ctx(rate);
            c.content.file_size = l;
            c.content.backhaul = b;
            let lat = Lattice::new(2, 4, 4, 1.0, 1.0).unwrap();
            let kinds = [
                PolicyKind::MeanField(Arc::new(Field::constant(lat, 0.99))),
                PolicyKind::Baseline,
                PolicyKind::UniformRandom { seed },
            ];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for kind in &kinds {
                let p = decide(kind, x, q, t, &c, &mut rng).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!(l * p < b && l * p <= c.content.capacity);
            }
        }

        #[test]
        fn baseline_nondecreasing_in_popularity(x in 0.0f64..1.0, dx in 0.0f64..0.5, rate in 0.0f64..50.0) {
            let c = sample_params();
            prop_assert!(baseline_fraction(&c, rate, (x + dx).min(1.0)) >= baseline_fraction(&c, rate, x));
        }
    }
}
