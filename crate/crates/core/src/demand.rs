//! Content demand: long-term mean popularity from a Chinese restaurant
//! process (with discount) and short-term request-probability fluctuations
//! from a clipped Ornstein-Uhlenbeck process.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};

/// Lower bound applied to request probabilities wherever they divide a cost.
pub const X_FLOOR: f64 = 1e-3;

/// Request history of one SBS over a finite catalog.
///
/// Files with at least one request form the requested set; the rest are
/// unrequested. Sampling never touches more than `O(1)` state per draw.
#[derive(Debug, Clone)]
pub struct CrpState {
    request_counts: Vec<u64>,
    total_requests: u64,
    theta: f64,
    discount: f64,
    /// one entry per past request, used to pick a file proportional to its count
    history: Vec<u32>,
    unrequested: Vec<u32>,
    /// position of each file inside `unrequested`, `u32::MAX` once requested
    slot: Vec<u32>,
}

impl CrpState {
    pub fn new(catalog_size: usize, theta: f64, discount: f64) -> Result<Self> {
        if catalog_size == 0 {
            return Err(invalid("catalog_size", "catalog must hold at least one file"));
        }
        if catalog_size > u32::MAX as usize {
            return Err(invalid("catalog_size", "catalog too large"));
        }
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(invalid("theta", format!("concentration must be positive, got {theta}")));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(invalid("discount", format!("discount must lie in [0,1), got {discount}")));
        }
        Ok(Self {
            request_counts: vec![0; catalog_size],
            total_requests: 0,
            theta,
            discount,
            history: Vec::new(),
            unrequested: (0..catalog_size as u32).collect(),
            slot: (0..catalog_size as u32).collect(),
        })
    }

    /// Rebuild a state from explicit per-file counts.
    pub fn from_counts(counts: &[u64], theta: f64, discount: f64) -> Result<Self> {
        let mut state = Self::new(counts.len(), theta, discount)?;
        for (j, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                state.record(j);
            }
        }
        Ok(state)
    }

    pub fn catalog_size(&self) -> usize {
        self.request_counts.len()
    }

    pub fn request_counts(&self) -> &[u64] {
        &self.request_counts
    }

    pub fn total_requests(&self) -> u64 {
        self.total_requests
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Number of distinct files requested so far.
    pub fn requested_count(&self) -> usize {
        self.catalog_size() - self.unrequested.len()
    }

    fn record(&mut self, j: usize) {
        if self.request_counts[j] == 0 {
            let pos = self.slot[j] as usize;
            let last = *self.unrequested.last().expect("unrequested set is non-empty");
            self.unrequested.swap_remove(pos);
            if pos < self.unrequested.len() {
                self.slot[last as usize] = pos as u32;
            }
            self.slot[j] = u32::MAX;
        }
        self.request_counts[j] += 1;
        self.total_requests += 1;
        self.history.push(j as u32);
    }

    /// Mean popularity of file `j`.
    ///
    /// The new-file mass `(ν|U^r| + θ)/(N + θ)` is shared evenly among the
    /// unrequested files. Once every file has been requested the remaining
    /// weights `n_j - ν` are renormalized over the catalog.
    pub fn mean_popularity(&self, j: usize) -> Result<f64> {
        let size = self.catalog_size();
        let n_j = *self
            .request_counts
            .get(j)
            .ok_or(Error::IndexOutOfRange { index: j, size })?;
        let n = self.total_requests as f64;
        let requested = self.requested_count() as f64;
        let unrequested = self.unrequested.len();
        if unrequested == 0 {
            return Ok((n_j as f64 - self.discount) / (n - self.discount * requested));
        }
        let denom = n + self.theta;
        if n_j > 0 {
            Ok((n_j as f64 - self.discount) / denom)
        } else {
            Ok((self.discount * requested + self.theta) / denom / unrequested as f64)
        }
    }

    /// Full mean-popularity vector.
    pub fn mean_popularities(&self) -> Vec<f64> {
        (0..self.catalog_size())
            .map(|j| self.mean_popularity(j).expect("index in range"))
            .collect()
    }

    /// Draw the next requested file and record it.
    pub fn sample_request<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let n = self.total_requests as f64;
        let requested = self.requested_count() as f64;
        let old_mass = n - self.discount * requested;
        let choose_new = if self.unrequested.is_empty() {
            false
        } else if self.history.is_empty() {
            true
        } else {
            rng.random::<f64>() * (n + self.theta) >= old_mass
        };
        let j = if choose_new {
            self.unrequested[rng.random_range(0..self.unrequested.len())] as usize
        } else {
            // proportional to n_j via a uniform past request, thinned by (n_j - ν)/n_j
            loop {
                let j = self.history[rng.random_range(0..self.history.len())] as usize;
                let n_j = self.request_counts[j] as f64;
                if self.discount == 0.0 || rng.random::<f64>() * n_j < n_j - self.discount {
                    break j;
                }
            }
        };
        self.record(j);
        j
    }
}

/// Sample one request from `state`, updating its counters.
pub fn crp_sample_request<R: Rng + ?Sized>(state: &mut CrpState, rng: &mut R) -> usize {
    state.sample_request(rng)
}

/// Asymptotic mean number of distinct requested files after `total_requests`
/// requests.
pub fn expected_distinct_files(total_requests: u64, theta: f64, discount: f64) -> Result<f64> {
    if discount < 0.0 {
        return Err(invalid("discount", format!("must be non-negative, got {discount}")));
    }
    if total_requests == 0 {
        return Err(invalid("total_requests", "need at least one request"));
    }
    if !(theta > 0.0) {
        return Err(invalid("theta", format!("must be positive, got {theta}")));
    }
    let n = total_requests as f64;
    if discount == 0.0 {
        Ok(theta * (n + theta).ln())
    } else {
        let log_ratio = ln_gamma(theta + 1.0) - ln_gamma(theta + discount);
        Ok(log_ratio.exp() / discount * n.powf(discount))
    }
}

/// Parameters of the mean-reverting request-probability process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub reversion_rate: f64,
    pub volatility: f64,
    pub mean: f64,
    pub dt: f64,
}

impl OuParams {
    pub fn new(reversion_rate: f64, volatility: f64, mean: f64, dt: f64) -> Result<Self> {
        if !(reversion_rate >= 0.0) {
            return Err(invalid("reversion_rate", format!("must be non-negative, got {reversion_rate}")));
        }
        if !(volatility >= 0.0) {
            return Err(invalid("volatility", format!("must be non-negative, got {volatility}")));
        }
        if !(0.0..=1.0).contains(&mean) {
            return Err(invalid("mean", format!("must lie in [0,1], got {mean}")));
        }
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self {
            reversion_rate,
            volatility,
            mean,
            dt,
        })
    }

    /// Euler-Maruyama step driven by a given standard-normal increment,
    /// clipped to `[0, 1]`.
    pub fn step_with(&self, x: f64, w: f64) -> f64 {
        let drift = self.reversion_rate * (self.mean - x) * self.dt;
        let diffusion = self.volatility * self.dt.sqrt() * w;
        (x + drift + diffusion).clamp(0.0, 1.0)
    }

    pub fn step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        if self.volatility == 0.0 {
            return self.step_with(x, 0.0);
        }
        let w: f64 = rng.sample(StandardNormal);
        self.step_with(x, w)
    }

    /// Variance of the continuous-time stationary law, `η²/(2r)`.
    pub fn stationary_variance(&self) -> f64 {
        self.volatility * self.volatility / (2.0 * self.reversion_rate)
    }
}

/// Request probabilities of every tracked content at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandState {
    pub x: Vec<f64>,
    pub t: f64,
}

impl DemandState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, t: 0.0 }
    }
}

/// Advance every content's request probability by one step. `params[j]`
/// drives `state.x[j]`; all entries must share the same `dt`.
pub fn ou_step<R: Rng + ?Sized>(state: &DemandState, params: &[OuParams], rng: &mut R) -> DemandState {
    assert_eq!(state.x.len(), params.len(), "one parameter set per content");
    let x = state
        .x
        .iter()
        .zip(params)
        .map(|(&x, p)| p.step(x, rng))
        .collect();
    let dt = params.first().map_or(0.0, |p| p.dt);
    DemandState { x, t: state.t + dt }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_history_is_uniform() {
        let s = CrpState::new(4, 1.0, 0.5).unwrap();
        for j in 0..4 {
            assert_relative_eq!(s.mean_popularity(j).unwrap(), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_file_arithmetic() {
        let s = CrpState::from_counts(&[5, 0], 1.0, 0.5).unwrap();
        assert_relative_eq!(s.mean_popularity(0).unwrap(), 0.75, epsilon = 1e-15);
        assert_relative_eq!(s.mean_popularity(1).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn requested_and_unrequested_shares() {
        // n_j = 5 among N = 10 with θ = 1, ν = 0.5
        let s = CrpState::from_counts(&[5, 3, 2, 0], 1.0, 0.5).unwrap();
        assert_relative_eq!(s.mean_popularity(0).unwrap(), 4.5 / 11.0, epsilon = 1e-15);
        // |U^r| = 3, |U^u| = 1
        assert_relative_eq!(s.mean_popularity(3).unwrap(), 2.5 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn exhausted_catalog_still_normalizes() {
        let s = CrpState::from_counts(&[3, 1, 2], 1.0, 0.5).unwrap();
        let total: f64 = s.mean_popularities().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CrpState::new(0, 1.0, 0.5).is_err());
        assert!(CrpState::new(3, 0.0, 0.5).is_err());
        assert!(CrpState::new(3, 1.0, 1.0).is_err());
        assert!(expected_distinct_files(10, 1.0, -0.1).is_err());
        let s = CrpState::new(3, 1.0, 0.5).unwrap();
        assert!(matches!(s.mean_popularity(3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn sampling_frequencies_match_mean_popularity() {
        let base = CrpState::from_counts(&[6, 3, 1, 0, 0], 1.0, 0.5).unwrap();
        let probs = base.mean_popularities();
        let draws = 100_000;
        let mut freq = [0u64; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..draws {
            let mut s = base.clone();
            freq[s.sample_request(&mut rng)] += 1;
        }
        for (j, &p) in probs.iter().enumerate() {
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            let emp = freq[j] as f64 / draws as f64;
            assert!((emp - p).abs() < 3.0 * sd, "file {j}: {emp} vs {p}");
        }
    }

    #[test]
    fn distinct_files_log_branch() {
        assert_relative_eq!(
            expected_distinct_files(99, 1.0, 0.0).unwrap(),
            100f64.ln(),
            epsilon = 1e-12
        );
        let a = expected_distinct_files(100, 1.0, 0.0).unwrap();
        let b = expected_distinct_files(1000, 1.0, 0.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn ou_deterministic_steps() {
        let p = OuParams::new(1.0, 0.0, 0.3, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_relative_eq!(p.step(0.3, &mut rng), 0.3, epsilon = 1e-15);
        let p = OuParams::new(1.0, 0.0, 0.4, 0.1).unwrap();
        assert_relative_eq!(p.step(0.2, &mut rng), 0.22, epsilon = 1e-15);
    }

    #[test]
    fn ou_clips_to_unit_interval() {
        let p = OuParams::new(1.0, 1.0, 0.5, 0.1).unwrap();
        assert_eq!(p.step_with(0.99, 10.0), 1.0);
        assert_eq!(p.step_with(0.01, -10.0), 0.0);
    }

    proptest! {
        #[test]
        fn crp_counts_stay_consistent(seed in any::<u64>(), m in 1usize..30, draws in 0usize..300, nu in 0.0f64..0.95) {
            let mut s = CrpState::new(m, 1.0, nu).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..draws {
                s.sample_request(&mut rng);
            }
            prop_assert_eq!(s.request_counts().iter().sum::<u64>(), s.total_requests());
            let total: f64 = s.mean_popularities().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn noiseless_ou_contracts_toward_mean(x0 in 0.0f64..=1.0, mu in 0.0f64..=1.0, r in 0.01f64..5.0, dt in 0.001f64..0.2) {
            prop_assume!(r * dt <= 1.0);
            let p = OuParams::new(r, 0.0, mu, dt).unwrap();
            let mut x = x0;
            for _ in 0..50 {
                let next = p.step_with(x, 0.0);
                prop_assert!((next - mu).abs() <= (x - mu).abs() + 1e-15);
                x = next;
            }
        }
    }
}
