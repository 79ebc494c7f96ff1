//! Monte-Carlo evaluation of caching policies on sampled networks.
//!
//! Each replication draws a network on a torus window, tags the SBS nearest
//! to a typical user at the window center, and evolves the tagged SBS and
//! its neighbors within the request range. The tagged SBS accrues cost; the
//! neighbors supply the content overlap.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::demand::OuParams;
use crate::error::{invalid, Result};
use crate::model::ContentParams;
use crate::policies::{decide, observe_popularity, DecisionContext, IpiModel, PolicyKind};
use crate::radio::{sample_network, Area, NetworkRealization, RadioEnvironment};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub env: RadioEnvironment,
    pub window: Area,
    /// `R_c`, radius around the user inside which SBSs count as neighbors.
    pub request_range: f64,
    pub content: ContentParams,
    /// Average rate `ℛ` used in the cost.
    pub rate: f64,
    pub initial_popularity: f64,
    pub initial_storage_mean: f64,
    /// Spread of the neighbors' initial storage; the tagged SBS starts at
    /// the mean.
    pub initial_storage_sd: f64,
    pub horizon: f64,
    pub dt: f64,
    pub replications: usize,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.content.validate()?;
        if !(self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0) {
            return Err(invalid("horizon", format!("must be nonnegative, got {}", self.horizon)));
        }
        let ratio = self.horizon / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(invalid("dt", format!("{} does not divide the horizon {}", self.dt, self.horizon)));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "need at least one"));
        }
        if !(self.request_range >= 0.0) {
            return Err(invalid("request_range", "must be nonnegative"));
        }
        if !(self.rate > 0.0) {
            return Err(invalid("rate", format!("must be positive, got {}", self.rate)));
        }
        if !(0.0..=1.0).contains(&self.initial_popularity) {
            return Err(invalid("initial_popularity", "must lie in [0, 1]"));
        }
        if !(self.initial_storage_sd >= 0.0) {
            return Err(invalid("initial_storage_sd", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// State of one SBS for the simulated content.
#[derive(Debug, Clone, PartialEq)]
pub struct SbsState {
    pub position: [f64; 2],
    /// True request probability.
    pub popularity: f64,
    /// Remaining storage `Q`.
    pub storage: f64,
    /// Fractions cached so far, one per step.
    pub fractions: Vec<f64>,
}

/// `clip(Q + (e − L·p)·dt, 0, C)`.
pub fn step_storage(q: f64, p: f64, content: &ContentParams, dt: f64) -> f64 {
    (q + (content.discard_rate - content.file_size * p) * dt).clamp(0.0, content.capacity)
}

impl SbsState {
    pub fn step_storage(&mut self, p: f64, content: &ContentParams, dt: f64) {
        self.fractions.push(p);
        self.storage = step_storage(self.storage, p, content, dt);
    }
}

/// Instantaneous cost of the tagged SBS.
pub fn instantaneous_cost(p: f64, q: f64, x: f64, overlap: f64, rate: f64, content: &ContentParams) -> Result<f64> {
    content.running_cost(p, q, x, overlap, rate)
}

/// Indices of SBSs within `range` of `user`, nearest first.
pub fn neighbor_set(real: &NetworkRealization, user: [f64; 2], range: f64) -> Vec<usize> {
    real.sbs_within(user, range).into_iter().map(|(k, _)| k).collect()
}

/// Overlap seen by `tagged`: `Σ p_i / (C·N_r)` over `neighbors` other than
/// `tagged`, with `fractions` indexed by SBS.
pub fn empirical_overlap(fractions: &[f64], neighbors: &[usize], tagged: usize, content: &ContentParams) -> f64 {
    let sum: f64 = neighbors.iter().filter(|&&i| i != tagged).map(|&i| fractions[i]).sum();
    sum / (content.capacity * content.similar_contents)
}

/// Per-replication record of the tagged SBS.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostLedger {
    pub times: Vec<f64>,
    pub costs: Vec<f64>,
    /// Running trapezoidal integral of `costs`.
    pub lra: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub fractions: Vec<f64>,
    pub storage: Vec<f64>,
    pub barrier_hits: usize,
    pub neighbors: usize,
}

impl CostLedger {
    fn push(&mut self, t: f64, cost: f64, overlap: f64, p: f64, q: f64) {
        let lra = match (self.times.last(), self.costs.last(), self.lra.last()) {
            (Some(&t0), Some(&c0), Some(&l0)) => l0 + 0.5 * (t - t0) * (c0 + cost),
            _ => 0.0,
        };
        self.times.push(t);
        self.costs.push(cost);
        self.lra.push(lra);
        self.overlaps.push(overlap);
        self.fractions.push(p);
        self.storage.push(q);
    }

    pub fn final_lra(&self) -> f64 {
        self.lra.last().copied().unwrap_or(0.0)
    }

    /// Time-averaged overlap.
    pub fn mean_overlap(&self) -> f64 {
        if self.overlaps.is_empty() {
            return 0.0;
        }
        self.overlaps.iter().sum::<f64>() / self.overlaps.len() as f64
    }
}

const NETWORK_STREAM: u64 = 0;
const DEMAND_STREAM: u64 = 1;
const STORAGE_STREAM: u64 = 2;
const IPI_STREAM: u64 = 3;
const POLICY_STREAM: u64 = 4;

/// One replication under `policy`. Network, popularity paths and initial
/// storage depend only on `seed`, so different policies run with common
/// random numbers.
pub fn run_replication(cfg: &SimConfig, policy: &PolicyKind, ipi: &IpiModel, seed: u64) -> Result<CostLedger> {
    cfg.validate()?;
    let content = cfg.content;
    let ctx = DecisionContext {
        content,
        rate: cfg.rate,
    };
    let mut net_rng = stream(seed, &[NETWORK_STREAM]);
    let real = sample_network(&cfg.env, cfg.window, &mut net_rng);
    let user = cfg.window.center();
    let Some(&(tagged, _)) = real.sbs_within(user, f64::INFINITY).first() else {
        return Err(crate::error::Error::NoCoverage);
    };
    let mut members = vec![tagged];
    members.extend(neighbor_set(&real, user, cfg.request_range).into_iter().filter(|&k| k != tagged));
    let neighbors = &members[1..];

    let mut storage_rng = stream(seed, &[STORAGE_STREAM]);
    let spread = (cfg.initial_storage_sd > 0.0).then(|| Normal::new(0.0, cfg.initial_storage_sd).expect("validated sd"));
    let mut sbs: Vec<SbsState> = members
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            let jitter = match (&spread, slot) {
                (Some(normal), s) if s > 0 => normal.sample(&mut storage_rng),
                _ => 0.0,
            };
            SbsState {
                position: real.sbs_positions[k],
                popularity: cfg.initial_popularity,
                storage: (cfg.initial_storage_mean + jitter).clamp(0.0, content.capacity),
                fractions: Vec::new(),
            }
        })
        .collect();

    let ou = OuParams {
        reversion_rate: content.reversion_rate,
        volatility: content.volatility,
        mean: content.mean_popularity,
        dt: cfg.dt,
    };
    let mut demand_rng = stream(seed, &[DEMAND_STREAM]);
    let mut ipi_rng = stream(seed, &[IPI_STREAM]);
    let mut policy_rng = match policy {
        PolicyKind::UniformRandom { seed: s } => stream(seed, &[POLICY_STREAM, *s]),
        _ => stream(seed, &[POLICY_STREAM]),
    };
    let mut fractions = vec![0.0; real.sbs_positions.len()];
    let mut ledger = CostLedger {
        neighbors: neighbors.len(),
        ..CostLedger::default()
    };
    let steps = cfg.steps();
    for n in 0..=steps {
        let t = n as f64 * cfg.dt;
        for (state, &k) in sbs.iter().zip(&members) {
            let seen = observe_popularity(state.popularity, ipi, &mut ipi_rng);
            fractions[k] = decide(policy, seen, state.storage, t, &ctx, &mut policy_rng)?;
        }
        let overlap = empirical_overlap(&fractions, neighbors, tagged, &content);
        let me = &sbs[0];
        let p = fractions[tagged];
        let cost = match instantaneous_cost(p, me.storage, me.popularity, overlap, cfg.rate, &content) {
            Ok(c) => c,
            Err(err) => {
                ledger.barrier_hits += 1;
                return Err(err);
            }
        };
        ledger.push(t, cost, overlap, p, me.storage);
        if n == steps {
            break;
        }
        for (state, &k) in sbs.iter_mut().zip(&members) {
            state.step_storage(fractions[k], &content, cfg.dt);
            let w: f64 = StandardNormal.sample(&mut demand_rng);
            state.popularity = ou.step_with(state.popularity, w);
        }
    }
    Ok(ledger)
}

/// Replications `0..cfg.replications` in parallel, each seeded from the
/// master seed and its index.
pub fn run_replications(cfg: &SimConfig, policy: &PolicyKind, ipi: &IpiModel) -> Result<Vec<CostLedger>> {
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, policy, ipi, replication_seed(cfg.master_seed, r)))
        .collect()
}

pub fn replication_seed(master: u64, replication: usize) -> u64 {
    derive_seed(master, &[replication as u64])
}

/// Mean with a 95% normal-approximation band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.iter().all(|&v| v == values[0]) {
            let mean = values[0];
            return Self { mean, lo: mean, hi: mean };
        }
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let half = 1.96 * (var / n).sqrt();
        Self {
            mean,
            lo: mean - half,
            hi: mean + half,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &Band) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Cross-replication summary of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub times: Vec<f64>,
    pub lra: Vec<Band>,
    pub overlap: Band,
    pub replications: usize,
}

impl Summary {
    pub fn final_lra(&self) -> Band {
        *self.lra.last().expect("at least one time sample")
    }
}

/// Pointwise LRA bands and the band of time-averaged overlap.
pub fn aggregate(ledgers: &[CostLedger]) -> Result<Summary> {
    let first = ledgers.first().ok_or_else(|| invalid("ledgers", "need at least one ledger"))?;
    if ledgers.iter().any(|l| l.lra.len() != first.lra.len()) {
        return Err(invalid("ledgers", "ledgers cover different time grids"));
    }
    let lra = (0..first.lra.len())
        .map(|n| Band::from_samples(&ledgers.iter().map(|l| l.lra[n]).collect::<Vec<_>>()))
        .collect();
    let overlap = Band::from_samples(&ledgers.iter().map(CostLedger::mean_overlap).collect::<Vec<_>>());
    Ok(Summary {
        times: first.times.clone(),
        lra,
        overlap,
        replications: ledgers.len(),
    })
}

/// Draw `n` i.i.d. synthetic ledgers; used to exercise aggregation.
#[doc(hidden)]
pub fn synthetic_ledgers<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<CostLedger> {
    (0..n)
        .map(|_| {
            let mut l = CostLedger::default();
            let level: f64 = StandardNormal.sample(rng);
            for k in 0..5 {
                l.push(k as f64 * 0.25, 1.0 + level, 0.1, 0.0, 0.5);
            }
            l
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_params;
    use crate::radio::dbm_to_watts;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small_config() -> SimConfig {
        let env = RadioEnvironment::new(0.05, 1e-4, dbm_to_watts(23.0), 4.0, 1024, dbm_to_watts(-70.0), 5641.9).unwrap();
        SimConfig {
            env,
            window: Area::new(100.0, 100.0).unwrap(),
            request_range: 10.0,
            content: sample_params(),
            rate: 2.0,
            initial_popularity: 0.3,
            initial_storage_mean: 0.7,
            initial_storage_sd: 0.05,
            horizon: 1.0,
            dt: 0.01,
            replications: 4,
            master_seed: 11,
        }
    }

    #[test]
    fn storage_steps() {
        let c = sample_params();
        assert_eq!(step_storage(0.4, 0.1, &c, 0.5), 0.4);
        assert_relative_eq!(step_storage(0.5, 0.0, &c, 1.0), 0.6);
        assert_eq!(step_storage(1.0, 0.0, &c, 1.0), 1.0);
    }

    #[test]
    fn overlap_arithmetic() {
        let c = sample_params();
        let fractions = [0.9, 0.5, 0.5, 0.0];
        assert_relative_eq!(empirical_overlap(&fractions, &[0, 1, 2], 0, &c), 0.05);
        assert_eq!(empirical_overlap(&[0.0; 4], &[0, 1, 2, 3], 0, &c), 0.0);
        assert_eq!(empirical_overlap(&fractions, &[], 0, &c), 0.0);
        let doubled: Vec<f64> = fractions.iter().map(|p| p * 2.0).collect();
        assert_relative_eq!(
            empirical_overlap(&doubled, &[0, 1, 2], 0, &c),
            2.0 * empirical_overlap(&fractions, &[0, 1, 2], 0, &c)
        );
    }

    #[test]
    fn idle_policy_pays_only_storage() {
        let mut c = sample_params();
        c.storage_weight = 0.5;
        assert_relative_eq!(instantaneous_cost(0.0, 0.2, 0.3, 0.1, 1.0, &c).unwrap(), 0.4);
        assert_eq!(instantaneous_cost(0.0, 1.0, 0.3, 0.1, 1.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn zero_horizon_costs_nothing() {
        let mut cfg = small_config();
        cfg.horizon = 0.0;
        let l = run_replication(&cfg, &PolicyKind::Baseline, &IpiModel::perfect(), 1).unwrap();
        assert_eq!(l.lra, vec![0.0]);
    }

    #[test]
    fn frozen_state_gives_linear_lra() {
        let mut cfg = small_config();
        cfg.content.reversion_rate = 0.0;
        cfg.content.volatility = 0.0;
        cfg.content.discard_rate = 0.0;
        cfg.content.storage_weight = 0.3;
        // B = 0.5 and rate·x = 0.3 keep the baseline idle, so nothing moves.
        cfg.content.backhaul = 0.5;
        cfg.rate = 1.0;
        let l = run_replication(&cfg, &PolicyKind::Baseline, &IpiModel::perfect(), 5).unwrap();
        assert!(l.fractions.iter().all(|&p| p == 0.0));
        let c = l.costs[0];
        assert!(l.costs.iter().all(|&v| v == c));
        assert!((l.final_lra() - c * cfg.horizon).abs() < 1e-12);
        assert_eq!(l.barrier_hits, 0);
    }

    #[test]
    fn ledger_lra_is_trapezoid_of_costs() {
        let cfg = small_config();
        let l = run_replication(&cfg, &PolicyKind::Baseline, &IpiModel::perfect(), 9).unwrap();
        let mut acc = 0.0;
        for n in 1..l.costs.len() {
            acc += 0.5 * cfg.dt * (l.costs[n] + l.costs[n - 1]);
            assert!((l.lra[n] - acc).abs() <= 1e-12);
        }
    }

    #[test]
    fn replications_are_reproducible() {
        let cfg = small_config();
        let kind = PolicyKind::UniformRandom { seed: 3 };
        let a = run_replications(&cfg, &kind, &IpiModel::perfect()).unwrap();
        let b = run_replications(&cfg, &kind, &IpiModel::perfect()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_degenerate_bands() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one = synthetic_ledgers(1, &mut rng);
        let s = aggregate(&one).unwrap();
        assert_eq!(s.final_lra().width(), 0.0);
        assert_eq!(s.final_lra().mean, one[0].final_lra());
        let same = vec![one[0].clone(); 6];
        assert_eq!(aggregate(&same).unwrap().final_lra().width(), 0.0);
        assert!(aggregate(&[]).is_err());
    }
}
