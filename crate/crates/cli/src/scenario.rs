//! Translation of a run configuration into core model objects.

use mfcache::radio::{dbm_to_watts, mean_field_rate};
use mfcache::rng::{derive_seed, stream};
use mfcache::{
    Area, ContentParams, CrpState, Fading, InitialDensity, IpiModel, Lattice, PopularityInit, RadioEnvironment,
    SimConfig, SolverConfig, TerminalCondition,
};

use crate::config::{FadingName, RunConfig, TerminalName};
use crate::error::{CliError, CliResult};

/// Stream coordinate of the CRP warm-up draw.
const CRP_STREAM: u64 = 0xC12F;

#[derive(Debug, Clone)]
pub struct ContentPlan {
    pub name: String,
    pub params: ContentParams,
    pub solver: SolverConfig,
    pub lattice: Lattice,
    pub initial: InitialDensity,
    pub sim: SimConfig,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub env: RadioEnvironment,
    /// Mean-field average rate `ℛ`.
    pub rate: f64,
    pub contents: Vec<ContentPlan>,
    pub policies: Vec<String>,
    pub ipi: Option<IpiModel>,
    pub seed: u64,
}

impl Scenario {
    pub fn build(cfg: &RunConfig) -> CliResult<Self> {
        let r = &cfg.radio;
        let mut env = RadioEnvironment::new(
            r.sbs_density_per_m2,
            r.user_density_per_m2,
            dbm_to_watts(r.tx_power_dbm),
            r.pathloss_exponent,
            r.antennas,
            dbm_to_watts(r.noise_dbm),
            r.reception_radius_m,
        )?;
        env.fading = match r.fading {
            FadingName::Rayleigh => Fading::Rayleigh,
            FadingName::Deterministic => Fading::Deterministic,
        };
        let rate = mean_field_rate(&env)?;
        let window = Area::new(cfg.sim.window_m, cfg.sim.window_m)?;
        let means = crp_means(cfg)?;
        let ipi = match &cfg.ipi {
            Some(s) => Some(IpiModel::new(s.bias, s.sd)?),
            None => None,
        };

        let contents = cfg
            .content
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mean_popularity = match (c.mean_popularity, c.catalog_index) {
                    (Some(mu), _) => mu,
                    (None, Some(idx)) => *means.get(idx).ok_or_else(|| {
                        CliError::Config(format!(
                            "content `{}`: catalog_index {idx} exceeds catalog_size {}",
                            c.name, cfg.demand.catalog_size
                        ))
                    })?,
                    (None, None) => unreachable!("checked when the config was resolved"),
                };
                let params = ContentParams {
                    file_size: cfg.cost.file_size_norm,
                    discard_rate: cfg.cost.discard_rate_norm_per_s,
                    backhaul: cfg.cost.backhaul_norm_per_s,
                    capacity: cfg.cost.capacity_norm,
                    storage_weight: cfg.cost.storage_weight,
                    similar_contents: cfg.cost.similar_contents,
                    reversion_rate: cfg.demand.reversion_rate_per_s,
                    volatility: cfg.demand.volatility_per_sqrt_s,
                    mean_popularity,
                };
                params.validate()?;
                let solver = SolverConfig {
                    damping: cfg.solver.damping,
                    tol: cfg.solver.tolerance,
                    max_iters: cfg.solver.max_iterations,
                    terminal: match cfg.solver.terminal {
                        TerminalName::Zero => TerminalCondition::Constant(0.0),
                        TerminalName::Hold => TerminalCondition::HoldStorage,
                    },
                    denom_floor: cfg.solver.control_floor,
                    content: params,
                    rate,
                };
                solver.validate()?;
                let lattice = match cfg.lattice.nt {
                    Some(nt) => Lattice::new(nt, cfg.lattice.nx, cfg.lattice.nq, cfg.lattice.horizon_s, params.capacity)?,
                    None => solver.stable_lattice(cfg.lattice.nx, cfg.lattice.nq, cfg.lattice.horizon_s)?,
                };
                let popularity = match cfg.initial.popularity_sd {
                    Some(sd) => PopularityInit::Normal {
                        mean: c.initial_popularity,
                        sd,
                    },
                    None => PopularityInit::Point(c.initial_popularity),
                };
                let initial = InitialDensity {
                    popularity,
                    storage_mean: cfg.initial.storage_mean_norm,
                    storage_sd: cfg.initial.storage_sd_norm,
                };
                let sim = SimConfig {
                    env,
                    window,
                    request_range: cfg.sim.request_range_m,
                    content: params,
                    rate,
                    initial_popularity: c.initial_popularity,
                    initial_storage_mean: cfg.initial.storage_mean_norm,
                    initial_storage_sd: cfg.initial.storage_sd_norm,
                    horizon: cfg.lattice.horizon_s,
                    dt: lattice.dt(),
                    replications: cfg.sim.replications,
                    master_seed: derive_seed(cfg.sim.seed, &[j as u64]),
                };
                sim.validate()?;
                Ok(ContentPlan {
                    name: c.name.clone(),
                    params,
                    solver,
                    lattice,
                    initial,
                    sim,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;

        Ok(Self {
            env,
            rate,
            contents,
            policies: cfg.policies.clone(),
            ipi,
            seed: cfg.sim.seed,
        })
    }
}

/// CRP mean popularities after the configured warm-up.
fn crp_means(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let d = &cfg.demand;
    let mut crp = CrpState::new(d.catalog_size, d.crp_concentration, d.crp_discount)?;
    let mut rng = stream(cfg.sim.seed, &[CRP_STREAM]);
    for _ in 0..d.crp_warmup_requests {
        crp.sample_request(&mut rng);
    }
    Ok(crp.mean_popularities())
}
