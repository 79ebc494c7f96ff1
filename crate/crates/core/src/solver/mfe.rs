use super::{
    hjb_residual, mf_overlap, solve_fpk_forward, solve_hjb_backward, DensitySurface, Lattice, PolicyField, SolverConfig,
    ValueSurface,
};
use crate::error::{invalid, Error, Result};

/// Converged mean-field equilibrium and its diagnostics.
#[derive(Debug, Clone)]
pub struct MfeSolution {
    pub value: ValueSurface,
    pub density: DensitySurface,
    pub policy: PolicyField,
    /// Mean-field overlap `I(t_n)` of the returned density and policy.
    pub overlap: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm policy change per iteration (the first is infinite).
    pub residuals: Vec<f64>,
    pub max_mass_drift: f64,
    pub min_density: f64,
}

impl MfeSolution {
    pub fn lattice(&self) -> &Lattice {
        self.value.lattice()
    }

    /// Expected cost-to-go of the initial population, `∫∫ m_0 v(0) dx dQ`.
    pub fn lra_cost(&self) -> f64 {
        let lat = self.lattice();
        let m0 = self.density.slice(0);
        self.value.slice(0).iter().zip(m0).map(|(v, m)| v * m).sum::<f64>() * lat.cell_area()
    }

    /// Mass-weighted policy `∫∫ p m dx dQ` at slice `n`.
    pub fn mean_policy(&self, n: usize) -> f64 {
        let lat = self.lattice();
        let p = self.policy.slice(n);
        self.density.slice(n).iter().zip(p).map(|(m, p)| m * p).sum::<f64>() * lat.cell_area()
    }

    /// Marginal density of `Q` at slice `n`.
    pub fn storage_marginal(&self, n: usize) -> Vec<f64> {
        let lat = self.lattice();
        let m = self.density.slice(n);
        (0..lat.nq)
            .map(|k| (0..lat.nx).map(|i| m[lat.idx(i, k)]).sum::<f64>() * lat.dx())
            .collect()
    }

    /// Mean of `Q` under `m_{t_n}`.
    pub fn storage_mean(&self, n: usize) -> f64 {
        let lat = self.lattice();
        self.storage_marginal(n)
            .iter()
            .enumerate()
            .map(|(k, w)| w * lat.q(k))
            .sum::<f64>()
            * lat.dq()
    }

    /// Discrete HJB residual of the returned pair under the returned overlap.
    pub fn hjb_residual(&self, cfg: &SolverConfig) -> Result<f64> {
        hjb_residual(&self.value, &self.policy, &self.overlap, cfg)
    }
}

/// Picard iteration for the mean-field equilibrium starting from an idle
/// population (zero overlap).
pub fn solve_mfe(lat: &Lattice, cfg: &SolverConfig, m0: &[f64]) -> Result<MfeSolution> {
    solve_mfe_from(lat, cfg, m0, vec![0.0; lat.nt + 1])
}

/// Picard iteration from a given overlap trajectory.
///
/// Each pass solves the HJB equation under the current overlap, transports
/// the density with the resulting policy, and relaxes the overlap toward
/// that of the new (density, policy) pair with weight `damping`. Stops when
/// two consecutive policies agree to `tol` in sup norm.
pub fn solve_mfe_from(lat: &Lattice, cfg: &SolverConfig, m0: &[f64], mut overlap: Vec<f64>) -> Result<MfeSolution> {
    cfg.validate()?;
    cfg.check_cfl(lat)?;
    if overlap.len() != lat.nt + 1 {
        return Err(invalid("overlap", format!("expected {} samples, got {}", lat.nt + 1, overlap.len())));
    }
    let mut residuals = Vec::new();
    let mut previous: Option<PolicyField> = None;
    for iteration in 1..=cfg.max_iters {
        let (value, policy) = solve_hjb_backward(lat, &overlap, cfg)?;
        let fpk = solve_fpk_forward(lat, &policy, cfg, m0)?;
        let fresh: Vec<f64> = (0..=lat.nt)
            .map(|n| mf_overlap(lat, fpk.density.slice(n), policy.slice(n), &cfg.content))
            .collect();
        let change = previous.as_ref().map_or(f64::INFINITY, |p| p.sup_distance(&policy));
        residuals.push(change);
        log::debug!("picard iteration {iteration}: policy change {change:e}");
        if change < cfg.tol {
            return Ok(MfeSolution {
                value,
                density: fpk.density,
                policy,
                overlap: fresh,
                iterations: iteration,
                residuals,
                max_mass_drift: fpk.max_mass_drift,
                min_density: fpk.min_value,
            });
        }
        for (current, target) in overlap.iter_mut().zip(&fresh) {
            *current += cfg.damping * (target - *current);
        }
        previous = Some(policy);
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{InitialDensity, PopularityInit, TerminalCondition};
    use super::*;
    use crate::model::sample_params;

    #[test]
    fn decoupled_game_converges_in_two_passes() {
        let mut c = sample_params();
        c.similar_contents = 1e300;
        c.storage_weight = -2.0;
        let mut cfg = SolverConfig::new(c, 5.0);
        cfg.terminal = TerminalCondition::HoldStorage;
        let lat = cfg.stable_lattice(16, 16, 1.0).unwrap();
        let m0 = InitialDensity {
            popularity: PopularityInit::Normal { mean: 0.5, sd: 0.1 },
            storage_mean: 0.7,
            storage_sd: 0.05,
        }
        .discretize(&lat)
        .unwrap();
        let sol = solve_mfe(&lat, &cfg, &m0).unwrap();
        assert!(sol.iterations <= 2, "took {}", sol.iterations);
    }

    #[test]
    fn non_convergence_reports_history() {
        let mut c = sample_params();
        c.storage_weight = -2.0;
        c.similar_contents = 1.0;
        let mut cfg = SolverConfig::new(c, 5.0);
        cfg.max_iters = 1;
        let lat = cfg.stable_lattice(8, 8, 1.0).unwrap();
        let m0 = InitialDensity {
            popularity: PopularityInit::Point(0.5),
            storage_mean: 0.7,
            storage_sd: 0.05,
        }
        .discretize(&lat)
        .unwrap();
        match solve_mfe(&lat, &cfg, &m0) {
            Err(Error::NotConverged { iterations, residuals }) => {
                assert_eq!(iterations, 1);
                assert_eq!(residuals.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
