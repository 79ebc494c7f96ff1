use super::{slice_mass, DensitySurface, Field, Lattice, PolicyField, SolverConfig};
use crate::error::{invalid, Error, Result};

/// Values this far below zero are treated as rounding noise.
const NEGATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FpkSolution {
    pub density: DensitySurface,
    /// Largest `|mass − 1|` seen before a slice was renormalized.
    pub max_mass_drift: f64,
    /// Smallest density value produced by the scheme before clipping.
    pub min_value: f64,
}

/// One conservative upwind step of the FPK equation.
fn step(lat: &Lattice, cfg: &SolverConfig, m: &[f64], p: &[f64], out: &mut [f64]) {
    let c = &cfg.content;
    let (nx, nq) = (lat.nx, lat.nq);
    let (dt, dx, dq) = (lat.dt(), lat.dx(), lat.dq());
    let half_var = 0.5 * c.volatility * c.volatility;
    out.copy_from_slice(m);

    // x faces at i·dx for i = 1..nx; walls carry no flux.
    for i in 1..nx {
        let a = c.reversion_rate * (c.mean_popularity - i as f64 * dx);
        for k in 0..nq {
            let left = m[lat.idx(i - 1, k)];
            let right = m[lat.idx(i, k)];
            let flux = a.max(0.0) * left + a.min(0.0) * right - half_var * (right - left) / dx;
            let transfer = dt * flux / dx;
            out[lat.idx(i - 1, k)] -= transfer;
            out[lat.idx(i, k)] += transfer;
        }
    }
    // Q faces, donor-cell on the node velocities e − L·p.
    for i in 0..nx {
        for k in 1..nq {
            let below = lat.idx(i, k - 1);
            let above = lat.idx(i, k);
            let b_below = c.discard_rate - c.file_size * p[below];
            let b_above = c.discard_rate - c.file_size * p[above];
            let flux = b_below.max(0.0) * m[below] + b_above.min(0.0) * m[above];
            let transfer = dt * flux / dq;
            out[below] -= transfer;
            out[above] += transfer;
        }
    }
}

/// March the population density forward under `policy` from `m0`.
///
/// Each slice is checked for negativity, clipped at zero and renormalized;
/// the largest mass correction is reported.
pub fn solve_fpk_forward(lat: &Lattice, policy: &PolicyField, cfg: &SolverConfig, m0: &[f64]) -> Result<FpkSolution> {
    cfg.validate()?;
    cfg.check_cfl(lat)?;
    if policy.lattice() != lat {
        return Err(invalid("policy", "policy lattice does not match"));
    }
    if m0.len() != lat.slice_len() {
        return Err(invalid("m0", format!("expected {} values, got {}", lat.slice_len(), m0.len())));
    }
    if m0.iter().any(|&v| !(v >= 0.0)) {
        return Err(invalid("m0", "initial density must be nonnegative"));
    }
    let mass0 = slice_mass(lat, m0);
    if (mass0 - 1.0).abs() > 1e-9 {
        return Err(invalid("m0", format!("initial density must integrate to 1, got {mass0}")));
    }
    let mut density = Field::zeros(*lat);
    density.slice_mut(0).copy_from_slice(m0);
    let mut max_mass_drift: f64 = 0.0;
    let mut min_value = m0.iter().copied().fold(f64::INFINITY, f64::min);
    let mut next = vec![0.0; lat.slice_len()];
    for n in 0..lat.nt {
        step(lat, cfg, density.slice(n), policy.slice(n), &mut next);
        for (idx, v) in next.iter_mut().enumerate() {
            min_value = min_value.min(*v);
            if *v < -NEGATIVE_TOLERANCE {
                let (i, k) = (idx / lat.nq, idx % lat.nq);
                return Err(Error::NegativeDensity {
                    value: *v,
                    t: lat.t(n + 1),
                    x: lat.x(i),
                    q: lat.q(k),
                });
            }
            *v = v.max(0.0);
        }
        let mass = slice_mass(lat, &next);
        max_mass_drift = max_mass_drift.max((mass - 1.0).abs());
        if (mass - 1.0).abs() > 1e-3 {
            log::warn!("density mass drifted to {mass} at t = {}", lat.t(n + 1));
        }
        for v in next.iter_mut() {
            *v /= mass;
        }
        density.slice_mut(n + 1).copy_from_slice(&next);
    }
    Ok(FpkSolution {
        density,
        max_mass_drift,
        min_value,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{InitialDensity, PopularityInit};
    use super::*;
    use crate::model::sample_params;
    use approx::assert_relative_eq;

    fn q_mean(lat: &Lattice, m: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..lat.nx {
            for k in 0..lat.nq {
                s += m[lat.idx(i, k)] * lat.q(k);
            }
        }
        s * lat.cell_area()
    }

    #[test]
    fn balanced_drift_leaves_density_unchanged() {
        let mut c = sample_params();
        c.reversion_rate = 0.0;
        c.volatility = 0.0;
        let cfg = SolverConfig::new(c, 1.0);
        let lat = cfg.stable_lattice(16, 16, 1.0).unwrap();
        let policy = Field::constant(lat, 0.1);
        let m0 = InitialDensity {
            popularity: PopularityInit::Normal { mean: 0.5, sd: 0.1 },
            storage_mean: 0.6,
            storage_sd: 0.1,
        }
        .discretize(&lat)
        .unwrap();
        let sol = solve_fpk_forward(&lat, &policy, &cfg, &m0).unwrap();
        for n in 0..=lat.nt {
            for (a, b) in sol.density.slice(n).iter().zip(&m0) {
                assert_relative_eq!(*a, *b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn constant_speed_moves_center_of_mass() {
        let mut c = sample_params();
        c.reversion_rate = 0.0;
        c.volatility = 0.0;
        c.discard_rate = 0.1;
        let cfg = SolverConfig::new(c, 1.0);
        let lat = cfg.stable_lattice(4, 128, 1.0).unwrap();
        let policy = Field::constant(lat, 0.4);
        let m0 = InitialDensity {
            popularity: PopularityInit::Point(0.5),
            storage_mean: 0.7,
            storage_sd: 0.05,
        }
        .discretize(&lat)
        .unwrap();
        let sol = solve_fpk_forward(&lat, &policy, &cfg, &m0).unwrap();
        let moved = q_mean(&lat, sol.density.slice(lat.nt)) - q_mean(&lat, &m0);
        assert!((moved - (-0.3)).abs() < lat.dq(), "moved {moved}");
    }
}
