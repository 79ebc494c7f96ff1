//! Coupled HJB/FPK solver for the mean-field caching game.

mod fpk;
mod hjb;
pub mod io;
mod lattice;
mod mfe;

pub use fpk::{solve_fpk_forward, FpkSolution};
pub use hjb::{hjb_residual, solve_hjb_backward};
pub use lattice::{DensitySurface, Field, Lattice, PolicyField, ValueSurface, CFL_SAFETY};
pub use mfe::{solve_mfe, solve_mfe_from, MfeSolution};

use statrs::distribution::{ContinuousCDF, Normal};

use crate::demand::X_FLOOR;
use crate::error::{invalid, Result};
use crate::model::ContentParams;

/// Salvage value at the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalCondition {
    /// `v(T, x, Q) = c`.
    Constant(f64),
    /// `v(T, x, Q) = s(x)·Q` with the slope at which the optimal control
    /// exactly replaces discarded data, `s = (1 + I(T)) / (ℛ x (B − e))`.
    HoldStorage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relaxation weight of the overlap update, in `(0, 1]`.
    pub damping: f64,
    /// Stop once the policy moves less than this in sup norm.
    pub tol: f64,
    pub max_iters: usize,
    pub terminal: TerminalCondition,
    /// Floor `ε` on `∂_Q v` in the control law.
    pub denom_floor: f64,
    pub content: ContentParams,
    /// Average rate `ℛ` from the radio layer.
    pub rate: f64,
}

impl SolverConfig {
    pub fn new(content: ContentParams, rate: f64) -> Self {
        Self {
            damping: 0.5,
            tol: 1e-4,
            max_iters: 200,
            terminal: TerminalCondition::Constant(0.0),
            denom_floor: 1e-6,
            content,
            rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.content.validate()?;
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid("damping", format!("must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        if !(self.denom_floor > 0.0) {
            return Err(invalid("denom_floor", "must be positive"));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(invalid("rate", format!("must be positive, got {}", self.rate)));
        }
        if self.terminal == TerminalCondition::HoldStorage && !(self.content.backhaul > self.content.discard_rate) {
            return Err(invalid("terminal", "holding storage needs backhaul above the discard rate"));
        }
        Ok(())
    }

    /// Lattice with `nx × nq` cells over `[0, horizon]` and the smallest
    /// stable number of time steps.
    pub fn stable_lattice(&self, nx: usize, nq: usize, horizon: f64) -> Result<Lattice> {
        let (ax, bq) = self.content.drift_bounds();
        Lattice::stable(nx, nq, horizon, self.content.capacity, self.content.volatility, ax, bq)
    }

    pub(crate) fn check_cfl(&self, lat: &Lattice) -> Result<()> {
        let (ax, bq) = self.content.drift_bounds();
        lat.check_cfl(self.content.volatility, ax, bq)
    }
}

/// Water-filling control: the minimizer over feasible `p` of
/// `−log(B − Lp)(1 + I)/(ℛx) + (e − Lp)·∂_Q v`.
pub fn optimal_caching_fraction(
    content: &ContentParams,
    overlap: f64,
    rate: f64,
    x: f64,
    dq_v: f64,
    denom_floor: f64,
) -> f64 {
    let denom = rate * x.max(X_FLOOR) * dq_v.max(denom_floor);
    let level = content.backhaul - (1.0 + overlap) / denom;
    content.feasible(level.max(0.0) / content.file_size)
}

/// Mean-field overlap `∫∫ m·p /(C·N_r) dx dQ` on one slice.
pub fn mf_overlap(lat: &Lattice, m: &[f64], p: &[f64], content: &ContentParams) -> f64 {
    let integral: f64 = m.iter().zip(p).map(|(m, p)| m * p).sum::<f64>() * lat.cell_area();
    integral / (content.capacity * content.similar_contents)
}

/// `∫∫ m dx dQ` on one slice.
pub fn slice_mass(lat: &Lattice, m: &[f64]) -> f64 {
    m.iter().sum::<f64>() * lat.cell_area()
}

/// Initial popularity distribution of the population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PopularityInit {
    /// Every SBS sees the same request probability.
    Point(f64),
    Normal { mean: f64, sd: f64 },
}

/// Initial population density: independent popularity and storage parts,
/// the storage part Gaussian truncated to `[0, C]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDensity {
    pub popularity: PopularityInit,
    pub storage_mean: f64,
    pub storage_sd: f64,
}

impl InitialDensity {
    /// Cell-averaged density slice normalized to unit mass.
    pub fn discretize(&self, lat: &Lattice) -> Result<Vec<f64>> {
        let wx = match self.popularity {
            PopularityInit::Point(x0) => {
                if !(0.0..=1.0).contains(&x0) {
                    return Err(invalid("initial popularity", format!("must lie in [0, 1], got {x0}")));
                }
                point_weights(x0, lat.nx, lat.dx())
            }
            PopularityInit::Normal { mean, sd } => normal_weights(mean, sd, lat.nx, lat.dx(), "popularity")?,
        };
        let wq = normal_weights(self.storage_mean, self.storage_sd, lat.nq, lat.dq(), "storage")?;
        let area = lat.cell_area();
        let mut m = vec![0.0; lat.slice_len()];
        for (i, a) in wx.iter().enumerate() {
            for (k, b) in wq.iter().enumerate() {
                m[lat.idx(i, k)] = a * b / area;
            }
        }
        Ok(m)
    }
}

/// Linear split of a point mass between the two nearest cell centers.
fn point_weights(x0: f64, n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let s = x0 / h - 0.5;
    if n == 1 || s <= 0.0 {
        w[0] = 1.0;
    } else if s >= (n - 1) as f64 {
        w[n - 1] = 1.0;
    } else {
        let lo = s.floor() as usize;
        let frac = s - lo as f64;
        w[lo] = 1.0 - frac;
        w[lo + 1] = frac;
    }
    w
}

fn normal_weights(mean: f64, sd: f64, n: usize, h: f64, name: &'static str) -> Result<Vec<f64>> {
    if !(sd > 0.0) || !mean.is_finite() {
        return Err(invalid(name, format!("initial normal needs finite mean and positive sd, got N({mean}, {sd}^2)")));
    }
    let normal = Normal::new(mean, sd).map_err(|e| invalid(name, e.to_string()))?;
    let w: Vec<f64> = (0..n)
        .map(|k| normal.cdf((k + 1) as f64 * h) - normal.cdf(k as f64 * h))
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 1e-300) {
        return Err(invalid(name, "initial normal puts no mass inside the domain"));
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}
