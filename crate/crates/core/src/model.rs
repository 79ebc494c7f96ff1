//! Per-content cost model shared by the solver and the simulator.

use crate::demand::X_FLOOR;
use crate::error::{invalid, Error, Result};

/// Relative backhaul margin: fractions stay below `(B − δ_B)/L` with
/// `δ_B = BARRIER_MARGIN·B`.
pub const BARRIER_MARGIN: f64 = 1e-6;

/// Physical and economic parameters of one content file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentParams {
    /// `L_j`, file size.
    pub file_size: f64,
    /// `e_j`, rate at which cached data is discarded.
    pub discard_rate: f64,
    /// `B_j`, backhaul capacity allotted to the file.
    pub backhaul: f64,
    /// `C`, storage size.
    pub capacity: f64,
    /// `γ`, weight of the storage occupation ratio. Negative values reward
    /// occupation.
    pub storage_weight: f64,
    /// `N_r(j)`, number of files with the same request probability.
    pub similar_contents: f64,
    /// OU reversion rate `r`; zero freezes popularity.
    pub reversion_rate: f64,
    /// OU volatility `η`.
    pub volatility: f64,
    /// Long-term mean popularity `μ_j`.
    pub mean_popularity: f64,
}

impl ContentParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("file_size", self.file_size),
            ("backhaul", self.backhaul),
            ("capacity", self.capacity),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.discard_rate >= 0.0) {
            return Err(invalid("discard_rate", format!("must be nonnegative, got {}", self.discard_rate)));
        }
        if !self.storage_weight.is_finite() {
            return Err(invalid("storage_weight", "must be finite"));
        }
        if !(self.similar_contents >= 1.0) {
            return Err(invalid("similar_contents", format!("must be >= 1, got {}", self.similar_contents)));
        }
        if !(self.reversion_rate >= 0.0) || !(self.volatility >= 0.0) {
            return Err(invalid("reversion_rate", "OU rate and volatility must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.mean_popularity) {
            return Err(invalid(
                "mean_popularity",
                format!("must lie in [0, 1], got {}", self.mean_popularity),
            ));
        }
        Ok(())
    }

    /// Largest feasible caching fraction, `min(1, C/L, (B − δ_B)/L)`.
    pub fn max_fraction(&self) -> f64 {
        let margin = BARRIER_MARGIN * self.backhaul;
        1f64.min(self.capacity / self.file_size)
            .min((self.backhaul - margin) / self.file_size)
            .max(0.0)
    }

    /// Clamp to `[0, max_fraction]`.
    pub fn feasible(&self, p: f64) -> f64 {
        p.clamp(0.0, self.max_fraction())
    }

    /// Bounds on `|r(μ − x)|` over `[0,1]` and on `|e − L·p|` over feasible `p`.
    pub fn drift_bounds(&self) -> (f64, f64) {
        let dx = self.reversion_rate * self.mean_popularity.max(1.0 - self.mean_popularity);
        let dq = self.discard_rate.max(self.file_size * self.max_fraction() - self.discard_rate);
        (dx, dq)
    }

    /// Storage occupation cost `γ(C − Q)/C`.
    pub fn storage_cost(&self, q: f64) -> f64 {
        self.storage_weight * (self.capacity - q) / self.capacity
    }

    /// `−log(B − L·p)`, the backhaul barrier.
    pub fn backhaul_cost(&self, p: f64) -> Result<f64> {
        let load = self.file_size * p;
        if !(load < self.backhaul) {
            return Err(Error::BarrierViolation {
                load,
                backhaul: self.backhaul,
            });
        }
        Ok(-(self.backhaul - load).ln())
    }

    /// Instantaneous cost `−log(B − Lp)(1 + I)/(ℛ x) + γ(C − Q)/C`, with `x`
    /// floored at the popularity floor.
    pub fn running_cost(&self, p: f64, q: f64, x: f64, overlap: f64, rate: f64) -> Result<f64> {
        let weight = (1.0 + overlap) / (rate * x.max(X_FLOOR));
        Ok(self.backhaul_cost(p)? * weight + self.storage_cost(q))
    }
}

#[cfg(test)]
pub(crate) fn sample_params() -> ContentParams {
    ContentParams {
        file_size: 1.0,
        discard_rate: 0.1,
        backhaul: 1.0,
        capacity: 1.0,
        storage_weight: 0.0,
        similar_contents: 20.0,
        reversion_rate: 1.0,
        volatility: 0.1,
        mean_popularity: 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cost_arithmetic() {
        let mut c = sample_params();
        assert_relative_eq!(c.running_cost(0.5, 0.3, 1.0, 0.0, 1.0).unwrap(), 2f64.ln(), max_relative = 1e-14);
        c.storage_weight = 2.0;
        assert_relative_eq!(c.running_cost(0.0, 0.25, 0.4, 0.3, 2.0).unwrap(), 1.5, max_relative = 1e-14);
        assert_eq!(c.storage_cost(c.capacity), 0.0);
        assert!(matches!(c.running_cost(1.0, 0.0, 0.5, 0.0, 1.0), Err(Error::BarrierViolation { .. })));
    }

    #[test]
    fn max_fraction_respects_every_bound() {
        let mut c = sample_params();
        assert!(c.max_fraction() < 1.0 && c.max_fraction() > 1.0 - 1e-5);
        c.file_size = 4.0;
        assert_relative_eq!(c.max_fraction(), 0.25 * (1.0 - 1e-6), max_relative = 1e-12);
        c.capacity = 0.5;
        assert_relative_eq!(c.max_fraction(), 0.125);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut c = sample_params();
        c.similar_contents = 0.5;
        assert!(c.validate().is_err());
        let mut c = sample_params();
        c.mean_popularity = 1.5;
        assert!(c.validate().is_err());
        assert!(sample_params().validate().is_ok());
    }
}
