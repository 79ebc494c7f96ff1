use super::{optimal_caching_fraction, Field, Lattice, PolicyField, SolverConfig, TerminalCondition, ValueSurface};
use crate::demand::X_FLOOR;
use crate::error::{invalid, Error, Result};

/// Terminal slice of the value surface.
fn terminal_slice(lat: &Lattice, cfg: &SolverConfig, overlap_t: f64) -> Vec<f64> {
    let c = &cfg.content;
    let mut v = vec![0.0; lat.slice_len()];
    for i in 0..lat.nx {
        for k in 0..lat.nq {
            v[lat.idx(i, k)] = match cfg.terminal {
                TerminalCondition::Constant(value) => value,
                TerminalCondition::HoldStorage => {
                    let slope = (1.0 + overlap_t) / (cfg.rate * lat.x(i).max(X_FLOOR) * (c.backhaul - c.discard_rate));
                    slope * lat.q(k)
                }
            };
        }
    }
    v
}

/// Discrete derivatives of one slice at `(i, k)` with reflecting ghost cells.
struct Stencil<'a> {
    lat: &'a Lattice,
    v: &'a [f64],
}

impl Stencil<'_> {
    fn at(&self, i: usize, k: usize) -> f64 {
        self.v[self.lat.idx(i, k)]
    }

    /// Central `∂_Q v`, one-sided at the walls.
    fn dq_central(&self, i: usize, k: usize) -> f64 {
        let nq = self.lat.nq;
        if nq == 1 {
            return 0.0;
        }
        let dq = self.lat.dq();
        if k == 0 {
            (self.at(i, 1) - self.at(i, 0)) / dq
        } else if k == nq - 1 {
            (self.at(i, k) - self.at(i, k - 1)) / dq
        } else {
            (self.at(i, k + 1) - self.at(i, k - 1)) / (2.0 * dq)
        }
    }

    /// `b·∂_Q v` upwinded on the sign of `b`.
    fn q_transport(&self, i: usize, k: usize, b: f64) -> f64 {
        let nq = self.lat.nq;
        let here = self.at(i, k);
        let diff = if b > 0.0 {
            if k + 1 < nq {
                self.at(i, k + 1) - here
            } else {
                0.0
            }
        } else if k > 0 {
            here - self.at(i, k - 1)
        } else {
            0.0
        };
        b * diff / self.lat.dq()
    }

    /// `a·∂_x v + (η²/2)∂²_x v`.
    fn x_terms(&self, i: usize, k: usize, a: f64, eta: f64) -> f64 {
        let nx = self.lat.nx;
        let dx = self.lat.dx();
        let here = self.at(i, k);
        let up = if i + 1 < nx { self.at(i + 1, k) } else { here };
        let down = if i > 0 { self.at(i - 1, k) } else { here };
        let advect = if a > 0.0 { a * (up - here) / dx } else { a * (here - down) / dx };
        advect + 0.5 * eta * eta * (up - 2.0 * here + down) / (dx * dx)
    }
}

/// Optimal control on a slice given the value at the following time node.
fn policy_slice(lat: &Lattice, cfg: &SolverConfig, v: &[f64], overlap: f64, out: &mut [f64]) {
    let st = Stencil { lat, v };
    for i in 0..lat.nx {
        let x = lat.x(i);
        for k in 0..lat.nq {
            out[lat.idx(i, k)] =
                optimal_caching_fraction(&cfg.content, overlap, cfg.rate, x, st.dq_central(i, k), cfg.denom_floor);
        }
    }
}

/// Hamiltonian `J(p) + (e − Lp)∂_Q v + r(μ − x)∂_x v + (η²/2)∂²_x v` at a node.
fn hamiltonian(st: &Stencil, cfg: &SolverConfig, i: usize, k: usize, p: f64, overlap: f64) -> Result<f64> {
    let c = &cfg.content;
    let lat = st.lat;
    let (x, q) = (lat.x(i), lat.q(k));
    let running = c.running_cost(p, q, x, overlap, cfg.rate)?;
    let b = c.discard_rate - c.file_size * p;
    let a = c.reversion_rate * (c.mean_popularity - x);
    Ok(running + st.q_transport(i, k, b) + st.x_terms(i, k, a, c.volatility))
}

/// Backward explicit sweep of the HJB equation under a given overlap
/// trajectory `I(t_n)`, `n = 0..=nt`. Returns the value surface and the
/// minimizing policy.
pub fn solve_hjb_backward(lat: &Lattice, overlap: &[f64], cfg: &SolverConfig) -> Result<(ValueSurface, PolicyField)> {
    cfg.validate()?;
    cfg.check_cfl(lat)?;
    if overlap.len() != lat.nt + 1 {
        return Err(invalid("overlap", format!("expected {} samples, got {}", lat.nt + 1, overlap.len())));
    }
    let dt = lat.dt();
    let mut v = Field::zeros(*lat);
    let mut p = Field::zeros(*lat);
    v.slice_mut(lat.nt).copy_from_slice(&terminal_slice(lat, cfg, overlap[lat.nt]));
    {
        let terminal = v.slice(lat.nt).to_vec();
        policy_slice(lat, cfg, &terminal, overlap[lat.nt], p.slice_mut(lat.nt));
    }
    let mut next = v.slice(lat.nt).to_vec();
    let mut current = vec![0.0; lat.slice_len()];
    let mut controls = vec![0.0; lat.slice_len()];
    for n in (0..lat.nt).rev() {
        policy_slice(lat, cfg, &next, overlap[n], &mut controls);
        let st = Stencil { lat, v: &next };
        for i in 0..lat.nx {
            for k in 0..lat.nq {
                let idx = lat.idx(i, k);
                let h = hamiltonian(&st, cfg, i, k, controls[idx], overlap[n])?;
                let value = next[idx] + dt * h;
                if !value.is_finite() {
                    return Err(Error::NonFiniteValue {
                        t: lat.t(n),
                        x: lat.x(i),
                        q: lat.q(k),
                    });
                }
                current[idx] = value;
            }
        }
        v.slice_mut(n).copy_from_slice(&current);
        p.slice_mut(n).copy_from_slice(&controls);
        std::mem::swap(&mut next, &mut current);
    }
    Ok((v, p))
}

/// L∞ residual of the discrete HJB equation
/// `(v^{n+1} − v^n)/dt + H(v^{n+1}, p^n, I_n) = 0` over `n < nt`.
pub fn hjb_residual(v: &ValueSurface, p: &PolicyField, overlap: &[f64], cfg: &SolverConfig) -> Result<f64> {
    let lat = v.lattice();
    if overlap.len() != lat.nt + 1 {
        return Err(invalid("overlap", format!("expected {} samples, got {}", lat.nt + 1, overlap.len())));
    }
    let dt = lat.dt();
    let mut worst: f64 = 0.0;
    for (n, &ov) in overlap.iter().enumerate().take(lat.nt) {
        let st = Stencil {
            lat,
            v: v.slice(n + 1),
        };
        for i in 0..lat.nx {
            for k in 0..lat.nq {
                let h = hamiltonian(&st, cfg, i, k, p.get(n, i, k), ov)?;
                let r = (v.get(n + 1, i, k) - v.get(n, i, k)) / dt + h;
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}
