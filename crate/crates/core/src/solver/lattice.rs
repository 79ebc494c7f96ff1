use crate::error::{invalid, Error, Result};

/// Safety factor applied to the explicit stability bound.
pub const CFL_SAFETY: f64 = 0.9;

/// Uniform cell-centered discretization of `[0,T] × [0,1] × [0,C]`.
///
/// Time is sampled at `nt + 1` nodes `t_n = n·dt`; `x` and `Q` at the
/// centers of `nx` and `nq` equal cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub nt: usize,
    pub nx: usize,
    pub nq: usize,
    pub horizon: f64,
    pub capacity: f64,
}

impl Lattice {
    pub fn new(nt: usize, nx: usize, nq: usize, horizon: f64, capacity: f64) -> Result<Self> {
        if nt == 0 || nx == 0 || nq == 0 {
            return Err(invalid("lattice", format!("need nt, nx, nq >= 1, got {nt}, {nx}, {nq}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if !(capacity > 0.0) || !capacity.is_finite() {
            return Err(invalid("capacity", format!("must be positive, got {capacity}")));
        }
        Ok(Self {
            nt,
            nx,
            nq,
            horizon,
            capacity,
        })
    }

    /// Smallest `nt` whose step satisfies the stability bound for the given
    /// diffusion and drift magnitudes.
    pub fn stable(nx: usize, nq: usize, horizon: f64, capacity: f64, eta: f64, max_drift_x: f64, max_drift_q: f64) -> Result<Self> {
        let probe = Self::new(1, nx, nq, horizon, capacity)?;
        let bound = probe.stability_bound(eta, max_drift_x, max_drift_q);
        let nt = if bound.is_finite() {
            ((horizon / bound).ceil() as usize).max(1)
        } else {
            1
        };
        Self::new(nt, nx, nq, horizon, capacity)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dq(&self) -> f64 {
        self.capacity / self.nq as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn q(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dq()
    }

    /// Nodes per time slice.
    pub fn slice_len(&self) -> usize {
        self.nx * self.nq
    }

    /// Offset of `(x_i, Q_k)` inside a slice.
    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        i * self.nq + k
    }

    /// Area element `dx·dq`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dq()
    }

    /// Largest admissible step, `0.9 / (η²/dx² + max|drift_x|/dx + max|drift_Q|/dq)`.
    pub fn stability_bound(&self, eta: f64, max_drift_x: f64, max_drift_q: f64) -> f64 {
        let rate = eta * eta / (self.dx() * self.dx()) + max_drift_x.abs() / self.dx() + max_drift_q.abs() / self.dq();
        CFL_SAFETY / rate
    }

    pub fn check_cfl(&self, eta: f64, max_drift_x: f64, max_drift_q: f64) -> Result<()> {
        let bound = self.stability_bound(eta, max_drift_x, max_drift_q);
        // Tolerate rounding in horizon / nt.
        if self.dt() > bound * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt: self.dt(), bound });
        }
        Ok(())
    }

    /// The same domain with `dx` and `dq` halved and a step that stays stable.
    pub fn refined(&self, eta: f64, max_drift_x: f64, max_drift_q: f64) -> Result<Self> {
        Self::stable(2 * self.nx, 2 * self.nq, self.horizon, self.capacity, eta, max_drift_x, max_drift_q)
    }
}

/// A real array over every lattice node, stored slice-major in `(t, x, Q)`
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    lattice: Lattice,
    data: Vec<f64>,
}

pub type ValueSurface = Field;
pub type DensitySurface = Field;
pub type PolicyField = Field;

impl Field {
    pub fn zeros(lattice: Lattice) -> Self {
        Self::constant(lattice, 0.0)
    }

    pub fn constant(lattice: Lattice, value: f64) -> Self {
        Self {
            lattice,
            data: vec![value; (lattice.nt + 1) * lattice.slice_len()],
        }
    }

    pub fn from_vec(lattice: Lattice, data: Vec<f64>) -> Result<Self> {
        let expected = (lattice.nt + 1) * lattice.slice_len();
        if data.len() != expected {
            return Err(invalid("field", format!("expected {expected} values, got {}", data.len())));
        }
        Ok(Self { lattice, data })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let len = self.lattice.slice_len();
        &self.data[n * len..(n + 1) * len]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
        let len = self.lattice.slice_len();
        &mut self.data[n * len..(n + 1) * len]
    }

    pub fn get(&self, n: usize, i: usize, k: usize) -> f64 {
        self.slice(n)[self.lattice.idx(i, k)]
    }

    /// `max |a − b|` over all nodes.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation in `(x, Q)` on the nearest time slice.
    ///
    /// Queries up to one cell outside the lattice are answered by clamping
    /// to the boundary cells; anything farther is an error.
    pub fn interpolate(&self, t: f64, x: f64, q: f64) -> Result<f64> {
        let lat = &self.lattice;
        let (dt, dx, dq) = (lat.dt(), lat.dx(), lat.dq());
        let outside = !(t >= -dt && t <= lat.horizon + dt)
            || !(x >= -dx && x <= 1.0 + dx)
            || !(q >= -dq && q <= lat.capacity + dq);
        if outside {
            return Err(Error::OutOfLattice { t, x, q });
        }
        let n = ((t / dt).round().max(0.0) as usize).min(lat.nt);
        let slice = self.slice(n);
        let (i0, i1, wx) = bracket(x / dx - 0.5, lat.nx);
        let (k0, k1, wq) = bracket(q / dq - 0.5, lat.nq);
        let at = |i: usize, k: usize| slice[lat.idx(i, k)];
        Ok((1.0 - wx) * ((1.0 - wq) * at(i0, k0) + wq * at(i0, k1)) + wx * ((1.0 - wq) * at(i1, k0) + wq * at(i1, k1)))
    }
}

/// Neighboring cell indices and the weight of the upper one for a fractional
/// cell coordinate, clamped to the grid.
fn bracket(s: f64, n: usize) -> (usize, usize, f64) {
    if n == 1 || s <= 0.0 {
        return (0, 0, 0.0);
    }
    let top = (n - 1) as f64;
    if s >= top {
        return (n - 1, n - 1, 0.0);
    }
    let lo = s.floor();
    (lo as usize, lo as usize + 1, s - lo)
}
