//! Stochastic-geometry radio layer: Poisson deployments, SBS activity,
//! mean-field interference and the average downlink rate that scales the
//! caching cost.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{invalid, Error, Result};
use crate::quadrature::expected_log1p_exponential;

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Small-scale fading power law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fading {
    /// `|g|²` unit-mean exponential.
    #[default]
    Rayleigh,
    /// `|g|² ≡ 1`.
    Deterministic,
}

impl Fading {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Fading::Rayleigh => Exp1.sample(rng),
            Fading::Deterministic => 1.0,
        }
    }
}

/// Densities, powers and geometry of the network, in linear SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioEnvironment {
    /// SBS density, per m².
    pub sbs_density: f64,
    /// user density, per m².
    pub user_density: f64,
    /// transmit power, W.
    pub tx_power: f64,
    pub pathloss_exp: f64,
    pub antennas: u32,
    /// noise power, W.
    pub noise: f64,
    /// reception-ball radius, m.
    pub ball_radius: f64,
    pub fading: Fading,
}

impl RadioEnvironment {
    pub fn new(
        sbs_density: f64,
        user_density: f64,
        tx_power: f64,
        pathloss_exp: f64,
        antennas: u32,
        noise: f64,
        ball_radius: f64,
    ) -> Result<Self> {
        let env = Self {
            sbs_density,
            user_density,
            tx_power,
            pathloss_exp,
            antennas,
            noise,
            ball_radius,
            fading: Fading::Rayleigh,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.user_density > 0.0) {
            return Err(invalid("user_density", format!("must be positive, got {}", self.user_density)));
        }
        if !(self.sbs_density > self.user_density) {
            return Err(invalid(
                "sbs_density",
                format!(
                    "dense regime needs sbs_density > user_density ({} vs {})",
                    self.sbs_density, self.user_density
                ),
            ));
        }
        if self.sbs_density < 10.0 * self.user_density {
            log::warn!(
                "sbs_density {} is less than 10x user_density {}; the dense-network approximations are loose",
                self.sbs_density,
                self.user_density
            );
        }
        if !(self.pathloss_exp > 2.0) {
            return Err(invalid("pathloss_exp", format!("must exceed 2, got {}", self.pathloss_exp)));
        }
        if !(self.ball_radius > 0.0) {
            return Err(invalid("ball_radius", format!("must be positive, got {}", self.ball_radius)));
        }
        if self.antennas == 0 {
            return Err(invalid("antennas", "need at least one antenna"));
        }
        if !(self.tx_power > 0.0) || !(self.noise >= 0.0) {
            return Err(invalid("tx_power", "powers must be positive"));
        }
        Ok(())
    }

    /// Probability that a beam hits a given interferer, `θ_{N_a}/(2π) = 1/√N_a`.
    pub fn beam_hit_probability(&self) -> f64 {
        1.0 / (self.antennas as f64).sqrt()
    }

    /// Noise term of the normalized rate bound, `σ²/(N_a λ_b^{α/2})`.
    pub fn normalized_noise(&self) -> f64 {
        self.noise / (self.antennas as f64 * self.sbs_density.powf(self.pathloss_exp / 2.0))
    }
}

/// Probability that an SBS has at least one user and therefore transmits.
pub fn active_probability(env: &RadioEnvironment) -> f64 {
    let ratio = env.user_density / (3.5 * env.sbs_density);
    -(-3.5 * ratio.ln_1p()).exp_m1()
}

/// Aggregate interference normalized by SBS density and antenna count.
pub fn mean_field_interference(env: &RadioEnvironment) -> Result<f64> {
    let alpha = env.pathloss_exp;
    if !(alpha > 2.0) {
        return Err(invalid("pathloss_exp", format!("bracket diverges for alpha = {alpha}")));
    }
    let users_in_ball = env.user_density * std::f64::consts::PI * env.ball_radius;
    let bracket = 1.0 + (1.0 - env.ball_radius.powf(2.0 - alpha)) / (alpha - 2.0);
    let fading_mean = 1.0;
    Ok(users_in_ball * users_in_ball
        * (env.antennas as f64).powf(-0.5)
        * env.sbs_density.powf(-alpha / 2.0)
        * bracket
        * env.tx_power
        * fading_mean)
}

/// Average downlink rate per unit bandwidth (nats/s/Hz) under normalized
/// interference `ifield`: `E_S log(1 + S/(σ²/(N_a λ_b^{α/2}) + ifield))`
/// with `S = N_a·P·|g|²`.
pub fn average_rate(env: &RadioEnvironment, ifield: f64) -> f64 {
    let denom = env.normalized_noise() + ifield.max(0.0);
    let signal = env.antennas as f64 * env.tx_power;
    let snr = signal / denom;
    match env.fading {
        Fading::Rayleigh => expected_log1p_exponential(snr),
        Fading::Deterministic => snr.ln_1p(),
    }
}

/// Rate used by the cost model: `average_rate` at the mean-field interference.
pub fn mean_field_rate(env: &RadioEnvironment) -> Result<f64> {
    Ok(average_rate(env, mean_field_interference(env)?))
}

/// Axis-aligned rectangle `[0, width] × [0, height]`, wrapped as a torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(invalid("area", format!("dimensions must be positive, got {width} x {height}")));
        }
        Ok(Self { width, height })
    }

    pub fn size(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> [f64; 2] {
        [self.width / 2.0, self.height / 2.0]
    }

    /// Wrap-around distance.
    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let wrap = |d: f64, l: f64| {
            let d = d.abs() % l;
            d.min(l - d)
        };
        let dx = wrap(a[0] - b[0], self.width);
        let dy = wrap(a[1] - b[1], self.height);
        dx.hypot(dy)
    }
}

/// One draw of the SBS and user point processes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub sbs_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    pub active_mask: Vec<bool>,
    pub area: Area,
}

impl NetworkRealization {
    pub fn active_fraction(&self) -> f64 {
        if self.active_mask.is_empty() {
            return 0.0;
        }
        self.active_mask.iter().filter(|&&a| a).count() as f64 / self.active_mask.len() as f64
    }

    /// SBS indices within `radius` of `point`, nearest first.
    pub fn sbs_within(&self, point: [f64; 2], radius: f64) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .sbs_positions
            .iter()
            .enumerate()
            .map(|(k, &z)| (k, self.area.distance(point, z)))
            .filter(|&(_, d)| d <= radius)
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    draw as usize
}

fn uniform_points<R: Rng + ?Sized>(n: usize, area: Area, rng: &mut R) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.random::<f64>() * area.width, rng.random::<f64>() * area.height])
        .collect()
}

/// Draw SBS and user positions as independent PPPs on `area`, and thin the
/// SBSs into active/idle with the active probability.
pub fn sample_network<R: Rng + ?Sized>(env: &RadioEnvironment, area: Area, rng: &mut R) -> NetworkRealization {
    let n_sbs = poisson_count(env.sbs_density * area.size(), rng);
    let n_users = poisson_count(env.user_density * area.size(), rng);
    let sbs_positions = uniform_points(n_sbs, area, rng);
    let user_positions = uniform_points(n_users, area, rng);
    let pa = active_probability(env);
    let active_mask = (0..n_sbs).map(|_| rng.random::<f64>() < pa).collect();
    NetworkRealization {
        sbs_positions,
        user_positions,
        active_mask,
        area,
    }
}

/// Path loss `min(1, d^{-α})`.
pub fn path_loss(distance: f64, alpha: f64) -> f64 {
    if distance <= 1.0 {
        1.0
    } else {
        distance.powf(-alpha)
    }
}

/// Instantaneous SINR seen by `user`.
///
/// The serving SBS is the nearest SBS in the reception ball for which
/// `eligible` holds (e.g. it caches the requested file); it transmits
/// regardless of its idle flag. Every other active SBS in the ball hits the
/// user's beam with probability `1/√N_a` and then contributes `N_a·P·l·|g|²`.
pub fn empirical_sinr<R, F>(
    real: &NetworkRealization,
    env: &RadioEnvironment,
    user: usize,
    eligible: F,
    rng: &mut R,
) -> Result<f64>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> bool,
{
    let y = *real
        .user_positions
        .get(user)
        .ok_or(Error::IndexOutOfRange {
            index: user,
            size: real.user_positions.len(),
        })?;
    let in_ball = real.sbs_within(y, env.ball_radius);
    let &(serving, d_serving) = in_ball
        .iter()
        .find(|&&(k, _)| eligible(k))
        .ok_or(Error::NoCoverage)?;
    let na = env.antennas as f64;
    let hit = env.beam_hit_probability();
    let signal = na * env.tx_power * path_loss(d_serving, env.pathloss_exp) * env.fading.sample(rng);
    let mut interference = 0.0;
    for &(k, d) in &in_ball {
        if k == serving || !real.active_mask[k] {
            continue;
        }
        let fade = env.fading.sample(rng);
        if hit >= 1.0 || rng.random::<f64>() < hit {
            interference += na * env.tx_power * path_loss(d, env.pathloss_exp) * fade;
        }
    }
    Ok(signal / (env.noise + interference))
}
