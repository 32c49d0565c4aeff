//! Danger zones, attack-probability fields and chance-constraint margins.
//!
//! A zone's center is Gaussian, `N(mu, sigma)`. The chance constraint
//! `P(robot in zone) <= eps` is replaced by the half-space linearization
//!
//! ```text
//! |a| - offset >= erfinv(1 - 2 eps) * sqrt(2 * a_hat' sigma a_hat),   a = mu - x
//! ```
//!
//! where `offset` is the clearance `r` for sensing zones and `delta2 * c*`
//! for communication zones. The returned *margin* is the left side minus
//! the right side; a non-negative margin means the linearized constraint
//! holds. Since the ball is contained in the half-space, the linearization
//! is conservative: the true membership probability is at most `eps`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{inverse, is_finite_vec, is_spd, max_eigenvalue, Mat2, Vec2};
use crate::special::erf_inv;
use crate::{Error, Result};

/// Below this distance from the zone mean the direction `a_hat` is
/// undefined and margins fall back to the worst eigen-direction.
pub const SINGULAR_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub u32);

impl std::fmt::Display for ZoneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A confidence level `eps` in `(0, 0.5]` together with its cached
/// standard-normal quantile `sqrt(2) * erfinv(1 - 2 eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confidence {
    eps: f64,
    quantile: f64,
}

impl Confidence {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::invalid("eps", format!("must lie in (0, 0.5], got {eps}")));
        }
        Ok(Confidence {
            eps,
            quantile: SQRT_2 * erf_inv(1.0 - 2.0 * eps),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `sqrt(2) * erfinv(1 - 2 eps)`; zero at `eps = 0.5`.
    pub fn quantile(&self) -> f64 {
        self.quantile
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingZone {
    pub id: ZoneId,
    pub mu: Vec2,
    pub sigma: Mat2,
    /// Safety clearance around the (random) center.
    pub radius: f64,
    /// Attack attempts per second.
    pub attack_freq: f64,
    /// Membership probability below which an attacked robot recovers.
    pub eps_recover: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommZone {
    pub id: ZoneId,
    pub mu: Vec2,
    pub sigma: Mat2,
    /// Jamming ratio: robot `i` is at risk when `|center - x_i| <= delta2 * c*`.
    pub delta2: f64,
    pub attack_freq: f64,
    pub eps_recover: f64,
}

/// Behaviour shared by both zone kinds.
pub trait DangerZone {
    fn id(&self) -> ZoneId;
    fn mu(&self) -> &Vec2;
    fn sigma(&self) -> &Mat2;
    fn attack_freq(&self) -> f64;
    fn eps_recover(&self) -> f64;
    /// Distance the realized center must keep from `x`; `c_star` is ignored
    /// by sensing zones.
    fn clearance(&self, c_star: f64) -> f64;
    /// Whether a realized center puts a robot at `x` inside the zone.
    fn contains(&self, center: &Vec2, x: &Vec2, c_star: f64) -> bool;
}

fn validate_common(prefix: &str, mu: &Vec2, sigma: &Mat2, attack_freq: f64, eps_recover: f64) -> Result<()> {
    if !is_finite_vec(mu) {
        return Err(Error::invalid(format!("{prefix}.mu"), "non-finite mean"));
    }
    if !is_spd(sigma) {
        return Err(Error::invalid(format!("{prefix}.sigma"), "must be symmetric positive-definite"));
    }
    if !(attack_freq > 0.0) || !attack_freq.is_finite() {
        return Err(Error::invalid(format!("{prefix}.attack_freq"), "must be finite and > 0"));
    }
    if !(eps_recover > 0.0 && eps_recover < 1.0) {
        return Err(Error::invalid(format!("{prefix}.eps_recover"), "must lie in (0, 1)"));
    }
    Ok(())
}

impl SensingZone {
    pub fn validate(&self) -> Result<()> {
        let prefix = format!("sensing_zones[{}]", self.id);
        validate_common(&prefix, &self.mu, &self.sigma, self.attack_freq, self.eps_recover)?;
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::invalid(format!("{prefix}.radius"), "must be finite and > 0"));
        }
        Ok(())
    }
}

impl CommZone {
    pub fn validate(&self) -> Result<()> {
        let prefix = format!("comm_zones[{}]", self.id);
        validate_common(&prefix, &self.mu, &self.sigma, self.attack_freq, self.eps_recover)?;
        if !(self.delta2 > 0.0) || !self.delta2.is_finite() {
            return Err(Error::invalid(format!("{prefix}.delta2"), "must be finite and > 0"));
        }
        Ok(())
    }
}

impl DangerZone for SensingZone {
    fn id(&self) -> ZoneId {
        self.id
    }
    fn mu(&self) -> &Vec2 {
        &self.mu
    }
    fn sigma(&self) -> &Mat2 {
        &self.sigma
    }
    fn attack_freq(&self) -> f64 {
        self.attack_freq
    }
    fn eps_recover(&self) -> f64 {
        self.eps_recover
    }
    fn clearance(&self, _c_star: f64) -> f64 {
        self.radius
    }
    fn contains(&self, center: &Vec2, x: &Vec2, _c_star: f64) -> bool {
        (center - x).norm() <= self.radius
    }
}

impl DangerZone for CommZone {
    fn id(&self) -> ZoneId {
        self.id
    }
    fn mu(&self) -> &Vec2 {
        &self.mu
    }
    fn sigma(&self) -> &Mat2 {
        &self.sigma
    }
    fn attack_freq(&self) -> f64 {
        self.attack_freq
    }
    fn eps_recover(&self) -> f64 {
        self.eps_recover
    }
    fn clearance(&self, c_star: f64) -> f64 {
        self.delta2 * c_star
    }
    fn contains(&self, center: &Vec2, x: &Vec2, c_star: f64) -> bool {
        (center - x).norm() < self.delta2 * c_star
    }
}

/// `|a| - offset - q * sqrt(a_hat' sigma a_hat)` with `a = mu - x`.
fn linearized_margin(x: &Vec2, mu: &Vec2, sigma: &Mat2, offset: f64, conf: &Confidence) -> f64 {
    let a = mu - x;
    let dist = a.norm();
    if dist < SINGULAR_DISTANCE {
        return -offset - conf.quantile() * max_eigenvalue(sigma).sqrt();
    }
    let a_hat = a / dist;
    let spread = a_hat.dot(&(sigma * a_hat)).max(0.0);
    dist - offset - conf.quantile() * spread.sqrt()
}

/// Linearized sensing chance-constraint margin (metres).
pub fn sensing_margin(x: &Vec2, zone: &SensingZone, conf: &Confidence) -> f64 {
    linearized_margin(x, &zone.mu, &zone.sigma, zone.radius, conf)
}

/// Linearized communication chance-constraint margin (metres). Pass
/// `c_star = 0` for a robot planning on its own.
pub fn comm_margin(x: &Vec2, zone: &CommZone, c_star: f64, conf: &Confidence) -> f64 {
    linearized_margin(x, &zone.mu, &zone.sigma, zone.delta2 * c_star, conf)
}

/// Attack probability field `exp(-a' sigma^-1 a / 2) / (2 pi |sigma|)`,
/// clamped to `[0, 1]`.
pub fn attack_probability(x: &Vec2, mu: &Vec2, sigma: &Mat2) -> f64 {
    let det = sigma.determinant();
    let Some(inv) = inverse(sigma) else {
        return 0.0;
    };
    let a = mu - x;
    let quad = a.dot(&(inv * a));
    let raw = (-0.5 * quad).exp() / (2.0 * PI * det);
    if raw.is_nan() {
        0.0
    } else {
        raw.clamp(0.0, 1.0)
    }
}

pub fn attack_prob_sensing(x: &Vec2, zone: &SensingZone) -> f64 {
    attack_probability(x, &zone.mu, &zone.sigma)
}

pub fn attack_prob_comm(x: &Vec2, zone: &CommZone) -> f64 {
    attack_probability(x, &zone.mu, &zone.sigma)
}

/// Direct jamming: the realized jammer (taken as `mu`) is within
/// `delta2 * c_star` of the robot.
pub fn direct_jam_condition(x: &Vec2, zone: &CommZone, c_star: f64) -> bool {
    (zone.mu - x).norm() <= zone.delta2 * c_star
}

fn cholesky(sigma: &Mat2) -> Mat2 {
    let l11 = sigma[(0, 0)].sqrt();
    let l21 = sigma[(1, 0)] / l11;
    let l22 = (sigma[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Mat2::new(l11, 0.0, l21, l22)
}

/// Monte-Carlo estimate of the membership probability: draw zone centers
/// from `N(mu, sigma)` and count how often `x` ends up inside.
pub fn membership_prob_mc<Z: DangerZone, R: Rng + ?Sized>(
    x: &Vec2,
    zone: &Z,
    c_star: f64,
    n_samples: usize,
    rng: &mut R,
) -> f64 {
    if n_samples == 0 {
        return 0.0;
    }
    let chol = cholesky(zone.sigma());
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let n = Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let center = zone.mu() + chol * n;
        if zone.contains(&center, x, c_star) {
            hits += 1;
        }
    }
    hits as f64 / n_samples as f64
}
