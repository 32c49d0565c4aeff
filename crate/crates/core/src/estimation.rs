//! Range-bearing EKF target estimation and covariance intersection.

use std::cmp::Ordering;

use log::debug;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::AgentModel;
use crate::linalg::{clean_covariance, inverse, is_spd, wrap_angle, Mat2, Vec2};
use crate::{Error, Result};

/// Observations closer than this to the linearization point are skipped:
/// the measurement Jacobian blows up.
pub const MIN_OBSERVATION_RANGE: f64 = 1e-6;

const GOLDEN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub mean: Vec2,
    pub cov: Mat2,
}

impl TargetEstimate {
    pub fn new(mean: Vec2, cov: Mat2) -> Self {
        TargetEstimate { mean, cov }
    }

    pub fn trace(&self) -> f64 {
        self.cov.trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    pub range_std: f64,
    pub bearing_std: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            range_std: 0.05,
            bearing_std: 0.05,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.range_std > 0.0) || !(self.bearing_std > 0.0) {
            return Err(Error::invalid("sensor", "range_std and bearing_std must be > 0"));
        }
        Ok(())
    }

    /// `R^-1 = diag(1/sigma_r^2, 1/sigma_theta^2)`.
    pub fn information(&self) -> Mat2 {
        Mat2::new(
            1.0 / (self.range_std * self.range_std),
            0.0,
            0.0,
            1.0 / (self.bearing_std * self.bearing_std),
        )
    }

    pub fn noise(&self) -> Mat2 {
        Mat2::new(self.range_std.powi(2), 0.0, 0.0, self.bearing_std.powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub range: f64,
    pub bearing: f64,
}

/// A measurement together with where it was taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub robot: Vec2,
    pub measurement: Measurement,
    pub sensor: SensorModel,
}

/// Noisy range and bearing from `robot` to `target`. `None` when the two
/// coincide and the bearing is undefined.
pub fn measure<R: Rng + ?Sized>(robot: &Vec2, target: &Vec2, sensor: &SensorModel, rng: &mut R) -> Option<Measurement> {
    let delta = target - robot;
    let range = delta.norm();
    if range == 0.0 {
        debug!("skipping measurement: robot and target coincide at {:?}", robot.as_slice());
        return None;
    }
    let nr: f64 = rng.sample(StandardNormal);
    let nb: f64 = rng.sample(StandardNormal);
    Some(Measurement {
        range: range + sensor.range_std * nr,
        bearing: wrap_angle(delta[1].atan2(delta[0]) + sensor.bearing_std * nb),
    })
}

/// Range-bearing Jacobian at `target` seen from `robot`:
/// rows `delta'/d` and `(-dy, dx)/d^2`. `None` when too close.
pub fn measurement_jacobian(robot: &Vec2, target: &Vec2) -> Option<Mat2> {
    let delta = target - robot;
    let d = delta.norm();
    if d < MIN_OBSERVATION_RANGE {
        return None;
    }
    let d2 = d * d;
    Some(Mat2::new(delta[0] / d, delta[1] / d, -delta[1] / d2, delta[0] / d2))
}

pub fn ekf_predict(est: &TargetEstimate, model: &AgentModel, u_assumed: &Vec2, process_noise: &Mat2) -> TargetEstimate {
    let a = &model.process;
    TargetEstimate {
        mean: a * est.mean + model.control * u_assumed,
        cov: clean_covariance(&(a * est.cov * a.transpose() + process_noise)),
    }
}

/// Outcome of [`ekf_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub estimate: TargetEstimate,
    pub accepted: usize,
    pub skipped: usize,
}

/// Sequential EKF update, one (range, bearing) pair at a time, in the
/// order given. Each observation is linearized at the mean left by the
/// previous one. Covariances use the Joseph form.
pub fn ekf_update(est: &TargetEstimate, observations: &[Observation]) -> UpdateOutcome {
    let mut mean = est.mean;
    let mut cov = est.cov;
    let mut accepted = 0;
    let mut skipped = 0;
    for obs in observations {
        let Some(h) = measurement_jacobian(&obs.robot, &mean) else {
            debug!("skipping observation from {:?}: too close to estimate", obs.robot.as_slice());
            skipped += 1;
            continue;
        };
        let delta = mean - obs.robot;
        let innovation = Vec2::new(
            obs.measurement.range - delta.norm(),
            wrap_angle(obs.measurement.bearing - delta[1].atan2(delta[0])),
        );
        let r = obs.sensor.noise();
        let s = h * cov * h.transpose() + r;
        let Some(s_inv) = inverse(&s) else {
            skipped += 1;
            continue;
        };
        let gain = cov * h.transpose() * s_inv;
        mean += gain * innovation;
        let i_kh = Mat2::identity() - gain * h;
        cov = clean_covariance(&(i_kh * cov * i_kh.transpose() + gain * r * gain.transpose()));
        accepted += 1;
    }
    UpdateOutcome {
        estimate: TargetEstimate { mean, cov },
        accepted,
        skipped,
    }
}

fn ci_trace(info_a: &Mat2, info_b: &Mat2, omega: f64) -> f64 {
    inverse(&(info_a * omega + info_b * (1.0 - omega)))
        .map(|m| m.trace())
        .unwrap_or(f64::INFINITY)
}

fn canonical_order(a: &TargetEstimate, b: &TargetEstimate) -> Ordering {
    let key = |e: &TargetEstimate| {
        [
            e.cov.trace(),
            e.cov[(0, 0)],
            e.cov[(0, 1)],
            e.cov[(1, 0)],
            e.cov[(1, 1)],
            e.mean[0],
            e.mean[1],
        ]
    };
    let (ka, kb) = (key(a), key(b));
    ka.iter()
        .zip(kb.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Covariance intersection of two estimates with unknown cross-correlation.
///
/// `omega` weights `a` and minimizes the trace of the merged covariance
/// (golden-section search over `[0, 1]`, endpoints included; `0.5` when the
/// trace is flat). The computation runs on a canonical ordering of the two
/// inputs, so swapping them returns the same estimate with `1 - omega`.
pub fn covariance_intersection(a: &TargetEstimate, b: &TargetEstimate) -> Result<(TargetEstimate, f64)> {
    if !is_spd(&a.cov) || !is_spd(&b.cov) {
        return Err(Error::invalid("covariance", "covariance intersection needs SPD inputs"));
    }
    if canonical_order(a, b) == Ordering::Greater {
        let (merged, omega) = ci_canonical(b, a)?;
        return Ok((merged, 1.0 - omega));
    }
    ci_canonical(a, b)
}

fn ci_canonical(a: &TargetEstimate, b: &TargetEstimate) -> Result<(TargetEstimate, f64)> {
    let err = || Error::invalid("covariance", "singular covariance in intersection");
    let info_a = inverse(&a.cov).ok_or_else(err)?;
    let info_b = inverse(&b.cov).ok_or_else(err)?;

    let scale = info_a.abs().max().max(info_b.abs().max());
    let omega = if (info_a - info_b).abs().max() <= 1e-12 * scale {
        0.5
    } else {
        let f = |w: f64| ci_trace(&info_a, &info_b, w);
        let inner = golden_section(&f, 0.0, 1.0, GOLDEN_TOL);
        let mut best = (f(inner), inner);
        for w in [0.0, 1.0] {
            let v = f(w);
            if v < best.0 {
                best = (v, w);
            }
        }
        best.1
    };

    let info = info_a * omega + info_b * (1.0 - omega);
    let cov = inverse(&info).ok_or_else(err)?;
    let mean = cov * (info_a * a.mean * omega + info_b * b.mean * (1.0 - omega));
    Ok((
        TargetEstimate {
            mean,
            cov: clean_covariance(&cov),
        },
        omega,
    ))
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - (hi - lo) * inv_phi;
    let mut d = lo + (hi - lo) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * inv_phi;
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * inv_phi;
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Mean squared position error over targets.
pub fn mse(estimates: &[TargetEstimate], truths: &[Vec2]) -> f64 {
    if estimates.is_empty() {
        return 0.0;
    }
    let sum: f64 = estimates
        .iter()
        .zip(truths)
        .map(|(e, z)| (e.mean - z).norm_squared())
        .sum();
    sum / estimates.len() as f64
}

/// Sum of covariance traces over targets.
pub fn total_trace(estimates: &[TargetEstimate]) -> f64 {
    estimates.iter().map(TargetEstimate::trace).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankOwner {
    Group,
    Robot(usize),
}

/// One estimate per target, owned by the communication group or by a
/// single comm-lost robot.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub owner: BankOwner,
    pub estimates: Vec<TargetEstimate>,
    pub process_noise: Mat2,
}

impl FilterBank {
    pub fn new(owner: BankOwner, estimates: Vec<TargetEstimate>, process_noise: Mat2) -> Self {
        FilterBank {
            owner,
            estimates,
            process_noise,
        }
    }

    /// Predict every target with its model and zero assumed control.
    pub fn predict(&mut self, models: &[AgentModel]) {
        for (est, model) in self.estimates.iter_mut().zip(models) {
            *est = ekf_predict(est, model, &Vec2::zeros(), &self.process_noise);
        }
    }

    /// Predicted estimates one step ahead, without touching the bank.
    pub fn predicted(&self, models: &[AgentModel]) -> Vec<TargetEstimate> {
        self.estimates
            .iter()
            .zip(models)
            .map(|(e, m)| ekf_predict(e, m, &Vec2::zeros(), &self.process_noise))
            .collect()
    }

    /// Returns the number of skipped observations.
    pub fn update(&mut self, target: usize, observations: &[Observation]) -> usize {
        let outcome = ekf_update(&self.estimates[target], observations);
        self.estimates[target] = outcome.estimate;
        outcome.skipped
    }

    /// Merge `other` into this bank target by target. Returns the weights.
    pub fn merge(&mut self, other: &FilterBank) -> Result<Vec<f64>> {
        let mut omegas = Vec::with_capacity(self.estimates.len());
        for (mine, theirs) in self.estimates.iter_mut().zip(&other.estimates) {
            let (merged, omega) = covariance_intersection(theirs, mine)?;
            *mine = merged;
            omegas.push(omega);
        }
        Ok(omegas)
    }
}
