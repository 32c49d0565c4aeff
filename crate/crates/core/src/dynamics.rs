//! Discrete-time linear dynamics for robots and targets.
//!
//! Both robots and targets follow `x' = process * x + control * u` with a
//! component-wise bound on `u`. Targets are driven by a scripted
//! [`TargetPolicy`]; robots by the planner.

use serde::{Deserialize, Serialize};

use crate::linalg::{is_finite_mat, is_finite_vec, Mat2, Vec2};
use crate::{Error, Result};

/// Tolerance on the control bound check, so that clamped controls pass.
const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub process: Mat2,
    pub control: Mat2,
    pub u_max: f64,
}

impl AgentModel {
    pub fn new(process: Mat2, control: Mat2, u_max: f64) -> Result<Self> {
        let model = AgentModel {
            process,
            control,
            u_max,
        };
        model.validate()?;
        Ok(model)
    }

    /// `process = I`, `control = dt * I`.
    pub fn single_integrator(dt: f64, u_max: f64) -> Result<Self> {
        Self::new(Mat2::identity(), Mat2::identity() * dt, u_max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max >= 0.0) || !self.u_max.is_finite() {
            return Err(Error::invalid("u_max", format!("must be finite and >= 0, got {}", self.u_max)));
        }
        if !is_finite_mat(&self.process) {
            return Err(Error::invalid("process", "matrix has non-finite entries"));
        }
        if !is_finite_mat(&self.control) {
            return Err(Error::invalid("control", "matrix has non-finite entries"));
        }
        Ok(())
    }

    /// Clamp every component of `u` into `[-u_max, u_max]`.
    pub fn clamp(&self, u: Vec2) -> Vec2 {
        u.map(|c| c.clamp(-self.u_max, self.u_max))
    }
}

/// One step of `x' = process * x + control * u`.
///
/// Controls outside the box are rejected rather than clamped: clamping is
/// the planner's job.
pub fn step_agent(x: &Vec2, u: &Vec2, model: &AgentModel) -> Result<Vec2> {
    if !is_finite_vec(x) {
        return Err(Error::Contract(format!("non-finite state {:?}", x.as_slice())));
    }
    if !is_finite_vec(u) || u.iter().any(|c| c.abs() > model.u_max + BOUND_TOL) {
        return Err(Error::Contract(format!(
            "control {:?} exceeds bound {}",
            u.as_slice(),
            model.u_max
        )));
    }
    Ok(model.process * x + model.control * u)
}

fn default_capture_radius() -> f64 {
    0.1
}

/// Scripted target control law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetPolicy {
    ConstantControl {
        control: Vec2,
    },
    /// Head toward the current waypoint at `speed` (defaults to the model's
    /// `u_max`), moving on to the next one once within `capture_radius`.
    WaypointCycle {
        waypoints: Vec<Vec2>,
        #[serde(default = "default_capture_radius")]
        capture_radius: f64,
        #[serde(default)]
        speed: Option<f64>,
        #[serde(default, skip_serializing)]
        cursor: usize,
    },
    /// Per-step controls; the last entry is held once the list runs out.
    ScriptedSequence {
        controls: Vec<Vec2>,
    },
}

impl TargetPolicy {
    pub fn waypoint_cycle(waypoints: Vec<Vec2>, capture_radius: f64) -> Result<Self> {
        let policy = TargetPolicy::WaypointCycle {
            waypoints,
            capture_radius,
            speed: None,
            cursor: 0,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetPolicy::ConstantControl { control } if !is_finite_vec(control) => {
                Err(Error::invalid("policy.control", "non-finite control"))
            }
            TargetPolicy::WaypointCycle {
                waypoints,
                capture_radius,
                speed,
                ..
            } => {
                if waypoints.is_empty() {
                    return Err(Error::invalid("policy.waypoints", "needs at least one waypoint"));
                }
                if waypoints.iter().any(|w| !is_finite_vec(w)) {
                    return Err(Error::invalid("policy.waypoints", "non-finite waypoint"));
                }
                if !(*capture_radius > 0.0) {
                    return Err(Error::invalid("policy.capture_radius", "must be > 0"));
                }
                if let Some(s) = speed {
                    if !(*s >= 0.0) || !s.is_finite() {
                        return Err(Error::invalid("policy.speed", "must be finite and >= 0"));
                    }
                }
                Ok(())
            }
            TargetPolicy::ScriptedSequence { controls } => {
                if controls.iter().any(|c| !is_finite_vec(c)) {
                    Err(Error::invalid("policy.controls", "non-finite control"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Index of the waypoint currently being approached, if any.
    pub fn cursor(&self) -> Option<usize> {
        match self {
            TargetPolicy::WaypointCycle { cursor, .. } => Some(*cursor),
            _ => None,
        }
    }

    /// Control for a target at `x` on step `t`, clamped to `u_max`.
    ///
    /// Waypoint policies advance their cursor as a side effect.
    pub fn control(&mut self, x: &Vec2, t: usize, u_max: f64) -> Vec2 {
        let clamp = |u: Vec2| u.map(|c| c.clamp(-u_max, u_max));
        match self {
            TargetPolicy::ConstantControl { control } => clamp(*control),
            TargetPolicy::ScriptedSequence { controls } => match controls.len() {
                0 => Vec2::zeros(),
                n => clamp(controls[t.min(n - 1)]),
            },
            TargetPolicy::WaypointCycle {
                waypoints,
                capture_radius,
                speed,
                cursor,
            } => {
                let n = waypoints.len();
                if n == 0 {
                    return Vec2::zeros();
                }
                *cursor %= n;
                // Advance past every waypoint we are already sitting on, but
                // never loop more than once around the cycle.
                for _ in 0..n {
                    if (waypoints[*cursor] - x).norm() <= *capture_radius {
                        *cursor = (*cursor + 1) % n;
                    } else {
                        break;
                    }
                }
                let delta = waypoints[*cursor] - x;
                let dist = delta.norm();
                if dist == 0.0 {
                    return Vec2::zeros();
                }
                let v = speed.unwrap_or(u_max).min(u_max);
                clamp(delta / dist * v)
            }
        }
    }
}
