//! Scenario files (TOML) and their validated, resolved form.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attacks::{SharingPolicy, ZoneSet};
use crate::dynamics::{AgentModel, TargetPolicy};
use crate::estimation::SensorModel;
use crate::linalg::{Mat2, Vec2};
use crate::planner::PlannerConfig;
use crate::zones::{CommZone, SensingZone, ZoneId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Escape, remember and share danger zones.
    #[default]
    Resilient,
    /// No zone knowledge and no escape behaviour.
    Vanilla,
    /// Escape and remember privately, never share.
    Individual,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Resilient, Mode::Vanilla, Mode::Individual];

    pub fn sharing(self) -> SharingPolicy {
        match self {
            Mode::Resilient => SharingPolicy {
                record: true,
                share: true,
            },
            Mode::Individual => SharingPolicy {
                record: true,
                share: false,
            },
            Mode::Vanilla => SharingPolicy {
                record: false,
                share: false,
            },
        }
    }

    /// Robots that can neither sense nor talk try to leave known zones.
    pub fn escapes(self) -> bool {
        self != Mode::Vanilla
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Resilient => "resilient",
            Mode::Vanilla => "vanilla",
            Mode::Individual => "individual",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::invalid("mode", format!("unknown mode `{s}` (expected resilient, vanilla or individual)")))
    }
}

/// A covariance given either as a scalar (isotropic) or a row-major 2x2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovSpec {
    Isotropic(f64),
    Matrix([[f64; 2]; 2]),
}

impl CovSpec {
    pub fn to_mat(self) -> Mat2 {
        match self {
            CovSpec::Isotropic(s) => Mat2::identity() * s,
            CovSpec::Matrix(m) => Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1]),
        }
    }
}

fn vec2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn mat2(m: [[f64; 2]; 2]) -> Mat2 {
    Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

fn one() -> f64 {
    1.0
}
fn default_robot_u_max() -> f64 {
    1.0
}
fn default_target_u_max() -> f64 {
    0.3
}
fn default_initial_cov() -> f64 {
    0.1
}
fn default_process_noise() -> f64 {
    1e-4
}
fn default_eps_recover() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub position: [f64; 2],
    #[serde(default = "default_robot_u_max")]
    pub u_max: f64,
    #[serde(default)]
    pub sensor: SensorModel,
    /// Row-major; defaults to the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<[[f64; 2]; 2]>,
    /// Row-major; defaults to `dt * I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<[[f64; 2]; 2]>,
}

fn default_policy() -> TargetPolicy {
    TargetPolicy::ConstantControl { control: Vec2::zeros() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub position: [f64; 2],
    #[serde(default = "default_target_u_max")]
    pub u_max: f64,
    #[serde(default = "default_policy")]
    pub policy: TargetPolicy,
    /// Robots assigned to this target; all robots when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingZoneConfig {
    pub id: u32,
    pub mu: [f64; 2],
    pub sigma: CovSpec,
    pub radius: f64,
    #[serde(default = "one")]
    pub attack_freq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_recover: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommZoneConfig {
    pub id: u32,
    pub mu: [f64; 2],
    pub sigma: CovSpec,
    pub delta2: f64,
    #[serde(default = "one")]
    pub attack_freq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_recover: Option<f64>,
}

/// Recovery thresholds for zones that do not set their own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub sensing_eps: f64,
    pub comm_eps: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            sensing_eps: default_eps_recover(),
            comm_eps: default_eps_recover(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub dt: f64,
    pub max_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    /// Global multiplier on attack probabilities.
    #[serde(default = "one")]
    pub delta1: f64,
    /// Initial estimate covariance, `initial_cov * I`, centred on the truth.
    #[serde(default = "default_initial_cov")]
    pub initial_cov: f64,
    /// Filter process noise, `process_noise * I`.
    #[serde(default = "default_process_noise")]
    pub process_noise: f64,
    pub robots: Vec<RobotConfig>,
    pub targets: Vec<TargetConfig>,
    #[serde(default)]
    pub sensing_zones: Vec<SensingZoneConfig>,
    #[serde(default)]
    pub comm_zones: Vec<CommZoneConfig>,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
}

/// Everything a run needs, validated and in solver-ready types.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dt: f64,
    pub max_steps: usize,
    pub seed: u64,
    pub mode: Mode,
    pub delta1: f64,
    pub initial_cov: f64,
    pub process_noise: Mat2,
    pub robot_start: Vec<Vec2>,
    pub robot_models: Vec<AgentModel>,
    pub sensors: Vec<SensorModel>,
    pub target_start: Vec<Vec2>,
    pub target_models: Vec<AgentModel>,
    pub policies: Vec<TargetPolicy>,
    /// Targets each robot tracks.
    pub assignments: Vec<Vec<usize>>,
    pub zones: ZoneSet,
    pub planner: PlannerConfig,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn finite_pair(field: String, p: [f64; 2]) -> Result<()> {
    if p.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(field, "non-finite coordinates"))
    }
}

fn model(
    field: &str,
    dt: f64,
    process: Option<[[f64; 2]; 2]>,
    control: Option<[[f64; 2]; 2]>,
    u_max: f64,
) -> Result<AgentModel> {
    let process = process.map(mat2).unwrap_or_else(Mat2::identity);
    let control = control.map(mat2).unwrap_or_else(|| Mat2::identity() * dt);
    AgentModel::new(process, control, u_max).map_err(|e| match e {
        Error::Invalid { field: f, reason } => Error::invalid(format!("{field}.{f}"), reason),
        other => other,
    })
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    /// Validate and convert into a [`Scenario`].
    pub fn resolve(&self) -> Result<Scenario> {
        positive("dt", self.dt)?;
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be >= 1"));
        }
        if !(self.delta1 >= 0.0) || !self.delta1.is_finite() {
            return Err(Error::invalid("delta1", "must be finite and >= 0"));
        }
        positive("initial_cov", self.initial_cov)?;
        if !(self.process_noise >= 0.0) || !self.process_noise.is_finite() {
            return Err(Error::invalid("process_noise", "must be finite and >= 0"));
        }
        if self.robots.is_empty() {
            return Err(Error::invalid("robots", "at least one robot is required"));
        }
        if self.targets.is_empty() {
            return Err(Error::invalid("targets", "at least one target is required"));
        }
        self.planner.validate()?;
        for (name, eps) in [
            ("recovery.sensing_eps", self.recovery.sensing_eps),
            ("recovery.comm_eps", self.recovery.comm_eps),
        ] {
            if !(eps > 0.0 && eps <= 0.5) {
                return Err(Error::invalid(name, "must lie in (0, 0.5]"));
            }
        }

        let n_robots = self.robots.len();
        let mut robot_models = Vec::with_capacity(n_robots);
        for (i, r) in self.robots.iter().enumerate() {
            finite_pair(format!("robots[{i}].position"), r.position)?;
            robot_models.push(model(&format!("robots[{i}]"), self.dt, r.process, r.control, r.u_max)?);
            r.sensor.validate().map_err(|_| {
                Error::invalid(format!("robots[{i}].sensor"), "range_std and bearing_std must be > 0")
            })?;
        }

        let mut assignments = vec![Vec::new(); n_robots];
        let mut target_models = Vec::with_capacity(self.targets.len());
        for (j, t) in self.targets.iter().enumerate() {
            finite_pair(format!("targets[{j}].position"), t.position)?;
            target_models.push(model(&format!("targets[{j}]"), self.dt, t.process, t.control, t.u_max)?);
            t.policy.validate().map_err(|e| match e {
                Error::Invalid { field, reason } => Error::invalid(format!("targets[{j}].{field}"), reason),
                other => other,
            })?;
            let observers: Vec<usize> = match &t.observers {
                Some(list) => list.clone(),
                None => (0..n_robots).collect(),
            };
            if observers.is_empty() {
                return Err(Error::invalid(format!("targets[{j}].observers"), "needs at least one robot"));
            }
            let mut seen = BTreeSet::new();
            for &i in &observers {
                if i >= n_robots {
                    return Err(Error::invalid(
                        format!("targets[{j}].observers"),
                        format!("robot {i} does not exist"),
                    ));
                }
                if seen.insert(i) {
                    assignments[i].push(j);
                }
            }
        }

        let mut ids = BTreeSet::new();
        let mut sensing = Vec::with_capacity(self.sensing_zones.len());
        for z in &self.sensing_zones {
            if !ids.insert(z.id) {
                return Err(Error::invalid(format!("sensing_zones[{}].id", z.id), "zone ids must be unique"));
            }
            let zone = SensingZone {
                id: ZoneId(z.id),
                mu: vec2(z.mu),
                sigma: z.sigma.to_mat(),
                radius: z.radius,
                attack_freq: z.attack_freq,
                eps_recover: z.eps_recover.unwrap_or(self.recovery.sensing_eps),
            };
            zone.validate()?;
            sensing.push(zone);
        }
        let mut comm = Vec::with_capacity(self.comm_zones.len());
        for z in &self.comm_zones {
            if !ids.insert(z.id) {
                return Err(Error::invalid(format!("comm_zones[{}].id", z.id), "zone ids must be unique"));
            }
            let zone = CommZone {
                id: ZoneId(z.id),
                mu: vec2(z.mu),
                sigma: z.sigma.to_mat(),
                delta2: z.delta2,
                attack_freq: z.attack_freq,
                eps_recover: z.eps_recover.unwrap_or(self.recovery.comm_eps),
            };
            zone.validate()?;
            comm.push(zone);
        }
        for (prefix, eps) in sensing
            .iter()
            .map(|z| (format!("sensing_zones[{}]", z.id), z.eps_recover))
            .chain(comm.iter().map(|z| (format!("comm_zones[{}]", z.id), z.eps_recover)))
        {
            if eps > 0.5 {
                return Err(Error::invalid(format!("{prefix}.eps_recover"), "must lie in (0, 0.5]"));
            }
        }

        Ok(Scenario {
            dt: self.dt,
            max_steps: self.max_steps,
            seed: self.seed,
            mode: self.mode,
            delta1: self.delta1,
            initial_cov: self.initial_cov,
            process_noise: Mat2::identity() * self.process_noise,
            robot_start: self.robots.iter().map(|r| vec2(r.position)).collect(),
            robot_models,
            sensors: self.robots.iter().map(|r| r.sensor).collect(),
            target_start: self.targets.iter().map(|t| vec2(t.position)).collect(),
            target_models,
            policies: self.targets.iter().map(|t| t.policy.clone()).collect(),
            assignments,
            zones: ZoneSet::new(sensing, comm),
            planner: self.planner.clone(),
        })
    }
}
