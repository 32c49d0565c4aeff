//! Chance-constrained planning for one step ahead.
//!
//! All three regimes (group, single robot, escape) minimize
//!
//! ```text
//! w1 f(x') + sum_i ( w2 |u_i| + w3 sum_l nu_il + w4 sum_k xi_ik )
//! s.t. sensing_margin_il(x') + nu_il >= 0,  comm_margin_ik(x', c*_i) + xi_ik >= 0,
//!      nu, xi >= 0,  |u_i|_inf <= u_max
//! ```
//!
//! Each slack has a non-negative linear cost and appears in exactly one
//! constraint, so its optimum is the hinge `max(0, -margin)`. Substituting
//! it turns the problem into a bounded, nonsmooth minimization over the
//! controls alone, which is solved by a derivative-free grid refinement
//! (or optionally projected gradient descent).

use serde::{Deserialize, Serialize};

use crate::dynamics::AgentModel;
use crate::estimation::{measurement_jacobian, SensorModel, TargetEstimate};
use crate::linalg::{inverse, Mat2, Vec2};
use crate::zones::{comm_margin, sensing_margin, CommZone, Confidence, SensingZone, ZoneId};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveKind {
    /// Trace of the one-step posterior covariance, summed over targets.
    TracePredicted,
    /// Squared deviation from a standoff distance to the closest observer.
    DistanceSurrogate { standoff: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverKind {
    /// Per-robot 2-D grids, re-centered on the incumbent and shrunk after
    /// each round.
    GridRefine { rounds: usize, points: usize, shrink: f64 },
    /// Projected gradient with central finite differences and backtracking.
    ProjectedGradient {
        max_iters: usize,
        tolerance: f64,
        fd_step: f64,
    },
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::GridRefine {
            rounds: 3,
            points: 17,
            shrink: 4.0,
        }
    }
}

fn default_w1() -> f64 {
    1.0
}
fn default_w2() -> f64 {
    0.01
}
fn default_w_zone() -> f64 {
    5.0
}
fn default_eps() -> f64 {
    0.05
}
fn default_boost() -> f64 {
    2.0
}
fn default_objective() -> ObjectiveKind {
    ObjectiveKind::TracePredicted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    #[serde(default = "default_w1")]
    pub w1: f64,
    #[serde(default = "default_w2")]
    pub w2: f64,
    #[serde(default = "default_w_zone")]
    pub w3: f64,
    #[serde(default = "default_w_zone")]
    pub w4: f64,
    #[serde(default = "default_eps")]
    pub eps1: f64,
    #[serde(default = "default_eps")]
    pub eps2: f64,
    #[serde(default = "default_objective")]
    pub objective: ObjectiveKind,
    #[serde(default)]
    pub solver: SolverKind,
    /// Weight multiplier, in escape planning, for zones the robot is
    /// currently inside.
    #[serde(default = "default_boost")]
    pub escape_boost: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            w1: default_w1(),
            w2: default_w2(),
            w3: default_w_zone(),
            w4: default_w_zone(),
            eps1: default_eps(),
            eps2: default_eps(),
            objective: default_objective(),
            solver: SolverKind::default(),
            escape_boost: default_boost(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w1", self.w1), ("w2", self.w2), ("w3", self.w3), ("w4", self.w4)] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("planner.{name}"), "weights must be finite and >= 0"));
            }
        }
        for (name, eps) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            Confidence::new(eps).map_err(|_| Error::invalid(format!("planner.{name}"), "must lie in (0, 0.5]"))?;
        }
        if !(self.escape_boost >= 1.0) || !self.escape_boost.is_finite() {
            return Err(Error::invalid("planner.escape_boost", "must be finite and >= 1"));
        }
        if let ObjectiveKind::DistanceSurrogate { standoff } = self.objective {
            if !(standoff >= 0.0) {
                return Err(Error::invalid("planner.objective.standoff", "must be >= 0"));
            }
        }
        match self.solver {
            SolverKind::GridRefine { rounds, points, shrink } => {
                if rounds == 0 || points < 3 || points % 2 == 0 || !(shrink > 1.0) {
                    return Err(Error::invalid(
                        "planner.solver",
                        "grid-refine needs rounds >= 1, an odd number of points >= 3 and shrink > 1",
                    ));
                }
            }
            SolverKind::ProjectedGradient {
                max_iters,
                tolerance,
                fd_step,
            } => {
                if max_iters == 0 || !(tolerance > 0.0) || !(fd_step > 0.0) {
                    return Err(Error::invalid("planner.solver", "projected-gradient parameters must be positive"));
                }
            }
        }
        Ok(())
    }

    fn confidences(&self) -> Result<(Confidence, Confidence)> {
        Ok((Confidence::new(self.eps1)?, Confidence::new(self.eps2)?))
    }
}

/// A robot as seen by the planner.
#[derive(Debug, Clone)]
pub struct PlanningRobot<'a> {
    pub id: usize,
    pub position: Vec2,
    pub model: &'a AgentModel,
    pub sensor: SensorModel,
    pub sensing_ok: bool,
    /// Targets whose estimates this robot's measurements count toward.
    pub targets: &'a [usize],
    /// Known zones this robot must respect.
    pub sensing_zones: Vec<&'a SensingZone>,
    pub comm_zones: Vec<&'a CommZone>,
}

/// A sensing-capable robot at a candidate position.
#[derive(Debug, Clone, Copy)]
pub struct Observer<'a> {
    pub position: Vec2,
    pub sensor: &'a SensorModel,
    pub targets: &'a [usize],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub robot: usize,
    pub zone: ZoneId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub controls: Vec<Vec2>,
    pub slacks_nu: Vec<Slack>,
    pub slacks_xi: Vec<Slack>,
    pub objective_value: f64,
    pub feasible_without_slack: bool,
    /// False when the solver stopped on its iteration budget.
    pub converged: bool,
    /// Objective value of each accepted incumbent, starting at `u = 0`.
    pub accepted: Vec<f64>,
}

impl PlanResult {
    pub fn total_slack(&self, robot: usize) -> f64 {
        self.slacks_nu
            .iter()
            .chain(&self.slacks_xi)
            .filter(|s| s.robot == robot)
            .map(|s| s.value)
            .sum()
    }
}

/// Optimal slacks for a set of constraint margins: `max(0, -g)`.
pub fn eliminate_slacks(margins: &[f64]) -> Vec<f64> {
    margins.iter().map(|g| (-g).max(0.0)).collect()
}

/// Tracking error `f` for observers at candidate positions.
pub fn tracking_objective(observers: &[Observer<'_>], predicted: &[TargetEstimate], kind: &ObjectiveKind) -> f64 {
    match kind {
        ObjectiveKind::TracePredicted => {
            let prior_info: Vec<Option<Mat2>> = predicted.iter().map(|e| inverse(&e.cov)).collect();
            posterior_trace(observers, predicted, &prior_info)
        }
        ObjectiveKind::DistanceSurrogate { standoff } => distance_surrogate(observers, predicted, *standoff),
    }
}

fn posterior_trace(observers: &[Observer<'_>], predicted: &[TargetEstimate], prior_info: &[Option<Mat2>]) -> f64 {
    let mut total = 0.0;
    for (j, est) in predicted.iter().enumerate() {
        let Some(mut info) = prior_info[j] else {
            total += est.trace();
            continue;
        };
        let mut observed = false;
        for obs in observers.iter().filter(|o| o.targets.contains(&j)) {
            if let Some(h) = measurement_jacobian(&obs.position, &est.mean) {
                info += h.transpose() * obs.sensor.information() * h;
                observed = true;
            }
        }
        total += if observed {
            inverse(&info).map(|m| m.trace()).unwrap_or(0.0)
        } else {
            est.trace()
        };
    }
    total
}

fn distance_surrogate(observers: &[Observer<'_>], predicted: &[TargetEstimate], standoff: f64) -> f64 {
    predicted
        .iter()
        .enumerate()
        .map(|(j, est)| {
            observers
                .iter()
                .filter(|o| o.targets.contains(&j))
                .map(|o| ((o.position - est.mean).norm() - standoff).powi(2))
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
                .unwrap_or(0.0)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CStar {
    /// Distance to the farthest other planned robot, at candidate positions.
    Group,
    Zero,
}

struct Problem<'a, 'r> {
    robots: &'a [PlanningRobot<'r>],
    predicted: &'a [TargetEstimate],
    prior_info: Vec<Option<Mat2>>,
    cfg: &'a PlannerConfig,
    track: bool,
    c_star: CStar,
    sensing_conf: Confidence,
    comm_conf: Confidence,
    /// Per robot, per known zone weights (w3 or w4, possibly boosted).
    sensing_weights: Vec<Vec<f64>>,
    comm_weights: Vec<Vec<f64>>,
}

impl<'a, 'r> Problem<'a, 'r> {
    fn new(
        robots: &'a [PlanningRobot<'r>],
        predicted: &'a [TargetEstimate],
        cfg: &'a PlannerConfig,
        track: bool,
        c_star: CStar,
    ) -> Result<Self> {
        let (sensing_conf, comm_conf) = cfg.confidences()?;
        let sensing_weights = robots.iter().map(|r| vec![cfg.w3; r.sensing_zones.len()]).collect();
        let comm_weights = robots.iter().map(|r| vec![cfg.w4; r.comm_zones.len()]).collect();
        let prior_info = if track && cfg.objective == ObjectiveKind::TracePredicted {
            predicted.iter().map(|e| inverse(&e.cov)).collect()
        } else {
            Vec::new()
        };
        Ok(Problem {
            robots,
            predicted,
            prior_info,
            cfg,
            track,
            c_star,
            sensing_conf,
            comm_conf,
            sensing_weights,
            comm_weights,
        })
    }

    fn next_positions(&self, u: &[Vec2]) -> Vec<Vec2> {
        self.robots
            .iter()
            .zip(u)
            .map(|(r, u)| r.model.process * r.position + r.model.control * u)
            .collect()
    }

    fn c_star(&self, positions: &[Vec2], i: usize) -> f64 {
        match self.c_star {
            CStar::Zero => 0.0,
            CStar::Group => positions
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| (positions[i] - p).norm())
                .fold(0.0, f64::max),
        }
    }

    /// Sensing and comm margins of robot `i` at candidate positions.
    fn margins(&self, positions: &[Vec2], i: usize) -> (Vec<f64>, Vec<f64>) {
        let r = &self.robots[i];
        let x = positions[i];
        let c_star = self.c_star(positions, i);
        let s = r
            .sensing_zones
            .iter()
            .map(|z| sensing_margin(&x, z, &self.sensing_conf))
            .collect();
        let c = r
            .comm_zones
            .iter()
            .map(|z| comm_margin(&x, z, c_star, &self.comm_conf))
            .collect();
        (s, c)
    }

    fn tracking(&self, positions: &[Vec2]) -> f64 {
        let observers: Vec<Observer<'_>> = self
            .robots
            .iter()
            .zip(positions)
            .filter(|(r, _)| r.sensing_ok)
            .map(|(r, p)| Observer {
                position: *p,
                sensor: &r.sensor,
                targets: r.targets,
            })
            .collect();
        match &self.cfg.objective {
            ObjectiveKind::TracePredicted => posterior_trace(&observers, self.predicted, &self.prior_info),
            ObjectiveKind::DistanceSurrogate { standoff } => distance_surrogate(&observers, self.predicted, *standoff),
        }
    }

    /// Hinge-penalized objective.
    fn evaluate(&self, u: &[Vec2]) -> f64 {
        let positions = self.next_positions(u);
        let mut total = 0.0;
        if self.track && self.cfg.w1 != 0.0 {
            total += self.cfg.w1 * self.tracking(&positions);
        }
        for i in 0..self.robots.len() {
            total += self.cfg.w2 * u[i].norm();
            let (s, c) = self.margins(&positions, i);
            for (g, w) in s.iter().zip(&self.sensing_weights[i]) {
                total += w * (-g).max(0.0);
            }
            for (g, w) in c.iter().zip(&self.comm_weights[i]) {
                total += w * (-g).max(0.0);
            }
        }
        total
    }

    fn result(&self, controls: Vec<Vec2>, objective_value: f64, converged: bool, accepted: Vec<f64>) -> PlanResult {
        let positions = self.next_positions(&controls);
        let mut slacks_nu = Vec::new();
        let mut slacks_xi = Vec::new();
        for (i, r) in self.robots.iter().enumerate() {
            let (s, c) = self.margins(&positions, i);
            for (z, v) in r.sensing_zones.iter().zip(eliminate_slacks(&s)) {
                slacks_nu.push(Slack {
                    robot: r.id,
                    zone: z.id,
                    value: v,
                });
            }
            for (z, v) in r.comm_zones.iter().zip(eliminate_slacks(&c)) {
                slacks_xi.push(Slack {
                    robot: r.id,
                    zone: z.id,
                    value: v,
                });
            }
        }
        let feasible_without_slack = slacks_nu.iter().chain(&slacks_xi).all(|s| s.value == 0.0);
        PlanResult {
            controls,
            slacks_nu,
            slacks_xi,
            objective_value,
            feasible_without_slack,
            converged,
            accepted,
        }
    }

    fn solve(&self) -> PlanResult {
        match self.cfg.solver {
            SolverKind::GridRefine { rounds, points, shrink } => self.grid_refine(rounds, points, shrink),
            SolverKind::ProjectedGradient {
                max_iters,
                tolerance,
                fd_step,
            } => self.projected_gradient(max_iters, tolerance, fd_step),
        }
    }

    fn grid_refine(&self, rounds: usize, points: usize, shrink: f64) -> PlanResult {
        let n = self.robots.len();
        let mut u = vec![Vec2::zeros(); n];
        let mut best = self.evaluate(&u);
        let mut accepted = vec![best];
        let mut half_width: Vec<f64> = self.robots.iter().map(|r| r.model.u_max).collect();
        let steps = (points - 1) as f64;
        for _ in 0..rounds {
            for i in 0..n {
                let u_max = self.robots[i].model.u_max;
                let center = u[i];
                let axis = |c: f64, k: usize| (c + half_width[i] * (2.0 * k as f64 / steps - 1.0)).clamp(-u_max, u_max);
                let mut incumbent = u[i];
                for kx in 0..points {
                    for ky in 0..points {
                        let cand = Vec2::new(axis(center[0], kx), axis(center[1], ky));
                        if cand == incumbent {
                            continue;
                        }
                        u[i] = cand;
                        let value = self.evaluate(&u);
                        let lex_smaller = (cand[0], cand[1]) < (incumbent[0], incumbent[1]);
                        if value < best || (value == best && lex_smaller) {
                            if value < best {
                                accepted.push(value);
                            }
                            best = value;
                            incumbent = cand;
                        }
                    }
                }
                u[i] = incumbent;
            }
            for h in &mut half_width {
                *h /= shrink;
            }
        }
        self.result(u, best, true, accepted)
    }

    fn project(&self, u: &mut [Vec2]) {
        for (ui, r) in u.iter_mut().zip(self.robots) {
            *ui = r.model.clamp(*ui);
        }
    }

    fn projected_gradient(&self, max_iters: usize, tolerance: f64, fd_step: f64) -> PlanResult {
        let n = self.robots.len();
        let mut u = vec![Vec2::zeros(); n];
        let mut value = self.evaluate(&u);
        let mut accepted = vec![value];
        let mut converged = false;
        for _ in 0..max_iters {
            let mut grad = vec![Vec2::zeros(); n];
            for i in 0..n {
                for k in 0..2 {
                    let mut plus = u.clone();
                    plus[i][k] += fd_step;
                    let mut minus = u.clone();
                    minus[i][k] -= fd_step;
                    grad[i][k] = (self.evaluate(&plus) - self.evaluate(&minus)) / (2.0 * fd_step);
                }
            }
            let mut step = self.robots.iter().map(|r| r.model.u_max).fold(0.0, f64::max).max(1e-12);
            let mut improved = None;
            for _ in 0..40 {
                let mut cand: Vec<Vec2> = u.iter().zip(&grad).map(|(x, g)| x - g * step).collect();
                self.project(&mut cand);
                let decrease: f64 = grad.iter().zip(u.iter().zip(&cand)).map(|(g, (x, c))| g.dot(&(x - c))).sum();
                let cand_value = self.evaluate(&cand);
                if cand_value < value && cand_value <= value - 1e-4 * decrease {
                    improved = Some((cand, cand_value));
                    break;
                }
                step *= 0.5;
            }
            match improved {
                Some((cand, cand_value)) => {
                    let moved: f64 = u.iter().zip(&cand).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt();
                    u = cand;
                    value = cand_value;
                    accepted.push(value);
                    if moved < tolerance {
                        converged = true;
                        break;
                    }
                }
                None => {
                    converged = true;
                    break;
                }
            }
        }
        self.result(u, value, converged, accepted)
    }
}

/// Joint plan for the communication group. Robots without sensing still
/// move (to respect known zones) but do not contribute to `f`.
pub fn plan_group(robots: &[PlanningRobot<'_>], predicted: &[TargetEstimate], cfg: &PlannerConfig) -> Result<PlanResult> {
    if robots.is_empty() {
        return Err(Error::Planning("communication group is empty".into()));
    }
    let problem = Problem::new(robots, predicted, cfg, true, CStar::Group)?;
    Ok(problem.solve())
}

/// Plan for a comm-lost robot that can still sense. Communication
/// constraints use `c* = 0`.
pub fn plan_single(robot: &PlanningRobot<'_>, predicted: &[TargetEstimate], cfg: &PlannerConfig) -> Result<PlanResult> {
    if !robot.sensing_ok {
        return Err(Error::Contract(format!(
            "robot {} has no sensing; use escape planning",
            robot.id
        )));
    }
    let robots = std::slice::from_ref(robot);
    let problem = Problem::new(robots, predicted, cfg, true, CStar::Zero)?;
    Ok(problem.solve())
}

/// Minimum-effort escape for a robot that can neither sense nor
/// communicate. Zones the robot is currently inside get their weight
/// multiplied by `escape_boost`.
pub fn plan_escape(robot: &PlanningRobot<'_>, cfg: &PlannerConfig) -> Result<PlanResult> {
    let robots = std::slice::from_ref(robot);
    let mut problem = Problem::new(robots, &[], cfg, false, CStar::Zero)?;
    let here = [robot.position];
    let (s, c) = problem.margins(&here, 0);
    for (w, g) in problem.sensing_weights[0].iter_mut().zip(&s) {
        if *g < 0.0 {
            *w *= cfg.escape_boost;
        }
    }
    for (w, g) in problem.comm_weights[0].iter_mut().zip(&c) {
        if *g < 0.0 {
            *w *= cfg.escape_boost;
        }
    }
    Ok(problem.solve())
}

/// The slack-eliminated objective that `plan_single` minimizes, at `u`.
pub fn single_objective(robot: &PlanningRobot<'_>, predicted: &[TargetEstimate], cfg: &PlannerConfig, u: &Vec2) -> Result<f64> {
    let robots = std::slice::from_ref(robot);
    let problem = Problem::new(robots, predicted, cfg, true, CStar::Zero)?;
    Ok(problem.evaluate(std::slice::from_ref(u)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [usize; 1] = [0];

    fn sensing_zone(mu: Vec2, s: f64, radius: f64) -> SensingZone {
        SensingZone {
            id: ZoneId(0),
            mu,
            sigma: Mat2::identity() * s,
            radius,
            attack_freq: 1.0,
            eps_recover: 0.1,
        }
    }

    fn comm_zone(mu: Vec2, s: f64) -> CommZone {
        CommZone {
            id: ZoneId(1),
            mu,
            sigma: Mat2::identity() * s,
            delta2: 0.5,
            attack_freq: 1.0,
            eps_recover: 0.1,
        }
    }

    fn robot<'a>(model: &'a AgentModel, position: Vec2) -> PlanningRobot<'a> {
        PlanningRobot {
            id: 0,
            position,
            model,
            sensor: SensorModel::default(),
            sensing_ok: true,
            targets: &ALL,
            sensing_zones: vec![],
            comm_zones: vec![],
        }
    }

    /// Exhaustive 201 x 201 control grid for one robot.
    fn grid_oracle(f: impl Fn(Vec2) -> f64, u_max: f64) -> (Vec2, f64) {
        let mut best = (Vec2::zeros(), f64::INFINITY);
        for i in 0..=200 {
            for j in 0..=200 {
                let u = Vec2::new(-u_max + 2.0 * u_max * i as f64 / 200.0, -u_max + 2.0 * u_max * j as f64 / 200.0);
                let v = f(u);
                if v < best.1 {
                    best = (u, v);
                }
            }
        }
        best
    }

    fn single_objective(r: &PlanningRobot<'_>, predicted: &[TargetEstimate], cfg: &PlannerConfig, u: Vec2) -> f64 {
        let robots = std::slice::from_ref(r);
        Problem::new(robots, predicted, cfg, true, CStar::Zero).unwrap().evaluate(&[u])
    }

    #[test]
    fn zero_information_gives_prior_trace() {
        let predicted = vec![
            TargetEstimate::new(Vec2::new(1.0, 0.0), Mat2::identity() * 0.3),
            TargetEstimate::new(Vec2::new(-1.0, 2.0), Mat2::new(0.5, 0.1, 0.1, 0.2)),
        ];
        let f = tracking_objective(&[], &predicted, &ObjectiveKind::TracePredicted);
        assert!((f - (0.6 + 0.7)).abs() < 1e-15);
    }

    #[test]
    fn one_observer_reduces_trace() {
        let predicted = vec![TargetEstimate::new(Vec2::new(1.0, 0.0), Mat2::identity() * 0.3)];
        let sensor = SensorModel {
            range_std: 0.1,
            bearing_std: 0.1,
        };
        let obs = [Observer {
            position: Vec2::new(-1.0, 0.5),
            sensor: &sensor,
            targets: &ALL,
        }];
        let f = tracking_objective(&obs, &predicted, &ObjectiveKind::TracePredicted);
        assert!(f < 0.6);
    }

    #[test]
    fn orthogonal_observers_beat_collinear() {
        let predicted = vec![TargetEstimate::new(Vec2::zeros(), Mat2::identity())];
        let sensor = SensorModel {
            range_std: 0.05,
            bearing_std: 0.2,
        };
        let eval = |a: Vec2, b: Vec2| {
            let obs = [
                Observer {
                    position: a,
                    sensor: &sensor,
                    targets: &ALL,
                },
                Observer {
                    position: b,
                    sensor: &sensor,
                    targets: &ALL,
                },
            ];
            tracking_objective(&obs, &predicted, &ObjectiveKind::TracePredicted)
        };
        let orth = eval(Vec2::new(2.0, 0.0), Vec2::new(0.0, 2.0));
        let col = eval(Vec2::new(2.0, 0.0), Vec2::new(-2.0, 0.0));
        // Hand evaluation: each observer contributes diag(1/sr^2, 1/(d^2 sb^2))
        // in its own frame; d = 2.
        let (a, b) = (1.0 / 0.05_f64.powi(2), 1.0 / (4.0 * 0.2_f64.powi(2)));
        let orth_expected = 2.0 / (1.0 + a + b);
        let col_expected = 1.0 / (1.0 + 2.0 * a) + 1.0 / (1.0 + 2.0 * b);
        assert!((orth - orth_expected).abs() < 1e-12);
        assert!((col - col_expected).abs() < 1e-12);
        assert!(orth < col);
    }

    #[test]
    fn group_plan_moves_toward_standoff_circle() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let r = robot(&model, Vec2::new(0.0, 0.0));
        let predicted = vec![TargetEstimate::new(Vec2::new(1.5, 0.7), Mat2::identity() * 0.1)];
        let cfg = PlannerConfig {
            w2: 0.0,
            objective: ObjectiveKind::DistanceSurrogate { standoff: 0.5 },
            ..Default::default()
        };
        let plan = plan_group(std::slice::from_ref(&r), &predicted, &cfg).unwrap();
        let (u_star, oracle) = grid_oracle(|u| single_objective(&r, &predicted, &cfg, u), 1.0);
        assert!(plan.objective_value <= oracle + 1e-9, "{} vs {oracle}", plan.objective_value);
        // Target is out of reach: the box corner toward it is optimal.
        assert_eq!(u_star, Vec2::new(1.0, 1.0));
        assert!((plan.controls[0] - Vec2::new(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn pure_control_penalty_gives_zero() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let mut r = robot(&model, Vec2::new(0.2, 0.0));
        let zone = sensing_zone(Vec2::zeros(), 0.3, 0.5);
        r.sensing_zones.push(&zone);
        let predicted = vec![TargetEstimate::new(Vec2::new(1.0, 1.0), Mat2::identity())];
        let cfg = PlannerConfig {
            w1: 0.0,
            w2: 1.0,
            w3: 0.0,
            w4: 0.0,
            ..Default::default()
        };
        let plan = plan_group(&[r.clone(), PlanningRobot { id: 1, ..r }], &predicted, &cfg).unwrap();
        assert!(plan.controls.iter().all(|u| *u == Vec2::zeros()));
    }

    #[test]
    fn deep_in_zone_increases_margin() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let zone = sensing_zone(Vec2::zeros(), 0.3, 0.5);
        let mut r = robot(&model, Vec2::new(0.1, 0.05));
        r.sensing_zones.push(&zone);
        let predicted = vec![TargetEstimate::new(Vec2::new(0.0, 0.3), Mat2::identity() * 0.2)];
        let cfg = PlannerConfig {
            w3: 100.0,
            ..Default::default()
        };
        let plan = plan_group(std::slice::from_ref(&r), &predicted, &cfg).unwrap();
        let conf = Confidence::new(cfg.eps1).unwrap();
        let before = sensing_margin(&r.position, &zone, &conf);
        let after = sensing_margin(&(r.position + plan.controls[0] * 0.1), &zone, &conf);
        assert!(after > before);
        let (_, oracle) = grid_oracle(|u| single_objective(&r, &predicted, &cfg, u), 1.0);
        assert!(plan.objective_value <= oracle + 1e-9);
    }

    #[test]
    fn single_matches_singleton_group() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let zone = comm_zone(Vec2::new(0.3, 0.1), 0.2);
        let mut r = robot(&model, Vec2::new(0.0, 0.0));
        r.comm_zones.push(&zone);
        let predicted = vec![TargetEstimate::new(Vec2::new(1.0, 1.0), Mat2::identity() * 0.4)];
        let cfg = PlannerConfig::default();
        let single = plan_single(&r, &predicted, &cfg).unwrap();
        let group = plan_group(std::slice::from_ref(&r), &predicted, &cfg).unwrap();
        assert_eq!(single, group);

        let bare = robot(&model, Vec2::new(0.0, 0.0));
        assert_eq!(
            plan_single(&bare, &predicted, &cfg).unwrap(),
            plan_group(std::slice::from_ref(&bare), &predicted, &cfg).unwrap()
        );
    }

    #[test]
    fn single_inside_comm_zone_escapes() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let zone = comm_zone(Vec2::new(0.1, 0.0), 0.2);
        let mut r = robot(&model, Vec2::zeros());
        r.comm_zones.push(&zone);
        let predicted = vec![TargetEstimate::new(Vec2::new(0.5, 0.0), Mat2::identity() * 0.2)];
        let cfg = PlannerConfig {
            w4: 1000.0,
            ..Default::default()
        };
        let plan = plan_single(&r, &predicted, &cfg).unwrap();
        let conf = Confidence::new(cfg.eps2).unwrap();
        let before = comm_margin(&r.position, &zone, 0.0, &conf);
        let after = comm_margin(&(r.position + plan.controls[0] * 0.1), &zone, 0.0, &conf);
        assert!(after > before);
        let (_, oracle) = grid_oracle(|u| single_objective(&r, &predicted, &cfg, u), 1.0);
        assert!(plan.objective_value <= oracle + 1e-9);
    }

    #[test]
    fn boundary_gives_zero_slack() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let cfg = PlannerConfig::default();
        let conf = Confidence::new(cfg.eps2).unwrap();
        let zone = comm_zone(Vec2::zeros(), 0.2);
        // Place the robot exactly on the zero-margin circle, target away
        // from the zone so the tracker has no reason to step in.
        let d = conf.quantile() * 0.2_f64.sqrt();
        let mut r = robot(&model, Vec2::new(-d, 0.0));
        r.comm_zones.push(&zone);
        assert!(comm_margin(&r.position, &zone, 0.0, &conf).abs() < 1e-12);
        let predicted = vec![TargetEstimate::new(Vec2::new(-3.0, 0.0), Mat2::identity() * 0.2)];
        let plan = plan_single(&r, &predicted, &cfg).unwrap();
        assert_eq!(plan.slacks_xi.len(), 1);
        assert_eq!(plan.slacks_xi[0].value, 0.0);
        assert!(plan.feasible_without_slack);
    }

    #[test]
    fn escape_outside_everything_stays_put() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let zone = sensing_zone(Vec2::zeros(), 0.3, 0.5);
        let mut r = robot(&model, Vec2::new(5.0, 5.0));
        r.sensing_ok = false;
        r.sensing_zones.push(&zone);
        let plan = plan_escape(&r, &PlannerConfig::default()).unwrap();
        assert_eq!(plan.controls[0], Vec2::zeros());
        assert!(plan.feasible_without_slack);
    }

    #[test]
    fn escape_from_center_moves_out_at_full_reach() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let zone = sensing_zone(Vec2::zeros(), 0.3, 0.5);
        let mut r = robot(&model, Vec2::zeros());
        r.sensing_ok = false;
        r.sensing_zones.push(&zone);
        let cfg = PlannerConfig::default();
        let plan = plan_escape(&r, &cfg).unwrap();
        assert!(plan.controls[0].norm() > 0.0);
        assert!(plan.controls[0].iter().all(|c| c.abs() <= 1.0 + 1e-12));
        // Oracle: the boosted hinge plus effort over a dense grid.
        let conf = Confidence::new(cfg.eps1).unwrap();
        let f = |u: Vec2| {
            cfg.w2 * u.norm() + cfg.w3 * cfg.escape_boost * (-sensing_margin(&(u * 0.1), &zone, &conf)).max(0.0)
        };
        let (_, oracle) = grid_oracle(f, 1.0);
        assert!(plan.objective_value <= oracle + 1e-9);
        // With an isotropic zone the diagonal corner is the longest step.
        assert!((plan.controls[0].norm() - 2.0_f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn escape_from_two_overlapping_zones_does_not_worsen_hinge() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let a = sensing_zone(Vec2::new(0.1, 0.0), 0.3, 0.5);
        let b = comm_zone(Vec2::new(-0.2, 0.1), 0.2);
        let mut r = robot(&model, Vec2::zeros());
        r.sensing_ok = false;
        r.sensing_zones.push(&a);
        r.comm_zones.push(&b);
        let cfg = PlannerConfig::default();
        let plan = plan_escape(&r, &cfg).unwrap();
        let s_conf = Confidence::new(cfg.eps1).unwrap();
        let c_conf = Confidence::new(cfg.eps2).unwrap();
        let hinge = |x: Vec2| (-sensing_margin(&x, &a, &s_conf)).max(0.0) + (-comm_margin(&x, &b, 0.0, &c_conf)).max(0.0);
        assert!(hinge(plan.controls[0] * 0.1) < hinge(Vec2::zeros()));
    }

    #[test]
    fn slack_closed_form() {
        assert_eq!(eliminate_slacks(&[0.3, -0.2, 0.0]), vec![0.0, 0.2, 0.0]);
    }

    #[test]
    fn grid_accepted_values_never_increase() {
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let zone = sensing_zone(Vec2::new(0.3, 0.3), 0.3, 0.5);
        let mut r0 = robot(&model, Vec2::new(0.0, 0.0));
        r0.sensing_zones.push(&zone);
        let r1 = PlanningRobot {
            id: 1,
            position: Vec2::new(1.0, -0.5),
            ..r0.clone()
        };
        let predicted = vec![TargetEstimate::new(Vec2::new(0.5, 0.5), Mat2::identity() * 0.3)];
        for solver in [
            SolverKind::default(),
            SolverKind::ProjectedGradient {
                max_iters: 50,
                tolerance: 1e-9,
                fd_step: 1e-5,
            },
        ] {
            let cfg = PlannerConfig {
                solver,
                ..Default::default()
            };
            let plan = plan_group(&[r0.clone(), r1.clone()], &predicted, &cfg).unwrap();
            assert!(plan.accepted.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*plan.accepted.last().unwrap(), plan.objective_value);
            assert!(plan.controls.iter().all(|u| u.iter().all(|c| c.abs() <= 1.0 + 1e-12)));
        }
    }

    #[test]
    fn empty_group_and_blind_single_are_errors() {
        let cfg = PlannerConfig::default();
        assert!(plan_group(&[], &[], &cfg).is_err());
        let model = AgentModel::single_integrator(0.1, 1.0).unwrap();
        let mut r = robot(&model, Vec2::zeros());
        r.sensing_ok = false;
        assert!(plan_single(&r, &[], &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PlannerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.w3 = -1.0;
        assert_eq!(cfg.validate().unwrap_err().field(), Some("planner.w3"));
        let cfg = PlannerConfig {
            eps2: 0.7,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = PlannerConfig {
            solver: SolverKind::GridRefine {
                rounds: 3,
                points: 16,
                shrink: 4.0,
            },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
