//! The per-step simulation loop.
//!
//! Each [`World::step`] runs, in order: attack sampling, knowledge updates,
//! recovery checks, rejoin broadcasts with estimate fusion, EKF prediction,
//! measurement updates, planning, robot motion, target motion and metrics.

pub mod config;
pub mod log;
pub mod metrics;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attacks::{
    apply_attacks, check_recovery, comm_group, sample_attacks, AttackEvent, Exposure, Knowledge, RobotStatus,
};
use crate::dynamics::{step_agent, TargetPolicy};
use crate::estimation::{measure, mse, total_trace, BankOwner, FilterBank, Observation, TargetEstimate};
use crate::linalg::{Mat2, Vec2};
use crate::planner::{plan_escape, plan_group, plan_single, PlanResult, PlanningRobot};
use crate::{Error, Result};

pub use config::{Mode, Scenario, ScenarioConfig};
pub use log::{EstimateRecord, ExportFormat, RobotRecord, SimLog, StepRecord, SCHEMA_VERSION};
pub use metrics::{aggregate, compute_metrics, final_window_mean, Aggregate, Metrics};

/// RNG stream ids derived from the master seed.
const ATTACK_STREAM: u64 = 1;
const MEASUREMENT_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Distance from robot `i` to the farthest other member of `group`.
fn farthest(positions: &[Vec2], i: usize, group: &[usize]) -> f64 {
    group
        .iter()
        .filter(|&&k| k != i)
        .map(|&k| (positions[k] - positions[i]).norm())
        .fold(0.0, f64::max)
}

/// Full simulation state.
#[derive(Debug, Clone)]
pub struct World {
    scenario: Scenario,
    step: usize,
    robots: Vec<Vec2>,
    statuses: Vec<RobotStatus>,
    targets: Vec<Vec2>,
    policies: Vec<TargetPolicy>,
    group_bank: FilterBank,
    robot_banks: Vec<FilterBank>,
    knowledge: Knowledge,
    events: Vec<AttackEvent>,
    attack_rng: ChaCha8Rng,
    measurement_rng: ChaCha8Rng,
}

impl World {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        Ok(Self::from_scenario(config.resolve()?))
    }

    pub fn from_scenario(scenario: Scenario) -> Self {
        let initial: Vec<TargetEstimate> = scenario
            .target_start
            .iter()
            .map(|z| TargetEstimate::new(*z, Mat2::identity() * scenario.initial_cov))
            .collect();
        let group_bank = FilterBank::new(BankOwner::Group, initial.clone(), scenario.process_noise);
        let n = scenario.robot_start.len();
        let robot_banks = (0..n)
            .map(|i| FilterBank::new(BankOwner::Robot(i), initial.clone(), scenario.process_noise))
            .collect();
        World {
            step: 0,
            robots: scenario.robot_start.clone(),
            statuses: vec![RobotStatus::default(); n],
            targets: scenario.target_start.clone(),
            policies: scenario.policies.clone(),
            group_bank,
            robot_banks,
            knowledge: Knowledge::new(n),
            events: Vec::new(),
            attack_rng: stream(scenario.seed, ATTACK_STREAM),
            measurement_rng: stream(scenario.seed, MEASUREMENT_STREAM),
            scenario,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Index of the next step to run.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn robots(&self) -> &[Vec2] {
        &self.robots
    }

    pub fn targets(&self) -> &[Vec2] {
        &self.targets
    }

    pub fn statuses(&self) -> &[RobotStatus] {
        &self.statuses
    }

    pub fn knowledge(&self) -> &Knowledge {
        &self.knowledge
    }

    pub fn events(&self) -> &[AttackEvent] {
        &self.events
    }

    pub fn group_bank(&self) -> &FilterBank {
        &self.group_bank
    }

    pub fn robot_bank(&self, i: usize) -> &FilterBank {
        &self.robot_banks[i]
    }

    /// Advance one step and return its log record.
    pub fn step(&mut self) -> Result<StepRecord> {
        let s = self.step;
        self.advance().map_err(|e| Error::AtStep {
            step: s,
            source: Box::new(e),
        })
    }

    fn advance(&mut self) -> Result<StepRecord> {
        let s = self.step;
        let n = self.robots.len();
        let mode = self.scenario.mode;
        let policy = mode.sharing();

        // Attacks and what the victims learn from them.
        let group = comm_group(&self.statuses);
        let exposures: Vec<Exposure> = (0..n)
            .map(|i| Exposure {
                position: self.robots[i],
                status: self.statuses[i],
                c_star: self.statuses[i].comm_ok.then(|| farthest(&self.robots, i, &group)),
            })
            .collect();
        let fresh = sample_attacks(
            s,
            &exposures,
            &self.scenario.zones,
            self.scenario.dt,
            self.scenario.delta1,
            &mut self.attack_rng,
        );
        let before = self.statuses.clone();
        apply_attacks(&fresh, &mut self.statuses);
        for i in 0..n {
            if before[i].comm_ok && !self.statuses[i].comm_ok {
                // The robot leaves with the group's current picture.
                self.robot_banks[i].estimates = self.group_bank.estimates.clone();
            }
        }
        for e in &fresh {
            self.knowledge.on_attack(e, self.statuses[e.robot].comm_ok, policy);
        }
        let earlier = self.events.len();
        self.events.extend(fresh);

        // Recovery from attacks of earlier steps.
        let group = comm_group(&self.statuses);
        let mut rejoined = Vec::new();
        for i in 0..n {
            let active: Vec<&AttackEvent> = self.events[..earlier]
                .iter()
                .filter(|e| e.robot == i && e.is_active())
                .collect();
            if active.is_empty() {
                continue;
            }
            let c_star = farthest(&self.robots, i, &group);
            let rec = check_recovery(&self.robots[i], &active, &self.scenario.zones, c_star)?;
            for e in self.events[..earlier].iter_mut() {
                if e.robot == i && e.is_active() && (if e.kind.hits_comm() { rec.comm } else { rec.sensing }) {
                    e.recovered_at = Some(s);
                }
            }
            if rec.sensing {
                self.statuses[i].sensing_ok = true;
            }
            if rec.comm {
                self.statuses[i].comm_ok = true;
                rejoined.push(i);
            }
        }

        // Rejoining robots hand over their zones and fuse estimates.
        for (k, &i) in rejoined.iter().enumerate() {
            self.knowledge.rejoin_broadcast(i, policy);
            if group.len() + k == 0 {
                self.group_bank.estimates = self.robot_banks[i].estimates.clone();
            } else {
                self.group_bank.merge(&self.robot_banks[i])?;
            }
        }
        let group = comm_group(&self.statuses);
        for &i in &group {
            self.knowledge.sync_member(i, policy);
        }

        // Estimation.
        let target_models = &self.scenario.target_models;
        if !group.is_empty() {
            self.group_bank.predict(target_models);
        }
        for i in 0..n {
            if !self.statuses[i].comm_ok {
                self.robot_banks[i].predict(target_models);
            }
        }
        let n_targets = self.targets.len();
        let mut group_obs: Vec<Vec<Observation>> = vec![Vec::new(); n_targets];
        let mut own_obs: Vec<Vec<Vec<Observation>>> = vec![vec![Vec::new(); n_targets]; n];
        for i in 0..n {
            if !self.statuses[i].sensing_ok {
                continue;
            }
            let sensor = self.scenario.sensors[i];
            for &j in &self.scenario.assignments[i] {
                let Some(m) = measure(&self.robots[i], &self.targets[j], &sensor, &mut self.measurement_rng) else {
                    continue;
                };
                let obs = Observation {
                    robot: self.robots[i],
                    measurement: m,
                    sensor,
                };
                if self.statuses[i].comm_ok {
                    group_obs[j].push(obs);
                } else {
                    own_obs[i][j].push(obs);
                }
            }
        }
        for (j, obs) in group_obs.iter().enumerate() {
            if !obs.is_empty() {
                self.group_bank.update(j, obs);
            }
        }
        for i in 0..n {
            for (j, obs) in own_obs[i].iter().enumerate() {
                if !obs.is_empty() {
                    self.robot_banks[i].update(j, obs);
                }
            }
        }
        for &i in &group {
            self.robot_banks[i].estimates = self.group_bank.estimates.clone();
        }

        // Planning.
        let (controls, slacks) = self.plan(&group)?;

        let record = self.record(s, &controls, &slacks);

        // Motion.
        for i in 0..n {
            let model = &self.scenario.robot_models[i];
            self.robots[i] = step_agent(&self.robots[i], &model.clamp(controls[i]), model)?;
        }
        for j in 0..n_targets {
            let model = &self.scenario.target_models[j];
            let u = self.policies[j].control(&self.targets[j], s, model.u_max);
            self.targets[j] = step_agent(&self.targets[j], &u, model)?;
        }
        self.step += 1;
        Ok(record)
    }

    fn planning_robot(&self, i: usize, connected: bool) -> PlanningRobot<'_> {
        let (sensing, comm) = self.knowledge.known_for(i, connected);
        let zones = &self.scenario.zones;
        PlanningRobot {
            id: i,
            position: self.robots[i],
            model: &self.scenario.robot_models[i],
            sensor: self.scenario.sensors[i],
            sensing_ok: self.statuses[i].sensing_ok,
            targets: &self.scenario.assignments[i],
            sensing_zones: sensing.iter().filter_map(|id| zones.sensing(*id)).collect(),
            comm_zones: comm.iter().filter_map(|id| zones.comm(*id)).collect(),
        }
    }

    fn plan(&self, group: &[usize]) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let n = self.robots.len();
        let cfg = &self.scenario.planner;
        let models = &self.scenario.target_models;
        let mut controls = vec![Vec2::zeros(); n];
        let mut slacks = vec![0.0; n];
        let mut take = |plan: &PlanResult, ids: &[usize]| {
            for (k, &i) in ids.iter().enumerate() {
                controls[i] = plan.controls[k];
                slacks[i] = plan.total_slack(i);
            }
        };
        if !group.is_empty() {
            let robots: Vec<PlanningRobot<'_>> = group.iter().map(|&i| self.planning_robot(i, true)).collect();
            let predicted = self.group_bank.predicted(models);
            take(&plan_group(&robots, &predicted, cfg)?, group);
        }
        for i in 0..n {
            if self.statuses[i].comm_ok {
                continue;
            }
            let robot = self.planning_robot(i, false);
            if self.statuses[i].sensing_ok {
                let predicted = self.robot_banks[i].predicted(models);
                take(&plan_single(&robot, &predicted, cfg)?, &[i]);
            } else if self.scenario.mode.escapes() {
                take(&plan_escape(&robot, cfg)?, &[i]);
            }
        }
        Ok((controls, slacks))
    }

    /// Per target, the lowest-trace estimate among the live banks: the
    /// group's (when anyone is connected) and every disconnected robot's.
    pub fn best_estimates(&self) -> Vec<TargetEstimate> {
        let group_live = self.statuses.iter().any(|s| s.comm_ok);
        let live: Vec<&FilterBank> = group_live
            .then_some(&self.group_bank)
            .into_iter()
            .chain(
                self.robot_banks
                    .iter()
                    .zip(&self.statuses)
                    .filter(|(_, s)| !s.comm_ok)
                    .map(|(b, _)| b),
            )
            .collect();
        (0..self.targets.len())
            .map(|j| {
                live.iter()
                    .map(|b| b.estimates[j])
                    .min_by(|a, b| a.trace().total_cmp(&b.trace()))
                    .expect("at least one live bank")
            })
            .collect()
    }

    fn record(&self, s: usize, controls: &[Vec2], slacks: &[f64]) -> StepRecord {
        let bank_record = |b: &FilterBank| -> Vec<EstimateRecord> {
            b.estimates
                .iter()
                .map(|e| EstimateRecord {
                    mean: e.mean,
                    trace: e.trace(),
                })
                .collect()
        };
        let best = self.best_estimates();
        StepRecord {
            step: s,
            t: s as f64 * self.scenario.dt,
            robots: (0..self.robots.len())
                .map(|i| RobotRecord {
                    position: self.robots[i],
                    sensing_ok: self.statuses[i].sensing_ok,
                    comm_ok: self.statuses[i].comm_ok,
                    control: controls[i],
                    slack: slacks[i],
                })
                .collect(),
            targets: self.targets.clone(),
            group_estimates: bank_record(&self.group_bank),
            robot_estimates: self.robot_banks.iter().map(bank_record).collect(),
            mse: mse(&best, &self.targets),
            total_trace: total_trace(&best),
            shared_sensing_count: self.knowledge.shared_sensing.len(),
            shared_comm_count: self.knowledge.shared_comm.len(),
        }
    }
}

/// Run a scenario to completion. The config's own `seed` and `mode` are
/// used.
pub fn run(config: &ScenarioConfig) -> Result<SimLog> {
    let mut world = World::new(config)?;
    let steps = (0..config.max_steps).map(|_| world.step()).collect::<Result<Vec<_>>>()?;
    Ok(SimLog {
        schema: SCHEMA_VERSION.to_owned(),
        seed: config.seed,
        build: log::build_tag(),
        config: config.clone(),
        steps,
        events: world.events,
    })
}

/// `run` with seed and mode overridden.
pub fn run_seeded(config: &ScenarioConfig, seed: u64, mode: Mode) -> Result<SimLog> {
    let mut cfg = config.clone();
    cfg.seed = seed;
    cfg.mode = mode;
    run(&cfg)
}
