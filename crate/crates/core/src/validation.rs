//! Numerical self-checks: Monte-Carlo validity of the linearized chance
//! constraint, and exactness of slack elimination against a brute-force
//! search over controls and slacks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::AgentModel;
use crate::estimation::{SensorModel, TargetEstimate};
use crate::linalg::{Mat2, Vec2};
use crate::planner::{single_objective, tracking_objective, Observer, PlannerConfig, PlanningRobot};
use crate::zones::{comm_margin, membership_prob_mc, sensing_margin, CommZone, Confidence, SensingZone, ZoneId};
use crate::Result;

/// One zone/confidence pair of the chance-constraint check.
#[derive(Debug, Clone, Serialize)]
pub struct ChanceCase {
    pub eps: f64,
    pub zone: usize,
    pub margin: f64,
    pub probability: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ChanceCheck {
    pub zones: usize,
    pub eps: Vec<f64>,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ChanceCheck {
    fn default() -> Self {
        ChanceCheck {
            zones: 20,
            eps: vec![0.05, 0.1, 0.2],
            samples: 100_000,
            tolerance: 0.01,
            seed: 0,
        }
    }
}

/// Random isotropic zone and a point on its zero-margin contour.
fn boundary_case<R: Rng>(rng: &mut R, id: usize, conf: &Confidence) -> (SensingZone, Vec2) {
    let mu = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let s: f64 = rng.random_range(0.05..0.5);
    let radius: f64 = rng.random_range(0.1..0.5);
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let zone = SensingZone {
        id: ZoneId(id as u32),
        mu,
        sigma: Mat2::identity() * s,
        radius,
        attack_freq: 1.0,
        eps_recover: 0.1,
    };
    let d = radius + conf.quantile() * s.sqrt();
    (zone, mu + Vec2::new(angle.cos(), angle.sin()) * d)
}

impl ChanceCheck {
    pub fn run(&self) -> Result<Vec<ChanceCase>> {
        let mut cases = Vec::with_capacity(self.zones * self.eps.len());
        for (e_idx, &eps) in self.eps.iter().enumerate() {
            let conf = Confidence::new(eps)?;
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(e_idx as u64));
            for k in 0..self.zones {
                let (zone, x) = boundary_case(&mut rng, k, &conf);
                let probability = membership_prob_mc(&x, &zone, 0.0, self.samples, &mut rng);
                cases.push(ChanceCase {
                    eps,
                    zone: k,
                    margin: sensing_margin(&x, &zone, &conf),
                    probability,
                    pass: probability <= eps + self.tolerance,
                });
            }
        }
        Ok(cases)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlackCase {
    pub instance: usize,
    pub zones: usize,
    pub brute_force: f64,
    pub hinge: f64,
    pub difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SlackCheck {
    pub instances: usize,
    pub grid: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SlackCheck {
    fn default() -> Self {
        SlackCheck {
            instances: 100,
            grid: 21,
            tolerance: 1e-12,
            seed: 0,
        }
    }
}

/// Exact minimum over slacks of `sum_k w_k s_k` subject to `g_k + s_k >= 0`,
/// `s_k >= 0`, found by visiting every vertex of the feasible polyhedron.
/// Each slack is independent, so a vertex picks, per constraint, either
/// `s_k = 0` or `s_k = -g_k`, keeping only feasible choices.
fn slack_lp_min(margins: &[f64], weights: &[f64]) -> f64 {
    let n = margins.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let mut cost = 0.0;
        let mut feasible = true;
        for k in 0..n {
            let s = if mask & (1 << k) == 0 { 0.0 } else { -margins[k] };
            if s < 0.0 || margins[k] + s < 0.0 {
                feasible = false;
                break;
            }
            cost += weights[k] * s;
        }
        if feasible && cost < best {
            best = cost;
        }
    }
    best
}

struct Instance {
    model: AgentModel,
    position: Vec2,
    sensor: SensorModel,
    sensing: Vec<SensingZone>,
    comm: Vec<CommZone>,
    predicted: Vec<TargetEstimate>,
}

fn random_instance<R: Rng>(rng: &mut R) -> Result<Instance> {
    let model = AgentModel::single_integrator(rng.random_range(0.1..0.5), rng.random_range(0.2..1.5))?;
    let position = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let n_zones = rng.random_range(0..=3usize);
    let mut sensing = Vec::new();
    let mut comm = Vec::new();
    for k in 0..n_zones {
        let mu = position + Vec2::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
        let sigma = Mat2::identity() * rng.random_range(0.01..0.3);
        if rng.random_bool(0.5) {
            sensing.push(SensingZone {
                id: ZoneId(k as u32),
                mu,
                sigma,
                radius: rng.random_range(0.05..0.4),
                attack_freq: 1.0,
                eps_recover: 0.1,
            });
        } else {
            comm.push(CommZone {
                id: ZoneId(k as u32),
                mu,
                sigma,
                delta2: rng.random_range(0.1..1.0),
                attack_freq: 1.0,
                eps_recover: 0.1,
            });
        }
    }
    let n_targets = rng.random_range(1..=2usize);
    let predicted = (0..n_targets)
        .map(|_| {
            let mean = position + Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            TargetEstimate::new(mean, Mat2::identity() * rng.random_range(0.01..0.5))
        })
        .collect();
    Ok(Instance {
        model,
        position,
        sensor: SensorModel::default(),
        sensing,
        comm,
        predicted,
    })
}

impl SlackCheck {
    pub fn run(&self) -> Result<Vec<SlackCase>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.instances);
        let cfg = PlannerConfig::default();
        let s_conf = Confidence::new(cfg.eps1)?;
        let c_conf = Confidence::new(cfg.eps2)?;
        for instance in 0..self.instances {
            let inst = random_instance(&mut rng)?;
            let targets: Vec<usize> = (0..inst.predicted.len()).collect();
            let robot = PlanningRobot {
                id: 0,
                position: inst.position,
                model: &inst.model,
                sensor: inst.sensor,
                sensing_ok: true,
                targets: &targets,
                sensing_zones: inst.sensing.iter().collect(),
                comm_zones: inst.comm.iter().collect(),
            };
            let weights: Vec<f64> = inst
                .sensing
                .iter()
                .map(|_| cfg.w3)
                .chain(inst.comm.iter().map(|_| cfg.w4))
                .collect();

            let mut brute = f64::INFINITY;
            let mut hinge = f64::INFINITY;
            let u_max = inst.model.u_max;
            let step = 2.0 * u_max / (self.grid - 1) as f64;
            for a in 0..self.grid {
                for b in 0..self.grid {
                    let u = Vec2::new(-u_max + a as f64 * step, -u_max + b as f64 * step);
                    let x = inst.model.process * inst.position + inst.model.control * u;
                    let observers = [Observer {
                        position: x,
                        sensor: &inst.sensor,
                        targets: &targets,
                    }];
                    let f = tracking_objective(&observers, &inst.predicted, &cfg.objective);
                    let margins: Vec<f64> = inst
                        .sensing
                        .iter()
                        .map(|z| sensing_margin(&x, z, &s_conf))
                        .chain(inst.comm.iter().map(|z| comm_margin(&x, z, 0.0, &c_conf)))
                        .collect();
                    let joint = cfg.w1 * f + cfg.w2 * u.norm() + slack_lp_min(&margins, &weights);
                    brute = brute.min(joint);
                    hinge = hinge.min(single_objective(&robot, &inst.predicted, &cfg, &u)?);
                }
            }
            let difference = (brute - hinge).abs();
            out.push(SlackCase {
                instance,
                zones: weights.len(),
                brute_force: brute,
                hinge,
                difference,
                pass: difference <= self.tolerance,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_vertex_enumeration() {
        assert_eq!(slack_lp_min(&[], &[]), 0.0);
        assert_eq!(slack_lp_min(&[0.3, -0.2], &[5.0, 2.0]), 2.0 * 0.2);
        assert_eq!(slack_lp_min(&[-1.0, -0.5], &[1.0, 4.0]), 1.0 + 2.0);
    }

    #[test]
    fn small_chance_check_passes() {
        let check = ChanceCheck {
            zones: 3,
            samples: 20_000,
            tolerance: 0.02,
            ..Default::default()
        };
        let cases = check.run().unwrap();
        assert_eq!(cases.len(), 9);
        for c in &cases {
            assert!(c.margin.abs() < 1e-9, "{c:?}");
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn small_slack_check_passes() {
        let check = SlackCheck {
            instances: 5,
            grid: 7,
            ..Default::default()
        };
        for c in check.run().unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }
}
