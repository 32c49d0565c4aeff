//! One planning step for a two-robot group with a known sensing zone in the
//! way, followed by escape planning for a robot stuck inside the zone.
//!
//! ```text
//! cargo run --example planning
//! ```

use resilient_tracking::dynamics::AgentModel;
use resilient_tracking::estimation::{SensorModel, TargetEstimate};
use resilient_tracking::planner::{plan_escape, plan_group, PlannerConfig, PlanningRobot};
use resilient_tracking::zones::{SensingZone, ZoneId};
use resilient_tracking::{Mat2, Result, Vec2};

fn main() -> Result<()> {
    let model = AgentModel::single_integrator(0.1, 1.0)?;
    let zone = SensingZone {
        id: ZoneId(0),
        mu: Vec2::new(0.0, 0.0),
        sigma: Mat2::identity() * 0.05,
        radius: 0.3,
        attack_freq: 1.0,
        eps_recover: 0.1,
    };
    let targets = [
        TargetEstimate::new(Vec2::new(0.6, 0.6), Mat2::identity() * 0.2),
        TargetEstimate::new(Vec2::new(-1.0, 1.0), Mat2::identity() * 0.1),
    ];
    let all = [0, 1];
    let robot = |id, position| PlanningRobot {
        id,
        position,
        model: &model,
        sensor: SensorModel::default(),
        sensing_ok: true,
        targets: &all,
        sensing_zones: vec![&zone],
        comm_zones: vec![],
    };
    let cfg = PlannerConfig {
        w1: 100.0,
        w2: 0.001,
        ..Default::default()
    };
    let group = [robot(0, Vec2::new(-0.9, -0.2)), robot(1, Vec2::new(1.2, -0.3))];
    let plan = plan_group(&group, &targets, &cfg)?;
    println!("group plan: objective {:.5}, converged {}", plan.objective_value, plan.converged);
    for (r, u) in group.iter().zip(&plan.controls) {
        println!(
            "  robot {}: u = ({:+.3}, {:+.3}), slack {:.4}",
            r.id,
            u.x,
            u.y,
            plan.total_slack(r.id)
        );
    }
    println!("  accepted incumbents: {}", plan.accepted.len());

    let stuck = PlanningRobot {
        sensing_ok: false,
        ..robot(0, Vec2::new(0.1, 0.05))
    };
    let mut pos = stuck.position;
    println!("\nescape from inside the zone:");
    for k in 0..6 {
        let here = PlanningRobot { position: pos, ..stuck.clone() };
        let plan = plan_escape(&here, &cfg)?;
        let u = plan.controls[0];
        println!(
            "  step {k}: at ({:+.3}, {:+.3}), slack {:.4}, u = ({:+.3}, {:+.3})",
            pos.x,
            pos.y,
            plan.total_slack(0),
            u.x,
            u.y
        );
        pos = model.process * pos + model.control * u;
    }
    Ok(())
}
