//! Robot and target motion: single-integrator steps, control clamping and
//! the scripted target policies.
//!
//! ```text
//! cargo run --example dynamics
//! ```

use resilient_tracking::dynamics::{step_agent, AgentModel, TargetPolicy};
use resilient_tracking::{Result, Vec2};

fn main() -> Result<()> {
    let robot = AgentModel::single_integrator(0.1, 1.0)?;
    let mut x = Vec2::new(0.0, 0.0);
    let wish = Vec2::new(3.0, -0.4);
    let u = robot.clamp(wish);
    println!("requested u = {wish:?}, clamped u = {u:?}");
    for _ in 0..5 {
        x = step_agent(&x, &u, &robot)?;
    }
    println!("robot after 5 steps: ({:.3}, {:.3})", x.x, x.y);
    println!("unclamped step rejected: {}", step_agent(&x, &wish, &robot).is_err());

    let target = AgentModel::single_integrator(0.1, 0.3)?;
    let square = vec![
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(0.0, 0.0),
    ];
    let mut policy = TargetPolicy::waypoint_cycle(square, 0.05)?;
    let mut t = Vec2::zeros();
    println!("\nwaypoint target (speed {}):", target.u_max);
    for k in 0..=60 {
        if k % 10 == 0 {
            println!("  step {k:3}: ({:.3}, {:.3}) heading to waypoint {:?}", t.x, t.y, policy.cursor());
        }
        let u = policy.control(&t, k, target.u_max);
        t = step_agent(&t, &u, &target)?;
    }
    Ok(())
}
