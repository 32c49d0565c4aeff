//! Range-bearing EKF: two fixed robots track a target moving on a straight
//! line, and the estimate error and covariance trace are printed over time.
//!
//! ```text
//! cargo run --example ekf_tracking
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resilient_tracking::dynamics::{step_agent, AgentModel};
use resilient_tracking::estimation::{ekf_predict, ekf_update, measure, Observation, SensorModel, TargetEstimate};
use resilient_tracking::{Mat2, Result, Vec2};

fn main() -> Result<()> {
    let model = AgentModel::single_integrator(0.1, 0.3)?;
    let sensor = SensorModel {
        range_std: 0.05,
        bearing_std: 0.02,
    };
    let robots = [Vec2::new(-1.0, -1.0), Vec2::new(1.5, -1.0)];
    let q = Mat2::identity() * 1e-3;
    let u = Vec2::new(0.2, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    let mut truth = Vec2::new(0.0, 0.5);
    let mut est = TargetEstimate::new(Vec2::new(0.5, 0.0), Mat2::identity() * 0.5);
    println!("{:>4} {:>10} {:>10}", "step", "error", "trace");
    for k in 0..=50 {
        if k % 5 == 0 {
            println!("{k:4} {:10.4} {:10.5}", (est.mean - truth).norm(), est.trace());
        }
        truth = step_agent(&truth, &u, &model)?;
        // The filter does not know the target's control.
        est = ekf_predict(&est, &model, &Vec2::zeros(), &q);
        let observations: Vec<Observation> = robots
            .iter()
            .filter_map(|r| {
                measure(r, &truth, &sensor, &mut rng).map(|measurement| Observation {
                    robot: *r,
                    measurement,
                    sensor,
                })
            })
            .collect();
        est = ekf_update(&est, &observations).estimate;
    }
    Ok(())
}
