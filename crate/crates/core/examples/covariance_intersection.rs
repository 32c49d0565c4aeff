//! Covariance intersection: fusing two estimates with unknown
//! cross-correlation. Each input is confident along a different axis; the
//! fused covariance is never larger (in trace) than the better input.
//!
//! ```text
//! cargo run --example covariance_intersection
//! ```

use resilient_tracking::estimation::{covariance_intersection, TargetEstimate};
use resilient_tracking::{Mat2, Result, Vec2};

fn show(name: &str, e: &TargetEstimate) {
    println!(
        "{name:>8}: mean ({:+.3}, {:+.3})  cov [[{:.4}, {:.4}], [{:.4}, {:.4}]]  trace {:.4}",
        e.mean.x,
        e.mean.y,
        e.cov[(0, 0)],
        e.cov[(0, 1)],
        e.cov[(1, 0)],
        e.cov[(1, 1)],
        e.trace()
    );
}

fn main() -> Result<()> {
    let a = TargetEstimate::new(Vec2::new(1.0, 2.0), Mat2::new(0.02, 0.0, 0.0, 0.5));
    let b = TargetEstimate::new(Vec2::new(1.2, 1.9), Mat2::new(0.4, 0.05, 0.05, 0.03));
    let (fused, omega) = covariance_intersection(&a, &b)?;
    show("a", &a);
    show("b", &b);
    show("fused", &fused);
    println!("omega = {omega:.4}");

    let (swapped, omega_b) = covariance_intersection(&b, &a)?;
    println!("input order swapped: omega = {omega_b:.4}, same covariance: {}", swapped.cov == fused.cov);
    Ok(())
}
