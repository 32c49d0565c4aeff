//! Gaussian danger zones: the attack-probability field, linearized
//! chance-constraint margins, and a Monte-Carlo check of what a zero margin
//! means.
//!
//! ```text
//! cargo run --example zones
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resilient_tracking::zones::{
    attack_prob_comm, attack_prob_sensing, comm_margin, direct_jam_condition, membership_prob_mc, sensing_margin,
    CommZone, Confidence, SensingZone, ZoneId,
};
use resilient_tracking::{Mat2, Result, Vec2};

fn main() -> Result<()> {
    let zone = SensingZone {
        id: ZoneId(0),
        mu: Vec2::new(0.0, 0.0),
        sigma: Mat2::new(0.05, 0.0, 0.0, 0.02),
        radius: 0.3,
        attack_freq: 1.0,
        eps_recover: 0.1,
    };
    let conf = Confidence::new(0.05)?;
    println!("sensing zone, eps = {}, quantile = {:.4}", conf.eps(), conf.quantile());
    println!("{:>6} {:>10} {:>10} {:>12}", "x", "margin", "phi", "P(inside)");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..8 {
        let x = Vec2::new(0.1 * k as f64, 0.0);
        let p = membership_prob_mc(&x, &zone, 0.0, 50_000, &mut rng);
        println!(
            "{:6.2} {:10.4} {:10.4} {:12.4}",
            x.x,
            sensing_margin(&x, &zone, &conf),
            attack_prob_sensing(&x, &zone),
            p
        );
    }
    println!("points with margin >= 0 have P(inside) at most about eps");

    let jammer = CommZone {
        id: ZoneId(1),
        mu: Vec2::new(1.0, 0.0),
        sigma: Mat2::identity() * 0.02,
        delta2: 0.3,
        attack_freq: 1.0,
        eps_recover: 0.1,
    };
    let c_conf = Confidence::new(0.1)?;
    let x = Vec2::new(0.0, 0.0);
    println!("\ncomm zone seen from the origin (phi = {:.4}):", attack_prob_comm(&x, &jammer));
    for c_star in [0.0, 1.0, 2.0, 3.0, 4.0] {
        println!(
            "  c* = {c_star:.1}: margin {:+.4}, direct jam {}",
            comm_margin(&x, &jammer, c_star, &c_conf),
            direct_jam_condition(&x, &jammer, c_star)
        );
    }
    Ok(())
}
