//! Step the simulator by hand on the sensing-attack scenario and narrate
//! what happens: attacks, knowledge updates and recoveries.
//!
//! ```text
//! cargo run --example attack_recovery [seed]
//! ```

use resilient_tracking::attacks::StatusState;
use resilient_tracking::sim::{ScenarioConfig, World};
use resilient_tracking::Result;

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/fig4_sensing.toml");
    let mut cfg = ScenarioConfig::load(path)?;
    cfg.seed = seed;
    let mut world = World::new(&cfg)?;

    let mut states: Vec<StatusState> = world.statuses().iter().map(|s| s.state()).collect();
    let mut seen_events = 0;
    for _ in 0..cfg.max_steps {
        let rec = world.step()?;
        for e in &world.events()[seen_events..] {
            println!(
                "step {:3}: robot {} hit by {} zone {}",
                e.step,
                e.robot,
                e.kind.as_str(),
                e.zone.0
            );
        }
        seen_events = world.events().len();
        for (i, s) in world.statuses().iter().enumerate() {
            let now = s.state();
            if now != states[i] {
                println!(
                    "step {:3}: robot {i} {:?} -> {:?} at ({:+.2}, {:+.2})",
                    rec.step, states[i], now, rec.robots[i].position.x, rec.robots[i].position.y
                );
                states[i] = now;
            }
        }
    }
    let k = world.knowledge();
    println!("\nshared sensing zones: {:?}", k.shared_sensing.iter().map(|z| z.0).collect::<Vec<_>>());
    for (i, p) in k.private_sensing.iter().enumerate() {
        println!("robot {i} private sensing zones: {:?}", p.iter().map(|z| z.0).collect::<Vec<_>>());
    }
    let recovered = world.events().iter().filter(|e| e.recovered_at.is_some()).count();
    println!("{} attacks, {recovered} recovered", world.events().len());
    Ok(())
}
