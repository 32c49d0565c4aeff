//! Resilient vs vanilla teams under sensing attacks, ten seeds each. The
//! vanilla team never learns about zones, so robots keep getting blinded
//! and the estimate error grows.
//!
//! ```text
//! cargo run --release --example sensing_attack_comparison
//! ```

use rayon::prelude::*;
use resilient_tracking::sim::{compute_metrics, run_seeded, Metrics, Mode, ScenarioConfig};
use resilient_tracking::Result;

fn batch(cfg: &ScenarioConfig, mode: Mode) -> Result<Vec<Metrics>> {
    (0..10u64)
        .into_par_iter()
        .map(|seed| run_seeded(cfg, seed, mode).map(|log| compute_metrics(&log)))
        .collect()
}

fn main() -> Result<()> {
    let cfg = ScenarioConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/fig4_sensing.toml"))?;
    println!("{:>10} {:>12} {:>12} {:>8} {:>10}", "mode", "mse_final", "trace_final", "attacks", "recovered");
    for mode in [Mode::Resilient, Mode::Vanilla] {
        let runs = batch(&cfg, mode)?;
        let n = runs.len() as f64;
        let mse = runs.iter().map(|m| m.mse_final).sum::<f64>() / n;
        let trace = runs.iter().map(|m| m.trace_final).sum::<f64>() / n;
        let attacks = runs.iter().map(|m| m.attacks()).sum::<usize>() as f64 / n;
        let recovered = runs.iter().map(|m| m.recovery_latencies.len()).sum::<usize>() as f64 / n;
        println!("{mode:>10} {mse:12.4e} {trace:12.4e} {attacks:8.1} {recovered:10.1}");
    }
    Ok(())
}
