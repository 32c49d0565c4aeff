//! Collaborative (shared knowledge) vs individual learning on the benchmark
//! scenario. Prints per-seed shared-knowledge counts and the final-window
//! mean covariance trace for both modes.
//!
//! ```text
//! cargo run --release --example collaborative_vs_individual
//! ```

use rayon::prelude::*;
use resilient_tracking::sim::{compute_metrics, run_seeded, Mode, ScenarioConfig};
use resilient_tracking::Result;

fn main() -> Result<()> {
    let cfg = ScenarioConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/fig9_benchmark.toml"))?;
    for mode in [Mode::Resilient, Mode::Individual] {
        let logs: Vec<_> = (0..10u64)
            .into_par_iter()
            .map(|seed| run_seeded(&cfg, seed, mode))
            .collect::<Result<_>>()?;
        let shared: Vec<usize> = logs
            .iter()
            .map(|l| {
                let last = l.steps.last().expect("non-empty run");
                last.shared_sensing_count + last.shared_comm_count
            })
            .collect();
        let trace = logs.iter().map(|l| compute_metrics(l).trace_final).sum::<f64>() / logs.len() as f64;
        println!("{mode:>10}: shared zones per run {shared:?}, final trace {trace:.4e}");
    }
    Ok(())
}
