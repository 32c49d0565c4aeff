//! Per-run metrics and cross-run aggregates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attacks::AttackKind;
use crate::sim::log::{fmt_g9, SimLog};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: Vec<f64>,
    pub total_trace: Vec<f64>,
    pub sensing_attacks: usize,
    pub comm_attacks: usize,
    pub direct_jams: usize,
    /// `recovered_at - step` for every recovered event, in log order.
    pub recovery_latencies: Vec<usize>,
    pub mse_final: f64,
    pub trace_final: f64,
}

impl Metrics {
    pub fn attacks(&self) -> usize {
        self.sensing_attacks + self.comm_attacks + self.direct_jams
    }
}

/// Length of the trailing window used for end-of-run figures: a quarter
/// of the run, rounded up.
pub fn final_window_len(n: usize) -> usize {
    n.div_ceil(4).max(1).min(n.max(1))
}

/// Mean of the last quarter of `series`.
pub fn final_window_mean(series: &[f64]) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let k = final_window_len(series.len());
    let tail = &series[series.len() - k..];
    tail.iter().sum::<f64>() / k as f64
}

pub fn compute_metrics(log: &SimLog) -> Metrics {
    let mse: Vec<f64> = log.steps.iter().map(|s| s.mse).collect();
    let total_trace: Vec<f64> = log.steps.iter().map(|s| s.total_trace).collect();
    let count = |k: AttackKind| log.events.iter().filter(|e| e.kind == k).count();
    Metrics {
        mse_final: final_window_mean(&mse),
        trace_final: final_window_mean(&total_trace),
        mse,
        total_trace,
        sensing_attacks: count(AttackKind::Sensing),
        comm_attacks: count(AttackKind::Comm),
        direct_jams: count(AttackKind::DirectJam),
        recovery_latencies: log
            .events
            .iter()
            .filter_map(|e| e.recovered_at.map(|r| r - e.step))
            .collect(),
    }
}

/// Per-step mean and population standard deviation across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mse_mean: Vec<f64>,
    pub mse_std: Vec<f64>,
    pub trace_mean: Vec<f64>,
    pub trace_std: Vec<f64>,
}

fn mean_std(columns: &[&[f64]], step: usize) -> (f64, f64) {
    let n = columns.len() as f64;
    let mean = columns.iter().map(|c| c[step]).sum::<f64>() / n;
    let var = columns.iter().map(|c| (c[step] - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate(runs: &[Metrics]) -> Result<Aggregate> {
    let Some(first) = runs.first() else {
        return Err(Error::invalid("runs", "nothing to aggregate"));
    };
    let steps = first.mse.len();
    if runs.iter().any(|m| m.mse.len() != steps || m.total_trace.len() != steps) {
        return Err(Error::invalid("runs", "runs have different step counts"));
    }
    let mse: Vec<&[f64]> = runs.iter().map(|m| m.mse.as_slice()).collect();
    let trace: Vec<&[f64]> = runs.iter().map(|m| m.total_trace.as_slice()).collect();
    let mut agg = Aggregate {
        mse_mean: Vec::with_capacity(steps),
        mse_std: Vec::with_capacity(steps),
        trace_mean: Vec::with_capacity(steps),
        trace_std: Vec::with_capacity(steps),
    };
    for k in 0..steps {
        let (m, s) = mean_std(&mse, k);
        agg.mse_mean.push(m);
        agg.mse_std.push(s);
        let (m, s) = mean_std(&trace, k);
        agg.trace_mean.push(m);
        agg.trace_std.push(s);
    }
    Ok(agg)
}

pub const AGGREGATE_HEADER: [&str; 5] = ["step", "mse_mean", "mse_std", "trace_mean", "trace_std"];

impl Aggregate {
    pub fn len(&self) -> usize {
        self.mse_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mse_mean.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(AGGREGATE_HEADER)?;
        for k in 0..self.len() {
            w.write_record([
                k.to_string(),
                fmt_g9(self.mse_mean[k]),
                fmt_g9(self.mse_std[k]),
                fmt_g9(self.trace_mean[k]),
                fmt_g9(self.trace_std[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
