//! Acceptance gate. Runs every primary criterion, prints one PASS/FAIL line
//! per criterion and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use resilient_tracking::attacks::AttackKind;
use resilient_tracking::dynamics::AgentModel;
use resilient_tracking::estimation::{
    covariance_intersection, ekf_predict, ekf_update, measure, Observation, SensorModel, TargetEstimate,
};
use resilient_tracking::sim::{compute_metrics, run_seeded, Mode, ScenarioConfig, SimLog};
use resilient_tracking::validation::{ChanceCheck, SlackCheck};
use resilient_tracking::{Mat2, Vec2};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn timed(name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, mut detail) = f();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    if let Some(l) = limit {
        detail.push_str(&format!("; {:.1}s (limit {}s)", elapsed.as_secs_f64(), l.as_secs()));
    }
    Outcome {
        name,
        pass: ok && in_time,
        detail,
        elapsed,
    }
}

fn chance_constraint() -> (bool, String) {
    let cases = ChanceCheck::default().run().expect("chance check");
    let worst = cases
        .iter()
        .max_by(|a, b| (a.probability - a.eps).total_cmp(&(b.probability - b.eps)))
        .expect("cases");
    (
        cases.len() == 60 && cases.iter().all(|c| c.pass),
        format!(
            "{} cases, worst P={:.4} at eps={} (bound {:.2})",
            cases.len(),
            worst.probability,
            worst.eps,
            worst.eps + 0.01
        ),
    )
}

fn slack_equivalence() -> (bool, String) {
    let cases = SlackCheck::default().run().expect("slack check");
    let worst = cases.iter().map(|c| c.difference).fold(0.0, f64::max);
    (
        cases.len() == 100 && cases.iter().all(|c| c.pass),
        format!("{} instances, max |brute - hinge| = {worst:.2e} (tol 1e-12)", cases.len()),
    )
}

fn random_spd<R: Rng>(rng: &mut R) -> Mat2 {
    let a = Mat2::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    );
    a * a.transpose() + Mat2::identity() * rng.random_range(0.01..1.0)
}

fn ci_properties() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_trace: f64 = f64::NEG_INFINITY;
    let mut worst_swap: f64 = 0.0;
    for _ in 0..1000 {
        let a = TargetEstimate::new(Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)), random_spd(&mut rng));
        let b = TargetEstimate::new(Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)), random_spd(&mut rng));
        let (ab, w_ab) = covariance_intersection(&a, &b).expect("spd");
        let (ba, w_ba) = covariance_intersection(&b, &a).expect("spd");
        worst_trace = worst_trace.max(ab.trace() - a.trace().min(b.trace()));
        let swap = (ab.cov - ba.cov)
            .abs()
            .max()
            .max((ab.mean - ba.mean).abs().max())
            .max((w_ab - (1.0 - w_ba)).abs());
        worst_swap = worst_swap.max(swap);
    }
    (
        worst_trace <= 1e-9 && worst_swap <= 1e-9,
        format!("1000 pairs, max trace excess {worst_trace:.2e}, max swap difference {worst_swap:.2e}"),
    )
}

fn ekf_sanity() -> (bool, String) {
    let truth = Vec2::new(1.0, 2.0);
    let sensor = SensorModel {
        range_std: 1e-3,
        bearing_std: 1e-3,
    };
    let observers = [Vec2::new(-1.0, 0.0), Vec2::new(3.0, 0.5)];
    let model = AgentModel::single_integrator(0.1, 1.0).expect("model");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut est = TargetEstimate::new(Vec2::new(1.3, 1.8), Mat2::identity() * 0.5);
    let mut monotone = true;
    let mut prev = est.trace();
    for _ in 0..200 {
        est = ekf_predict(&est, &model, &Vec2::zeros(), &Mat2::zeros());
        let obs: Vec<Observation> = observers
            .iter()
            .map(|r| Observation {
                robot: *r,
                measurement: measure(r, &truth, &sensor, &mut rng).expect("distinct"),
                sensor,
            })
            .collect();
        est = ekf_update(&est, &obs).estimate;
        monotone &= est.trace() <= prev;
        prev = est.trace();
    }
    let err = (est.mean - truth).norm();
    (
        err < 5e-3 && monotone,
        format!("final error {err:.2e} m (limit 5e-3), trace monotone: {monotone}"),
    )
}

fn runs(cfg: &ScenarioConfig, mode: Mode) -> Vec<SimLog> {
    (0..10u64)
        .into_par_iter()
        .map(|seed| run_seeded(cfg, seed, mode).expect("run"))
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn fig4() -> (bool, String) {
    let cfg = scenario("fig4_sensing.toml");
    let resilient = runs(&cfg, Mode::Resilient);
    let vanilla = runs(&cfg, Mode::Vanilla);
    let mse_res = mean(resilient.iter().map(|l| compute_metrics(l).mse_final));
    let mse_van = mean(vanilla.iter().map(|l| compute_metrics(l).mse_final));
    let a = mse_res < mse_van;

    let mut checked = 0;
    let mut b = true;
    for log in &vanilla {
        let last = log.steps.last().expect("steps");
        if last.robots.iter().any(|r| r.sensing_ok) {
            continue;
        }
        checked += 1;
        let loss = log
            .events
            .iter()
            .filter(|e| e.kind == AttackKind::Sensing)
            .map(|e| e.step)
            .max()
            .expect("sensing loss");
        b &= log.steps[loss..].windows(2).all(|w| w[1].total_trace >= w[0].total_trace);
    }
    let recovered: Vec<usize> = resilient
        .iter()
        .map(|l| l.events.iter().filter(|e| e.recovered_at.is_some()).count())
        .collect();
    let c = recovered.iter().all(|&n| n >= 1);
    (
        a && b && c,
        format!(
            "(a) mse resilient {mse_res:.3e} < vanilla {mse_van:.3e}: {a}; \
             (b) trace non-decreasing after last loss in {checked} fully-lost vanilla runs: {b}; \
             (c) recoveries per resilient run {recovered:?}: {c}"
        ),
    )
}

fn fig9() -> (bool, String) {
    let cfg = scenario("fig9_benchmark.toml");
    let resilient = runs(&cfg, Mode::Resilient);
    let individual = runs(&cfg, Mode::Individual);
    let shared = |l: &SimLog| {
        let s = l.steps.last().expect("steps");
        s.shared_sensing_count + s.shared_comm_count
    };
    let res_shared: Vec<usize> = resilient.iter().map(shared).collect();
    let ind_shared: Vec<usize> = individual.iter().map(shared).collect();
    let knowledge = ind_shared.iter().all(|&n| n == 0) && res_shared.iter().all(|&n| n > 0);
    let trace_res = mean(resilient.iter().map(|l| compute_metrics(l).trace_final));
    let trace_ind = mean(individual.iter().map(|l| compute_metrics(l).trace_final));
    let trace = trace_res <= trace_ind;
    (
        knowledge && trace,
        format!(
            "shared resilient {res_shared:?} vs individual {ind_shared:?}: {knowledge}; \
             trace resilient {trace_res:.3e} <= individual {trace_ind:.3e}: {trace}"
        ),
    )
}

fn determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().expect("tempdir");
    let scenario: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig7_combined.toml");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_rts"))
            .args(["run", "--scenario"])
            .arg(&scenario)
            .args(["--seed", "3", "--out"])
            .arg(&out)
            .output()
            .expect("spawn rts");
        if !status.status.success() {
            return (false, format!("rts failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push(out);
    }
    let same = |f: &str| std::fs::read(outputs[0].join(f)).ok() == std::fs::read(outputs[1].join(f)).ok();
    let (steps, events) = (same("steps.csv"), same("events.csv"));
    let bytes = std::fs::metadata(outputs[0].join("steps.csv")).map(|m| m.len()).unwrap_or(0);
    (
        steps && events && bytes > 0,
        format!("steps.csv identical: {steps} ({bytes} bytes), events.csv identical: {events}"),
    )
}

fn main() {
    let outcomes = [
        timed("chance-constraint validity", Some(Duration::from_secs(30)), chance_constraint),
        timed("slack-equivalence oracle", Some(Duration::from_secs(60)), slack_equivalence),
        timed("covariance intersection properties", None, ci_properties),
        timed("EKF sanity", None, ekf_sanity),
        timed("fig4 sensing-attack reproduction", Some(Duration::from_secs(120)), fig4),
        timed("fig9 collaborative vs individual", Some(Duration::from_secs(120)), fig9),
        timed("determinism (fig7, seed 3)", None, determinism),
    ];
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{} {}: {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            o.elapsed.as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
