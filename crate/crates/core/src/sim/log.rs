//! Simulation logs and their CSV / JSON forms.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::AttackEvent;
use crate::linalg::Vec2;
use crate::sim::config::ScenarioConfig;
use crate::Result;

pub const SCHEMA_VERSION: &str = "rts-log-v1";

/// Build identifier written into every log header.
pub fn build_tag() -> String {
    option_env!("RTS_BUILD_TAG")
        .map(str::to_owned)
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub position: Vec2,
    pub sensing_ok: bool,
    pub comm_ok: bool,
    pub control: Vec2,
    /// Sum of this robot's slacks in the plan that produced `control`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub mean: Vec2,
    pub trace: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// State at the start of the step, with the control applied during it.
    pub robots: Vec<RobotRecord>,
    pub targets: Vec<Vec2>,
    /// Group bank, then one bank per robot (a copy of the group's while the
    /// robot is connected).
    pub group_estimates: Vec<EstimateRecord>,
    pub robot_estimates: Vec<Vec<EstimateRecord>>,
    pub mse: f64,
    pub total_trace: f64,
    pub shared_sensing_count: usize,
    pub shared_comm_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub schema: String,
    pub seed: u64,
    pub build: String,
    pub config: ScenarioConfig,
    pub steps: Vec<StepRecord>,
    pub events: Vec<AttackEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

/// `printf("%.9g")`.
pub fn fmt_g9(x: f64) -> String {
    const SIG: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    // The exponent after rounding to SIG digits decides the notation.
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Header of `steps.csv` for a given team size.
pub fn steps_header(n_robots: usize, n_targets: usize) -> Vec<String> {
    let mut h = vec!["step".to_owned(), "t".to_owned()];
    for i in 0..n_robots {
        for c in ["x", "y", "sensing_ok", "comm_ok", "ux", "uy"] {
            h.push(format!("r{i}_{c}"));
        }
    }
    for j in 0..n_targets {
        h.push(format!("t{j}_x"));
        h.push(format!("t{j}_y"));
    }
    let banks = std::iter::once("g".to_owned()).chain((0..n_robots).map(|i| format!("r{i}")));
    for bank in banks {
        for j in 0..n_targets {
            for c in ["est_x", "est_y", "trace"] {
                h.push(format!("{bank}_t{j}_{c}"));
            }
        }
    }
    for c in ["mse", "total_trace", "shared_sensing_count", "shared_comm_count"] {
        h.push(c.to_owned());
    }
    h
}

pub const EVENTS_HEADER: [&str; 5] = ["step", "robot", "zone", "kind", "recovered_at"];

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_owned()
}

fn step_row(rec: &StepRecord) -> Vec<String> {
    let mut row = vec![rec.step.to_string(), fmt_g9(rec.t)];
    for r in &rec.robots {
        row.extend([
            fmt_g9(r.position.x),
            fmt_g9(r.position.y),
            flag(r.sensing_ok),
            flag(r.comm_ok),
            fmt_g9(r.control.x),
            fmt_g9(r.control.y),
        ]);
    }
    for t in &rec.targets {
        row.extend([fmt_g9(t.x), fmt_g9(t.y)]);
    }
    for bank in std::iter::once(&rec.group_estimates).chain(&rec.robot_estimates) {
        for e in bank {
            row.extend([fmt_g9(e.mean.x), fmt_g9(e.mean.y), fmt_g9(e.trace)]);
        }
    }
    row.extend([
        fmt_g9(rec.mse),
        fmt_g9(rec.total_trace),
        rec.shared_sensing_count.to_string(),
        rec.shared_comm_count.to_string(),
    ]);
    row
}

#[derive(Serialize)]
struct Meta<'a> {
    schema: &'a str,
    seed: u64,
    build: &'a str,
    config: &'a ScenarioConfig,
}

impl SimLog {
    pub fn n_robots(&self) -> usize {
        self.config.robots.len()
    }

    pub fn n_targets(&self) -> usize {
        self.config.targets.len()
    }

    pub fn write_steps_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(steps_header(self.n_robots(), self.n_targets()))?;
        for rec in &self.steps {
            w.write_record(step_row(rec))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_events_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EVENTS_HEADER)?;
        for e in &self.events {
            w.write_record([
                e.step.to_string(),
                e.robot.to_string(),
                e.zone.to_string(),
                e.kind.as_str().to_owned(),
                e.recovered_at.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn meta_json(&self) -> Result<String> {
        let meta = Meta {
            schema: &self.schema,
            seed: self.seed,
            build: &self.build,
            config: &self.config,
        };
        Ok(serde_json::to_string_pretty(&meta)?)
    }

    /// Write `steps.csv`, `events.csv` and `meta.json` into `dir`.
    pub fn write_csv_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_steps_csv(fs::File::create(dir.join("steps.csv"))?)?;
        self.write_events_csv(fs::File::create(dir.join("events.csv"))?)?;
        fs::write(dir.join("meta.json"), self.meta_json()?)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Export in `format` under `dir` (`log.json` for JSON).
    pub fn export(&self, format: ExportFormat, dir: &Path) -> Result<()> {
        match format {
            ExportFormat::Csv => self.write_csv_dir(dir),
            ExportFormat::Json => self.write_json(&dir.join("log.json")),
        }
    }
}

/// Names of the files `export` writes for `format`.
pub fn export_files(format: ExportFormat) -> &'static [&'static str] {
    match format {
        ExportFormat::Csv => &["steps.csv", "events.csv", "meta.json"],
        ExportFormat::Json => &["log.json"],
    }
}
