//! Command-line front end: `run`, `batch`, `compare` and `validate`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::sim::log::export_files;
use crate::sim::{aggregate, compute_metrics, run_seeded, ExportFormat, Metrics, Mode, ScenarioConfig, SimLog};
use crate::validation::{ChanceCheck, SlackCheck};
use crate::Error;

/// Exit code for bad input: missing scenario, invalid config, refused
/// overwrite.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for internal failures and failed validation checks.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "rts", version, about = "Resilient multi-robot target tracking simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ExportFormat::Csv,
            Format::Json => ExportFormat::Json,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Scenario file (TOML). Bare names are also looked up in `scenarios/`.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Seed, or first seed of a range. Defaults to the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the scenario's step budget.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Overwrite existing logs.
    #[arg(long)]
    pub force: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and export its log.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Run seeds `seed..seed+runs` and write per-step aggregates.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Run the same seeds under several modes.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        /// Comma-separated modes.
        #[arg(long, value_delimiter = ',', default_value = "resilient,vanilla")]
        modes: Vec<Mode>,
    },
    /// Run the numerical self-checks.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Config(_) => CliError::usage(format!("invalid config: {e}")),
            _ => match e.field() {
                Some(field) => CliError::usage(format!("invalid config field `{field}`: {e}")),
                None => CliError {
                    code: EXIT_FAILURE,
                    message: e.to_string(),
                },
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Find a scenario file, trying the path as given, then `scenarios/` in
/// the working directory, then the scenarios shipped with this crate.
pub fn locate_scenario(path: &Path) -> Option<PathBuf> {
    if path.is_file() {
        return Some(path.to_path_buf());
    }
    let name = path.file_name()?;
    [
        PathBuf::from("scenarios").join(name),
        Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name),
    ]
    .into_iter()
    .find(|p| p.is_file())
}

fn load(common: &Common) -> CliResult<ScenarioConfig> {
    let path = locate_scenario(&common.scenario)
        .ok_or_else(|| CliError::usage(format!("scenario not found: {}", common.scenario.display())))?;
    let mut cfg = ScenarioConfig::load(&path)?;
    if let Some(n) = common.max_steps {
        cfg.max_steps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn guard(dir: &Path, files: &[&str], force: bool) -> CliResult<()> {
    if force {
        return Ok(());
    }
    if let Some(f) = files.iter().map(|f| dir.join(f)).find(|p| p.exists()) {
        return Err(CliError::usage(format!(
            "refusing to overwrite {} (use --force)",
            f.display()
        )));
    }
    Ok(())
}

fn result_line(seed: u64, mode: Mode, m: &Metrics) -> String {
    format!(
        "RESULT seed={seed} mse_final={:.9e} trace_final={:.9e} mode={mode}",
        m.mse_final, m.trace_final
    )
}

/// Run `seeds` under `mode`, exporting each log to `dir/seed_<s>`.
fn run_many(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    mode: Mode,
    dir: &Path,
    format: ExportFormat,
) -> CliResult<Vec<(u64, SimLog, Metrics)>> {
    let results: Vec<_> = seeds
        .par_iter()
        .map(|&seed| -> CliResult<(u64, SimLog, Metrics)> {
            let log = run_seeded(cfg, seed, mode)?;
            log.export(format, &dir.join(format!("seed_{seed}")))?;
            let m = compute_metrics(&log);
            Ok((seed, log, m))
        })
        .collect();
    results.into_iter().collect()
}

fn write_aggregate(path: &Path, runs: &[(u64, SimLog, Metrics)]) -> CliResult<()> {
    let metrics: Vec<Metrics> = runs.iter().map(|(_, _, m)| m.clone()).collect();
    let agg = aggregate(&metrics)?;
    agg.write_csv(std::fs::File::create(path)?)?;
    Ok(())
}

#[derive(Serialize)]
struct ModeSummary {
    mode: Mode,
    seeds: Vec<u64>,
    mse_final_mean: f64,
    trace_final_mean: f64,
    mse_final: Vec<f64>,
    trace_final: Vec<f64>,
    shared_knowledge_final_mean: f64,
    attacks_mean: f64,
    recoveries_mean: f64,
}

fn summarize(mode: Mode, runs: &[(u64, SimLog, Metrics)]) -> ModeSummary {
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&(u64, SimLog, Metrics)) -> f64| runs.iter().map(f).sum::<f64>() / n;
    ModeSummary {
        mode,
        seeds: runs.iter().map(|r| r.0).collect(),
        mse_final_mean: mean(&|r| r.2.mse_final),
        trace_final_mean: mean(&|r| r.2.trace_final),
        mse_final: runs.iter().map(|r| r.2.mse_final).collect(),
        trace_final: runs.iter().map(|r| r.2.trace_final).collect(),
        shared_knowledge_final_mean: mean(&|r| {
            r.1.steps
                .last()
                .map_or(0.0, |s| (s.shared_sensing_count + s.shared_comm_count) as f64)
        }),
        attacks_mean: mean(&|r| r.2.attacks() as f64),
        recoveries_mean: mean(&|r| r.2.recovery_latencies.len() as f64),
    }
}

fn execute<W: Write>(cli: Cli, out: &mut W) -> CliResult<()> {
    match cli.command {
        Command::Run { common, mode } => {
            let cfg = load(&common)?;
            let mode = mode.unwrap_or(cfg.mode);
            let format = common.format.into();
            guard(&common.out, export_files(format), common.force)?;
            let seed = common.seed.unwrap_or(cfg.seed);
            let log = run_seeded(&cfg, seed, mode)?;
            log.export(format, &common.out)?;
            writeln!(out, "{}", result_line(seed, mode, &compute_metrics(&log)))?;
        }
        Command::Batch { common, runs, mode } => {
            let cfg = load(&common)?;
            let mode = mode.unwrap_or(cfg.mode);
            guard(&common.out, &["aggregate.csv"], common.force)?;
            std::fs::create_dir_all(&common.out)?;
            let first = common.seed.unwrap_or(cfg.seed);
            let seeds: Vec<u64> = (first..first + runs).collect();
            let results = run_many(&cfg, &seeds, mode, &common.out, common.format.into())?;
            write_aggregate(&common.out.join("aggregate.csv"), &results)?;
            for (seed, _, m) in &results {
                writeln!(out, "{}", result_line(*seed, mode, m))?;
            }
        }
        Command::Compare { common, runs, modes } => {
            let cfg = load(&common)?;
            if modes.len() < 2 {
                return Err(CliError::usage("compare needs at least two modes"));
            }
            guard(&common.out, &["summary.json"], common.force)?;
            std::fs::create_dir_all(&common.out)?;
            let first = common.seed.unwrap_or(cfg.seed);
            let seeds: Vec<u64> = (first..first + runs).collect();
            let mut summaries = Vec::new();
            for mode in modes {
                let results = run_many(&cfg, &seeds, mode, &common.out.join(mode.as_str()), common.format.into())?;
                write_aggregate(&common.out.join(format!("aggregate_{mode}.csv")), &results)?;
                for (seed, _, m) in &results {
                    writeln!(out, "{}", result_line(*seed, mode, m))?;
                }
                summaries.push(summarize(mode, &results));
            }
            let json = serde_json::json!({
                "scenario": cfg.name,
                "modes": summaries,
            });
            std::fs::write(
                common.out.join("summary.json"),
                serde_json::to_string_pretty(&json).map_err(Error::from)?,
            )?;
        }
        Command::Validate { seed } => {
            let chance = ChanceCheck {
                seed,
                ..Default::default()
            }
            .run()?;
            let worst = chance.iter().map(|c| c.probability - c.eps).fold(f64::NEG_INFINITY, f64::max);
            let chance_ok = chance.iter().all(|c| c.pass);
            writeln!(
                out,
                "{} chance-constraint: {} cases, worst excess {:+.4}",
                if chance_ok { "PASS" } else { "FAIL" },
                chance.len(),
                worst
            )?;
            let slack = SlackCheck {
                seed,
                ..Default::default()
            }
            .run()?;
            let worst = slack.iter().map(|c| c.difference).fold(0.0, f64::max);
            let slack_ok = slack.iter().all(|c| c.pass);
            writeln!(
                out,
                "{} slack-equivalence: {} instances, max difference {:.3e}",
                if slack_ok { "PASS" } else { "FAIL" },
                slack.len(),
                worst
            )?;
            if !(chance_ok && slack_ok) {
                return Err(CliError {
                    code: EXIT_FAILURE,
                    message: "validation failed".into(),
                });
            }
        }
    }
    Ok(())
}

/// Parse `args` (including the program name), execute, and return the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run_cli<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = write!(if code == 0 { out as &mut dyn Write } else { err as &mut dyn Write }, "{e}");
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{}", e.message);
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// Initialise logging from `RTS_LOG_LEVEL` (default `error`).
pub fn init_logging() {
    let env = env_logger::Env::default().filter_or("RTS_LOG_LEVEL", "error");
    let _ = env_logger::Builder::from_env(env).try_init();
}
