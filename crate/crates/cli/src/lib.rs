//! Command-line front end of the simulator.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use mmsim_core::capture::{
    capture_gain_stats, ingest_capture, selection_gain_range, write_stats_csv, CaptureError,
};
use mmsim_core::channel::synth_capture_for;
use mmsim_core::linkbudget::{
    pl_comparison_table, write_pl_table, LinkBudgetParams, DEFAULT_DISTANCES_M,
};
use mmsim_core::scenario::{
    cdf, run_scenario_detailed, summarize, write_cdf_csv, ConfigError, ScenarioConfig,
    ScenarioError, ScenarioOutput,
};
use mmsim_core::selection::{
    check_guard, total_delay, write_transition_log, ControlPath, FrameSchedule, SwitchDelays,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable holding the log filter.
pub const LOG_ENV: &str = "MMSIM_LOG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: malformed config: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{0}")]
    Validation(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Capture(CaptureError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Capture(CaptureError::Io(_)) => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Reads, defaults and validates a JSON scenario config.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, CliError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

pub fn parse_config_str(text: &str, origin: &str) -> Result<ScenarioConfig, CliError> {
    let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seeds: Vec<u64>,
    pub output: Option<String>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Parser)]
#[command(name = "mmsim", version = TOOL_VERSION, about = "TDD multi-user massive-MIMO link-level simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario with and without beam selection and export traces.
    Simulate(SimulateArgs),
    /// Print the free-space path-loss comparison table as CSV.
    Linkbudget {
        /// Comma-separated distances in metres.
        #[arg(long, value_delimiter = ',')]
        distances: Option<Vec<f64>>,
    },
    /// Synthesize and inspect channel captures.
    #[command(subcommand)]
    Capture(CaptureCommand),
    /// Beam-selection timing checks.
    #[command(subcommand)]
    Selection(SelectionCommand),
    /// Print the tool version.
    Version,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Inclusive seed range `a..b`, each run in its own subdirectory.
    #[arg(long, value_parser = parse_seed_range)]
    pub seeds: Option<RangeInclusive<u64>>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_seed_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let a: u64 = a
        .trim()
        .parse()
        .map_err(|e| format!("bad range start: {e}"))?;
    let b: u64 = b
        .trim_start_matches('=')
        .trim()
        .parse()
        .map_err(|e| format!("bad range end: {e}"))?;
    if a > b {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok(a..=b)
}

#[derive(Debug, Subcommand)]
pub enum CaptureCommand {
    /// Synthesize a channel capture for one UE at a fixed distance.
    Synth {
        config: PathBuf,
        #[arg(long)]
        distance: f64,
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        ue: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-port mean channel gain of a capture file.
    Stats { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum SelectionCommand {
    /// Check the beam-switching delay budget against the guard interval.
    CheckDelays(DelayOverrides),
}

#[derive(Debug, Args)]
pub struct DelayOverrides {
    #[arg(long)]
    pub digital_edge_ns: Option<u64>,
    #[arg(long)]
    pub frecon_spdt_ns: Option<u64>,
    #[arg(long)]
    pub fem_spdt_ns: Option<u64>,
    #[arg(long)]
    pub fem_sp4t_ns: Option<u64>,
    #[arg(long)]
    pub guard_us: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            log::debug!("command failed: {e:?}");
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let started_at = now();
    match command {
        Command::Simulate(args) => simulate(args, started_at),
        Command::Linkbudget { distances } => {
            let distances = distances.unwrap_or_else(|| DEFAULT_DISTANCES_M.to_vec());
            if let Some(d) = distances.iter().find(|d| !(**d > 0.0)) {
                return Err(CliError::Usage(format!(
                    "distances must be positive, got {d}"
                )));
            }
            let rows = pl_comparison_table(
                &distances,
                &LinkBudgetParams::yagi(),
                &LinkBudgetParams::patch(),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut buf = Vec::new();
            write_pl_table(&mut buf, &rows).expect("in-memory write");
            emit_to_stdout("linkbudget", None, Vec::new(), started_at, &buf, out, err)
        }
        Command::Capture(CaptureCommand::Synth {
            config,
            distance,
            duration,
            ue,
            out: file,
        }) => {
            let cfg = parse_config(&config)?;
            let rec = synth_capture_for(&cfg, ue, distance, duration)
                .map_err(|e| CliError::Scenario(ScenarioError::Channel(e)))?;
            let mut buf = Vec::new();
            rec.export(&mut buf).expect("in-memory write");
            let manifest_path = sibling_manifest(&file);
            let manifest = RunManifest {
                command: "capture synth".into(),
                config_path: Some(config.display().to_string()),
                seeds: vec![cfg.seed],
                output: Some(file.display().to_string()),
                tool_version: TOOL_VERSION.into(),
                started_at,
                finished_at: now(),
            };
            let mut written = Written::default();
            let result = (|| {
                written.write(&manifest_path, &manifest_json(&manifest))?;
                written.write(&file, &buf)
            })();
            if result.is_err() {
                written.rollback();
            }
            result
        }
        Command::Capture(CaptureCommand::Stats { file }) => {
            let rec = ingest_capture(&file).map_err(|e| match e {
                CaptureError::Io(source) => CliError::io(&file, source),
                other => CliError::Capture(other),
            })?;
            let stats = capture_gain_stats(&rec).map_err(CliError::Capture)?;
            let range = selection_gain_range(&stats);
            let mut buf = Vec::new();
            write_stats_csv(&mut buf, &stats, &range).expect("in-memory write");
            let seeds = vec![rec.seed];
            emit_to_stdout(
                "capture stats",
                Some(&file),
                seeds,
                started_at,
                &buf,
                out,
                err,
            )
        }
        Command::Selection(SelectionCommand::CheckDelays(o)) => {
            let defaults = SwitchDelays::default();
            let delays = SwitchDelays {
                digital_edge: o.digital_edge_ns.unwrap_or(defaults.digital_edge),
                frecon_spdt: o.frecon_spdt_ns.unwrap_or(defaults.frecon_spdt),
                fem_spdt: o.fem_spdt_ns.unwrap_or(defaults.fem_spdt),
                fem_sp4t: o.fem_sp4t_ns.unwrap_or(defaults.fem_sp4t),
            };
            let mut schedule = FrameSchedule::default();
            if let Some(g) = o.guard_us {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(CliError::Usage(format!(
                        "guard must be positive, got {g} us"
                    )));
                }
                schedule.guard_duration_us = g;
            }
            let frecon = total_delay(&delays, ControlPath::Frecon);
            let fem = total_delay(&delays, ControlPath::Fem);
            let text = format!(
                "frecon_ns={frecon}\nfem_ns={fem}\nguard_ns={}\nfrecon_verdict={}\nfem_verdict={}\n",
                schedule.guard_duration_ns(),
                check_guard(frecon, &schedule).as_str(),
                check_guard(fem, &schedule).as_str(),
            );
            emit_to_stdout(
                "selection check-delays",
                None,
                Vec::new(),
                started_at,
                text.as_bytes(),
                out,
                err,
            )
        }
        Command::Version => writeln!(out, "mmsim {TOOL_VERSION}")
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn manifest_json(m: &RunManifest) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(m).expect("manifest serializes");
    v.push(b'\n');
    v
}

/// Commands without an output directory report their manifest as one JSON
/// line on standard error, ahead of the payload.
fn emit_to_stdout(
    command: &str,
    config_path: Option<&Path>,
    seeds: Vec<u64>,
    started_at: String,
    payload: &[u8],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.into(),
        config_path: config_path.map(|p| p.display().to_string()),
        seeds,
        output: None,
        tool_version: TOOL_VERSION.into(),
        started_at,
        finished_at: now(),
    };
    let stdout = Path::new("<stdout>");
    writeln!(
        err,
        "{}",
        serde_json::to_string(&manifest).expect("manifest serializes")
    )
    .map_err(|e| CliError::io(Path::new("<stderr>"), e))?;
    out.write_all(payload)
        .map_err(|e| CliError::io(stdout, e))?;
    out.flush().map_err(|e| CliError::io(stdout, e))
}

fn sibling_manifest(file: &Path) -> PathBuf {
    let mut name = file.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    file.with_file_name(name)
}

/// Files and directories created so far, for cleanup on failure.
#[derive(Default)]
struct Written {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Written {
    fn mkdir(&mut self, dir: &Path) -> Result<(), CliError> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        self.dirs.extend(missing.into_iter().rev());
        Ok(())
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            self.mkdir(parent)?;
        }
        let existed = path.exists();
        let result = fs::write(path, bytes).map_err(|e| CliError::io(path, e));
        if !existed {
            self.files.push(path.to_path_buf());
        }
        result
    }

    fn rollback(self) {
        for f in self.files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

struct SeedResult {
    seed: u64,
    with: ScenarioOutput,
    without: ScenarioOutput,
}

fn run_pair(base: &ScenarioConfig, seed: u64) -> Result<SeedResult, ScenarioError> {
    let config = ScenarioConfig {
        seed,
        selection_enabled: true,
        ..base.clone()
    };
    let with = run_scenario_detailed(&config)?;
    let baseline = ScenarioConfig {
        selection_enabled: false,
        ..config
    };
    let without = run_scenario_detailed(&baseline)?;
    Ok(SeedResult {
        seed,
        with,
        without,
    })
}

/// Output files of one seed, keyed by path relative to the run directory.
fn render_seed(result: &SeedResult, num_ues: usize) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut buf = Vec::new();
    result
        .with
        .trace
        .write_csv(&mut buf)
        .expect("in-memory write");
    files.push(("trace.csv".to_string(), buf));
    let mut buf = Vec::new();
    result
        .without
        .trace
        .write_csv(&mut buf)
        .expect("in-memory write");
    files.push(("trace_no_selection.csv".to_string(), buf));
    for ue in 0..num_ues {
        for (name, trace) in [
            ("cdf", &result.with.trace),
            ("cdf_no_selection", &result.without.trace),
        ] {
            // a UE that never synced gets a header-only file
            let points = cdf(&trace.throughputs(ue)).unwrap_or_default();
            let mut buf = Vec::new();
            write_cdf_csv(&mut buf, &points).expect("in-memory write");
            files.push((format!("{name}_ue{ue}.csv"), buf));
        }
        if let Some(log) = result.with.selection_logs.get(ue) {
            let mut buf = Vec::new();
            write_transition_log(&mut buf, log).expect("in-memory write");
            files.push((format!("selection_log_ue{ue}.csv"), buf));
        }
    }
    let summary = summarize(&result.with.trace, &result.without.trace, num_ues);
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    files.push(("summary.json".to_string(), json));
    files
}

fn simulate(args: SimulateArgs, started_at: String) -> Result<(), CliError> {
    let config = parse_config(&args.config)?;
    let seeds: Vec<u64> = match (&args.seed, &args.seeds) {
        (_, Some(range)) => range.clone().collect(),
        (Some(s), None) => vec![*s],
        (None, None) => vec![config.seed],
    };
    let multi = args.seeds.is_some();
    log::info!(
        "simulating {} seed(s) of {}",
        seeds.len(),
        args.config.display()
    );

    let results: Vec<Result<SeedResult, ScenarioError>> = if seeds.len() == 1 {
        vec![run_pair(&config, seeds[0])]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&s| {
                    scope.spawn({
                        let config = &config;
                        move || run_pair(config, s)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };
    let results: Vec<SeedResult> = results.into_iter().collect::<Result<_, _>>()?;

    let manifest = RunManifest {
        command: "simulate".into(),
        config_path: Some(args.config.display().to_string()),
        seeds: seeds.clone(),
        output: Some(args.out.display().to_string()),
        tool_version: TOOL_VERSION.into(),
        started_at,
        finished_at: now(),
    };
    let mut written = Written::default();
    let result = (|| {
        written.mkdir(&args.out)?;
        written.write(&args.out.join("manifest.json"), &manifest_json(&manifest))?;
        for r in &results {
            let dir = if multi {
                args.out.join(format!("seed_{}", r.seed))
            } else {
                args.out.clone()
            };
            for (name, bytes) in render_seed(r, config.ues.len()) {
                written.write(&dir.join(name), &bytes)?;
            }
        }
        Ok(())
    })();
    if result.is_err() {
        written.rollback();
    }
    result
}
