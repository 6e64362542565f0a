//! The `exes-lab` command line: config resolution, experiment subcommands,
//! statistics on saved runs and plot emission.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, SEED_ENV};
use crate::error::{LabError, Result};
use crate::experiments::{run_ablation, run_benchmark, run_payoff_sweep, run_simulate, ExperimentRun};
use crate::output::{default_run_dir, read_metric_column, to_rounded_json, write_run, DYADS_FILE};
use crate::plot::{plot_run, PlotKind};
use crate::stats::{kruskal_wallis, mann_whitney_u};

#[derive(Debug, Parser)]
#[command(
    name = "exes-lab",
    version,
    about = "Battle of the Exes simulations with control-based RL agents"
)]
pub struct Cli {
    /// JSON experiment config; defaults apply to missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Run directory (default: runs/<timestamp>-<config hash>).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; wins over EXES_LAB_SEED and the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for dyads.
    #[arg(long, global = true)]
    pub parallelism: Option<u32>,
    /// Dotted override, e.g. `--set adaptive.gamma=0.4`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One condition as configured.
    Simulate,
    /// Ballistic vs dynamic at high and low stakes.
    Benchmark,
    /// Full agents against reactive-only and adaptive-only agents.
    Ablation,
    /// Adaptive-layer reliance across payoff ratios 1-1 to 32-1.
    Sweep,
    /// Kruskal-Wallis / Mann-Whitney tests on a per-dyad metrics CSV.
    Stats(StatsArgs),
    /// SVG figures for a finished run.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestChoice {
    /// Mann-Whitney for two groups, Kruskal-Wallis otherwise.
    Auto,
    Kw,
    Mwu,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// A run directory or a CSV with a `condition` column.
    pub source: PathBuf,
    #[arg(long, default_value = "efficiency")]
    pub metric: String,
    /// Conditions to compare (comma separated); all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub groups: Vec<String>,
    #[arg(long, value_enum, default_value_t = TestChoice::Auto)]
    pub test: TestChoice,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A finished run directory.
    pub run: PathBuf,
    /// bars, conventions or reliance.
    #[arg(long, value_parser = parse_kind)]
    pub kind: PlotKind,
    /// Dyad id for `conventions`.
    #[arg(long, default_value_t = 0)]
    pub dyad: u32,
    /// Condition for `conventions` (default: the dynamic high-stakes one).
    #[arg(long)]
    pub condition: Option<String>,
}

fn parse_kind(s: &str) -> std::result::Result<PlotKind, String> {
    s.parse().map_err(|e: LabError| e.to_string())
}

/// Exit status for each error family.
pub fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::Config { .. } | LabError::NotFound(_) => 2,
        LabError::Io { .. } | LabError::Csv(_) | LabError::Serde(_) => 3,
        LabError::Invariant(_) | LabError::Empty(_) | LabError::Stats(_) | LabError::Shape(_) => 4,
    }
}

/// Config file, then `--set` overrides, then the seed (flag over env var),
/// then `--parallelism`.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let base = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    let mut config = base.with_overrides(&cli.overrides)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    } else if let Ok(raw) = std::env::var(SEED_ENV) {
        config.master_seed = raw
            .trim()
            .parse()
            .map_err(|_| LabError::config(SEED_ENV, format!("not an unsigned integer: {raw:?}")))?;
    }
    if let Some(p) = cli.parallelism {
        config.parallelism = p;
    }
    config.validate()?;
    Ok(config)
}

fn emit(run: ExperimentRun, out: Option<&Path>) -> Result<String> {
    let dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => default_run_dir(Path::new("."), &run.report.provenance.config_hash),
    };
    let manifest = write_run(&run, &dir)?;
    let mut text = String::new();
    for c in &run.report.conditions {
        text.push_str(&format!(
            "{:<24} efficiency {:.3}  fairness {:.3}  stability {:.3}  ties {:.3}  reliance {:.3}\n",
            c.label, c.efficiency.mean, c.fairness.mean, c.stability.mean, c.tie_fraction.mean, c.reliance.mean
        ));
    }
    text.push_str(&format!("run {} written to {}\n", manifest.run_id, dir.display()));
    Ok(text)
}

fn stats(args: &StatsArgs) -> Result<String> {
    let csv_path = if args.source.is_dir() {
        args.source.join(DYADS_FILE)
    } else {
        args.source.clone()
    };
    let mut groups = read_metric_column(&csv_path, &args.metric)?;
    if !args.groups.is_empty() {
        let mut picked = Vec::new();
        for name in &args.groups {
            let found = groups.iter().position(|(l, _)| l == name).ok_or_else(|| {
                let known: Vec<&str> = groups.iter().map(|(l, _)| l.as_str()).collect();
                LabError::NotFound(format!("unknown group {name:?}; file has {}", known.join(", ")))
            })?;
            picked.push(groups.remove(found));
        }
        groups = picked;
    }
    let samples: Vec<Vec<f64>> = groups.iter().map(|(_, v)| v.clone()).collect();
    let result = match (args.test, samples.len()) {
        (TestChoice::Mwu, 2) | (TestChoice::Auto, 2) => mann_whitney_u(&samples[0], &samples[1])?,
        (TestChoice::Mwu, n) => {
            return Err(LabError::config(
                "groups",
                format!("Mann-Whitney needs exactly 2 groups, got {n}"),
            ))
        }
        (_, n) if n < 2 => return Err(LabError::config("groups", format!("need at least 2 groups, got {n}"))),
        _ => kruskal_wallis(&samples)?,
    };
    let names: Vec<&str> = groups.iter().map(|(l, _)| l.as_str()).collect();
    to_rounded_json(&serde_json::json!({
        "metric": args.metric,
        "groups": names,
        "result": result,
    }))
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Stats(args) => stats(args),
        Command::Plot(args) => {
            let path = plot_run(&args.run, args.kind, args.condition.as_deref(), args.dyad)?;
            Ok(format!("{} written to {}\n", args.kind.label(), path.display()))
        }
        experiment => {
            let config = resolve_config(cli)?;
            let run = match experiment {
                Command::Simulate => run_simulate(&config)?,
                Command::Benchmark => run_benchmark(&config)?,
                Command::Ablation => run_ablation(&config)?,
                Command::Sweep => run_payoff_sweep(&config)?,
                Command::Stats(_) | Command::Plot(_) => unreachable!("handled above"),
            };
            emit(run, cli.out.as_deref())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
