//! Command-line front end: named scenario presets, single optimization runs,
//! instance-dimension sweeps and result aggregation.

pub mod presets;
pub mod report;
pub mod runner;
pub mod sweep;

use anyhow::{Context, Result};
use camnet_core::hull::SamplingMode;
use camnet_core::scene::{parse_scenario, serialize_scenario, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "camnet",
    about = "Camera placement against voxel visual hulls of unmodelled objects",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize camera settings for one scenario file.
    Optimize(OptimizeArgs),
    /// Run one optimization per value of an instance dimension.
    Sweep(SweepArgs),
    /// Aggregate a sweep record CSV into per-group statistics and plots.
    Report(ReportArgs),
    /// Write a built-in scenario to a file.
    Preset(PresetArgs),
}

#[derive(Args)]
struct RunFlags {
    /// Seed for the search (and, in sweeps, the base of per-run seeds).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective tolerance in m^2; default is the squared voxel diagonal.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Wall-clock limit per run in seconds.
    #[arg(long)]
    time_limit_s: Option<f64>,
    /// Iteration limit per run.
    #[arg(long)]
    max_iters: Option<u64>,
    /// Voxel labelling mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Center)]
    sampling_mode: ModeArg,
    /// Abort candidate evaluations that already exceed the worst archive
    /// entry (same results, usually faster).
    #[arg(long)]
    early_abort: bool,
    /// Rescale appearance weights to sum to 1 before optimizing.
    #[arg(long)]
    normalize_weights: bool,
}

impl RunFlags {
    fn to_options(&self) -> runner::RunOptions {
        runner::RunOptions {
            seed: self.seed,
            tolerance: self.tolerance,
            time_limit_s: self.time_limit_s,
            max_iters: self.max_iters,
            mode: match self.sampling_mode {
                ModeArg::Center => SamplingMode::Center,
                ModeArg::Conservative => SamplingMode::Conservative9,
            },
            early_abort: self.early_abort,
            normalize_weights: self.normalize_weights,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// One sample per voxel, at the center.
    Center,
    /// Center plus the eight corners; a voxel stays in the model unless
    /// every sample is seen free.
    Conservative,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Scenario JSON file, or a preset name prefixed with '@' (e.g. '@base').
    scenario: String,
    #[command(flatten)]
    flags: RunFlags,
    /// Output directory for solution.json and trace.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario JSON file or '@preset' used as the sweep baseline.
    scenario: String,
    /// Dimension to vary.
    #[arg(long, value_enum)]
    axis: sweep::SweepAxis,
    /// Comma-separated axis values, e.g. '8,16,32' or '16x12x12,24x18x18'.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Repetitions (distinct seeds) per axis value.
    #[arg(long, default_value_t = 3)]
    reps: u32,
    #[command(flatten)]
    flags: RunFlags,
    /// Output CSV path for the per-run records.
    #[arg(long, default_value = "runs.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Per-run record CSV written by `camnet sweep`.
    runs: PathBuf,
    /// Output directory for group_stats.csv and the SVG plots.
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset name.
    name: String,
    /// Output scenario path.
    #[arg(long, default_value = "scenario.json")]
    out: PathBuf,
}

fn load_scenario(arg: &str) -> Result<Scenario> {
    if let Some(name) = arg.strip_prefix('@') {
        return presets::by_name(name).with_context(|| {
            format!("unknown preset '{name}' (available: {})", presets::PRESET_NAMES.join(", "))
        });
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    parse_scenario(&text).with_context(|| format!("parsing {arg}"))
}

pub fn run() -> ExitCode {
    match main_inner() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn main_inner() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Optimize(args) => {
            let scenario = load_scenario(&args.scenario)?;
            let result = runner::run_optimize(&scenario, &args.flags.to_options())?;
            runner::write_artifacts(&result, &args.out)?;
            println!("{}", runner::summary_line(&result));
            Ok(ExitCode::from(runner::exit_code(&result.outcome) as u8))
        }
        Command::Sweep(args) => {
            let scenario = load_scenario(&args.scenario)?;
            let records = sweep::run_sweep(
                &scenario,
                args.axis,
                &args.values,
                args.reps,
                &args.flags.to_options(),
            )?;
            sweep::write_records(&records, &args.out)?;
            println!("{} runs recorded in {}", records.len(), args.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report(args) => {
            let records = sweep::read_records(&args.runs)?;
            let stats = report::aggregate(&records);
            report::write_report(&stats, &records, &args.out)?;
            println!("{}", report::render_table(&stats));
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset(args) => {
            let scenario = presets::by_name(&args.name).with_context(|| {
                format!("unknown preset '{}' (available: {})", args.name, presets::PRESET_NAMES.join(", "))
            })?;
            write_text(&args.out, &serialize_scenario(&scenario))?;
            println!("wrote {}", args.out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
