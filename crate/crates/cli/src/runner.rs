//! Single-scenario optimization runs: assemble solver configuration and stop
//! criteria from command-line options, execute, and serialize the artifacts
//! (solution JSON, trace CSV).

use anyhow::{Context, Result};
use camnet_core::hull::{SamplingMode, VoxelGrid};
use camnet_core::scene::Scenario;
use camnet_core::solver::{
    default_tolerance, optimize, SolveOutcome, SolverConfig, StopCriteria, StopReason,
};
use serde::Serialize;
use std::path::Path;
use std::time::Duration;

/// Options shared by `optimize` and each run of `sweep`.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub seed: u64,
    /// Objective tolerance; defaults to the squared voxel space diagonal.
    pub tolerance: Option<f64>,
    pub time_limit_s: Option<f64>,
    pub max_iters: Option<u64>,
    pub mode: SamplingMode,
    pub early_abort: bool,
    pub normalize_weights: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            tolerance: None,
            time_limit_s: None,
            max_iters: None,
            mode: SamplingMode::Center,
            early_abort: false,
            normalize_weights: false,
        }
    }
}

pub struct RunResult {
    pub outcome: SolveOutcome,
    pub tolerance_used: f64,
    pub wall_time_s: f64,
    /// Rough working-set estimate from the instance dimensions.
    pub mem_estimate_bytes: u64,
    /// Resident set size sampled after the run; 0 when unavailable.
    pub mem_rss_bytes: u64,
}

pub fn run_optimize(scenario: &Scenario, opts: &RunOptions) -> Result<RunResult> {
    let mut scenario = scenario.clone();
    if opts.normalize_weights {
        scenario.normalize_weights().context("normalizing appearance weights")?;
    }
    let grid = VoxelGrid::for_scenario(&scenario).context("building voxel grid")?;
    let tolerance_used = opts.tolerance.unwrap_or_else(|| default_tolerance(&grid));

    let cfg = SolverConfig { seed: opts.seed, early_abort: opts.early_abort, ..Default::default() };
    let stop = StopCriteria {
        tolerance: Some(tolerance_used),
        // Without any budget a hopeless tolerance would spin forever.
        time_limit: Some(Duration::from_secs_f64(
            opts.time_limit_s.unwrap_or(DEFAULT_TIME_LIMIT_S),
        )),
        max_iterations: opts.max_iters,
    };

    let start = std::time::Instant::now();
    let outcome = optimize(&scenario, &cfg, &stop, opts.mode)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    Ok(RunResult {
        mem_estimate_bytes: estimate_memory(&scenario, &grid, opts.mode, &cfg),
        mem_rss_bytes: rss_bytes(),
        outcome,
        tolerance_used,
        wall_time_s,
    })
}

pub const DEFAULT_TIME_LIMIT_S: f64 = 600.0;

/// Approximate peak working set of one objective evaluation plus the
/// archive: per-camera sample profiles (direction, distance, cone flag),
/// per-camera-and-voxel labels, and the archive tuples.
pub fn estimate_memory(
    scenario: &Scenario,
    grid: &VoxelGrid,
    mode: SamplingMode,
    cfg: &SolverConfig,
) -> u64 {
    let r = grid.len() as u64;
    let [nx, ny, nz] = grid.dims();
    let corners = ((nx + 1) * (ny + 1) * (nz + 1)) as u64;
    let samples = match mode {
        SamplingMode::Center => r,
        SamplingMode::Conservative9 => r + corners,
    };
    let n = scenario.cameras.count as u64;
    let profile = samples * n * (24 + 8 + 1); // dir + dist + cone flag
    let labels = r * (n + 2); // per-camera labels + model masks
    let archive = cfg.archive_size as u64 * n * 5 * 8;
    profile + labels + archive
}

/// VmRSS from /proc/self/status, in bytes. 0 when the file is unreadable.
pub fn rss_bytes() -> u64 {
    let Ok(text) = std::fs::read_to_string("/proc/self/status") else {
        return 0;
    };
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("VmRSS:") {
            let kb: u64 = rest
                .trim()
                .trim_end_matches("kB")
                .trim()
                .parse()
                .unwrap_or(0);
            return kb * 1024;
        }
    }
    0
}

#[derive(Serialize)]
struct SolutionCamera {
    position: [f64; 3],
    yaw: f64,
    pitch: f64,
}

#[derive(Serialize)]
struct SolutionDoc {
    best_err_m2: f64,
    tolerance_m2: f64,
    stop_reason: &'static str,
    iterations: u64,
    evaluations: u64,
    wall_time_s: f64,
    cameras: Vec<SolutionCamera>,
}

/// Write `solution.json` and `trace.csv` into `out_dir`.
pub fn write_artifacts(result: &RunResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let doc = SolutionDoc {
        best_err_m2: result.outcome.best_err,
        tolerance_m2: result.tolerance_used,
        stop_reason: result.outcome.trace.stop_reason.as_str(),
        iterations: result.outcome.trace.rows.len() as u64,
        evaluations: result.outcome.trace.evaluations,
        wall_time_s: result.wall_time_s,
        cameras: result
            .outcome
            .best_settings
            .iter()
            .map(|c| SolutionCamera {
                position: c.position.to_array(),
                yaw: c.yaw,
                pitch: c.pitch,
            })
            .collect(),
    };
    let path = out_dir.join("solution.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc)?)
        .with_context(|| format!("writing {}", path.display()))?;

    let path = out_dir.join("trace.csv");
    let mut buf = Vec::new();
    result.outcome.trace.write_csv(&mut buf)?;
    std::fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Human summary printed by `camnet optimize`.
pub fn summary_line(result: &RunResult) -> String {
    format!(
        "stop={} best_err_m2={:.6e} tolerance_m2={:.6e} iterations={} evaluations={} wall_s={:.1}",
        result.outcome.trace.stop_reason.as_str(),
        result.outcome.best_err,
        result.tolerance_used,
        result.outcome.trace.rows.len(),
        result.outcome.trace.evaluations,
        result.wall_time_s,
    )
}

/// Exit code contract: 0 when the tolerance was reached, 2 when the budget
/// ran out first.
pub fn exit_code(outcome: &SolveOutcome) -> i32 {
    match outcome.trace.stop_reason {
        StopReason::Tolerance => 0,
        StopReason::TimeLimit | StopReason::IterationLimit => 2,
    }
}
