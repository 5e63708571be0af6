//! Derivative-free placement search. A fixed-size archive holds the best
//! camera tuples seen so far; each iteration draws a batch of candidates by
//! perturbing rank-selected archive members with Gaussian noise (or, with a
//! small probability, by restarting uniformly), evaluates them and merges
//! them back. The noise kernel shrinks whenever an iteration fails to
//! improve the best value, down to a floor, so the search narrows from
//! exploration to refinement.
//!
//! Runs are deterministic for a fixed seed: candidates are drawn for the
//! whole batch before any evaluation, archive merging is a single stable
//! sort at the end of the iteration, and evaluation order is fixed.

use crate::hull::{SamplingMode, VoxelGrid};
use crate::objective::{ErrValue, EvalTiming, Evaluator, ObjectiveError};
use crate::scene::Scenario;
use crate::visibility::CameraSetting;
use crate::geom::{Aabb, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::io::Write;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("stop criteria must set at least one of tolerance, time limit, iteration limit")]
    NoStopCriterion,
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("writing trace failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Tunables of the search. The defaults are the reference configuration;
/// only the seed and the abort switch usually need changing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Number of tuples kept in the archive.
    pub archive_size: usize,
    /// Candidates drawn and evaluated per iteration.
    pub batch_size: usize,
    /// Initial Gaussian kernel width, as a fraction of each dimension's span.
    pub initial_kernel: f64,
    /// Multiplier applied to the kernel width after a non-improving iteration.
    pub shrink: f64,
    /// Lower bound on the kernel width.
    pub kernel_floor: f64,
    /// Probability that a candidate is a uniform restart instead of a
    /// perturbation.
    pub restart_prob: f64,
    pub seed: u64,
    /// Abort candidate evaluations whose partial sum already exceeds the
    /// worst archive value. Never changes the outcome (the partial sum is a
    /// lower bound, so such candidates would be rejected anyway); only the
    /// per-iteration timings differ.
    pub early_abort: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            archive_size: 12,
            batch_size: 8,
            initial_kernel: 0.3,
            shrink: 0.85,
            kernel_floor: 1e-3,
            restart_prob: 0.05,
            seed: 0,
            early_abort: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.archive_size == 0 {
            return Err(SolverError::InvalidConfig("archive size must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(SolverError::InvalidConfig("batch size must be at least 1"));
        }
        if !(self.initial_kernel > 0.0 && self.initial_kernel.is_finite()) {
            return Err(SolverError::InvalidConfig("initial kernel width must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink <= 1.0) {
            return Err(SolverError::InvalidConfig("shrink factor must lie in (0, 1]"));
        }
        if !(self.kernel_floor > 0.0 && self.kernel_floor.is_finite()) {
            return Err(SolverError::InvalidConfig("kernel floor must be positive"));
        }
        if !(0.0..=1.0).contains(&self.restart_prob) {
            return Err(SolverError::InvalidConfig("restart probability must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// When to stop. At least one criterion must be set; they are checked at the
/// end of every iteration in the order tolerance, time, iterations, so at
/// least one full iteration always runs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StopCriteria {
    /// Stop once the best objective value is at or below this.
    pub tolerance: Option<f64>,
    pub time_limit: Option<Duration>,
    pub max_iterations: Option<u64>,
}

impl StopCriteria {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.tolerance.is_none() && self.time_limit.is_none() && self.max_iterations.is_none() {
            return Err(SolverError::NoStopCriterion);
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t >= 0.0) {
                return Err(SolverError::InvalidTolerance(t));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    TimeLimit,
    IterationLimit,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Tolerance => "tolerance",
            StopReason::TimeLimit => "time_limit",
            StopReason::IterationLimit => "iteration_limit",
        }
    }
}

/// Which criterion fires for the given progress snapshot, if any.
pub fn check_stop(
    best_err: f64,
    elapsed: Duration,
    iterations: u64,
    stop: &StopCriteria,
) -> Option<StopReason> {
    if let Some(tol) = stop.tolerance {
        if best_err <= tol {
            return Some(StopReason::Tolerance);
        }
    }
    if let Some(limit) = stop.time_limit {
        if elapsed >= limit {
            return Some(StopReason::TimeLimit);
        }
    }
    if let Some(max) = stop.max_iterations {
        if iterations >= max {
            return Some(StopReason::IterationLimit);
        }
    }
    None
}

/// The conventional tolerance: the squared space diagonal of one voxel.
pub fn default_tolerance(grid: &VoxelGrid) -> f64 {
    let d = grid.cell_diagonal();
    d * d
}

/// One archive entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub settings: Vec<CameraSetting>,
    pub err: f64,
}

/// The box-and-angle space candidate tuples are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpace {
    pub position: Aabb,
    pub yaw: (f64, f64),
    pub pitch: (f64, f64),
    pub cameras: usize,
}

impl SampleSpace {
    pub fn from_scenario(s: &Scenario) -> Self {
        SampleSpace {
            position: s.placement_box(),
            yaw: s.cameras.yaw_bounds,
            pitch: s.cameras.pitch_bounds,
            cameras: s.cameras.count,
        }
    }

    /// Uniform tuple. Draw order per camera: x, y, z, yaw, pitch.
    pub fn uniform<R: Rng>(&self, rng: &mut R) -> Vec<CameraSetting> {
        (0..self.cameras)
            .map(|_| {
                let x = rng.random_range(self.position.min.x..=self.position.max.x);
                let y = rng.random_range(self.position.min.y..=self.position.max.y);
                let z = rng.random_range(self.position.min.z..=self.position.max.z);
                let yaw = rng.random_range(self.yaw.0..=self.yaw.1);
                let pitch = rng.random_range(self.pitch.0..=self.pitch.1);
                CameraSetting::new(Vec3::new(x, y, z), yaw, pitch)
            })
            .collect()
    }

    /// Gaussian perturbation of `base`. The noise width per dimension is
    /// `width` times that dimension's span; positions and pitch clamp to
    /// their bounds, yaw wraps when the full circle is allowed and clamps
    /// otherwise.
    pub fn perturb<R: Rng>(
        &self,
        base: &[CameraSetting],
        width: f64,
        rng: &mut R,
    ) -> Vec<CameraSetting> {
        let full_yaw = self.yaw.0 == -std::f64::consts::PI && self.yaw.1 == std::f64::consts::PI;
        fn jitter<R: Rng>(rng: &mut R, value: f64, lo: f64, hi: f64, width: f64) -> f64 {
            let z: f64 = rng.sample(StandardNormal);
            (value + z * width * (hi - lo)).clamp(lo, hi)
        }
        base.iter()
            .map(|cam| {
                let x = jitter(rng, cam.position.x, self.position.min.x, self.position.max.x, width);
                let y = jitter(rng, cam.position.y, self.position.min.y, self.position.max.y, width);
                let z = jitter(rng, cam.position.z, self.position.min.z, self.position.max.z, width);
                let yaw = if full_yaw {
                    let zn: f64 = rng.sample(StandardNormal);
                    wrap_yaw(cam.yaw + zn * width * (self.yaw.1 - self.yaw.0))
                } else {
                    jitter(rng, cam.yaw, self.yaw.0, self.yaw.1, width)
                };
                let pitch = jitter(rng, cam.pitch, self.pitch.0, self.pitch.1, width);
                CameraSetting::new(Vec3::new(x, y, z), yaw, pitch)
            })
            .collect()
    }
}

/// Map into (-pi, pi]; values already inside are returned unchanged.
fn wrap_yaw(y: f64) -> f64 {
    if y > std::f64::consts::PI || y < -std::f64::consts::PI {
        let two_pi = 2.0 * std::f64::consts::PI;
        let w = (y + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
        if w == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            w
        }
    } else {
        y
    }
}

/// Rank-proportional selection: with the archive sorted ascending by err,
/// rank j (1-based) of K entries is chosen with weight K - j + 1.
fn rank_select<R: Rng>(len: usize, rng: &mut R) -> usize {
    debug_assert!(len > 0);
    let total = (len * (len + 1) / 2) as f64;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for j in 0..len {
        acc += (len - j) as f64 / total;
        if u < acc {
            return j;
        }
    }
    len - 1
}

/// Draw one candidate tuple: uniform restart with probability
/// `cfg.restart_prob`, otherwise a perturbation of a rank-selected member.
pub fn sample_candidate<R: Rng>(
    archive: &[Candidate],
    space: &SampleSpace,
    cfg: &SolverConfig,
    width: f64,
    rng: &mut R,
) -> Vec<CameraSetting> {
    let u: f64 = rng.random();
    if u < cfg.restart_prob || archive.is_empty() {
        return space.uniform(rng);
    }
    let idx = rank_select(archive.len(), rng);
    space.perturb(&archive[idx].settings, width, rng)
}

/// Evaluate `archive_size` uniform tuples (one when there are no cameras)
/// and return them sorted ascending by objective value. Ties keep draw
/// order.
pub fn initial_population<R: Rng>(
    eval: &Evaluator,
    space: &SampleSpace,
    cfg: &SolverConfig,
    rng: &mut R,
) -> Result<(Vec<Candidate>, EvalTiming), SolverError> {
    let count = if space.cameras == 0 { 1 } else { cfg.archive_size };
    let mut archive = Vec::with_capacity(count);
    let mut timing = EvalTiming::default();
    for _ in 0..count {
        let settings = space.uniform(rng);
        let r = eval.err_sum(&settings, None)?;
        add_timing(&mut timing, &r.timing);
        archive.push(Candidate { settings, err: r.total });
    }
    archive.sort_by(|a, b| a.err.partial_cmp(&b.err).expect("objective values are finite"));
    Ok((archive, timing))
}

/// One line of the optimization trace, recorded per iteration after the
/// archive merge.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub best_err_m2: f64,
    pub eval_ms_classify: f64,
    pub eval_ms_cluster: f64,
    pub eval_ms_distance: f64,
    /// Kernel width used while drawing this iteration's candidates.
    pub kernel_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub stop_reason: StopReason,
    /// Objective evaluations including the initial population and aborted
    /// candidates.
    pub evaluations: u64,
}

impl SolverTrace {
    /// CSV with one row per iteration. The timing columns are wall-clock
    /// measurements and vary between runs; every other column is
    /// deterministic for a fixed seed.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "iteration,best_err_m2,eval_ms_classify,eval_ms_cluster,eval_ms_distance,kernel_width"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.12e},{:.3},{:.3},{:.3},{:.6e}",
                r.iteration,
                r.best_err_m2,
                r.eval_ms_classify,
                r.eval_ms_cluster,
                r.eval_ms_distance,
                r.kernel_width
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub best_settings: Vec<CameraSetting>,
    pub best_err: f64,
    /// Full evaluation report of the best tuple.
    pub best_report: ErrValue,
    pub trace: SolverTrace,
}

/// Run the search on a scenario. Deterministic for fixed seed and inputs;
/// the early-abort switch does not change the outcome, only timings.
pub fn optimize(
    scenario: &Scenario,
    cfg: &SolverConfig,
    stop: &StopCriteria,
    mode: SamplingMode,
) -> Result<SolveOutcome, SolverError> {
    cfg.validate()?;
    stop.validate()?;
    let eval = Evaluator::new(scenario, mode)?;
    optimize_with(&eval, cfg, stop)
}

/// Same as [`optimize`] but reuses a prebuilt evaluator.
pub fn optimize_with(
    eval: &Evaluator,
    cfg: &SolverConfig,
    stop: &StopCriteria,
) -> Result<SolveOutcome, SolverError> {
    cfg.validate()?;
    stop.validate()?;
    let start = Instant::now();
    let space = SampleSpace::from_scenario(eval.scenario());
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let (mut archive, _) = initial_population(eval, &space, cfg, &mut rng)?;
    let mut evaluations = archive.len() as u64;
    let mut width = cfg.initial_kernel;
    let mut rows = Vec::new();
    let mut iteration: u64 = 0;

    let stop_reason = loop {
        iteration += 1;
        let threshold = if cfg.early_abort { Some(archive.last().expect("archive non-empty").err) } else { None };

        // Draw the full batch before evaluating anything, so the random
        // stream never depends on evaluation results of the same iteration.
        let batch: Vec<Vec<CameraSetting>> = (0..cfg.batch_size)
            .map(|_| sample_candidate(&archive, &space, cfg, width, &mut rng))
            .collect();

        let mut timing = EvalTiming::default();
        let mut accepted = Vec::new();
        for settings in batch {
            let r = eval.err_sum(&settings, threshold)?;
            evaluations += 1;
            add_timing(&mut timing, &r.timing);
            // An aborted partial sum is a lower bound already above the
            // worst archive entry; the candidate cannot enter the archive.
            if !r.aborted {
                accepted.push(Candidate { settings, err: r.total });
            }
        }

        let best_before = archive[0].err;
        archive.extend(accepted);
        archive.sort_by(|a, b| a.err.partial_cmp(&b.err).expect("objective values are finite"));
        archive.truncate(cfg.archive_size.max(1));

        rows.push(TraceRow {
            iteration,
            best_err_m2: archive[0].err,
            eval_ms_classify: timing.classify_ms,
            eval_ms_cluster: timing.cluster_ms,
            eval_ms_distance: timing.distance_ms,
            kernel_width: width,
        });

        if let Some(reason) = check_stop(archive[0].err, start.elapsed(), iteration, stop) {
            break reason;
        }
        if archive[0].err >= best_before {
            width = (width * cfg.shrink).max(cfg.kernel_floor);
        }
    };

    let best = archive.into_iter().next().expect("archive non-empty");
    let best_report = eval.err_sum(&best.settings, None)?;
    Ok(SolveOutcome {
        best_settings: best.settings,
        best_err: best.err,
        best_report,
        trace: SolverTrace { rows, stop_reason, evaluations },
    })
}

fn add_timing(acc: &mut EvalTiming, t: &EvalTiming) {
    acc.classify_ms += t.classify_ms;
    acc.cluster_ms += t.cluster_ms;
    acc.distance_ms += t.distance_ms;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn space() -> SampleSpace {
        SampleSpace {
            position: Aabb::new(Vec3::ZERO, Vec3::new(4.0, 3.0, 3.0)),
            yaw: (-std::f64::consts::PI, std::f64::consts::PI),
            pitch: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            cameras: 3,
        }
    }

    #[test]
    fn uniform_draws_respect_bounds() {
        let sp = space();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..2000 {
            for cam in sp.uniform(&mut rng) {
                assert!(sp.position.contains_point(cam.position));
                assert!(cam.yaw >= sp.yaw.0 && cam.yaw <= sp.yaw.1);
                assert!(cam.pitch >= sp.pitch.0 && cam.pitch <= sp.pitch.1);
            }
        }
    }

    #[test]
    fn uniform_draws_are_seed_deterministic() {
        let sp = space();
        let a = sp.uniform(&mut ChaCha12Rng::seed_from_u64(42));
        let b = sp.uniform(&mut ChaCha12Rng::seed_from_u64(42));
        assert_eq!(a, b);
        let c = sp.uniform(&mut ChaCha12Rng::seed_from_u64(43));
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_domain_pins_the_axis() {
        let mut sp = space();
        sp.position = Aabb::new(Vec3::new(0.0, 0.0, 3.0), Vec3::new(4.0, 3.0, 3.0));
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            for cam in sp.uniform(&mut rng) {
                assert_eq!(cam.position.z, 3.0);
            }
        }
    }

    #[test]
    fn perturb_with_zero_width_is_identity() {
        let sp = space();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let base = sp.uniform(&mut rng);
        let out = sp.perturb(&base, 0.0, &mut rng);
        assert_eq!(out, base);
    }

    #[test]
    fn perturb_clamps_to_bounds() {
        let mut sp = space();
        sp.yaw = (-0.5, 0.5);
        let base = vec![CameraSetting::new(Vec3::new(0.0, 0.0, 0.0), 0.5, -1.5)];
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..500 {
            for cam in sp.perturb(&base, 0.4, &mut rng) {
                assert!(sp.position.contains_point(cam.position));
                assert!(cam.yaw >= -0.5 && cam.yaw <= 0.5);
                assert!(cam.pitch >= sp.pitch.0 && cam.pitch <= sp.pitch.1);
            }
        }
    }

    #[test]
    fn full_circle_yaw_wraps_instead_of_clamping() {
        let sp = space();
        let base = vec![CameraSetting::new(Vec3::new(2.0, 1.5, 1.5), 3.1, 0.0)];
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut wrapped = false;
        for _ in 0..500 {
            let cam = &sp.perturb(&base, 0.2, &mut rng)[0];
            assert!(cam.yaw > -std::f64::consts::PI - 1e-12 && cam.yaw <= std::f64::consts::PI);
            if cam.yaw < 0.0 {
                wrapped = true;
            }
        }
        assert!(wrapped, "perturbations near +pi should sometimes land past the seam");
    }

    #[test]
    fn wrap_yaw_keeps_interior_values() {
        assert_eq!(wrap_yaw(1.0), 1.0);
        assert_eq!(wrap_yaw(std::f64::consts::PI), std::f64::consts::PI);
        let w = wrap_yaw(std::f64::consts::PI + 0.2);
        assert!((w + std::f64::consts::PI - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rank_selection_prefers_better_ranks() {
        // Chi-square against the triangular law with K = 4: weights 4,3,2,1.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let len = 4;
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[rank_select(len, &mut rng)] += 1;
        }
        let total = 10.0;
        let expected = [4.0, 3.0, 2.0, 1.0].map(|w| w / total * n as f64);
        let chi2: f64 = counts
            .iter()
            .zip(expected.iter())
            .map(|(c, e)| (*c as f64 - e).powi(2) / e)
            .sum();
        // 3 degrees of freedom; 16.27 is the 0.001 quantile.
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn check_stop_order_and_equality() {
        let stop = StopCriteria {
            tolerance: Some(0.1875),
            time_limit: Some(Duration::from_secs(60)),
            max_iterations: Some(10),
        };
        // Tolerance wins even when others also hold (checked first).
        assert_eq!(
            check_stop(0.18, Duration::from_secs(61), 11, &stop),
            Some(StopReason::Tolerance)
        );
        // Exactly at tolerance still stops.
        assert_eq!(
            check_stop(0.1875, Duration::from_secs(0), 0, &stop),
            Some(StopReason::Tolerance)
        );
        assert_eq!(
            check_stop(1.0, Duration::from_secs(60), 2, &stop),
            Some(StopReason::TimeLimit)
        );
        assert_eq!(
            check_stop(1.0, Duration::from_secs(1), 10, &stop),
            Some(StopReason::IterationLimit)
        );
        assert_eq!(check_stop(1.0, Duration::from_secs(1), 2, &stop), None);
    }

    #[test]
    fn stop_criteria_require_at_least_one_limit() {
        assert!(matches!(
            StopCriteria::default().validate(),
            Err(SolverError::NoStopCriterion)
        ));
        assert!(StopCriteria { max_iterations: Some(1), ..Default::default() }.validate().is_ok());
        assert!(matches!(
            StopCriteria { tolerance: Some(-1.0), max_iterations: Some(1), ..Default::default() }
                .validate(),
            Err(SolverError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let ok = SolverConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SolverConfig { archive_size: 0, ..ok }.validate().is_err());
        assert!(SolverConfig { batch_size: 0, ..ok }.validate().is_err());
        assert!(SolverConfig { shrink: 0.0, ..ok }.validate().is_err());
        assert!(SolverConfig { shrink: 1.5, ..ok }.validate().is_err());
        assert!(SolverConfig { restart_prob: 1.1, ..ok }.validate().is_err());
        assert!(SolverConfig { kernel_floor: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn trace_csv_has_fixed_header() {
        let trace = SolverTrace {
            rows: vec![TraceRow {
                iteration: 1,
                best_err_m2: 0.5,
                eval_ms_classify: 1.0,
                eval_ms_cluster: 0.2,
                eval_ms_distance: 0.3,
                kernel_width: 0.3,
            }],
            stop_reason: StopReason::IterationLimit,
            evaluations: 20,
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "iteration,best_err_m2,eval_ms_classify,eval_ms_cluster,eval_ms_distance,kernel_width\n"
        ));
        assert_eq!(text.trim().lines().count(), 2);
    }
}
