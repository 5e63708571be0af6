//! Search behavior: monotone progress, bound respect, determinism, abort
//! invariance, stop-criterion precedence, and evaluation accounting.

use camnet_core::hull::SamplingMode;
use camnet_core::objective::Evaluator;
use camnet_core::solver::{
    optimize, optimize_with, SolverConfig, StopCriteria, StopReason,
};
use camnet_testkit::scenes::{line_domain_scenario, random_solid_scene, rng};
use proptest::prelude::*;
use std::time::Duration;

fn iteration_stop(max: u64) -> StopCriteria {
    StopCriteria { tolerance: None, time_limit: None, max_iterations: Some(max) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The best value never worsens across iterations and never exceeds any
    /// candidate already seen.
    #[test]
    fn best_value_is_monotone(seed in 0u64..10_000) {
        let s = random_solid_scene(&mut rng(seed));
        let cfg = SolverConfig { seed, ..Default::default() };
        let out = optimize(&s, &cfg, &iteration_stop(4), SamplingMode::Center).unwrap();
        prop_assert_eq!(out.trace.rows.len(), 4);
        for w in out.trace.rows.windows(2) {
            prop_assert!(w[1].best_err_m2 <= w[0].best_err_m2);
        }
        let last = out.trace.rows.last().unwrap();
        prop_assert_eq!(out.best_err, last.best_err_m2);
        prop_assert_eq!(out.best_report.total, out.best_err);
    }

    /// Solutions respect the placement box and orientation bounds.
    #[test]
    fn best_settings_respect_bounds(seed in 0u64..10_000) {
        let s = random_solid_scene(&mut rng(seed));
        let cfg = SolverConfig { seed, ..Default::default() };
        let out = optimize(&s, &cfg, &iteration_stop(3), SamplingMode::Center).unwrap();
        let b = s.placement_box();
        prop_assert_eq!(out.best_settings.len(), s.cameras.count);
        for cam in &out.best_settings {
            prop_assert!(b.contains_point(cam.position));
            prop_assert!(cam.yaw >= s.cameras.yaw_bounds.0 && cam.yaw <= s.cameras.yaw_bounds.1);
            prop_assert!(cam.pitch >= s.cameras.pitch_bounds.0 && cam.pitch <= s.cameras.pitch_bounds.1);
        }
    }

    /// Fixed seed, fixed outcome; the early-abort switch changes nothing
    /// but timings.
    #[test]
    fn runs_are_deterministic_and_abort_invariant(seed in 0u64..10_000) {
        let s = random_solid_scene(&mut rng(seed));
        let stop = iteration_stop(3);
        let cfg = SolverConfig { seed, ..Default::default() };
        let a = optimize(&s, &cfg, &stop, SamplingMode::Center).unwrap();
        let b = optimize(&s, &cfg, &stop, SamplingMode::Center).unwrap();
        let aborting = SolverConfig { early_abort: true, ..cfg };
        let c = optimize(&s, &aborting, &stop, SamplingMode::Center).unwrap();

        for out in [&b, &c] {
            prop_assert_eq!(&a.best_settings, &out.best_settings);
            prop_assert_eq!(a.best_err, out.best_err);
            prop_assert_eq!(a.trace.rows.len(), out.trace.rows.len());
            for (ra, ro) in a.trace.rows.iter().zip(&out.trace.rows) {
                prop_assert_eq!(ra.best_err_m2, ro.best_err_m2);
                prop_assert_eq!(ra.kernel_width, ro.kernel_width);
            }
        }
        // Aborted evaluations still count as evaluations.
        prop_assert_eq!(a.trace.evaluations, c.trace.evaluations);
    }

    /// Evaluations are the initial population plus one batch per iteration.
    #[test]
    fn evaluations_are_accounted(seed in 0u64..10_000, iters in 1u64..5) {
        let s = random_solid_scene(&mut rng(seed));
        let cfg = SolverConfig { seed, ..Default::default() };
        let out = optimize(&s, &cfg, &iteration_stop(iters), SamplingMode::Center).unwrap();
        let expected = cfg.archive_size as u64 + iters * cfg.batch_size as u64;
        prop_assert_eq!(out.trace.evaluations, expected);
    }
}

#[test]
fn tolerance_stop_takes_precedence_and_fires_after_one_iteration() {
    let s = line_domain_scenario();
    let cfg = SolverConfig::default();
    let stop = StopCriteria {
        tolerance: Some(f64::MAX),
        time_limit: Some(Duration::from_secs(3600)),
        max_iterations: Some(50),
    };
    let out = optimize(&s, &cfg, &stop, SamplingMode::Center).unwrap();
    assert_eq!(out.trace.stop_reason, StopReason::Tolerance);
    assert_eq!(out.trace.rows.len(), 1);
}

#[test]
fn iteration_limit_is_reported() {
    let s = line_domain_scenario();
    let cfg = SolverConfig::default();
    let out = optimize(&s, &cfg, &iteration_stop(3), SamplingMode::Center).unwrap();
    assert_eq!(out.trace.stop_reason, StopReason::IterationLimit);
    assert_eq!(out.trace.rows.len(), 3);
}

#[test]
fn time_limit_is_reported() {
    let s = line_domain_scenario();
    let cfg = SolverConfig::default();
    let stop = StopCriteria {
        tolerance: None,
        time_limit: Some(Duration::ZERO),
        max_iterations: None,
    };
    let out = optimize(&s, &cfg, &stop, SamplingMode::Center).unwrap();
    assert_eq!(out.trace.stop_reason, StopReason::TimeLimit);
    // The first iteration always completes before the clock is consulted.
    assert_eq!(out.trace.rows.len(), 1);
}

#[test]
fn missing_stop_criteria_are_rejected() {
    let s = line_domain_scenario();
    let cfg = SolverConfig::default();
    let stop = StopCriteria { tolerance: None, time_limit: None, max_iterations: None };
    assert!(optimize(&s, &cfg, &stop, SamplingMode::Center).is_err());
    let bad = SolverConfig { archive_size: 0, ..Default::default() };
    assert!(optimize(&s, &bad, &iteration_stop(1), SamplingMode::Center).is_err());
}

#[test]
fn pinned_orientation_bounds_stay_pinned() {
    let s = line_domain_scenario();
    let cfg = SolverConfig { seed: 9, ..Default::default() };
    let out = optimize(&s, &cfg, &iteration_stop(6), SamplingMode::Center).unwrap();
    let cam = &out.best_settings[0];
    assert_eq!(cam.yaw, -0.4);
    assert_eq!(cam.pitch, -0.9);
    assert_eq!(cam.position.y, 1.5);
    assert_eq!(cam.position.z, 2.6);
}

#[test]
fn prebuilt_evaluator_matches_one_shot_run() {
    let s = line_domain_scenario();
    let cfg = SolverConfig { seed: 4, ..Default::default() };
    let stop = iteration_stop(4);
    let a = optimize(&s, &cfg, &stop, SamplingMode::Center).unwrap();
    let eval = Evaluator::new(&s, SamplingMode::Center).unwrap();
    let b = optimize_with(&eval, &cfg, &stop).unwrap();
    assert_eq!(a.best_settings, b.best_settings);
    assert_eq!(a.best_err, b.best_err);
}

#[test]
fn zero_camera_scenario_still_solves() {
    let mut s = line_domain_scenario();
    s.cameras.count = 0;
    let cfg = SolverConfig::default();
    let out = optimize(&s, &cfg, &iteration_stop(2), SamplingMode::Center).unwrap();
    assert!(out.best_settings.is_empty());
    // d_model is 0 against the full-region model, so the objective is the
    // weighted squared true distance.
    let report = &out.best_report;
    assert_eq!(report.terms.len(), 1);
    assert_eq!(report.terms[0].d_model, 0.0);
    assert!(out.best_err > 0.0);
}
