//! Instance-dimension sweeps: derive a family of scenarios from a baseline by
//! varying one dimension (facet counts, object counts, resolution, time
//! steps, events, camera count, placement domain), run the optimizer on each
//! with several seeds, and record one CSV row per run.
//!
//! Facet and object counts are padded with small "filler" triangles placed on
//! a deterministic lattice away from everything they must not touch, so the
//! swept quantity is exact while the rest of the scene stays intact. Counts
//! below the baseline are rejected rather than guessed at.

use anyhow::{bail, Context, Result};
use camnet_core::geom::{Aabb, Facet, Vec3};
use camnet_core::scene::{MeshObject, PlacementDomain, Scenario};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::runner::{run_optimize, RunOptions, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    /// Voxel grid resolution, written as e.g. `16x12x12`.
    VoxelResolution,
    /// Total static obstacle facets.
    StaticFacets,
    /// Dynamic obstacle facets per time step.
    DynamicFacets,
    /// Dynamic obstacle objects per time step.
    DynamicObjects,
    /// Target facets per time step, summed over events.
    TargetFacets,
    /// Target objects per time step, summed over events.
    TargetObjects,
    /// Number of time steps (existing steps are cycled or truncated).
    TimeSteps,
    /// Number of appearance events (existing events are cycled or truncated).
    Events,
    /// Number of cameras.
    CameraCount,
    /// Placement domain kind: full_universe, ceiling or upper_fourth.
    PlacementDomain,
}

/// One optimizer run within a sweep. Failed scenario generation is recorded
/// with stop_reason "failed" and zeroed measurements so group sizes stay
/// uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sweep_value: String,
    pub seed: u64,
    pub final_err_m2: f64,
    pub iterations: u64,
    pub evaluations: u64,
    pub wall_time_s: f64,
    pub mean_classify_ms: f64,
    pub mean_cluster_ms: f64,
    pub mean_distance_ms: f64,
    pub stop_reason: String,
    pub mem_estimate_bytes: u64,
    pub mem_rss_bytes: u64,
}

pub const FAILED_REASON: &str = "failed";

/// Side length of filler triangles and the clearance kept between a filler
/// and anything it must not touch.
const FILLER_SIDE: f64 = 0.02;
const FILLER_CLEARANCE: f64 = 1e-3;

pub fn run_sweep(
    base: &Scenario,
    axis: SweepAxis,
    values: &[String],
    reps: u32,
    opts: &RunOptions,
) -> Result<Vec<RunRecord>> {
    if values.is_empty() {
        bail!("at least one axis value is required");
    }
    if reps == 0 {
        bail!("reps must be at least 1");
    }
    let mut records = Vec::new();
    for (group, value) in values.iter().enumerate() {
        // Per-run seeds are spread so groups and reps never collide.
        let group_seed = |rep: u32| opts.seed + 1009 * group as u64 + rep as u64;
        match apply_axis(base, axis, value) {
            Ok(scenario) => {
                for rep in 0..reps {
                    let run_opts = RunOptions { seed: group_seed(rep), ..*opts };
                    let result = run_optimize(&scenario, &run_opts)
                        .with_context(|| format!("group '{value}' seed {}", run_opts.seed))?;
                    records.push(record_from(value, run_opts.seed, &result));
                }
            }
            Err(err) => {
                eprintln!("group '{value}': scenario generation failed: {err:#}");
                for rep in 0..reps {
                    records.push(failed_record(value, group_seed(rep)));
                }
            }
        }
    }
    Ok(records)
}

fn record_from(value: &str, seed: u64, result: &RunResult) -> RunRecord {
    let rows = &result.outcome.trace.rows;
    let n = rows.len().max(1) as f64;
    RunRecord {
        sweep_value: value.to_string(),
        seed,
        final_err_m2: result.outcome.best_err,
        iterations: rows.len() as u64,
        evaluations: result.outcome.trace.evaluations,
        wall_time_s: result.wall_time_s,
        mean_classify_ms: rows.iter().map(|r| r.eval_ms_classify).sum::<f64>() / n,
        mean_cluster_ms: rows.iter().map(|r| r.eval_ms_cluster).sum::<f64>() / n,
        mean_distance_ms: rows.iter().map(|r| r.eval_ms_distance).sum::<f64>() / n,
        stop_reason: result.outcome.trace.stop_reason.as_str().to_string(),
        mem_estimate_bytes: result.mem_estimate_bytes,
        mem_rss_bytes: result.mem_rss_bytes,
    }
}

fn failed_record(value: &str, seed: u64) -> RunRecord {
    RunRecord {
        sweep_value: value.to_string(),
        seed,
        final_err_m2: 0.0,
        iterations: 0,
        evaluations: 0,
        wall_time_s: 0.0,
        mean_classify_ms: 0.0,
        mean_cluster_ms: 0.0,
        mean_distance_ms: 0.0,
        stop_reason: FAILED_REASON.to_string(),
        mem_estimate_bytes: 0,
        mem_rss_bytes: 0,
    }
}

pub fn write_records(records: &[RunRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec.with_context(|| format!("parsing {}", path.display()))?);
    }
    Ok(out)
}

/// Build the scenario for one axis value. The result is re-validated, so a
/// generator bug shows up as a failed group, never as a corrupt run.
pub fn apply_axis(base: &Scenario, axis: SweepAxis, value: &str) -> Result<Scenario> {
    let mut s = base.clone();
    match axis {
        SweepAxis::VoxelResolution => {
            s.voxel_resolution = parse_resolution(value)?;
        }
        SweepAxis::CameraCount => {
            s.cameras.count = parse_count(value)?;
        }
        SweepAxis::PlacementDomain => {
            s.cameras.domain = match value {
                "full_universe" => PlacementDomain::FullUniverse,
                "ceiling" => PlacementDomain::Ceiling,
                "upper_fourth" => PlacementDomain::UpperFourth,
                other => bail!(
                    "unknown placement domain '{other}' (expected full_universe, ceiling or upper_fourth)"
                ),
            };
        }
        SweepAxis::TimeSteps => {
            let h = parse_count(value)?;
            if h == 0 {
                bail!("time step count must be at least 1");
            }
            resize_time_steps(&mut s, h);
        }
        SweepAxis::Events => {
            let l = parse_count(value)?;
            if l == 0 {
                bail!("event count must be at least 1");
            }
            let old = s.events.clone();
            s.events = (0..l)
                .map(|i| {
                    let mut e = old[i % old.len()].clone();
                    if i >= old.len() {
                        e.id = format!("{}_{}", e.id, i / old.len());
                    }
                    e
                })
                .collect();
        }
        SweepAxis::StaticFacets => {
            let want = parse_count(value)?;
            let have: usize = s.obstacles.static_objects.iter().map(|o| o.facets.len()).sum();
            if want < have {
                bail!("static facet count {want} is below the baseline {have}");
            }
            // Static fillers exist at every step, so they must clear the
            // targets of every step.
            let forbidden = all_target_facets(&s)?;
            let fill = filler_facets(&s, &forbidden, want - have)?;
            if !fill.is_empty() {
                s.obstacles.static_objects.push(MeshObject::new("filler_static", fill));
            }
        }
        SweepAxis::DynamicFacets => {
            let want = parse_count(value)?;
            for idx in 0..s.time_steps.len() {
                let have: usize =
                    s.obstacles.dynamic_objects[idx].iter().map(|o| o.facets.len()).sum();
                if want < have {
                    bail!(
                        "dynamic facet count {want} is below the baseline {have} at step {}",
                        idx + 1
                    );
                }
                let forbidden = step_target_facets(&s, idx + 1)?;
                let fill = filler_facets(&s, &forbidden, want - have)?;
                if !fill.is_empty() {
                    s.obstacles.dynamic_objects[idx].push(MeshObject::new("filler_dyn", fill));
                }
            }
        }
        SweepAxis::DynamicObjects => {
            let want = parse_count(value)?;
            for idx in 0..s.time_steps.len() {
                let have = s.obstacles.dynamic_objects[idx].len();
                if want < have {
                    bail!(
                        "dynamic object count {want} is below the baseline {have} at step {}",
                        idx + 1
                    );
                }
                let forbidden = step_target_facets(&s, idx + 1)?;
                let fill = filler_facets(&s, &forbidden, want - have)?;
                for (i, f) in fill.into_iter().enumerate() {
                    s.obstacles.dynamic_objects[idx]
                        .push(MeshObject::new(format!("filler_dyn_{i}"), vec![f]));
                }
            }
        }
        SweepAxis::TargetFacets => {
            let want = parse_count(value)?;
            for idx in 0..s.time_steps.len() {
                let have: usize = s
                    .events
                    .iter()
                    .map(|e| e.targets[idx].iter().map(|o| o.facets.len()).sum::<usize>())
                    .sum();
                if want < have {
                    bail!(
                        "target facet count {want} is below the baseline {have} at step {}",
                        idx + 1
                    );
                }
                let forbidden = s.obstacle_facets_at(idx + 1)?;
                let fill = filler_facets(&s, &forbidden, want - have)?;
                if !fill.is_empty() {
                    s.events[0].targets[idx].push(MeshObject::new("filler_target", fill));
                }
            }
        }
        SweepAxis::TargetObjects => {
            let want = parse_count(value)?;
            for idx in 0..s.time_steps.len() {
                let have: usize = s.events.iter().map(|e| e.targets[idx].len()).sum();
                if want < have {
                    bail!(
                        "target object count {want} is below the baseline {have} at step {}",
                        idx + 1
                    );
                }
                let forbidden = s.obstacle_facets_at(idx + 1)?;
                let fill = filler_facets(&s, &forbidden, want - have)?;
                for (i, f) in fill.into_iter().enumerate() {
                    s.events[0].targets[idx]
                        .push(MeshObject::new(format!("filler_target_{i}"), vec![f]));
                }
            }
        }
    }
    s.validate().context("generated scenario failed validation")?;
    Ok(s)
}

fn parse_count(value: &str) -> Result<usize> {
    value.trim().parse().with_context(|| format!("'{value}' is not a count"))
}

fn parse_resolution(value: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = value.trim().split('x').collect();
    if parts.len() != 3 {
        bail!("resolution '{value}' must have the form AxBxC");
    }
    let mut out = [0usize; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.parse().with_context(|| format!("resolution component '{p}'"))?;
    }
    Ok(out)
}

fn resize_time_steps(s: &mut Scenario, h: usize) {
    let old_h = s.time_steps.len();
    s.time_steps = (0..h).map(|i| i as f64).collect();
    let old_dyn = s.obstacles.dynamic_objects.clone();
    s.obstacles.dynamic_objects = (0..h).map(|i| old_dyn[i % old_h].clone()).collect();
    for e in &mut s.events {
        let w = e.weights.clone();
        let t = e.targets.clone();
        e.weights = (0..h).map(|i| w[i % old_h]).collect();
        e.targets = (0..h).map(|i| t[i % old_h].clone()).collect();
    }
    if let Some(crit) = &mut s.critical_override {
        let old = crit.clone();
        *crit = (0..h).map(|i| old[i % old_h].clone()).collect();
    }
}

fn all_target_facets(s: &Scenario) -> Result<Vec<Facet>> {
    let mut out = Vec::new();
    for h in 1..=s.time_steps.len() {
        out.extend(step_target_facets(s, h)?);
    }
    Ok(out)
}

fn step_target_facets(s: &Scenario, h: usize) -> Result<Vec<Facet>> {
    let mut out = Vec::new();
    for l in 1..=s.events.len() {
        out.extend(s.target_facets(l, h)?);
    }
    Ok(out)
}

/// Place `needed` small triangles on a lattice over the surveillance region,
/// skipping spots whose bounding box comes within the clearance of any
/// forbidden facet. Deterministic; fails when the lattice runs out.
fn filler_facets(s: &Scenario, forbidden: &[Facet], needed: usize) -> Result<Vec<Facet>> {
    if needed == 0 {
        return Ok(Vec::new());
    }
    let inset = 2.0 * FILLER_SIDE;
    let lo = s.surveillance.min + Vec3::new(inset, inset, inset);
    let hi = s.surveillance.max - Vec3::new(inset, inset, inset);
    if !(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z) {
        bail!("surveillance region is too small for filler facets");
    }
    let boxes: Vec<Aabb> = forbidden.iter().map(|f| f.aabb()).collect();
    const STEPS: usize = 40;
    let mut out = Vec::with_capacity(needed);
    'scan: for iz in 0..STEPS {
        for iy in 0..STEPS {
            for ix in 0..STEPS {
                let frac = |i: usize| i as f64 / (STEPS - 1) as f64;
                let p = Vec3::new(
                    lo.x + frac(ix) * (hi.x - lo.x),
                    lo.y + frac(iy) * (hi.y - lo.y),
                    lo.z + frac(iz) * (hi.z - lo.z),
                );
                let f = Facet::new(
                    p,
                    p + Vec3::new(FILLER_SIDE, 0.0, 0.0),
                    p + Vec3::new(0.0, FILLER_SIDE, 0.0),
                );
                let fb = f.aabb();
                // Box distance is a lower bound on facet distance, so a
                // clearance on boxes guarantees one on the facets.
                if boxes.iter().all(|ob| fb.distance_to_box(ob) > FILLER_CLEARANCE) {
                    out.push(f);
                    if out.len() == needed {
                        break 'scan;
                    }
                }
            }
        }
    }
    if out.len() < needed {
        bail!("could only place {} of {} filler facets", out.len(), needed);
    }
    Ok(out)
}
