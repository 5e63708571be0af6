//! The placement objective: for every appearance event and time step,
//! compare the true distance from the critical points to the unmodelled
//! targets with the distance measured against the voxel model the camera
//! network would reconstruct, square the deviation, weight it by the
//! event's appearance probability and sum.
//!
//! Distances to the model use full voxel boxes, never their centers, so a
//! model that contains the true object can only shorten the measured
//! distance (the safe direction). An empty model has no distance; it is
//! capped at the diameter of the surveillance region.

use crate::geom::{self, Aabb, Facet, Vec3};
use crate::hull::{
    apply_plausibility, build_model, cluster_model, reduce_conservative, HullError, LabelField,
    SamplingMode, VoxelGrid, VoxelMask,
};
use crate::scene::{Plausibility, Scenario, ScenarioError};
use crate::visibility::{camera_axis, cone_contains, first_hit, CameraSetting, OCCLUSION_EPS};
use crate::visibility::SensorValue;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("facet set is empty; distances need at least one facet")]
    EmptyFacetSet,
    #[error("critical point set at time step {0} is empty")]
    EmptyCritical(usize),
    #[error("expected {expected} camera settings, got {got}")]
    CameraCountMismatch { expected: usize, got: usize },
    #[error("camera {index}: position ({x}, {y}, {z}) lies outside the placement domain")]
    PositionOutsideDomain { index: usize, x: f64, y: f64, z: f64 },
    #[error("camera {index}: yaw {got} outside bounds [{lo}, {hi}]")]
    YawOutOfBounds { index: usize, got: f64, lo: f64, hi: f64 },
    #[error("camera {index}: pitch {got} outside bounds [{lo}, {hi}]")]
    PitchOutOfBounds { index: usize, got: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Scene(#[from] ScenarioError),
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// Minimum distance between two facet sets: zero when any pair touches.
pub fn dist_facets_facets(a: &[Facet], b: &[Facet]) -> Result<f64, ObjectiveError> {
    if a.is_empty() || b.is_empty() {
        return Err(ObjectiveError::EmptyFacetSet);
    }
    let b_boxes: Vec<Aabb> = b.iter().map(|f| f.aabb()).collect();
    let mut best = f64::INFINITY;
    for fa in a {
        let abox = fa.aabb();
        for (fb, bbox) in b.iter().zip(&b_boxes) {
            if abox.distance_to_box(bbox) >= best {
                continue;
            }
            best = best.min(geom::triangle_triangle_distance(fa, fb));
            if best == 0.0 {
                return Ok(0.0);
            }
        }
    }
    Ok(best)
}

/// Minimum distance from a facet set to the voxels of `mask`, using full
/// voxel boxes. An empty mask yields the cap: the diameter of the gridded
/// region.
pub fn dist_facets_voxels(
    facets: &[Facet],
    grid: &VoxelGrid,
    mask: &VoxelMask,
) -> Result<f64, ObjectiveError> {
    if facets.is_empty() {
        return Err(ObjectiveError::EmptyFacetSet);
    }
    if mask.dims() != grid.dims() {
        return Err(ObjectiveError::Hull(HullError::DimsMismatch));
    }
    if mask.is_empty_set() {
        return Ok(grid.region_diagonal());
    }
    let fboxes: Vec<Aabb> = facets.iter().map(|f| f.aabb()).collect();
    let mut best = f64::INFINITY;
    for idx in mask.indices() {
        let vbox = grid.voxel_box(idx);
        for (f, fbox) in facets.iter().zip(&fboxes) {
            if vbox.distance_to_box(fbox) >= best {
                continue;
            }
            best = best.min(geom::triangle_aabb_distance(f, &vbox));
            if best == 0.0 {
                return Ok(0.0);
            }
        }
    }
    Ok(best)
}

/// One (event, time step) term of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    /// Event index l, 1-based.
    pub event: usize,
    /// Time step index h, 1-based.
    pub step: usize,
    pub weight: f64,
    /// Exact distance from the critical points to the true target facets.
    pub d_true: f64,
    /// Distance from the critical points to the reconstructed voxel model.
    pub d_model: f64,
    /// weight * (d_true - d_model)^2.
    pub term: f64,
    /// The model was empty and `d_model` is the cap value.
    pub cap_used: bool,
    /// The event has no target facets at this step; the term is zero.
    pub empty_target: bool,
}

/// Wall-clock decomposition of one objective evaluation, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalTiming {
    /// Sensor sampling: ray profiles, label fields, model building.
    pub classify_ms: f64,
    /// Connected clustering and plausibility filtering.
    pub cluster_ms: f64,
    /// Facet/voxel distance queries.
    pub distance_ms: f64,
}

/// Result of one objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrValue {
    /// Sum of the evaluated terms; a lower bound on the full objective when
    /// `aborted` is set.
    pub total: f64,
    /// Terms in evaluation order: time steps outer, events inner.
    pub terms: Vec<DistanceReport>,
    /// Evaluation stopped early because the running sum passed the abort
    /// threshold.
    pub aborted: bool,
    /// Number of terms whose model was empty (cap applied).
    pub cap_uses: usize,
    pub timing: EvalTiming,
}

/// Per-camera quantities that do not depend on the time step or event.
struct CamProfile {
    in_cone: Vec<bool>,
    dist: Vec<f64>,
    dir: Vec<Vec3>,
}

/// Reusable objective evaluator: facet lists, sample points, true distances
/// and bounding boxes are computed once per scenario.
pub struct Evaluator {
    scenario: Scenario,
    mode: SamplingMode,
    grid: VoxelGrid,
    /// Voxel center points, flat voxel order.
    centers: Vec<Vec3>,
    /// Grid corner points, flat corner order; empty in center mode.
    corners: Vec<Vec3>,
    corner_dims: [usize; 3],
    /// Obstacle facets per time step (0-based).
    obstacles: Vec<Vec<Facet>>,
    /// Target facets per event, per time step (0-based).
    targets: Vec<Vec<Vec<Facet>>>,
    /// Critical point facets per time step (0-based), all non-empty.
    critical: Vec<Vec<Facet>>,
    /// d(C(t_h), O_u(a_l(t_h))); `None` when the event is absent at the step.
    d_true: Vec<Vec<Option<f64>>>,
    thresholds: Plausibility,
    placement: Aabb,
}

impl Evaluator {
    pub fn new(scenario: &Scenario, mode: SamplingMode) -> Result<Self, ObjectiveError> {
        let grid = VoxelGrid::for_scenario(scenario)?;
        let [nx, ny, nz] = grid.dims();

        let mut centers = Vec::with_capacity(grid.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    centers.push(grid.voxel_center(i, j, k)?);
                }
            }
        }
        let corner_dims = [nx + 1, ny + 1, nz + 1];
        let mut corners = Vec::new();
        if mode == SamplingMode::Conservative9 {
            corners.reserve(corner_dims[0] * corner_dims[1] * corner_dims[2]);
            for k in 0..=nz {
                for j in 0..=ny {
                    for i in 0..=nx {
                        corners.push(grid.corner_point(i, j, k));
                    }
                }
            }
        }

        let h_count = scenario.time_step_count();
        let l_count = scenario.event_count();
        let mut obstacles = Vec::with_capacity(h_count);
        let mut critical = Vec::with_capacity(h_count);
        for h in 1..=h_count {
            obstacles.push(scenario.obstacle_facets_at(h)?);
            let c = scenario.critical_facets(h)?;
            if c.is_empty() {
                return Err(ObjectiveError::EmptyCritical(h));
            }
            critical.push(c);
        }
        let mut targets = Vec::with_capacity(l_count);
        let mut d_true = Vec::with_capacity(l_count);
        for l in 1..=l_count {
            let mut per_step = Vec::with_capacity(h_count);
            let mut dt = Vec::with_capacity(h_count);
            for h in 1..=h_count {
                let t = scenario.target_facets(l, h)?;
                dt.push(if t.is_empty() {
                    None
                } else {
                    Some(dist_facets_facets(&critical[h - 1], &t)?)
                });
                per_step.push(t);
            }
            targets.push(per_step);
            d_true.push(dt);
        }

        Ok(Evaluator {
            mode,
            grid,
            centers,
            corners,
            corner_dims,
            obstacles,
            targets,
            critical,
            d_true,
            thresholds: scenario.plausibility,
            placement: scenario.placement_box(),
            scenario: scenario.clone(),
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Exact critical-to-target distance for event `l`, step `h` (1-based);
    /// `None` when the event is absent at the step.
    pub fn true_distance(&self, l: usize, h: usize) -> Option<f64> {
        self.d_true[l - 1][h - 1]
    }

    fn check_settings(&self, settings: &[CameraSetting]) -> Result<(), ObjectiveError> {
        let cam = &self.scenario.cameras;
        if settings.len() != cam.count {
            return Err(ObjectiveError::CameraCountMismatch {
                expected: cam.count,
                got: settings.len(),
            });
        }
        for (i, s) in settings.iter().enumerate() {
            if !self.placement.contains_point(s.position) {
                return Err(ObjectiveError::PositionOutsideDomain {
                    index: i + 1,
                    x: s.position.x,
                    y: s.position.y,
                    z: s.position.z,
                });
            }
            let (lo, hi) = cam.yaw_bounds;
            if !(s.yaw >= lo && s.yaw <= hi) {
                return Err(ObjectiveError::YawOutOfBounds { index: i + 1, got: s.yaw, lo, hi });
            }
            let (lo, hi) = cam.pitch_bounds;
            if !(s.pitch >= lo && s.pitch <= hi) {
                return Err(ObjectiveError::PitchOutOfBounds { index: i + 1, got: s.pitch, lo, hi });
            }
        }
        Ok(())
    }

    /// Camera-only profile over all sample points (centers, then corners).
    fn cam_profile(&self, setting: &CameraSetting) -> CamProfile {
        let cam = &self.scenario.cameras;
        let axis = camera_axis(setting);
        let sample_count = self.centers.len() + self.corners.len();
        let mut in_cone = Vec::with_capacity(sample_count);
        let mut dist = Vec::with_capacity(sample_count);
        let mut dir = Vec::with_capacity(sample_count);
        for p in self.centers.iter().chain(self.corners.iter()) {
            let inside = cone_contains(setting, cam, *p);
            let dp = *p - setting.position;
            let d = dp.norm();
            in_cone.push(inside);
            dist.push(d);
            dir.push(if d <= geom::DEGENERACY_EPS { axis } else { dp / d });
        }
        CamProfile { in_cone, dist, dir }
    }

    /// First-obstacle distance per sample for one camera at one time step:
    /// infinity where nothing blocks, NaN where the sample is outside the
    /// cone (never read).
    fn obstacle_profile(&self, setting: &CameraSetting, prof: &CamProfile, h0: usize) -> Vec<f64> {
        let obstacles = &self.obstacles[h0];
        let mut t_obs = Vec::with_capacity(prof.dir.len());
        for s in 0..prof.dir.len() {
            if !prof.in_cone[s] {
                t_obs.push(f64::NAN);
                continue;
            }
            t_obs.push(
                first_hit(setting.position, prof.dir[s], obstacles).map_or(f64::INFINITY, |hit| hit.t),
            );
        }
        t_obs
    }

    /// Sensor label of sample `s` for one camera, given its profiles and the
    /// target facets. Mirrors `visibility::classify_against` exactly.
    fn sample_label(
        &self,
        setting: &CameraSetting,
        prof: &CamProfile,
        t_obs: &[f64],
        targets: &[Facet],
        s: usize,
    ) -> SensorValue {
        if !prof.in_cone[s] {
            return SensorValue::Undetectable;
        }
        if t_obs[s] < prof.dist[s] - OCCLUSION_EPS {
            return SensorValue::Undetectable;
        }
        if let Some(hit) = first_hit(setting.position, prof.dir[s], targets) {
            let in_range = self.scenario.cameras.max_range.map_or(true, |r| hit.t <= r);
            if in_range && hit.t < t_obs[s] {
                return SensorValue::Occupied;
            }
        }
        SensorValue::Free
    }

    /// Label field of one camera for event `l0`, step `h0` (0-based), using
    /// precomputed profiles.
    fn label_field(
        &self,
        setting: &CameraSetting,
        prof: &CamProfile,
        t_obs: &[f64],
        l0: usize,
        h0: usize,
    ) -> LabelField {
        let targets = &self.targets[l0][h0];
        let [nx, ny, nz] = self.grid.dims();
        let mut labels = Vec::with_capacity(self.grid.len());
        match self.mode {
            SamplingMode::Center => {
                for s in 0..self.centers.len() {
                    labels.push(self.sample_label(setting, prof, t_obs, targets, s));
                }
            }
            SamplingMode::Conservative9 => {
                let base = self.centers.len();
                let [cx, cy, _] = self.corner_dims;
                let corner = |i: usize, j: usize, k: usize| base + (k * cy + j) * cx + i;
                for k in 0..nz {
                    for j in 0..ny {
                        for i in 0..nx {
                            let center_idx = self.grid.flat_index(i, j, k);
                            let mut samples = [SensorValue::Free; 9];
                            samples[0] =
                                self.sample_label(setting, prof, t_obs, targets, center_idx);
                            let mut n = 1;
                            for dk in 0..2 {
                                for dj in 0..2 {
                                    for di in 0..2 {
                                        samples[n] = self.sample_label(
                                            setting,
                                            prof,
                                            t_obs,
                                            targets,
                                            corner(i + di, j + dj, k + dk),
                                        );
                                        n += 1;
                                    }
                                }
                            }
                            labels.push(reduce_conservative(&samples));
                        }
                    }
                }
            }
        }
        LabelField::from_parts(self.grid.dims(), labels)
    }

    /// Evaluate the objective for a camera tuple. Terms are accumulated with
    /// time steps outer and events inner, always in the same order, so equal
    /// inputs produce bit-equal sums. When `abort_above` is set, evaluation
    /// stops as soon as the running sum exceeds it; the result is then a
    /// certified lower bound (every term is non-negative).
    pub fn err_sum(
        &self,
        settings: &[CameraSetting],
        abort_above: Option<f64>,
    ) -> Result<ErrValue, ObjectiveError> {
        self.check_settings(settings)?;
        let h_count = self.scenario.time_step_count();
        let l_count = self.scenario.event_count();

        let t0 = Instant::now();
        let profiles: Vec<CamProfile> = settings.iter().map(|e| self.cam_profile(e)).collect();
        let mut timing = EvalTiming { classify_ms: ms_since(t0), ..Default::default() };

        let mut out = ErrValue {
            total: 0.0,
            terms: Vec::with_capacity(l_count * h_count),
            aborted: false,
            cap_uses: 0,
            timing: EvalTiming::default(),
        };

        'steps: for h0 in 0..h_count {
            let t0 = Instant::now();
            let t_obs: Vec<Vec<f64>> = settings
                .iter()
                .zip(&profiles)
                .map(|(e, p)| self.obstacle_profile(e, p, h0))
                .collect();
            timing.classify_ms += ms_since(t0);

            for l0 in 0..l_count {
                let weight = self.scenario.events[l0].weights[h0];
                let Some(d_true) = self.d_true[l0][h0] else {
                    out.terms.push(DistanceReport {
                        event: l0 + 1,
                        step: h0 + 1,
                        weight,
                        d_true: 0.0,
                        d_model: 0.0,
                        term: 0.0,
                        cap_used: false,
                        empty_target: true,
                    });
                    continue;
                };

                let t0 = Instant::now();
                let fields: Vec<LabelField> = settings
                    .iter()
                    .zip(&profiles)
                    .zip(&t_obs)
                    .map(|((e, p), t)| self.label_field(e, p, t, l0, h0))
                    .collect();
                let model = build_model(&self.grid, &fields)?;
                timing.classify_ms += ms_since(t0);

                let t0 = Instant::now();
                let clusters = cluster_model(&self.grid, &model)?;
                let plausible = apply_plausibility(&self.grid, &clusters, self.thresholds);
                timing.cluster_ms += ms_since(t0);

                let t0 = Instant::now();
                let cap_used = plausible.is_empty_set();
                let d_model = dist_facets_voxels(&self.critical[h0], &self.grid, &plausible)?;
                timing.distance_ms += ms_since(t0);

                let term = weight * (d_true - d_model) * (d_true - d_model);
                out.total += term;
                out.cap_uses += cap_used as usize;
                out.terms.push(DistanceReport {
                    event: l0 + 1,
                    step: h0 + 1,
                    weight,
                    d_true,
                    d_model,
                    term,
                    cap_used,
                    empty_target: false,
                });

                if let Some(limit) = abort_above {
                    if out.total > limit {
                        out.aborted = true;
                        break 'steps;
                    }
                }
            }
        }
        out.timing = timing;
        Ok(out)
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// One-shot objective evaluation; builds a throwaway [`Evaluator`].
pub fn err_sum(
    scenario: &Scenario,
    settings: &[CameraSetting],
    mode: SamplingMode,
    abort_above: Option<f64>,
) -> Result<ErrValue, ObjectiveError> {
    Evaluator::new(scenario, mode)?.err_sum(settings, abort_above)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Facet {
        Facet::new(Vec3::from_array(a), Vec3::from_array(b), Vec3::from_array(c))
    }

    fn base_grid() -> VoxelGrid {
        VoxelGrid::new(&Aabb::new(Vec3::ZERO, Vec3::new(4.0, 3.0, 3.0)), [16, 12, 12]).unwrap()
    }

    #[test]
    fn facet_distance_zero_on_shared_vertex() {
        let a = vec![tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])];
        let b = vec![tri([0.0, 0.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 1.0])];
        assert_eq!(dist_facets_facets(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn facet_distance_parallel_offset_is_exact() {
        let a = vec![tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])];
        let b = vec![tri([0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0])];
        assert_eq!(dist_facets_facets(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn facet_distance_takes_minimum_over_pairs() {
        let a = vec![tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])];
        let b = vec![
            tri([0.0, 0.0, 5.0], [1.0, 0.0, 5.0], [0.0, 1.0, 5.0]),
            tri([0.0, 0.0, 2.0], [1.0, 0.0, 2.0], [0.0, 1.0, 2.0]),
        ];
        assert_eq!(dist_facets_facets(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn facet_distance_rejects_empty_sets() {
        let a = vec![tri([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])];
        assert!(matches!(dist_facets_facets(&a, &[]), Err(ObjectiveError::EmptyFacetSet)));
        assert!(matches!(dist_facets_facets(&[], &a), Err(ObjectiveError::EmptyFacetSet)));
    }

    #[test]
    fn voxel_distance_empty_model_caps_at_region_diameter() {
        let g = base_grid();
        let mask = VoxelMask::filled(g.dims(), false);
        let c = vec![tri([1.0, 1.0, 1.0], [2.0, 1.0, 1.0], [1.0, 2.0, 1.0])];
        let d = dist_facets_voxels(&c, &g, &mask).unwrap();
        assert!((d - 34.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn voxel_distance_zero_on_overlap() {
        let g = base_grid();
        let mut mask = VoxelMask::filled(g.dims(), false);
        mask.set(g.flat_index(4, 4, 4), true);
        // Facet passing through voxel (4,4,4) which spans [1,1.25]^3.
        let c = vec![tri([0.9, 1.1, 1.1], [1.4, 1.1, 1.1], [1.1, 1.2, 1.2])];
        assert_eq!(dist_facets_voxels(&c, &g, &mask).unwrap(), 0.0);
    }

    #[test]
    fn voxel_distance_to_single_voxel_face() {
        let g = base_grid();
        let mut mask = VoxelMask::filled(g.dims(), false);
        // Voxel (0,0,0): [0, 0.25]^3. Triangle in the x = 1 plane overlapping
        // the voxel's y/z footprint: closest gap is along x only.
        mask.set(g.flat_index(0, 0, 0), true);
        let c = vec![tri([1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [1.0, 0.0, 1.0])];
        let d = dist_facets_voxels(&c, &g, &mask).unwrap();
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn voxel_distance_uses_box_not_center() {
        let g = base_grid();
        let mut mask = VoxelMask::filled(g.dims(), false);
        mask.set(g.flat_index(0, 0, 0), true);
        // A facet 0.05 beyond the voxel face: center distance would be 0.175.
        let c = vec![tri([0.3, -1.0, -1.0], [0.3, 1.0, -1.0], [0.3, 0.0, 1.0])];
        let d = dist_facets_voxels(&c, &g, &mask).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
    }
}
