//! Independent re-computations used to cross-check the fast kernels.
//!
//! * [`sampled_triangle_distance`]: minimum distance between two triangles
//!   by hierarchical barycentric sampling, no closed-form geometry.
//! * [`classify_point_crossing`]: sensor classification built on per-facet
//!   plane crossings instead of the production ray/triangle kernel.
//! * [`err_sum_reference`]: the whole objective pipeline recomputed in the
//!   most literal way possible, voxel by voxel, with a fresh clustering.

use camnet_core::geom::{triangle_aabb_distance, triangle_triangle_distance, Facet, Vec3};
use camnet_core::hull::{SamplingMode, VoxelGrid};
use camnet_core::scene::{CameraModel, Scenario};
use camnet_core::visibility::{camera_axis, CameraSetting, SensorValue, OCCLUSION_EPS};
use std::collections::VecDeque;

/// Minimum distance between two triangles found purely by sampling point
/// pairs. Converges from above: every probe is the distance of a real point
/// pair, so the result never undershoots the true minimum. The joint
/// distance is convex in the barycentric parameters, so refining around the
/// best sample converges globally.
pub fn sampled_triangle_distance(a: &Facet, b: &Facet) -> f64 {
    const GRID: usize = 15;
    const LEVELS: usize = 14;
    const SHRINK: f64 = 0.4;

    let mut center_a = (1.0 / 3.0, 1.0 / 3.0);
    let mut center_b = (1.0 / 3.0, 1.0 / 3.0);
    let mut radius = 1.0;
    let mut best = f64::INFINITY;

    for _ in 0..LEVELS {
        let pa = simplex_samples(a, center_a, radius, GRID);
        let pb = simplex_samples(b, center_b, radius, GRID);
        for (ua, va, qa) in &pa {
            for (ub, vb, qb) in &pb {
                let d2 = (*qa - *qb).norm_squared();
                if d2 < best {
                    best = d2;
                    center_a = (*ua, *va);
                    center_b = (*ub, *vb);
                }
            }
        }
        radius *= SHRINK;
    }
    best.sqrt()
}

/// Barycentric grid over the intersection of the unit simplex with a square
/// neighborhood around `center`.
fn simplex_samples(tri: &Facet, center: (f64, f64), radius: f64, grid: usize) -> Vec<(f64, f64, Vec3)> {
    let e1 = tri.v[1] - tri.v[0];
    let e2 = tri.v[2] - tri.v[0];
    let lo_u = (center.0 - radius).max(0.0);
    let hi_u = (center.0 + radius).min(1.0);
    let lo_v = (center.1 - radius).max(0.0);
    let hi_v = (center.1 + radius).min(1.0);
    let mut out = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let fu = i as f64 / (grid - 1) as f64;
        let mut u = lo_u + (hi_u - lo_u) * fu;
        for j in 0..grid {
            let fv = j as f64 / (grid - 1) as f64;
            let mut v = lo_v + (hi_v - lo_v) * fv;
            let s = u + v;
            if s > 1.0 {
                // Project onto the simplex boundary along the ray from the
                // origin; keeps the sample inside the triangle.
                u /= s;
                v /= s;
            }
            out.push((u, v, tri.v[0] + e1 * u + e2 * v));
        }
    }
    out
}

/// Earliest crossing of the ray `origin + t*dir` (unit `dir`) with a facet
/// set, found by solving each facet's plane equation for the crossing
/// parameter and testing barycentric containment there. Equivalent to
/// marching the ray and watching the signed plane distance change sign,
/// evaluated at the exact limit of an infinitesimal step (the signed
/// distance is linear in `t`).
pub fn earliest_crossing(origin: Vec3, dir: Vec3, facets: &[Facet], t_max: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in facets {
        let n = f.normal();
        let slope = n.dot(dir);
        if slope.abs() < 1e-14 {
            // Ray parallel to the plane: the signed distance never changes
            // sign, so marching would see no crossing.
            continue;
        }
        let t = n.dot(f.v[0] - origin) / slope;
        if t < -1e-12 || t > t_max {
            continue;
        }
        let x = origin + dir * t.max(0.0);
        if barycentric_inside(f, x) && best.map_or(true, |b| t < b) {
            best = Some(t.max(0.0));
        }
    }
    best
}

fn barycentric_inside(f: &Facet, x: Vec3) -> bool {
    let v0 = f.v[1] - f.v[0];
    let v1 = f.v[2] - f.v[0];
    let v2 = x - f.v[0];
    let d00 = v0.dot(v0);
    let d01 = v0.dot(v1);
    let d11 = v1.dot(v1);
    let d20 = v2.dot(v0);
    let d21 = v2.dot(v1);
    let denom = d00 * d11 - d01 * d01;
    if denom.abs() < 1e-30 {
        return false;
    }
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    let eps = 1e-9;
    v >= -eps && w >= -eps && v + w <= 1.0 + eps
}

/// Step length in metres used by [`classify_point_marching`].
pub const MARCH_STEP: f64 = 1e-4;

/// Earliest facet crossing found by brute-force marching: walk the ray in
/// [`MARCH_STEP`] increments and watch each facet's signed plane offset for
/// a sign change. The offset is linear in the ray parameter, so the
/// interpolated crossing is exact up to rounding; a straight line crosses a
/// plane at most once, so the march stops per facet at the first flip.
fn marched_crossing(origin: Vec3, dir: Vec3, facets: &[Facet], t_end: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in facets {
        let n = f.normal();
        let offset = |t: f64| n.dot(origin + dir * t - f.v[0]);

        let s0 = offset(0.0);
        let mut cand = None;
        if s0 == 0.0 {
            // The apex sits on the facet plane: crossing at the start.
            if barycentric_inside(f, origin) {
                cand = Some(0.0);
            }
        } else {
            let steps = (t_end / MARCH_STEP).ceil() as usize + 1;
            let mut t_prev = 0.0;
            let mut s_prev = s0;
            for k in 1..=steps {
                let t = k as f64 * MARCH_STEP;
                let s = offset(t);
                if s == 0.0 || (s > 0.0) != (s_prev > 0.0) {
                    let t_cross = t_prev + (t - t_prev) * (s_prev / (s_prev - s));
                    if barycentric_inside(f, origin + dir * t_cross) {
                        cand = Some(t_cross);
                    }
                    break;
                }
                t_prev = t;
                s_prev = s;
            }
        }
        if let Some(t) = cand {
            if best.map_or(true, |b| t < b) {
                best = Some(t);
            }
        }
    }
    best
}

/// Sensor classification by ray marching (see [`marched_crossing`]); the
/// slowest and most literal of the classification oracles.
pub fn classify_point_marching(
    setting: &CameraSetting,
    cameras: &CameraModel,
    obstacles: &[Facet],
    targets: &[Facet],
    p: Vec3,
) -> SensorValue {
    let axis = camera_axis(setting);
    let dp = p - setting.position;
    let d_p = dp.norm();

    let dir = if d_p <= 1e-12 { axis } else { dp / d_p };
    if d_p > 1e-12 {
        let along = dp.dot(axis);
        let perp = (dp - axis * along).norm();
        if perp.atan2(along) > cameras.half_angle {
            return SensorValue::Undetectable;
        }
        if let Some(range) = cameras.max_range {
            if d_p > range {
                return SensorValue::Undetectable;
            }
        }
    }

    let reach = obstacles
        .iter()
        .chain(targets.iter())
        .flat_map(|f| f.v.iter())
        .map(|v| (*v - setting.position).norm())
        .fold(d_p, f64::max)
        + MARCH_STEP;

    let t_obs = marched_crossing(setting.position, dir, obstacles, reach).unwrap_or(f64::INFINITY);
    if t_obs < d_p - OCCLUSION_EPS {
        return SensorValue::Undetectable;
    }
    if let Some(t_tar) = marched_crossing(setting.position, dir, targets, reach) {
        let in_range = cameras.max_range.map_or(true, |r| t_tar <= r);
        if in_range && t_tar < t_obs {
            return SensorValue::Occupied;
        }
    }
    SensorValue::Free
}

/// Sensor classification recomputed from first principles: explicit
/// opening-angle arithmetic for the cone and plane-crossing intersection
/// search, sharing no code with the production classifier's ray kernel.
pub fn classify_point_crossing(
    setting: &CameraSetting,
    cameras: &CameraModel,
    obstacles: &[Facet],
    targets: &[Facet],
    p: Vec3,
) -> SensorValue {
    let axis = camera_axis(setting);
    let dp = p - setting.position;
    let d_p = dp.norm();

    let dir = if d_p <= 1e-12 { axis } else { dp / d_p };
    if d_p > 1e-12 {
        let along = dp.dot(axis);
        let perp = (dp - axis * along).norm();
        let angle = perp.atan2(along);
        if angle > cameras.half_angle {
            return SensorValue::Undetectable;
        }
        if let Some(range) = cameras.max_range {
            if d_p > range {
                return SensorValue::Undetectable;
            }
        }
    }

    // Everything of interest lies within the reach of the facet sets.
    let reach = obstacles
        .iter()
        .chain(targets.iter())
        .flat_map(|f| f.v.iter())
        .map(|v| (*v - setting.position).norm())
        .fold(d_p, f64::max)
        + 1.0;

    let t_obs = earliest_crossing(setting.position, dir, obstacles, reach).unwrap_or(f64::INFINITY);
    if t_obs < d_p - OCCLUSION_EPS {
        return SensorValue::Undetectable;
    }
    if let Some(t_tar) = earliest_crossing(setting.position, dir, targets, reach) {
        let in_range = cameras.max_range.map_or(true, |r| t_tar <= r);
        if in_range && t_tar < t_obs {
            return SensorValue::Occupied;
        }
    }
    SensorValue::Free
}

/// The objective recomputed literally, term by term: per-voxel sensor
/// sampling through the point classifier, an independent flood-fill
/// clustering, threshold filtering, and unpruned distance scans. Matches
/// the production evaluator to float identity on equal inputs.
pub fn err_sum_reference(
    scenario: &Scenario,
    settings: &[CameraSetting],
    mode: SamplingMode,
) -> f64 {
    let grid = VoxelGrid::for_scenario(scenario).expect("grid");
    let [nx, ny, nz] = grid.dims();
    let h_count = scenario.time_step_count();
    let l_count = scenario.event_count();
    let mut total = 0.0;

    for h in 1..=h_count {
        let obstacles = scenario.obstacle_facets_at(h).expect("obstacles");
        let critical = scenario.critical_facets(h).expect("critical");
        assert!(!critical.is_empty(), "critical points must not be empty");

        for l in 1..=l_count {
            let weight = scenario.weight(l, h).expect("weight");
            let targets = scenario.target_facets(l, h).expect("targets");
            if targets.is_empty() {
                continue;
            }
            let d_true = critical
                .iter()
                .flat_map(|c| targets.iter().map(move |t| triangle_triangle_distance(c, t)))
                .fold(f64::INFINITY, f64::min);

            // Per-voxel model membership: free for no camera.
            let classify = |p: Vec3| -> Vec<SensorValue> {
                settings
                    .iter()
                    .map(|e| {
                        camnet_core::visibility::classify_against(
                            e,
                            &scenario.cameras,
                            &obstacles,
                            &targets,
                            p,
                        )
                    })
                    .collect()
            };
            let mut model = vec![false; grid.len()];
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let idx = grid.flat_index(i, j, k);
                        let mut free_per_cam =
                            classify(grid.voxel_center(i, j, k).unwrap())
                                .iter()
                                .map(|s| *s == SensorValue::Free)
                                .collect::<Vec<bool>>();
                        if mode == SamplingMode::Conservative9 {
                            for dk in 0..2 {
                                for dj in 0..2 {
                                    for di in 0..2 {
                                        let labels =
                                            classify(grid.corner_point(i + di, j + dj, k + dk));
                                        for (c, s) in labels.iter().enumerate() {
                                            free_per_cam[c] &= *s == SensorValue::Free;
                                        }
                                    }
                                }
                            }
                        }
                        model[idx] = !free_per_cam.iter().any(|f| *f);
                    }
                }
            }

            // Independent 6-neighbor flood fill.
            let mut seen = vec![false; grid.len()];
            let mut kept = vec![false; grid.len()];
            for seed in 0..grid.len() {
                if !model[seed] || seen[seed] {
                    continue;
                }
                let mut members = Vec::new();
                let mut queue = VecDeque::from([seed]);
                seen[seed] = true;
                while let Some(idx) = queue.pop_front() {
                    members.push(idx);
                    let (i, j, k) = grid.coords(idx);
                    let neighbors: [(isize, isize, isize); 6] = [
                        (-1, 0, 0),
                        (1, 0, 0),
                        (0, -1, 0),
                        (0, 1, 0),
                        (0, 0, -1),
                        (0, 0, 1),
                    ];
                    for (di, dj, dk) in neighbors {
                        let (ni, nj, nk) =
                            (i as isize + di, j as isize + dj, k as isize + dk);
                        if ni < 0 || nj < 0 || nk < 0 {
                            continue;
                        }
                        let (ni, nj, nk) = (ni as usize, nj as usize, nk as usize);
                        if ni >= nx || nj >= ny || nk >= nz {
                            continue;
                        }
                        let nidx = grid.flat_index(ni, nj, nk);
                        if model[nidx] && !seen[nidx] {
                            seen[nidx] = true;
                            queue.push_back(nidx);
                        }
                    }
                }
                let volume = members.len() as f64 * grid.cell_volume();
                let ks: Vec<usize> = members.iter().map(|m| grid.coords(*m).2).collect();
                let height = (ks.iter().max().unwrap() - ks.iter().min().unwrap() + 1) as f64
                    * grid.cell_size().z;
                if volume >= scenario.plausibility.min_volume
                    && height >= scenario.plausibility.min_height
                {
                    for m in members {
                        kept[m] = true;
                    }
                }
            }

            let d_model = if kept.iter().any(|k| *k) {
                let mut best = f64::INFINITY;
                for (idx, k) in kept.iter().enumerate() {
                    if !*k {
                        continue;
                    }
                    let vbox = grid.voxel_box(idx);
                    for c in &critical {
                        best = best.min(triangle_aabb_distance(c, &vbox));
                    }
                }
                best
            } else {
                grid.region_diagonal()
            };

            total += weight * (d_true - d_model) * (d_true - d_model);
        }
    }
    total
}
