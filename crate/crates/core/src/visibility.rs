//! The per-camera sensor map: every point of the universe is classified as
//! free, occupied or undetectable with respect to one camera setting.
//!
//! A camera is an apex-at-position circular cone of half angle alpha looking
//! along a yaw/pitch axis. Classification follows silhouette semantics: a
//! ray that meets an unmodelled target anywhere paints every point of that
//! ray as occupied (in front of occluders), because a single image cannot
//! resolve depth along the ray.

use crate::geom::{self, Facet, Vec3};
use crate::scene::{CameraModel, Scenario, ScenarioError};
use thiserror::Error;

/// Occlusion slack in metres: a point closer to the camera than the first
/// obstacle hit by less than this still counts as visible, so points lying
/// exactly on obstacle surfaces classify deterministically.
pub const OCCLUSION_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum VisibilityError {
    #[error("point ({0}, {1}, {2}) lies outside the universe")]
    PointOutsideUniverse(f64, f64, f64),
    #[error(transparent)]
    Scene(#[from] ScenarioError),
}

/// Sensor verdict for a single point and camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorValue {
    /// Seen and reported empty: no target silhouette covers the point.
    Free,
    /// Covered by a target silhouette closer than any occluder.
    Occupied,
    /// Outside the view cone or hidden behind an obstacle.
    Undetectable,
}

/// One camera: position plus orientation. Yaw in [-pi, pi] rotates around
/// +z starting from +x; pitch in [-pi/2, pi/2] tilts towards +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSetting {
    pub position: Vec3,
    pub yaw: f64,
    pub pitch: f64,
}

impl CameraSetting {
    pub fn new(position: Vec3, yaw: f64, pitch: f64) -> Self {
        CameraSetting { position, yaw, pitch }
    }
}

/// Closest intersection along a ray: parameter and facet index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Distance along the ray in units of the direction vector.
    pub t: f64,
    /// Index into the facet list that produced the hit.
    pub facet: usize,
}

/// Unit view axis for a yaw/pitch orientation.
pub fn camera_axis(setting: &CameraSetting) -> Vec3 {
    let (sy, cy) = setting.yaw.sin_cos();
    let (sp, cp) = setting.pitch.sin_cos();
    Vec3::new(cp * cy, cp * sy, sp)
}

/// Is `p` inside the (possibly range-limited) view cone of the camera?
/// The apex and the cone boundary count as inside.
pub fn cone_contains(setting: &CameraSetting, cameras: &CameraModel, p: Vec3) -> bool {
    let dp = p - setting.position;
    let r = dp.norm();
    if r <= geom::DEGENERACY_EPS {
        return true;
    }
    if let Some(range) = cameras.max_range {
        if r > range {
            return false;
        }
    }
    let cos_angle = camera_axis(setting).dot(dp) / r;
    cos_angle >= cameras.half_angle.cos()
}

/// First intersection of the ray `origin + t*dir` (t >= 0) with any facet.
/// Ties on `t` resolve to the lowest facet index.
pub fn first_hit(origin: Vec3, dir: Vec3, facets: &[Facet]) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for (i, f) in facets.iter().enumerate() {
        if let Some(t) = geom::ray_triangle(origin, dir, f) {
            if best.map_or(true, |b| t < b.t) {
                best = Some(RayHit { t, facet: i });
            }
        }
    }
    best
}

/// Classification core against explicit facet lists. `obstacles` are the
/// rigid modelled parts (they occlude); `targets` are the unmodelled facets
/// whose silhouettes mark rays occupied.
pub fn classify_against(
    setting: &CameraSetting,
    cameras: &CameraModel,
    obstacles: &[Facet],
    targets: &[Facet],
    p: Vec3,
) -> SensorValue {
    if !cone_contains(setting, cameras, p) {
        return SensorValue::Undetectable;
    }
    let dp = p - setting.position;
    let d_p = dp.norm();
    // A point at the apex itself sees along the optical axis.
    let dir = if d_p <= geom::DEGENERACY_EPS {
        camera_axis(setting)
    } else {
        dp / d_p
    };

    let t_obs = first_hit(setting.position, dir, obstacles).map_or(f64::INFINITY, |h| h.t);
    if t_obs < d_p - OCCLUSION_EPS {
        return SensorValue::Undetectable;
    }

    if let Some(hit) = first_hit(setting.position, dir, targets) {
        let in_range = cameras.max_range.map_or(true, |r| hit.t <= r);
        if in_range && hit.t < t_obs {
            return SensorValue::Occupied;
        }
    }
    SensorValue::Free
}

/// Sensor value of point `p` for camera `setting`, at event `l` and time
/// step `h` (1-based). Occluders are the static plus dynamic obstacles of
/// step `h`; silhouettes come from the targets of event `l` at step `h`.
pub fn classify_point(
    setting: &CameraSetting,
    scenario: &Scenario,
    l: usize,
    h: usize,
    p: Vec3,
) -> Result<SensorValue, VisibilityError> {
    if !scenario.universe.contains_point(p) {
        return Err(VisibilityError::PointOutsideUniverse(p.x, p.y, p.z));
    }
    let obstacles = scenario.obstacle_facets_at(h)?;
    let targets = scenario.target_facets(l, h)?;
    Ok(classify_against(setting, &scenario.cameras, &obstacles, &targets, p))
}
