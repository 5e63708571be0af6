//! Scene model: the universe and surveillance region, rigid obstacle
//! collectives (static and per time step), appearance events that pair
//! probability weights with unmodelled target collectives, camera count and
//! intrinsics, and the camera placement domain.
//!
//! Scenarios are plain JSON documents. Parsing validates every structural
//! invariant and reports the first violation by name; a parsed `Scenario`
//! can therefore be consumed without re-checking.

use crate::geom::{self, Aabb, Facet, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Triangles closer than this are treated as touching when rigid
/// inpenetrability between targets and obstacles is checked.
pub const CONTACT_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("universe box is invalid (needs finite min < max per axis)")]
    InvalidUniverse,
    #[error("surveillance box is invalid (needs finite min < max per axis)")]
    InvalidSurveillance,
    #[error("surveillance region must lie inside the universe")]
    SurveillanceOutsideUniverse,
    #[error("voxel resolution must be at least 1 per axis, got {0}x{1}x{2}")]
    InvalidResolution(usize, usize, usize),
    #[error("at least one time step is required")]
    NoTimeSteps,
    #[error("time step {0} is not finite")]
    NonFiniteTimeStep(usize),
    #[error("at least one appearance event is required")]
    NoEvents,
    #[error("camera half angle must lie strictly between 0 and pi/2, got {0}")]
    InvalidHalfAngle(f64),
    #[error("camera max range must be positive, got {0}")]
    InvalidMaxRange(f64),
    #[error("yaw bounds must satisfy -pi <= lo <= hi <= pi, got [{0}, {1}]")]
    InvalidYawBounds(f64, f64),
    #[error("pitch bounds must satisfy -pi/2 <= lo <= hi <= pi/2, got [{0}, {1}]")]
    InvalidPitchBounds(f64, f64),
    #[error("placement domain must be a non-empty box inside the universe")]
    InvalidPlacementDomain,
    #[error("dynamic obstacle list has {got} entries but there are {expected} time steps")]
    DynamicLengthMismatch { got: usize, expected: usize },
    #[error("event {event}: weight list has {got} entries but there are {expected} time steps")]
    WeightLengthMismatch { event: usize, got: usize, expected: usize },
    #[error("event {event}: target list has {got} entries but there are {expected} time steps")]
    TargetLengthMismatch { event: usize, got: usize, expected: usize },
    #[error("event {event}: weight at time step {step} is negative or not finite")]
    InvalidWeight { event: usize, step: usize },
    #[error("all appearance weights are zero; weights cannot be normalized")]
    ZeroWeightSum,
    #[error("object '{object}' has no facets")]
    EmptyObject { object: String },
    #[error("object '{object}' facet {facet}: {reason}")]
    BadFacet { object: String, facet: usize, reason: &'static str },
    #[error("object '{object}' facet {facet} leaves the surveillance region")]
    FacetOutsideSurveillance { object: String, facet: usize },
    #[error("critical point override must list one facet set per time step")]
    CriticalLengthMismatch,
    #[error("critical point override at time step {step} is empty")]
    EmptyCritical { step: usize },
    #[error(
        "event {event}, time step {step}: target facet {target_facet} touches obstacle facet {obstacle_facet} (rigid parts must not intersect)"
    )]
    TargetObstacleContact { event: usize, step: usize, target_facet: usize, obstacle_facet: usize },
    #[error("time step index {got} out of range 1..={max}")]
    TimeStepOutOfRange { got: usize, max: usize },
    #[error("event index {got} out of range 1..={max}")]
    EventOutOfRange { got: usize, max: usize },
}

/// A rigid body given by its triangle surface.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshObject {
    pub id: String,
    pub facets: Vec<Facet>,
}

impl MeshObject {
    pub fn new(id: impl Into<String>, facets: Vec<Facet>) -> Self {
        MeshObject { id: id.into(), facets }
    }
}

/// Static obstacles plus one obstacle list per time step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObstacleCollectives {
    pub static_objects: Vec<MeshObject>,
    /// Indexed by time step (0-based internally).
    pub dynamic_objects: Vec<Vec<MeshObject>>,
}

/// One appearance event: a probability weight and a target collective per
/// time step. Target lists may be empty at steps where the event's objects
/// are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceEvent {
    pub id: String,
    pub weights: Vec<f64>,
    pub targets: Vec<Vec<MeshObject>>,
}

/// Where camera positions may be placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlacementDomain {
    /// Anywhere in the universe.
    FullUniverse,
    /// The top face of the universe (z fixed at the universe maximum).
    Ceiling,
    /// The top quarter of the universe by height.
    UpperFourth,
    /// An explicit box (may be degenerate down to a point).
    CustomBox { min: Vec3, max: Vec3 },
}

/// Camera count, optics and orientation limits shared by every camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub count: usize,
    /// Half opening angle of the circular view cone, radians, in (0, pi/2).
    pub half_angle: f64,
    /// Optional sensing range; unlimited when absent.
    pub max_range: Option<f64>,
    pub domain: PlacementDomain,
    /// Orientation limits; default to the full ranges.
    pub yaw_bounds: (f64, f64),
    pub pitch_bounds: (f64, f64),
}

/// Volume and height thresholds below which a hull cluster is discarded as
/// implausible. Zero thresholds keep everything.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Plausibility {
    pub min_volume: f64,
    pub min_height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub universe: Aabb,
    pub surveillance: Aabb,
    pub voxel_resolution: [usize; 3],
    pub time_steps: Vec<f64>,
    pub cameras: CameraModel,
    pub obstacles: ObstacleCollectives,
    pub events: Vec<AppearanceEvent>,
    /// Critical points per time step; `None` means the dynamic obstacles of
    /// the respective step act as critical points.
    pub critical_override: Option<Vec<Vec<Facet>>>,
    pub plausibility: Plausibility,
    pub seed: u64,
}

impl Scenario {
    /// Number of time steps H (>= 1).
    pub fn time_step_count(&self) -> usize {
        self.time_steps.len()
    }

    /// Number of appearance events L (>= 1).
    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    /// All obstacle facets at time step `h` (1-based): static facets first,
    /// then the dynamic facets of the step, in declaration order.
    pub fn obstacle_facets_at(&self, h: usize) -> Result<Vec<Facet>, ScenarioError> {
        let idx = self.check_step(h)?;
        let mut out = Vec::new();
        for o in &self.obstacles.static_objects {
            out.extend_from_slice(&o.facets);
        }
        for o in &self.obstacles.dynamic_objects[idx] {
            out.extend_from_slice(&o.facets);
        }
        Ok(out)
    }

    /// Target facets of event `l` at time step `h` (both 1-based). Empty when
    /// the event's objects are absent at that step.
    pub fn target_facets(&self, l: usize, h: usize) -> Result<Vec<Facet>, ScenarioError> {
        let step = self.check_step(h)?;
        let event = self.check_event(l)?;
        let mut out = Vec::new();
        for o in &self.events[event].targets[step] {
            out.extend_from_slice(&o.facets);
        }
        Ok(out)
    }

    /// Appearance weight of event `l` at time step `h` (both 1-based).
    pub fn weight(&self, l: usize, h: usize) -> Result<f64, ScenarioError> {
        let step = self.check_step(h)?;
        let event = self.check_event(l)?;
        Ok(self.events[event].weights[step])
    }

    /// Critical point facets at time step `h` (1-based): the override when
    /// present, otherwise the dynamic obstacles of the step.
    pub fn critical_facets(&self, h: usize) -> Result<Vec<Facet>, ScenarioError> {
        let idx = self.check_step(h)?;
        if let Some(crit) = &self.critical_override {
            return Ok(crit[idx].clone());
        }
        let mut out = Vec::new();
        for o in &self.obstacles.dynamic_objects[idx] {
            out.extend_from_slice(&o.facets);
        }
        Ok(out)
    }

    /// The placement domain resolved to a concrete box.
    pub fn placement_box(&self) -> Aabb {
        let u = self.universe;
        match self.cameras.domain {
            PlacementDomain::FullUniverse => u,
            PlacementDomain::Ceiling => Aabb::new(Vec3::new(u.min.x, u.min.y, u.max.z), u.max),
            PlacementDomain::UpperFourth => {
                let z = u.max.z - (u.max.z - u.min.z) * 0.25;
                Aabb::new(Vec3::new(u.min.x, u.min.y, z), u.max)
            }
            PlacementDomain::CustomBox { min, max } => Aabb::new(min, max),
        }
    }

    /// Scale the weights so they sum to 1 over all (event, step) pairs.
    pub fn normalize_weights(&mut self) -> Result<(), ScenarioError> {
        let sum: f64 = self.events.iter().flat_map(|e| e.weights.iter()).sum();
        if sum <= 0.0 {
            return Err(ScenarioError::ZeroWeightSum);
        }
        for e in &mut self.events {
            for w in &mut e.weights {
                *w /= sum;
            }
        }
        Ok(())
    }

    fn check_step(&self, h: usize) -> Result<usize, ScenarioError> {
        if h == 0 || h > self.time_steps.len() {
            return Err(ScenarioError::TimeStepOutOfRange { got: h, max: self.time_steps.len() });
        }
        Ok(h - 1)
    }

    fn check_event(&self, l: usize) -> Result<usize, ScenarioError> {
        if l == 0 || l > self.events.len() {
            return Err(ScenarioError::EventOutOfRange { got: l, max: self.events.len() });
        }
        Ok(l - 1)
    }

    /// Run the full validation suite. `parse_scenario` calls this; it is
    /// public so programmatically built scenarios can be checked too.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !self.universe.has_volume() {
            return Err(ScenarioError::InvalidUniverse);
        }
        if !self.surveillance.has_volume() {
            return Err(ScenarioError::InvalidSurveillance);
        }
        if !self.universe.contains_box(&self.surveillance) {
            return Err(ScenarioError::SurveillanceOutsideUniverse);
        }
        let [rx, ry, rz] = self.voxel_resolution;
        if rx == 0 || ry == 0 || rz == 0 {
            return Err(ScenarioError::InvalidResolution(rx, ry, rz));
        }
        if self.time_steps.is_empty() {
            return Err(ScenarioError::NoTimeSteps);
        }
        for (i, t) in self.time_steps.iter().enumerate() {
            if !t.is_finite() {
                return Err(ScenarioError::NonFiniteTimeStep(i + 1));
            }
        }
        if self.events.is_empty() {
            return Err(ScenarioError::NoEvents);
        }

        let cam = &self.cameras;
        if !(cam.half_angle > 0.0 && cam.half_angle < std::f64::consts::FRAC_PI_2) {
            return Err(ScenarioError::InvalidHalfAngle(cam.half_angle));
        }
        if let Some(r) = cam.max_range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ScenarioError::InvalidMaxRange(r));
            }
        }
        let (ylo, yhi) = cam.yaw_bounds;
        if !(ylo.is_finite() && yhi.is_finite())
            || ylo < -std::f64::consts::PI
            || yhi > std::f64::consts::PI
            || ylo > yhi
        {
            return Err(ScenarioError::InvalidYawBounds(ylo, yhi));
        }
        let (plo, phi) = cam.pitch_bounds;
        if !(plo.is_finite() && phi.is_finite())
            || plo < -std::f64::consts::FRAC_PI_2
            || phi > std::f64::consts::FRAC_PI_2
            || plo > phi
        {
            return Err(ScenarioError::InvalidPitchBounds(plo, phi));
        }
        let pbox = self.placement_box();
        if !pbox.is_valid() || !self.universe.contains_box(&pbox) {
            return Err(ScenarioError::InvalidPlacementDomain);
        }

        let h_count = self.time_steps.len();
        if self.obstacles.dynamic_objects.len() != h_count {
            return Err(ScenarioError::DynamicLengthMismatch {
                got: self.obstacles.dynamic_objects.len(),
                expected: h_count,
            });
        }
        for (li, e) in self.events.iter().enumerate() {
            if e.weights.len() != h_count {
                return Err(ScenarioError::WeightLengthMismatch {
                    event: li + 1,
                    got: e.weights.len(),
                    expected: h_count,
                });
            }
            if e.targets.len() != h_count {
                return Err(ScenarioError::TargetLengthMismatch {
                    event: li + 1,
                    got: e.targets.len(),
                    expected: h_count,
                });
            }
            for (hi, w) in e.weights.iter().enumerate() {
                if !w.is_finite() || *w < 0.0 {
                    return Err(ScenarioError::InvalidWeight { event: li + 1, step: hi + 1 });
                }
            }
        }

        for o in &self.obstacles.static_objects {
            self.check_object(o)?;
        }
        for step in &self.obstacles.dynamic_objects {
            for o in step {
                self.check_object(o)?;
            }
        }
        for e in &self.events {
            for step in &e.targets {
                for o in step {
                    self.check_object(o)?;
                }
            }
        }

        if let Some(crit) = &self.critical_override {
            if crit.len() != h_count {
                return Err(ScenarioError::CriticalLengthMismatch);
            }
            for (hi, facets) in crit.iter().enumerate() {
                if facets.is_empty() {
                    return Err(ScenarioError::EmptyCritical { step: hi + 1 });
                }
                let obj = MeshObject::new(format!("critical[{}]", hi + 1), facets.clone());
                self.check_object(&obj)?;
            }
        }

        // Rigid inpenetrability: no target facet may touch any obstacle
        // facet at its own time step.
        for h in 1..=h_count {
            let obstacle_facets = self.obstacle_facets_at(h)?;
            for l in 1..=self.events.len() {
                let target_facets = self.target_facets(l, h)?;
                for (ti, tf) in target_facets.iter().enumerate() {
                    let tbox = tf.aabb();
                    for (oi, of) in obstacle_facets.iter().enumerate() {
                        if tbox.distance_to_box(&of.aabb()) > CONTACT_EPS {
                            continue;
                        }
                        if geom::triangle_triangle_distance(tf, of) <= CONTACT_EPS {
                            return Err(ScenarioError::TargetObstacleContact {
                                event: l,
                                step: h,
                                target_facet: ti + 1,
                                obstacle_facet: oi + 1,
                            });
                        }
                    }
                }
            }
        }

        Ok(())
    }

    fn check_object(&self, o: &MeshObject) -> Result<(), ScenarioError> {
        if o.facets.is_empty() {
            return Err(ScenarioError::EmptyObject { object: o.id.clone() });
        }
        for (fi, f) in o.facets.iter().enumerate() {
            if !f.v.iter().all(|p| p.is_finite()) {
                return Err(ScenarioError::BadFacet {
                    object: o.id.clone(),
                    facet: fi + 1,
                    reason: "vertex is not finite",
                });
            }
            if f.v[0].distance(f.v[1]) <= geom::DEGENERACY_EPS
                || f.v[1].distance(f.v[2]) <= geom::DEGENERACY_EPS
                || f.v[2].distance(f.v[0]) <= geom::DEGENERACY_EPS
            {
                return Err(ScenarioError::BadFacet {
                    object: o.id.clone(),
                    facet: fi + 1,
                    reason: "vertices are not pairwise distinct",
                });
            }
            if f.area() <= geom::DEGENERACY_EPS {
                return Err(ScenarioError::BadFacet {
                    object: o.id.clone(),
                    facet: fi + 1,
                    reason: "facet is degenerate (zero area)",
                });
            }
            if !f.v.iter().all(|p| self.surveillance.contains_point(*p)) {
                return Err(ScenarioError::FacetOutsideSurveillance {
                    object: o.id.clone(),
                    facet: fi + 1,
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON document layer.

#[derive(Serialize, Deserialize)]
struct RawBox {
    min: [f64; 3],
    max: [f64; 3],
}

impl RawBox {
    fn to_aabb(&self) -> Aabb {
        Aabb::new(Vec3::from_array(self.min), Vec3::from_array(self.max))
    }

    fn from_aabb(b: &Aabb) -> Self {
        RawBox { min: b.min.to_array(), max: b.max.to_array() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawDomain {
    FullUniverse,
    Ceiling,
    UpperFourth,
    CustomBox { min: [f64; 3], max: [f64; 3] },
}

#[derive(Serialize, Deserialize)]
struct RawCameras {
    count: usize,
    half_angle: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_range: Option<f64>,
    domain: RawDomain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    yaw_bounds: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pitch_bounds: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RawObject {
    id: String,
    /// Each facet is a flat [ax, ay, az, bx, by, bz, cx, cy, cz].
    facets: Vec<[f64; 9]>,
}

impl RawObject {
    fn to_object(&self) -> MeshObject {
        MeshObject::new(self.id.clone(), self.facets.iter().map(facet_from_flat).collect())
    }

    fn from_object(o: &MeshObject) -> Self {
        RawObject { id: o.id.clone(), facets: o.facets.iter().map(facet_to_flat).collect() }
    }
}

fn facet_from_flat(f: &[f64; 9]) -> Facet {
    Facet::new(
        Vec3::new(f[0], f[1], f[2]),
        Vec3::new(f[3], f[4], f[5]),
        Vec3::new(f[6], f[7], f[8]),
    )
}

fn facet_to_flat(f: &Facet) -> [f64; 9] {
    [
        f.v[0].x, f.v[0].y, f.v[0].z, f.v[1].x, f.v[1].y, f.v[1].z, f.v[2].x, f.v[2].y, f.v[2].z,
    ]
}

#[derive(Serialize, Deserialize)]
struct RawEvent {
    id: String,
    weights: Vec<f64>,
    targets: Vec<Vec<RawObject>>,
}

#[derive(Serialize, Deserialize)]
struct RawPlausibility {
    min_volume: f64,
    min_height: f64,
}

#[derive(Serialize, Deserialize)]
struct RawScenario {
    universe: RawBox,
    surveillance: RawBox,
    voxel_resolution: [usize; 3],
    time_steps: Vec<f64>,
    cameras: RawCameras,
    static_obstacles: Vec<RawObject>,
    dynamic_obstacles: Vec<Vec<RawObject>>,
    events: Vec<RawEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    critical_points: Option<Vec<Vec<[f64; 9]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plausibility: Option<RawPlausibility>,
    #[serde(default)]
    seed: u64,
}

impl RawScenario {
    fn to_scenario(&self) -> Scenario {
        Scenario {
            universe: self.universe.to_aabb(),
            surveillance: self.surveillance.to_aabb(),
            voxel_resolution: self.voxel_resolution,
            time_steps: self.time_steps.clone(),
            cameras: CameraModel {
                count: self.cameras.count,
                half_angle: self.cameras.half_angle,
                max_range: self.cameras.max_range,
                domain: match &self.cameras.domain {
                    RawDomain::FullUniverse => PlacementDomain::FullUniverse,
                    RawDomain::Ceiling => PlacementDomain::Ceiling,
                    RawDomain::UpperFourth => PlacementDomain::UpperFourth,
                    RawDomain::CustomBox { min, max } => PlacementDomain::CustomBox {
                        min: Vec3::from_array(*min),
                        max: Vec3::from_array(*max),
                    },
                },
                yaw_bounds: self
                    .cameras
                    .yaw_bounds
                    .map(|b| (b[0], b[1]))
                    .unwrap_or((-std::f64::consts::PI, std::f64::consts::PI)),
                pitch_bounds: self
                    .cameras
                    .pitch_bounds
                    .map(|b| (b[0], b[1]))
                    .unwrap_or((-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)),
            },
            obstacles: ObstacleCollectives {
                static_objects: self.static_obstacles.iter().map(|o| o.to_object()).collect(),
                dynamic_objects: self
                    .dynamic_obstacles
                    .iter()
                    .map(|step| step.iter().map(|o| o.to_object()).collect())
                    .collect(),
            },
            events: self
                .events
                .iter()
                .map(|e| AppearanceEvent {
                    id: e.id.clone(),
                    weights: e.weights.clone(),
                    targets: e
                        .targets
                        .iter()
                        .map(|step| step.iter().map(|o| o.to_object()).collect())
                        .collect(),
                })
                .collect(),
            critical_override: self.critical_points.as_ref().map(|steps| {
                steps
                    .iter()
                    .map(|facets| facets.iter().map(facet_from_flat).collect())
                    .collect()
            }),
            plausibility: self
                .plausibility
                .as_ref()
                .map(|p| Plausibility { min_volume: p.min_volume, min_height: p.min_height })
                .unwrap_or_default(),
            seed: self.seed,
        }
    }

    fn from_scenario(s: &Scenario) -> Self {
        RawScenario {
            universe: RawBox::from_aabb(&s.universe),
            surveillance: RawBox::from_aabb(&s.surveillance),
            voxel_resolution: s.voxel_resolution,
            time_steps: s.time_steps.clone(),
            cameras: RawCameras {
                count: s.cameras.count,
                half_angle: s.cameras.half_angle,
                max_range: s.cameras.max_range,
                domain: match s.cameras.domain {
                    PlacementDomain::FullUniverse => RawDomain::FullUniverse,
                    PlacementDomain::Ceiling => RawDomain::Ceiling,
                    PlacementDomain::UpperFourth => RawDomain::UpperFourth,
                    PlacementDomain::CustomBox { min, max } => {
                        RawDomain::CustomBox { min: min.to_array(), max: max.to_array() }
                    }
                },
                yaw_bounds: Some([s.cameras.yaw_bounds.0, s.cameras.yaw_bounds.1]),
                pitch_bounds: Some([s.cameras.pitch_bounds.0, s.cameras.pitch_bounds.1]),
            },
            static_obstacles: s.obstacles.static_objects.iter().map(RawObject::from_object).collect(),
            dynamic_obstacles: s
                .obstacles
                .dynamic_objects
                .iter()
                .map(|step| step.iter().map(RawObject::from_object).collect())
                .collect(),
            events: s
                .events
                .iter()
                .map(|e| RawEvent {
                    id: e.id.clone(),
                    weights: e.weights.clone(),
                    targets: e
                        .targets
                        .iter()
                        .map(|step| step.iter().map(RawObject::from_object).collect())
                        .collect(),
                })
                .collect(),
            critical_points: s.critical_override.as_ref().map(|steps| {
                steps.iter().map(|facets| facets.iter().map(facet_to_flat).collect()).collect()
            }),
            plausibility: Some(RawPlausibility {
                min_volume: s.plausibility.min_volume,
                min_height: s.plausibility.min_height,
            }),
            seed: s.seed,
        }
    }
}

/// Parse and fully validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text)?;
    let scenario = raw.to_scenario();
    scenario.validate()?;
    Ok(scenario)
}

/// Serialize a scenario; `parse_scenario` of the result reproduces it.
pub fn serialize_scenario(s: &Scenario) -> String {
    serde_json::to_string_pretty(&RawScenario::from_scenario(s))
        .expect("scenario serialization cannot fail")
}
