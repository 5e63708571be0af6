//! Offline placement of a fixed camera network so that a voxel visual hull
//! of unmodelled objects stays a conservative stand-in for the true objects:
//! distances measured from critical points to the hull never exceed the true
//! distances by construction pressure of the objective, and the optimizer
//! searches camera positions and orientations to keep the gap small.
//!
//! Layering, bottom up:
//! * [`geom`]: vectors, boxes, triangle kernels (ray casts, minimum
//!   distances, overlap tests).
//! * [`scene`]: the scenario document: universe, surveillance region,
//!   obstacle collectives over time, appearance events with weights.
//! * [`visibility`]: the per-camera sensor map over points (free, occupied,
//!   undetectable) with occlusion by all obstacles.
//! * [`hull`]: voxelization of the sensor maps, model construction,
//!   connected clustering and plausibility filtering.
//! * [`objective`]: weighted squared distance deviation summed over events
//!   and time steps, with an evaluator that caches per-camera ray profiles.
//! * [`solver`]: archive-based stochastic search over camera tuples with
//!   shrinking Gaussian kernels, restarts and early evaluation abort.

pub mod geom;
pub mod scene;
pub mod visibility;
pub mod hull;
pub mod objective;
pub mod solver;

pub use geom::{Aabb, Facet, Vec3};
pub use scene::{
    parse_scenario, serialize_scenario, AppearanceEvent, MeshObject, ObstacleCollectives,
    PlacementDomain, Scenario, ScenarioError,
};
pub use visibility::{CameraSetting, RayHit, SensorValue};
pub use hull::{Cluster, LabelField, SamplingMode, VoxelGrid};
pub use objective::{DistanceReport, ErrValue, Evaluator};
pub use solver::{SolveOutcome, SolverConfig, StopCriteria, StopReason};
