//! Built-in scenarios. The `base` preset is the reference desk-scale room:
//! a 4 x 3 x 3 m space at 16 x 12 x 12 voxels, two L-shaped screen walls,
//! three low robot platforms that move between two time steps, and three
//! appearance events of two standing visitors each.

use camnet_core::geom::{quad_facets, Aabb, Facet, Vec3};
use camnet_core::scene::{
    AppearanceEvent, CameraModel, MeshObject, ObstacleCollectives, PlacementDomain, Plausibility,
    Scenario,
};

/// Names accepted by `camnet preset`.
pub const PRESET_NAMES: &[&str] = &["base"];

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "base" => Some(base_room()),
        _ => None,
    }
}

/// Vertical rectangular panel along x at fixed y: corners run (x0..x1, z0..z1).
fn panel_y(y: f64, x0: f64, x1: f64, z0: f64, z1: f64) -> Vec<Facet> {
    quad_facets(
        Vec3::new(x0, y, z0),
        Vec3::new(x1, y, z0),
        Vec3::new(x1, y, z1),
        Vec3::new(x0, y, z1),
    )
}

/// Vertical rectangular panel along y at fixed x.
fn panel_x(x: f64, y0: f64, y1: f64, z0: f64, z1: f64) -> Vec<Facet> {
    quad_facets(
        Vec3::new(x, y0, z0),
        Vec3::new(x, y1, z0),
        Vec3::new(x, y1, z1),
        Vec3::new(x, y0, z1),
    )
}

/// Low mobile platform: a tetrahedron sitting just above the floor.
fn robot(cx: f64, cy: f64) -> Vec<Facet> {
    let apex = Vec3::new(cx, cy, 0.45);
    camnet_core::geom::tetrahedron_facets(
        Vec3::new(cx - 0.2, cy - 0.2, 0.05),
        Vec3::new(cx + 0.2, cy - 0.2, 0.05),
        Vec3::new(cx, cy + 0.2, 0.05),
        apex,
    )
}

/// Standing person approximated by two crossed vertical panels, 1.7 m tall.
fn person(cx: f64, cy: f64) -> Vec<Facet> {
    let mut f = panel_y(cy, cx - 0.25, cx + 0.25, 0.0, 1.7);
    f.extend(panel_x(cx, cy - 0.25, cy + 0.25, 0.0, 1.7));
    f
}

fn event(
    id: &str,
    weights: [f64; 2],
    step1: [(f64, f64); 2],
    step2: [(f64, f64); 2],
) -> AppearanceEvent {
    let objects = |positions: [(f64, f64); 2]| -> Vec<MeshObject> {
        positions
            .iter()
            .enumerate()
            .map(|(i, (x, y))| MeshObject::new(format!("{id}_p{}", i + 1), person(*x, *y)))
            .collect()
    };
    AppearanceEvent {
        id: id.into(),
        weights: weights.to_vec(),
        targets: vec![objects(step1), objects(step2)],
    }
}

/// The reference room scenario.
pub fn base_room() -> Scenario {
    let universe = Aabb::new(Vec3::ZERO, Vec3::new(4.0, 3.0, 3.0));

    // Two L-shaped screens, 4 facets each: 8 static facets, 2 objects.
    let screen_a = {
        let mut f = panel_x(1.75, 0.0, 1.25, 0.0, 2.25);
        f.extend(panel_y(1.25, 1.25, 1.75, 0.0, 2.25));
        MeshObject::new("screen_a", f)
    };
    let screen_b = {
        let mut f = panel_x(2.5, 1.75, 3.0, 0.0, 2.25);
        f.extend(panel_y(1.75, 2.5, 3.0, 0.0, 2.25));
        MeshObject::new("screen_b", f)
    };

    // Three robots per step, 4 facets each: 24 dynamic facets, 6 objects
    // over the two steps.
    let robots_step1 = vec![
        MeshObject::new("robot_1", robot(0.5, 0.5)),
        MeshObject::new("robot_2", robot(2.2, 2.3)),
        MeshObject::new("robot_3", robot(3.2, 0.8)),
    ];
    let robots_step2 = vec![
        MeshObject::new("robot_1", robot(0.9, 0.8)),
        MeshObject::new("robot_2", robot(1.9, 2.1)),
        MeshObject::new("robot_3", robot(3.0, 1.2)),
    ];

    // Three appearance events, two visitors each: 24 target facets, 6
    // objects over the three events. Weights sum to 1.
    let events = vec![
        event("arrival_north", [0.30, 0.10], [(0.7, 2.3), (1.35, 2.0)], [(0.8, 2.4), (1.3, 2.1)]),
        event("arrival_east", [0.15, 0.20], [(3.5, 0.4), (2.7, 0.5)], [(3.45, 0.45), (2.65, 0.55)]),
        event("arrival_west", [0.10, 0.15], [(0.5, 1.6), (1.3, 0.5)], [(0.55, 1.7), (1.25, 0.45)]),
    ];

    Scenario {
        universe,
        surveillance: universe,
        voxel_resolution: [16, 12, 12],
        time_steps: vec![0.0, 1.0],
        cameras: CameraModel {
            count: 6,
            half_angle: 1.05,
            max_range: None,
            domain: PlacementDomain::Ceiling,
            yaw_bounds: (-std::f64::consts::PI, std::f64::consts::PI),
            pitch_bounds: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        },
        obstacles: ObstacleCollectives {
            static_objects: vec![screen_a, screen_b],
            dynamic_objects: vec![robots_step1, robots_step2],
        },
        events,
        critical_override: None,
        // Filter reconstruction clutter below person height: the robots and
        // their ground shadows form short clusters that would otherwise pin
        // the model distance at zero everywhere.
        plausibility: Plausibility { min_volume: 0.0, min_height: 1.0 },
        seed: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_room_validates_and_has_reference_counts() {
        let s = base_room();
        s.validate().unwrap();
        assert_eq!(s.voxel_resolution, [16, 12, 12]);
        assert_eq!(s.time_step_count(), 2);
        assert_eq!(s.event_count(), 3);
        assert_eq!(s.cameras.count, 6);
        // 8 static facets across 2 objects.
        let static_facets: usize =
            s.obstacles.static_objects.iter().map(|o| o.facets.len()).sum();
        assert_eq!(static_facets, 8);
        assert_eq!(s.obstacles.static_objects.len(), 2);
        // 24 dynamic facets across 6 objects over both steps.
        let dyn_facets: usize = s
            .obstacles
            .dynamic_objects
            .iter()
            .flat_map(|step| step.iter())
            .map(|o| o.facets.len())
            .sum();
        assert_eq!(dyn_facets, 24);
        // Obstacles at one step: 8 static + 12 dynamic.
        assert_eq!(s.obstacle_facets_at(1).unwrap().len(), 20);
        // 24 target facets across 6 objects over the three events per step.
        for h in 1..=2 {
            let total: usize =
                (1..=3).map(|l| s.target_facets(l, h).unwrap().len()).sum();
            assert_eq!(total, 24);
        }
        // Weights sum to 1.
        let wsum: f64 = s.events.iter().flat_map(|e| e.weights.iter()).sum();
        assert!((wsum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preset_lookup() {
        assert!(by_name("base").is_some());
        assert!(by_name("nope").is_none());
    }
}
