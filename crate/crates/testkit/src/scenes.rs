//! Deterministic pseudo-random scene generators for property tests, plus a
//! couple of fixed scenarios with known structure.

use camnet_core::geom::{box_facets, Aabb, Facet, Vec3};
use camnet_core::scene::{
    AppearanceEvent, CameraModel, MeshObject, ObstacleCollectives, PlacementDomain, Plausibility,
    Scenario,
};
use camnet_core::visibility::CameraSetting;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn random_point_in<R: Rng>(rng: &mut R, b: &Aabb) -> Vec3 {
    Vec3::new(
        rng.random_range(b.min.x..=b.max.x),
        rng.random_range(b.min.y..=b.max.y),
        rng.random_range(b.min.z..=b.max.z),
    )
}

/// A camera setting uniform over the scenario's placement box and
/// orientation bounds.
pub fn random_setting<R: Rng>(rng: &mut R, s: &Scenario) -> CameraSetting {
    let b = s.placement_box();
    CameraSetting::new(
        random_point_in(rng, &b),
        rng.random_range(s.cameras.yaw_bounds.0..=s.cameras.yaw_bounds.1),
        rng.random_range(s.cameras.pitch_bounds.0..=s.cameras.pitch_bounds.1),
    )
}

/// A non-degenerate triangle with edges around `size`, fully inside `region`.
pub fn random_triangle<R: Rng>(rng: &mut R, region: &Aabb, size: f64) -> Facet {
    loop {
        let c = random_point_in(rng, region);
        let jitter = |rng: &mut R, c: Vec3| {
            Vec3::new(
                (c.x + rng.random_range(-size..=size)).clamp(region.min.x, region.max.x),
                (c.y + rng.random_range(-size..=size)).clamp(region.min.y, region.max.y),
                (c.z + rng.random_range(-size..=size)).clamp(region.min.z, region.max.z),
            )
        };
        let f = Facet::new(jitter(rng, c), jitter(rng, c), jitter(rng, c));
        if f.is_well_formed() && f.area() > 1e-4 {
            return f;
        }
    }
}

/// Small scene with a handful of loose facets: a few obstacle and target
/// triangles, one or two time steps and events, random camera model.
/// Used to exercise classification and the scene round trip.
pub fn random_small_scene<R: Rng>(rng: &mut R) -> Scenario {
    let extent = Vec3::new(
        rng.random_range(2.0..=4.0),
        rng.random_range(2.0..=4.0),
        rng.random_range(2.0..=4.0),
    );
    let universe = Aabb::new(Vec3::ZERO, extent);
    let inner = Aabb::new(extent * 0.08, extent * 0.92);
    let h_count = rng.random_range(1..=2);
    let l_count = rng.random_range(1..=2);

    let mut static_objects = Vec::new();
    for s in 0..rng.random_range(0..=1usize) {
        let facets: Vec<Facet> = (0..rng.random_range(1..=2))
            .map(|_| random_triangle(rng, &inner, 0.5))
            .collect();
        static_objects.push(MeshObject::new(format!("static_{s}"), facets));
    }

    let mut dynamic_objects = Vec::new();
    for _ in 0..h_count {
        let facets: Vec<Facet> = (0..rng.random_range(1..=2))
            .map(|_| random_triangle(rng, &inner, 0.5))
            .collect();
        dynamic_objects.push(vec![MeshObject::new("mover", facets)]);
    }

    let obstacles = ObstacleCollectives { static_objects, dynamic_objects };

    // Helper closure capturing nothing mutable: all obstacle facets at step h.
    let obstacle_facets = |h0: usize| -> Vec<Facet> {
        obstacles
            .static_objects
            .iter()
            .chain(obstacles.dynamic_objects[h0].iter())
            .flat_map(|o| o.facets.iter().copied())
            .collect()
    };

    let mut events = Vec::new();
    for l in 0..l_count {
        let mut weights = Vec::new();
        let mut targets = Vec::new();
        for h0 in 0..h_count {
            weights.push(rng.random_range(0.05..=1.0));
            let blockers = obstacle_facets(h0);
            let mut facets = Vec::new();
            for _ in 0..rng.random_range(1..=2usize) {
                // Rigid inpenetrability: retry until clear of all obstacles.
                let f = loop {
                    let f = random_triangle(rng, &inner, 0.4);
                    let clear = blockers
                        .iter()
                        .all(|b| camnet_core::geom::triangle_triangle_distance(&f, b) > 1e-6);
                    if clear {
                        break f;
                    }
                };
                facets.push(f);
            }
            targets.push(vec![MeshObject::new(format!("target_{l}"), facets)]);
        }
        events.push(AppearanceEvent { id: format!("event_{l}"), weights, targets });
    }

    let critical_override = if rng.random_range(0.0..1.0) < 0.3 {
        Some(
            (0..h_count)
                .map(|_| vec![random_triangle(rng, &inner, 0.4)])
                .collect(),
        )
    } else {
        None
    };

    let scenario = Scenario {
        universe,
        surveillance: universe,
        voxel_resolution: [
            rng.random_range(3..=6),
            rng.random_range(3..=6),
            rng.random_range(3..=6),
        ],
        time_steps: (0..h_count).map(|h| h as f64).collect(),
        cameras: CameraModel {
            count: rng.random_range(1..=2),
            half_angle: rng.random_range(0.5..=1.2),
            max_range: if rng.random_range(0.0..1.0) < 0.5 {
                Some(rng.random_range(2.0..=6.0))
            } else {
                None
            },
            domain: PlacementDomain::FullUniverse,
            yaw_bounds: (-std::f64::consts::PI, std::f64::consts::PI),
            pitch_bounds: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        },
        obstacles,
        events,
        critical_override,
        plausibility: Plausibility::default(),
        seed: rng.random(),
    };
    scenario.validate().expect("generated small scene must validate");
    scenario
}

/// Scene whose obstacles and targets are solid axis-aligned boxes at least
/// 1.5 voxel cells wide on every axis. With conservative sampling, every
/// voxel touched by a target is guaranteed to stay in the model: each such
/// voxel has at least one corner sample inside or on the closed box, and
/// that sample can never be free.
pub fn random_solid_scene<R: Rng>(rng: &mut R) -> Scenario {
    let universe = Aabb::new(Vec3::ZERO, Vec3::new(4.0, 3.0, 3.0));
    let resolution = [8usize, 6, 6]; // cell 0.5 m; min solid size 0.75 m
    let h_count = rng.random_range(1..=2);
    let l_count = 1usize;

    let floor_box = |rng: &mut R, size: Vec3| -> Aabb {
        let min = Vec3::new(
            rng.random_range(0.1..=(4.0 - size.x - 0.1)),
            rng.random_range(0.1..=(3.0 - size.y - 0.1)),
            0.0,
        );
        Aabb::new(min, min + size)
    };
    let clear_of = |b: &Aabb, others: &[Aabb]| others.iter().all(|o| b.distance_to_box(o) > 0.1);

    // A drawn size can be infeasible on a crowded floor (wall plus robot can
    // exclude every spot for a 1.2 m box), so pure rejection may never halt.
    // Fall back to the 0.75 m minimum, then to a grid scan. The scan cannot
    // miss: the wall splits the floor into two pockets at least 1.72 m apart
    // in x, a lone 1.0 m robot cannot sit within clearance of both, and the
    // clear pocket is at least 0.25 m wide against the 0.05 m step.
    let place = |rng: &mut R, size: Vec3, others: &[Aabb]| -> Aabb {
        for _ in 0..200 {
            let b = floor_box(rng, size);
            if clear_of(&b, others) {
                return b;
            }
        }
        let small = Vec3::new(0.75, 0.75, 0.75);
        for _ in 0..2000 {
            let b = floor_box(rng, small);
            if clear_of(&b, others) {
                return b;
            }
        }
        let mut x = 0.1;
        while x <= 4.0 - small.x - 0.1 {
            let mut y = 0.1;
            while y <= 3.0 - small.y - 0.1 {
                let min = Vec3::new(x, y, 0.0);
                let b = Aabb::new(min, min + small);
                if clear_of(&b, others) {
                    return b;
                }
                y += 0.05;
            }
            x += 0.05;
        }
        panic!("a 0.75 m box always fits in the pocket the robot leaves open");
    };

    // One static wall slab.
    let wall = {
        let size = Vec3::new(0.12, rng.random_range(1.0..=1.8), rng.random_range(1.5..=2.4));
        let min = Vec3::new(rng.random_range(1.2..=2.6), rng.random_range(0.1..=0.7), 0.0);
        Aabb::new(min, min + size)
    };
    let static_objects = vec![MeshObject::new("wall", box_facets(&wall))];

    // One robot box per step.
    let mut dynamic_objects = Vec::new();
    let mut robot_boxes = Vec::new();
    for _ in 0..h_count {
        let size = Vec3::new(
            rng.random_range(0.75..=1.0),
            rng.random_range(0.75..=1.0),
            rng.random_range(0.75..=1.0),
        );
        let b = place(rng, size, &[wall]);
        robot_boxes.push(b);
        dynamic_objects.push(vec![MeshObject::new("robot", box_facets(&b))]);
    }

    // One target box per event and step, clear of wall and robot.
    let mut events = Vec::new();
    for l in 0..l_count {
        let mut weights = Vec::new();
        let mut targets = Vec::new();
        for h0 in 0..h_count {
            weights.push(rng.random_range(0.2..=1.0));
            let size = Vec3::new(
                rng.random_range(0.75..=1.2),
                rng.random_range(0.75..=1.2),
                rng.random_range(0.75..=1.6),
            );
            let b = place(rng, size, &[wall, robot_boxes[h0]]);
            targets.push(vec![MeshObject::new(format!("visitor_{l}"), box_facets(&b))]);
        }
        events.push(AppearanceEvent { id: format!("event_{l}"), weights, targets });
    }

    let scenario = Scenario {
        universe,
        surveillance: universe,
        voxel_resolution: resolution,
        time_steps: (0..h_count).map(|h| h as f64).collect(),
        cameras: CameraModel {
            count: rng.random_range(2..=4),
            half_angle: rng.random_range(0.9..=1.3),
            max_range: None,
            domain: if rng.random_range(0.0..1.0) < 0.5 {
                PlacementDomain::Ceiling
            } else {
                PlacementDomain::FullUniverse
            },
            yaw_bounds: (-std::f64::consts::PI, std::f64::consts::PI),
            pitch_bounds: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        },
        obstacles: ObstacleCollectives { static_objects, dynamic_objects },
        events,
        critical_override: None,
        plausibility: Plausibility::default(),
        seed: rng.random(),
    };
    scenario.validate().expect("generated solid scene must validate");
    scenario
}

/// Fixed scenario whose placement domain is a 1D segment with pinned
/// orientation: one camera slides along a rail under the ceiling, a wall
/// shadows the robot region from the left, the visitor column stands right
/// of the wall. The only search dimension is the rail coordinate, so the
/// objective landscape is cheap to map exhaustively.
pub fn line_domain_scenario() -> Scenario {
    let universe = Aabb::new(Vec3::ZERO, Vec3::new(4.0, 3.0, 3.0));
    let wall = Aabb::new(Vec3::new(1.9, 0.0, 0.0), Vec3::new(2.0, 1.9, 2.2));
    let robot = Aabb::new(Vec3::new(3.0, 0.5, 0.0), Vec3::new(3.4, 0.9, 0.4));
    let visitor = Aabb::new(Vec3::new(2.8, 2.0, 0.0), Vec3::new(3.2, 2.4, 1.7));

    let scenario = Scenario {
        universe,
        surveillance: universe,
        voxel_resolution: [8, 6, 6],
        time_steps: vec![0.0],
        cameras: CameraModel {
            count: 1,
            half_angle: 1.1,
            max_range: None,
            domain: PlacementDomain::CustomBox {
                min: Vec3::new(0.25, 1.5, 2.6),
                max: Vec3::new(3.75, 1.5, 2.6),
            },
            yaw_bounds: (-0.4, -0.4),
            pitch_bounds: (-0.9, -0.9),
        },
        obstacles: ObstacleCollectives {
            static_objects: vec![MeshObject::new("wall", box_facets(&wall))],
            dynamic_objects: vec![vec![MeshObject::new("robot", box_facets(&robot))]],
        },
        events: vec![AppearanceEvent {
            id: "visitor".into(),
            weights: vec![1.0],
            targets: vec![vec![MeshObject::new("visitor", box_facets(&visitor))]],
        }],
        critical_override: None,
        plausibility: Plausibility { min_volume: 0.0, min_height: 1.0 },
        seed: 0,
    };
    scenario.validate().expect("line scenario must validate");
    scenario
}
