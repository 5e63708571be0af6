//! Voxel model properties: the free-union algebra, monotone shrinking under
//! added cameras, conservative sampling containment, and the clustering
//! contract (partition, connectivity, maximality, deterministic order).

use camnet_core::hull::{
    apply_plausibility, build_model, classify_grid, cluster_model, LabelField, SamplingMode,
    VoxelGrid, VoxelMask,
};
use camnet_core::scene::Plausibility;
use camnet_core::visibility::SensorValue;
use camnet_testkit::scenes::{random_setting, random_small_scene, rng};
use proptest::prelude::*;
use rand::Rng;
use std::collections::HashSet;

fn fields_for(
    s: &camnet_core::scene::Scenario,
    grid: &VoxelGrid,
    settings: &[camnet_core::visibility::CameraSetting],
    l: usize,
    h: usize,
    mode: SamplingMode,
) -> Vec<LabelField> {
    settings.iter().map(|e| classify_grid(grid, e, s, l, h, mode).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// A voxel is in the model exactly when no camera labels it free, and
    /// the camera-free model is the full region.
    #[test]
    fn model_is_complement_of_free_union(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let s = random_small_scene(&mut r);
        let grid = VoxelGrid::for_scenario(&s).unwrap();
        let settings: Vec<_> = (0..s.cameras.count).map(|_| random_setting(&mut r, &s)).collect();
        let h = 1 + r.random_range(0..s.time_step_count());
        let l = 1 + r.random_range(0..s.event_count());

        let empty = build_model(&grid, &[]).unwrap();
        prop_assert_eq!(empty.count(), grid.len());

        let fields = fields_for(&s, &grid, &settings, l, h, SamplingMode::Center);
        let model = build_model(&grid, &fields).unwrap();
        for idx in 0..grid.len() {
            let any_free = fields.iter().any(|f| f.get(idx) == SensorValue::Free);
            prop_assert_eq!(model.get(idx), !any_free);
        }
    }

    /// Appending a camera never grows the model.
    #[test]
    fn added_camera_shrinks_model(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let s = random_small_scene(&mut r);
        let grid = VoxelGrid::for_scenario(&s).unwrap();
        let h = 1 + r.random_range(0..s.time_step_count());
        let l = 1 + r.random_range(0..s.event_count());

        let mut settings = vec![random_setting(&mut r, &s)];
        let mut fields = fields_for(&s, &grid, &settings, l, h, SamplingMode::Center);
        let mut prev = build_model(&grid, &fields).unwrap();
        for _ in 0..2 {
            settings.push(random_setting(&mut r, &s));
            fields = fields_for(&s, &grid, &settings, l, h, SamplingMode::Center);
            let next = build_model(&grid, &fields).unwrap();
            for idx in 0..grid.len() {
                prop_assert!(!next.get(idx) || prev.get(idx), "model grew at voxel {}", idx);
            }
            prev = next;
        }
    }

    /// Conservative sampling can only keep more: its model contains the
    /// center-sampled model voxel for voxel.
    #[test]
    fn conservative_model_contains_center_model(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let s = random_small_scene(&mut r);
        let grid = VoxelGrid::for_scenario(&s).unwrap();
        let settings: Vec<_> = (0..s.cameras.count).map(|_| random_setting(&mut r, &s)).collect();
        let h = 1 + r.random_range(0..s.time_step_count());
        let l = 1 + r.random_range(0..s.event_count());

        let center = build_model(&grid, &fields_for(&s, &grid, &settings, l, h, SamplingMode::Center)).unwrap();
        let conservative =
            build_model(&grid, &fields_for(&s, &grid, &settings, l, h, SamplingMode::Conservative9)).unwrap();
        for idx in 0..grid.len() {
            prop_assert!(!center.get(idx) || conservative.get(idx));
        }
    }

    /// Clusters partition the mask, are face-connected, mutually
    /// non-adjacent, sorted by smallest member, and carry consistent
    /// measures.
    #[test]
    fn clustering_contract(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let s = random_small_scene(&mut r);
        let grid = VoxelGrid::for_scenario(&s).unwrap();
        // Random mask: denser than the hull usually is, to stress clustering.
        let mut mask = VoxelMask::filled(grid.dims(), false);
        for idx in 0..grid.len() {
            if r.random_range(0.0..1.0) < 0.35 {
                mask.set(idx, true);
            }
        }
        let clusters = cluster_model(&grid, &mask).unwrap();

        // Partition.
        let mut seen = HashSet::new();
        for c in &clusters {
            for &v in &c.voxels {
                prop_assert!(mask.get(v));
                prop_assert!(seen.insert(v), "voxel {} in two clusters", v);
            }
        }
        prop_assert_eq!(seen.len(), mask.count());

        let [nx, ny, nz] = grid.dims();
        let neighbors = |idx: usize| -> Vec<usize> {
            let (i, j, k) = grid.coords(idx);
            let mut out = Vec::new();
            if i > 0 { out.push(grid.flat_index(i - 1, j, k)); }
            if i + 1 < nx { out.push(grid.flat_index(i + 1, j, k)); }
            if j > 0 { out.push(grid.flat_index(i, j - 1, k)); }
            if j + 1 < ny { out.push(grid.flat_index(i, j + 1, k)); }
            if k > 0 { out.push(grid.flat_index(i, j, k - 1)); }
            if k + 1 < nz { out.push(grid.flat_index(i, j, k + 1)); }
            out
        };

        for (ci, c) in clusters.iter().enumerate() {
            // Connectivity: flood inside the member set reaches everyone.
            let members: HashSet<usize> = c.voxels.iter().copied().collect();
            let mut reached = HashSet::from([c.voxels[0]]);
            let mut stack = vec![c.voxels[0]];
            while let Some(v) = stack.pop() {
                for n in neighbors(v) {
                    if members.contains(&n) && reached.insert(n) {
                        stack.push(n);
                    }
                }
            }
            prop_assert_eq!(reached.len(), members.len(), "cluster {} is disconnected", ci);

            // Maximality: no member touches a masked voxel outside the cluster.
            for &v in &c.voxels {
                for n in neighbors(v) {
                    prop_assert!(!mask.get(n) || members.contains(&n));
                }
            }

            // Measures.
            let expected_volume = c.voxels.len() as f64 * grid.cell_volume();
            prop_assert!((c.volume - expected_volume).abs() < 1e-12);
            let ks: Vec<usize> = c.voxels.iter().map(|&v| grid.coords(v).2).collect();
            let span = ks.iter().max().unwrap() - ks.iter().min().unwrap() + 1;
            prop_assert!((c.height - span as f64 * grid.cell_size().z).abs() < 1e-12);

            // Order by smallest member (voxels are ascending per cluster).
            prop_assert!(c.voxels.windows(2).all(|w| w[0] < w[1]));
            if ci > 0 {
                prop_assert!(clusters[ci - 1].voxels[0] < c.voxels[0]);
            }
        }
    }

    /// The plausibility filter keeps exactly the qualifying clusters, and
    /// tightening thresholds shrinks the kept set.
    #[test]
    fn plausibility_filter_is_monotone(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let s = random_small_scene(&mut r);
        let grid = VoxelGrid::for_scenario(&s).unwrap();
        let mut mask = VoxelMask::filled(grid.dims(), false);
        for idx in 0..grid.len() {
            if r.random_range(0.0..1.0) < 0.3 {
                mask.set(idx, true);
            }
        }
        let clusters = cluster_model(&grid, &mask).unwrap();

        let loose = Plausibility { min_volume: 0.0, min_height: 0.0 };
        let kept_loose = apply_plausibility(&grid, &clusters, loose);
        prop_assert_eq!(kept_loose.count(), mask.count());

        let tight = Plausibility {
            min_volume: grid.cell_volume() * 2.5,
            min_height: grid.cell_size().z * 1.5,
        };
        let kept_tight = apply_plausibility(&grid, &clusters, tight);
        for idx in 0..grid.len() {
            prop_assert!(!kept_tight.get(idx) || kept_loose.get(idx));
        }
        // Exactly the qualifying clusters survive.
        let mut expected = 0usize;
        for c in &clusters {
            if c.volume >= tight.min_volume && c.height >= tight.min_height {
                expected += c.voxels.len();
                for &v in &c.voxels {
                    prop_assert!(kept_tight.get(v));
                }
            }
        }
        prop_assert_eq!(kept_tight.count(), expected);
    }

    /// Equal inputs give identical label fields and clusters.
    #[test]
    fn classification_and_clustering_are_deterministic(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let s = random_small_scene(&mut r);
        let grid = VoxelGrid::for_scenario(&s).unwrap();
        let setting = random_setting(&mut r, &s);

        let a = classify_grid(&grid, &setting, &s, 1, 1, SamplingMode::Conservative9).unwrap();
        let b = classify_grid(&grid, &setting, &s, 1, 1, SamplingMode::Conservative9).unwrap();
        prop_assert_eq!(a.labels(), b.labels());

        let model = build_model(&grid, &[a]).unwrap();
        let ca = cluster_model(&grid, &model).unwrap();
        let cb = cluster_model(&grid, &model).unwrap();
        prop_assert_eq!(ca, cb);
    }
}

#[test]
fn label_field_csv_lists_every_voxel_in_order() {
    let s = random_small_scene(&mut rng(11));
    let grid = VoxelGrid::for_scenario(&s).unwrap();
    let setting = random_setting(&mut rng(12), &s);
    let field = classify_grid(&grid, &setting, &s, 1, 1, SamplingMode::Center).unwrap();
    let mut buf = Vec::new();
    field.write_csv(&grid, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,j,k,label");
    assert_eq!(lines.len(), grid.len() + 1);
    assert!(lines[1].starts_with("0,0,0,"));
}
