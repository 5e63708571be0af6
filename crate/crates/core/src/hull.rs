//! Voxel layer: the surveillance region is cut into a regular grid; each
//! camera's sensor map is sampled into a per-voxel label field; the model of
//! unmodelled objects is every voxel that no camera reports free. Connected
//! clusters of model voxels are measured and implausibly small ones are
//! dropped before distances are taken.

use crate::geom::{Aabb, Vec3};
use crate::scene::{CameraModel, Plausibility, Scenario, ScenarioError};
use crate::visibility::{classify_against, CameraSetting, SensorValue};
use std::collections::VecDeque;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HullError {
    #[error("surveillance box must have positive volume on every axis")]
    DegenerateRegion,
    #[error("voxel resolution must be at least 1 per axis, got {0}x{1}x{2}")]
    BadResolution(usize, usize, usize),
    #[error("voxel index ({0}, {1}, {2}) out of range for grid {3}x{4}x{5}")]
    IndexOutOfRange(usize, usize, usize, usize, usize, usize),
    #[error("label fields or masks disagree on grid dimensions")]
    DimsMismatch,
    #[error(transparent)]
    Scene(#[from] ScenarioError),
    #[error("writing labels failed: {0}")]
    Io(#[from] std::io::Error),
}

/// How a voxel aggregates point classifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// The voxel takes the label of its center point.
    Center,
    /// A voxel is free only if its center and all 8 corners are free;
    /// otherwise occupied if any sample is occupied, else undetectable.
    /// Never reports more free space than `Center`, so the model it builds
    /// is a superset: strictly the safer choice.
    Conservative9,
}

/// Regular axis-aligned voxelization of the surveillance region.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    origin: Vec3,
    cell: Vec3,
    dims: [usize; 3],
}

impl VoxelGrid {
    pub fn new(surveillance: &Aabb, resolution: [usize; 3]) -> Result<Self, HullError> {
        if !surveillance.has_volume() {
            return Err(HullError::DegenerateRegion);
        }
        let [nx, ny, nz] = resolution;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(HullError::BadResolution(nx, ny, nz));
        }
        let e = surveillance.extent();
        Ok(VoxelGrid {
            origin: surveillance.min,
            cell: Vec3::new(e.x / nx as f64, e.y / ny as f64, e.z / nz as f64),
            dims: resolution,
        })
    }

    pub fn for_scenario(s: &Scenario) -> Result<Self, HullError> {
        VoxelGrid::new(&s.surveillance, s.voxel_resolution)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_size(&self) -> Vec3 {
        self.cell
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell.x * self.cell.y * self.cell.z
    }

    /// Length of a voxel's space diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        self.cell.norm()
    }

    /// Diameter of the gridded region (its space diagonal).
    pub fn region_diagonal(&self) -> f64 {
        Vec3::new(
            self.cell.x * self.dims[0] as f64,
            self.cell.y * self.dims[1] as f64,
            self.cell.z * self.dims[2] as f64,
        )
        .norm()
    }

    /// Total number of voxels.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check_index(&self, i: usize, j: usize, k: usize) -> Result<(), HullError> {
        if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
            return Err(HullError::IndexOutOfRange(
                i, j, k, self.dims[0], self.dims[1], self.dims[2],
            ));
        }
        Ok(())
    }

    /// Flatten (i, j, k); x fastest, z slowest.
    pub fn flat_index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        (i, j, k)
    }

    /// Grid corner point (i, j, k) with i in 0..=nx etc. Voxel (i, j, k)
    /// spans corner points (i..i+1, j..j+1, k..k+1); all sampling paths use
    /// this formula so repeated evaluation is bit-identical.
    pub fn corner_point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin.x + i as f64 * self.cell.x,
            self.origin.y + j as f64 * self.cell.y,
            self.origin.z + k as f64 * self.cell.z,
        )
    }

    /// Center of voxel (i, j, k), checked.
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Result<Vec3, HullError> {
        self.check_index(i, j, k)?;
        Ok(self.center_unchecked(i, j, k))
    }

    pub(crate) fn center_unchecked(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin.x + (i as f64 + 0.5) * self.cell.x,
            self.origin.y + (j as f64 + 0.5) * self.cell.y,
            self.origin.z + (k as f64 + 0.5) * self.cell.z,
        )
    }

    /// Full extent of voxel `idx` as a box.
    pub fn voxel_box(&self, idx: usize) -> Aabb {
        let (i, j, k) = self.coords(idx);
        Aabb::new(self.corner_point(i, j, k), self.corner_point(i + 1, j + 1, k + 1))
    }
}

/// Per-voxel sensor labels of a single camera.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelField {
    dims: [usize; 3],
    labels: Vec<SensorValue>,
}

impl LabelField {
    /// The label vector must be in flat voxel order and match `dims`.
    pub(crate) fn from_parts(dims: [usize; 3], labels: Vec<SensorValue>) -> Self {
        debug_assert_eq!(labels.len(), dims[0] * dims[1] * dims[2]);
        LabelField { dims, labels }
    }

    /// Build a field from explicit labels in flat voxel order, e.g. for
    /// synthetic masks in tests or external tooling.
    pub fn from_labels(dims: [usize; 3], labels: Vec<SensorValue>) -> Result<Self, HullError> {
        if labels.len() != dims[0] * dims[1] * dims[2] {
            return Err(HullError::DimsMismatch);
        }
        Ok(LabelField { dims, labels })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn get(&self, idx: usize) -> SensorValue {
        self.labels[idx]
    }

    pub fn labels(&self) -> &[SensorValue] {
        &self.labels
    }

    pub fn count(&self, v: SensorValue) -> usize {
        self.labels.iter().filter(|l| **l == v).count()
    }

    /// Dump as CSV (`i,j,k,label`) for offline inspection.
    pub fn write_csv<W: Write>(&self, grid: &VoxelGrid, mut w: W) -> Result<(), HullError> {
        if grid.dims() != self.dims {
            return Err(HullError::DimsMismatch);
        }
        writeln!(w, "i,j,k,label")?;
        for (idx, label) in self.labels.iter().enumerate() {
            let (i, j, k) = grid.coords(idx);
            let name = match label {
                SensorValue::Free => "free",
                SensorValue::Occupied => "occupied",
                SensorValue::Undetectable => "undetectable",
            };
            writeln!(w, "{},{},{},{}", i, j, k, name)?;
        }
        Ok(())
    }
}

/// Voxel subset of the surveillance region, e.g. the model of unmodelled
/// objects.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMask {
    dims: [usize; 3],
    data: Vec<bool>,
}

impl VoxelMask {
    pub fn filled(dims: [usize; 3], value: bool) -> Self {
        VoxelMask { dims, data: vec![value; dims[0] * dims[1] * dims[2]] }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn get(&self, idx: usize) -> bool {
        self.data[idx]
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        self.data[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn is_empty_set(&self) -> bool {
        !self.data.iter().any(|b| *b)
    }

    /// Ascending flat indices of the member voxels.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data.iter().enumerate().filter_map(|(i, b)| b.then_some(i))
    }
}

/// Classify every voxel of the grid for one camera against explicit facet
/// lists. The caller-facing scenario variant is [`classify_grid`].
pub fn classify_grid_against(
    grid: &VoxelGrid,
    setting: &CameraSetting,
    cameras: &CameraModel,
    obstacles: &[crate::geom::Facet],
    targets: &[crate::geom::Facet],
    mode: SamplingMode,
) -> LabelField {
    let [nx, ny, nz] = grid.dims();
    let mut labels = Vec::with_capacity(grid.len());
    let classify = |p: Vec3| classify_against(setting, cameras, obstacles, targets, p);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let center = classify(grid.center_unchecked(i, j, k));
                let label = match mode {
                    SamplingMode::Center => center,
                    SamplingMode::Conservative9 => {
                        let mut samples = [center; 9];
                        let mut s = 1;
                        for dk in 0..2 {
                            for dj in 0..2 {
                                for di in 0..2 {
                                    samples[s] =
                                        classify(grid.corner_point(i + di, j + dj, k + dk));
                                    s += 1;
                                }
                            }
                        }
                        reduce_conservative(&samples)
                    }
                };
                labels.push(label);
            }
        }
    }
    LabelField { dims: grid.dims(), labels }
}

/// Free only when every sample is free; occupied wins over undetectable.
pub(crate) fn reduce_conservative(samples: &[SensorValue]) -> SensorValue {
    if samples.iter().all(|s| *s == SensorValue::Free) {
        SensorValue::Free
    } else if samples.iter().any(|s| *s == SensorValue::Occupied) {
        SensorValue::Occupied
    } else {
        SensorValue::Undetectable
    }
}

/// Per-voxel labels of one camera at event `l`, time step `h` (1-based).
pub fn classify_grid(
    grid: &VoxelGrid,
    setting: &CameraSetting,
    scenario: &Scenario,
    l: usize,
    h: usize,
    mode: SamplingMode,
) -> Result<LabelField, HullError> {
    let obstacles = scenario.obstacle_facets_at(h)?;
    let targets = scenario.target_facets(l, h)?;
    Ok(classify_grid_against(grid, setting, &scenario.cameras, &obstacles, &targets, mode))
}

/// Intersection model: a voxel belongs to the model unless at least one
/// camera labels it free. With no cameras the model is the whole region.
pub fn build_model(grid: &VoxelGrid, fields: &[LabelField]) -> Result<VoxelMask, HullError> {
    for f in fields {
        if f.dims() != grid.dims() {
            return Err(HullError::DimsMismatch);
        }
    }
    let mut mask = VoxelMask::filled(grid.dims(), true);
    for idx in 0..grid.len() {
        if fields.iter().any(|f| f.get(idx) == SensorValue::Free) {
            mask.set(idx, false);
        }
    }
    Ok(mask)
}

/// One face-connected component of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Ascending flat voxel indices.
    pub voxels: Vec<usize>,
    /// Summed voxel volume in m^3.
    pub volume: f64,
    /// Vertical extent in m (number of z layers spanned times cell height).
    pub height: f64,
}

/// 6-connected components of the mask, in ascending order of their smallest
/// voxel index. Deterministic for equal inputs.
pub fn cluster_model(grid: &VoxelGrid, mask: &VoxelMask) -> Result<Vec<Cluster>, HullError> {
    if mask.dims() != grid.dims() {
        return Err(HullError::DimsMismatch);
    }
    let [nx, ny, nz] = grid.dims();
    let mut seen = vec![false; grid.len()];
    let mut clusters = Vec::new();
    let mut queue = VecDeque::new();

    for seed in 0..grid.len() {
        if !mask.get(seed) || seen[seed] {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        let mut voxels = Vec::new();
        let (mut k_min, mut k_max) = (usize::MAX, 0usize);
        while let Some(idx) = queue.pop_front() {
            voxels.push(idx);
            let (i, j, k) = grid.coords(idx);
            k_min = k_min.min(k);
            k_max = k_max.max(k);
            let mut visit = |ni: usize, nj: usize, nk: usize| {
                let nidx = grid.flat_index(ni, nj, nk);
                if mask.get(nidx) && !seen[nidx] {
                    seen[nidx] = true;
                    queue.push_back(nidx);
                }
            };
            if i > 0 {
                visit(i - 1, j, k);
            }
            if i + 1 < nx {
                visit(i + 1, j, k);
            }
            if j > 0 {
                visit(i, j - 1, k);
            }
            if j + 1 < ny {
                visit(i, j + 1, k);
            }
            if k > 0 {
                visit(i, j, k - 1);
            }
            if k + 1 < nz {
                visit(i, j, k + 1);
            }
        }
        voxels.sort_unstable();
        clusters.push(Cluster {
            volume: voxels.len() as f64 * grid.cell_volume(),
            height: (k_max - k_min + 1) as f64 * grid.cell_size().z,
            voxels,
        });
    }
    Ok(clusters)
}

/// Keep only clusters that meet both plausibility thresholds; returns the
/// union of the surviving clusters as a mask.
pub fn apply_plausibility(
    grid: &VoxelGrid,
    clusters: &[Cluster],
    thresholds: Plausibility,
) -> VoxelMask {
    let mut mask = VoxelMask::filled(grid.dims(), false);
    for c in clusters {
        if c.volume >= thresholds.min_volume && c.height >= thresholds.min_height {
            for &idx in &c.voxels {
                mask.set(idx, true);
            }
        }
    }
    mask
}
