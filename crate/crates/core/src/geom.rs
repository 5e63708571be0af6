//! Geometric primitives: 3-vectors, axis-aligned boxes, triangles, ray
//! casting and minimum-distance kernels.
//!
//! All distance kernels are exact up to floating point rounding; none of
//! them sample. Triangles are treated as double-sided surfaces throughout.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Vertices closer than this are considered coincident (degenerate input).
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Slack on barycentric coordinates so rays grazing an edge still register.
const BARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector; `None` for vectors shorter than the degeneracy epsilon.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n < DEGENERACY_EPS {
            None
        } else {
            Some(self / n)
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min_by_component(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_by_component(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Vec3 {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box, inclusive on all faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    /// min <= max on every axis. Degenerate (zero-width) axes are allowed.
    pub fn is_valid(&self) -> bool {
        self.min.is_finite()
            && self.max.is_finite()
            && self.min.x <= self.max.x
            && self.min.y <= self.max.y
            && self.min.z <= self.max.z
    }

    pub fn has_volume(&self) -> bool {
        self.is_valid() && self.min.x < self.max.x && self.min.y < self.max.y && self.min.z < self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    /// Length of the main diagonal; the diameter of the box as a point set.
    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains_point(o.min) && self.contains_point(o.max)
    }

    pub fn closest_point(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        (p - self.closest_point(p)).norm()
    }

    /// Min distance between two boxes; 0 when they touch or overlap.
    pub fn distance_to_box(&self, o: &Aabb) -> f64 {
        let dx = (self.min.x - o.max.x).max(o.min.x - self.max.x).max(0.0);
        let dy = (self.min.y - o.max.y).max(o.min.y - self.max.y).max(0.0);
        let dz = (self.min.z - o.max.z).max(o.min.z - self.max.z).max(0.0);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    pub fn edges(&self) -> [(Vec3, Vec3); 12] {
        let c = self.corners();
        [
            (c[0], c[1]),
            (c[2], c[3]),
            (c[4], c[5]),
            (c[6], c[7]),
            (c[0], c[2]),
            (c[1], c[3]),
            (c[4], c[6]),
            (c[5], c[7]),
            (c[0], c[4]),
            (c[1], c[5]),
            (c[2], c[6]),
            (c[3], c[7]),
        ]
    }
}

/// A single triangle facet. The atomic surface element of every mesh object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub v: [Vec3; 3],
}

impl Facet {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Facet { v: [a, b, c] }
    }

    pub fn area(&self) -> f64 {
        (self.v[1] - self.v[0]).cross(self.v[2] - self.v[0]).norm() * 0.5
    }

    /// Non-unit normal (facets are double-sided; orientation carries no meaning).
    pub fn normal(&self) -> Vec3 {
        (self.v[1] - self.v[0]).cross(self.v[2] - self.v[0])
    }

    pub fn centroid(&self) -> Vec3 {
        (self.v[0] + self.v[1] + self.v[2]) / 3.0
    }

    pub fn aabb(&self) -> Aabb {
        let min = self.v[0].min_by_component(self.v[1]).min_by_component(self.v[2]);
        let max = self.v[0].max_by_component(self.v[1]).max_by_component(self.v[2]);
        Aabb::new(min, max)
    }

    pub fn edges(&self) -> [(Vec3, Vec3); 3] {
        [(self.v[0], self.v[1]), (self.v[1], self.v[2]), (self.v[2], self.v[0])]
    }

    /// Finite, pairwise distinct vertices, non-degenerate area.
    pub fn is_well_formed(&self) -> bool {
        self.v.iter().all(|p| p.is_finite())
            && self.v[0].distance(self.v[1]) > DEGENERACY_EPS
            && self.v[1].distance(self.v[2]) > DEGENERACY_EPS
            && self.v[2].distance(self.v[0]) > DEGENERACY_EPS
            && self.area() > DEGENERACY_EPS
    }
}

/// Möller–Trumbore ray/triangle intersection, double-sided, `t >= 0`.
///
/// `dir` need not be unit length; the returned `t` is in units of `dir`.
/// Rays lying in the plane of the triangle report no hit.
pub fn ray_triangle(origin: Vec3, dir: Vec3, tri: &Facet) -> Option<f64> {
    let e1 = tri.v[1] - tri.v[0];
    let e2 = tri.v[2] - tri.v[0];
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - tri.v[0];
    let u = tvec.dot(pvec) * inv;
    if u < -BARY_EPS || u > 1.0 + BARY_EPS {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return None;
    }
    let t = e2.dot(qvec) * inv;
    if t < -BARY_EPS {
        return None;
    }
    Some(t.max(0.0))
}

/// Closest point on a triangle to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: Vec3, tri: &Facet) -> Vec3 {
    let (a, b, c) = (tri.v[0], tri.v[1], tri.v[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return a + ab * t;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return a + ac * t;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * t;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_triangle_distance(p: Vec3, tri: &Facet) -> f64 {
    (p - closest_point_on_triangle(p, tri)).norm()
}

/// Closest points between segments `p1..q1` and `p2..q2`; returns squared distance.
pub fn segment_segment_distance_squared(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);

    let (s, t);
    if a <= DEGENERACY_EPS && e <= DEGENERACY_EPS {
        return r.norm_squared();
    }
    if a <= DEGENERACY_EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= DEGENERACY_EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s_ = if denom.abs() > DEGENERACY_EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t_ = (b * s_ + f) / e;
            if t_ < 0.0 {
                t_ = 0.0;
                s_ = (-c / a).clamp(0.0, 1.0);
            } else if t_ > 1.0 {
                t_ = 1.0;
                s_ = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s_;
            t = t_;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm_squared()
}

pub fn segment_segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    segment_segment_distance_squared(p1, q1, p2, q2).sqrt()
}

/// Does the segment `a..b` cross the triangle surface (interior or boundary)?
/// Coplanar segments report no crossing; coplanar contact is caught by the
/// distance terms of the callers.
pub fn segment_triangle_intersects(a: Vec3, b: Vec3, tri: &Facet) -> bool {
    let dir = b - a;
    match ray_triangle(a, dir, tri) {
        Some(t) => t <= 1.0 + BARY_EPS,
        None => false,
    }
}

/// Exact minimum distance between two triangles; 0 when they touch or cross.
///
/// Crossings are detected with segment/triangle tests; the disjoint case is
/// the minimum over the nine edge/edge and six vertex/triangle distances.
pub fn triangle_triangle_distance(a: &Facet, b: &Facet) -> f64 {
    for (s, e) in a.edges() {
        if segment_triangle_intersects(s, e, b) {
            return 0.0;
        }
    }
    for (s, e) in b.edges() {
        if segment_triangle_intersects(s, e, a) {
            return 0.0;
        }
    }

    let mut best = f64::INFINITY;
    for (s1, e1) in a.edges() {
        for (s2, e2) in b.edges() {
            best = best.min(segment_segment_distance_squared(s1, e1, s2, e2));
        }
    }
    for p in a.v {
        let d = point_triangle_distance(p, b);
        best = best.min(d * d);
    }
    for p in b.v {
        let d = point_triangle_distance(p, a);
        best = best.min(d * d);
    }
    best.sqrt()
}

pub fn triangles_intersect(a: &Facet, b: &Facet) -> bool {
    triangle_triangle_distance(a, b) <= DEGENERACY_EPS
}

/// Separating-axis triangle/box overlap (13 axes). Touching counts as overlap.
pub fn triangle_aabb_overlap(tri: &Facet, b: &Aabb) -> bool {
    let c = b.center();
    let h = b.extent() * 0.5;
    let v0 = tri.v[0] - c;
    let v1 = tri.v[1] - c;
    let v2 = tri.v[2] - c;
    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let e2 = v0 - v2;

    // 9 cross-product axes between triangle edges and box axes.
    let axes = [
        Vec3::new(0.0, -e0.z, e0.y),
        Vec3::new(0.0, -e1.z, e1.y),
        Vec3::new(0.0, -e2.z, e2.y),
        Vec3::new(e0.z, 0.0, -e0.x),
        Vec3::new(e1.z, 0.0, -e1.x),
        Vec3::new(e2.z, 0.0, -e2.x),
        Vec3::new(-e0.y, e0.x, 0.0),
        Vec3::new(-e1.y, e1.x, 0.0),
        Vec3::new(-e2.y, e2.x, 0.0),
    ];
    for ax in axes {
        let p0 = v0.dot(ax);
        let p1 = v1.dot(ax);
        let p2 = v2.dot(ax);
        let r = h.x * ax.x.abs() + h.y * ax.y.abs() + h.z * ax.z.abs();
        let lo = p0.min(p1).min(p2);
        let hi = p0.max(p1).max(p2);
        if lo > r || hi < -r {
            return false;
        }
    }

    // Box face normals.
    let (min, max) = (
        v0.min_by_component(v1).min_by_component(v2),
        v0.max_by_component(v1).max_by_component(v2),
    );
    if min.x > h.x || max.x < -h.x || min.y > h.y || max.y < -h.y || min.z > h.z || max.z < -h.z {
        return false;
    }

    // Triangle plane.
    let n = e0.cross(e1);
    let d = n.dot(v0);
    let r = h.x * n.x.abs() + h.y * n.y.abs() + h.z * n.z.abs();
    d.abs() <= r
}

/// Exact minimum distance between a triangle and a box; 0 on overlap.
///
/// Disjoint case: the nearest pair lies on (vertex, box), (corner, triangle)
/// or (triangle edge, box edge); all three families are enumerated.
pub fn triangle_aabb_distance(tri: &Facet, b: &Aabb) -> f64 {
    if triangle_aabb_overlap(tri, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for p in tri.v {
        let d = b.distance_to_point(p);
        best = best.min(d * d);
    }
    for corner in b.corners() {
        let d = point_triangle_distance(corner, tri);
        best = best.min(d * d);
    }
    for (s1, e1) in tri.edges() {
        for (s2, e2) in b.edges() {
            best = best.min(segment_segment_distance_squared(s1, e1, s2, e2));
        }
    }
    best.sqrt()
}

/// The 12 facets of an axis-aligned box (two per face).
pub fn box_facets(b: &Aabb) -> Vec<Facet> {
    let c = b.corners();
    // Each face split along one diagonal; winding irrelevant (double-sided).
    let quads = [
        [0, 1, 3, 2], // z = min
        [4, 5, 7, 6], // z = max
        [0, 1, 5, 4], // y = min
        [2, 3, 7, 6], // y = max
        [0, 2, 6, 4], // x = min
        [1, 3, 7, 5], // x = max
    ];
    let mut out = Vec::with_capacity(12);
    for q in quads {
        out.push(Facet::new(c[q[0]], c[q[1]], c[q[2]]));
        out.push(Facet::new(c[q[0]], c[q[2]], c[q[3]]));
    }
    out
}

/// A planar quadrilateral (corners in ring order) as two facets.
pub fn quad_facets(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> Vec<Facet> {
    vec![Facet::new(a, b, c), Facet::new(a, c, d)]
}

/// The 4 facets of a tetrahedron.
pub fn tetrahedron_facets(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> Vec<Facet> {
    vec![
        Facet::new(a, b, c),
        Facet::new(a, b, d),
        Facet::new(a, c, d),
        Facet::new(b, c, d),
    ]
}
