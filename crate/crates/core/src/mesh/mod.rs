//! Triangle mesh substrate: storage, measurement, I/O, booleans and
//! primitive generation.
//!
//! All coordinates are millimeters. Triangles are wound counter-clockwise
//! when seen from outside, so the signed tetrahedron sum of a closed mesh
//! is its (positive) volume.

mod boolean;
mod io;
mod primitives;
mod section;
mod voxel;

use std::collections::HashMap;

use nalgebra::{Isometry3, Point2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boolean::{boolean_op, boolean_op_with, BooleanOp, BooleanOptions, BooleanStrategy};
pub use io::{load_mesh, load_mesh_file, write_stl_binary, MeshFormat};
pub use primitives::{
    make_annular_sector, make_box, make_cylinder, make_cylinder_from, make_frame_box, make_grid_box, make_torus,
    make_uv_sphere,
};
pub use section::{cross_section, CrossSection};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Vertices closer than this are merged at load time.
pub const MERGE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("input mesh `{0}` is not watertight")]
    NonWatertightInput(String),
    #[error("boolean operation failed: {0}")]
    BooleanFailure(String),
    #[error("cylinder axis is degenerate")]
    DegenerateAxis,
    #[error("invalid radius {0} mm")]
    InvalidRadius(f64),
    #[error("at least {min} segments required, got {got}")]
    TooFewSegments { min: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i % 3]
    }

    pub fn unit(self) -> Vector3 {
        let mut v = Vector3::zeros();
        v[self.index()] = 1.0;
        v
    }

    /// The two remaining axes, in cyclic order (so `self`, `others[0]`,
    /// `others[1]` is right-handed).
    pub fn others(self) -> [Axis; 2] {
        [
            Axis::from_index(self.index() + 1),
            Axis::from_index(self.index() + 2),
        ]
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub min: Point3,
    pub max: Point3,
}

impl Box3 {
    pub fn new(min: Point3, max: Point3) -> Self {
        Box3 {
            min: min.inf(&max),
            max: min.sup(&max),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Option<Box3> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Some(Box3 { min, max })
    }

    pub fn extents(&self) -> Vector3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }

    pub fn expanded(&self, margin: f64) -> Box3 {
        let m = Vector3::repeat(margin);
        Box3 {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn union(&self, other: &Box3) -> Box3 {
        Box3 {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    /// Closed-interval overlap test; touching boxes overlap.
    pub fn overlaps(&self, other: &Box3, slack: f64) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] + slack && other.min[i] <= self.max[i] + slack)
    }

    pub fn contains(&self, p: &Point3, slack: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - slack && p[i] <= self.max[i] + slack)
    }

    /// True when `p` lies in the open interior, at least `eps` from every face.
    pub fn contains_strictly(&self, p: &Point3, eps: f64) -> bool {
        (0..3).all(|i| p[i] > self.min[i] + eps && p[i] < self.max[i] - eps)
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance_to(&self, p: &Point3) -> f64 {
        let clamped = p.sup(&self.min).inf(&self.max);
        (p - clamped).norm()
    }

    pub fn corners(&self) -> [Point3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point3::new(a.x, a.y, a.z),
            Point3::new(b.x, a.y, a.z),
            Point3::new(b.x, b.y, a.z),
            Point3::new(a.x, b.y, a.z),
            Point3::new(a.x, a.y, b.z),
            Point3::new(b.x, a.y, b.z),
            Point3::new(b.x, b.y, b.z),
            Point3::new(a.x, b.y, b.z),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub origin: Point3,
    pub normal: Vector3,
}

impl Plane {
    /// Builds a plane, normalizing `normal`. Returns `None` for a zero normal.
    pub fn new(origin: Point3, normal: Vector3) -> Option<Plane> {
        let len = normal.norm();
        if !(len > 1e-300) || !len.is_finite() {
            return None;
        }
        Some(Plane {
            origin,
            normal: normal / len,
        })
    }

    pub fn axis_aligned(axis: Axis, offset: f64) -> Plane {
        let mut origin = Point3::origin();
        origin[axis.index()] = offset;
        Plane {
            origin,
            normal: axis.unit(),
        }
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        (p - self.origin).dot(&self.normal)
    }

    /// In-plane orthonormal basis `(u, v)` with `u × v = normal`.
    pub fn basis(&self) -> (Vector3, Vector3) {
        let n = self.normal;
        let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let u = helper.cross(&n).normalize();
        let v = n.cross(&u);
        (u, v)
    }

    /// Embeds an in-plane 2D point and lifts it `offset` mm along the normal.
    pub fn lift(&self, q: &Point2<f64>, offset: f64) -> Point3 {
        let (u, v) = self.basis();
        self.origin + u * q.x + v * q.y + self.normal * offset
    }

    /// Inverse of [`Plane::lift`].
    pub fn project(&self, p: &Point3) -> (Point2<f64>, f64) {
        let (u, v) = self.basis();
        let d = p - self.origin;
        (Point2::new(d.dot(&u), d.dot(&v)), d.dot(&self.normal))
    }
}

/// Indexed triangle mesh in millimeters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub name: String,
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn new(name: impl Into<String>, vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Mesh {
        debug_assert!(triangles.iter().flatten().all(|&i| i < vertices.len()));
        Mesh {
            name: name.into(),
            vertices,
            triangles,
        }
    }

    pub fn empty(name: impl Into<String>) -> Mesh {
        Mesh::new(name, Vec::new(), Vec::new())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Mesh {
        self.name = name.into();
        self
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_points(&self) -> impl Iterator<Item = [Point3; 3]> + '_ {
        (0..self.triangles.len()).map(move |t| self.triangle(t))
    }

    /// Signed volume from the tetrahedron sum against the origin.
    pub fn volume(&self) -> f64 {
        self.triangle_points()
            .map(|[a, b, c]| a.coords.dot(&b.coords.cross(&c.coords)))
            .sum::<f64>()
            / 6.0
    }

    pub fn surface_area(&self) -> f64 {
        self.triangle_points()
            .map(|[a, b, c]| (b - a).cross(&(c - a)).norm() * 0.5)
            .sum()
    }

    /// Volume centroid; falls back to the vertex mean for zero-volume meshes.
    pub fn centroid(&self) -> Point3 {
        let mut moment = Vector3::zeros();
        let mut vol = 0.0;
        for [a, b, c] in self.triangle_points() {
            let v = a.coords.dot(&b.coords.cross(&c.coords)) / 6.0;
            vol += v;
            moment += (a.coords + b.coords + c.coords) * (v / 4.0);
        }
        if vol.abs() > 1e-12 {
            Point3::from(moment / vol)
        } else {
            let n = self.vertices.len().max(1) as f64;
            Point3::from(self.vertices.iter().map(|p| p.coords).sum::<Vector3>() / n)
        }
    }

    pub fn bounding_box(&self) -> Result<Box3, MeshError> {
        if self.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let used = self.triangles.iter().flatten().map(|&i| &self.vertices[i]);
        Box3::from_points(used).ok_or(MeshError::EmptyMesh)
    }

    /// Every undirected edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        let mut counts: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts.values().all(|&c| c == 2)
    }

    pub(crate) fn require_watertight(&self) -> Result<(), MeshError> {
        if self.is_watertight() {
            Ok(())
        } else {
            Err(MeshError::NonWatertightInput(self.name.clone()))
        }
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Mesh {
        Mesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|p| iso * p).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn translated(&self, by: Vector3) -> Mesh {
        Mesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|p| p + by).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Mesh {
        Mesh {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|p| p * factor).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Concatenates two meshes without welding.
    pub fn merged(&self, other: &Mesh) -> Mesh {
        let offset = self.vertices.len();
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.triangles.extend(
            other
                .triangles
                .iter()
                .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
        );
        out
    }

    /// Merges vertices within `tol`, drops degenerate triangles and unused
    /// vertices. Earlier vertices win, so the result is order-deterministic.
    pub fn cleaned(&self, tol: f64) -> Mesh {
        let mut welder = Welder::new(tol);
        let remap: Vec<usize> = self.vertices.iter().map(|p| welder.insert(*p)).collect();
        let merged = welder.into_points();
        let mut triangles = Vec::with_capacity(self.triangles.len());
        for t in &self.triangles {
            let t = [remap[t[0]], remap[t[1]], remap[t[2]]];
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                continue;
            }
            let [a, b, c] = [merged[t[0]], merged[t[1]], merged[t[2]]];
            if (b - a).cross(&(c - a)).norm() <= 1e-12 {
                continue;
            }
            triangles.push(t);
        }
        Mesh::new(self.name.clone(), merged, triangles).compacted()
    }

    /// Removes vertices no triangle references.
    pub fn compacted(&self) -> Mesh {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let triangles = self
            .triangles
            .iter()
            .map(|t| {
                t.map(|i| {
                    if remap[i] == usize::MAX {
                        remap[i] = vertices.len();
                        vertices.push(self.vertices[i]);
                    }
                    remap[i]
                })
            })
            .collect();
        Mesh::new(self.name.clone(), vertices, triangles)
    }
}

/// Partitions the triangles into vertex-connected groups, ordered by the
/// first triangle of each group.
pub fn connected_components(m: &Mesh) -> Vec<Mesh> {
    let mut parent: Vec<usize> = (0..m.vertices.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in &m.triangles {
        let r0 = find(&mut parent, t[0]);
        for &v in &t[1..] {
            let r = find(&mut parent, v);
            if r != r0 {
                let (lo, hi) = (r0.min(r), r0.max(r));
                parent[hi] = lo;
            }
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut groups: HashMap<usize, Vec<[usize; 3]>> = HashMap::new();
    for t in &m.triangles {
        let root = find(&mut parent, t[0]);
        groups
            .entry(root)
            .or_insert_with(|| {
                order.push(root);
                Vec::new()
            })
            .push(*t);
    }
    order
        .iter()
        .enumerate()
        .map(|(i, root)| {
            let tris = groups.remove(root).unwrap_or_default();
            Mesh::new(format!("{}#{}", m.name, i), m.vertices.clone(), tris).compacted()
        })
        .collect()
}

/// Spatial hash that snaps points within a tolerance onto earlier ones.
pub(crate) struct Welder {
    tol: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    points: Vec<Point3>,
}

impl Welder {
    pub(crate) fn new(tol: f64) -> Self {
        Welder {
            tol: tol.max(1e-12),
            cells: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn cell(&self, p: &Point3) -> [i64; 3] {
        [
            (p.x / self.tol).floor() as i64,
            (p.y / self.tol).floor() as i64,
            (p.z / self.tol).floor() as i64,
        ]
    }

    pub(crate) fn insert(&mut self, p: Point3) -> usize {
        let c = self.cell(&p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &id in ids {
                            let d = (self.points[id] - p).norm();
                            if d <= self.tol && best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                                best = Some((d, id));
                            }
                        }
                    }
                }
            }
        }
        if let Some((_, id)) = best {
            return id;
        }
        let id = self.points.len();
        self.points.push(p);
        self.cells.entry(c).or_default().push(id);
        id
    }

    pub(crate) fn into_points(self) -> Vec<Point3> {
        self.points
    }
}
