//! Regularized mesh booleans.
//!
//! The exact path clips polygons against BSP trees of the two solids,
//! welds the fragments, stitches T-junctions along the seams and
//! re-triangulates. When that does not produce a closed mesh the voxel
//! path takes over.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{voxel, Box3, Mesh, MeshError, Point3, Vector3, Welder};

/// Points closer than this to a splitting plane count as lying on it.
const PLANE_EPS: f64 = 1e-5;
/// Fragment vertices closer than this are merged after clipping. Split
/// points snapped by the plane tolerance can land this far apart.
const WELD_TOL: f64 = 4.0 * PLANE_EPS;
/// Polygons thinner than this do not contribute splitting planes.
const SLIVER_HEIGHT: f64 = 10.0 * PLANE_EPS;
/// Vertices within this distance of an open seam edge are stitched into it.
const SEAM_TOL: f64 = 2e-5;
/// Open-edge endpoints closer than this are merged as a last repair.
const COLLAPSE_TOL: f64 = 20.0 * PLANE_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BooleanOp {
    Intersect,
    Subtract,
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BooleanStrategy {
    /// Exact first, voxel fallback.
    Auto,
    ExactOnly,
    VoxelOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BooleanOptions {
    pub strategy: BooleanStrategy,
    /// Voxel edge length for the fallback, mm.
    pub voxel_size: f64,
}

impl Default for BooleanOptions {
    fn default() -> Self {
        BooleanOptions {
            strategy: BooleanStrategy::Auto,
            voxel_size: 0.5,
        }
    }
}

pub fn boolean_op(a: &Mesh, b: &Mesh, op: BooleanOp) -> Result<Mesh, MeshError> {
    boolean_op_with(a, b, op, &BooleanOptions::default())
}

pub fn boolean_op_with(
    a: &Mesh,
    b: &Mesh,
    op: BooleanOp,
    options: &BooleanOptions,
) -> Result<Mesh, MeshError> {
    a.require_watertight()?;
    b.require_watertight()?;
    let name = format!("{}_{:?}_{}", a.name, op, b.name).to_lowercase();
    if options.strategy != BooleanStrategy::VoxelOnly {
        match exact_boolean(a, b, op) {
            Ok(m) => return Ok(m.with_name(name)),
            Err(e) if options.strategy == BooleanStrategy::ExactOnly => return Err(e),
            Err(e) => log::warn!("exact boolean {name} failed ({e}); falling back to voxels"),
        }
    }
    voxel::voxel_boolean(a, b, op, options.voxel_size).map(|m| m.with_name(name))
}

fn exact_boolean(a: &Mesh, b: &Mesh, op: BooleanOp) -> Result<Mesh, MeshError> {
    let (ba, bb) = (a.bounding_box()?, b.bounding_box()?);
    // disjoint boxes need no clipping at all
    if !ba.overlaps(&bb, PLANE_EPS) {
        return Ok(match op {
            BooleanOp::Intersect => Mesh::empty("empty"),
            BooleanOp::Subtract => a.clone(),
            BooleanOp::Union => a.merged(b),
        });
    }
    let (pa, pb) = (polygons(a), polygons(b));
    let sa = Solid::new(&pa, ba);
    let sb = Solid::new(&pb, bb);
    let flip = |v: Vec<Polygon>| -> Vec<Polygon> { v.into_iter().map(Polygon::flipped).collect() };
    // same clipping sequence as the classic BSP formulation, except the trees
    // only classify: output fragments come from the original polygons
    let polygons = match op {
        BooleanOp::Union => {
            let mut out = sb.clip(pa, false);
            out.extend(flip(sa.clip(flip(sa.clip(pb, false)), false)));
            out
        }
        BooleanOp::Subtract => {
            let mut out = flip(sb.clip(flip(pa), false));
            out.extend(sa.clip(flip(sa.clip(pb, true)), true));
            out
        }
        BooleanOp::Intersect => {
            let b_in_a = flip(sa.clip(pb, true));
            let mut out = flip(sb.clip(flip(pa), true));
            out.extend(flip(sa.clip(b_in_a, true)));
            out
        }
    };
    polygons_to_mesh(&polygons)
}

#[derive(Debug, Clone, Copy)]
struct BspPlane {
    normal: Vector3,
    w: f64,
}

impl BspPlane {
    fn from_points(points: &[Point3]) -> Option<BspPlane> {
        // Newell normal is stable for slivers and non-triangles alike
        let mut n = Vector3::zeros();
        for i in 0..points.len() {
            let (p, q) = (points[i], points[(i + 1) % points.len()]);
            n.x += (p.y - q.y) * (p.z + q.z);
            n.y += (p.z - q.z) * (p.x + q.x);
            n.z += (p.x - q.x) * (p.y + q.y);
        }
        let len = n.norm();
        if !(len > 1e-14) {
            return None;
        }
        let normal = n / len;
        let centroid = points.iter().map(|p| p.coords).sum::<Vector3>() / points.len() as f64;
        Some(BspPlane {
            normal,
            w: normal.dot(&centroid),
        })
    }

    fn flipped(self) -> BspPlane {
        BspPlane {
            normal: -self.normal,
            w: -self.w,
        }
    }
}

#[derive(Debug, Clone)]
struct Polygon {
    vertices: Vec<Point3>,
    plane: BspPlane,
}

impl Polygon {
    /// Whether the polygon is thick enough for its plane to be trusted: its
    /// height over the longest edge is well above the plane tolerance.
    fn is_stable(&self) -> bool {
        let n = self.vertices.len();
        let mut twice_area = Vector3::zeros();
        let mut longest: f64 = 0.0;
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            twice_area += (p - self.vertices[0]).cross(&(q - self.vertices[0]));
            longest = longest.max((q - p).norm());
        }
        longest > 0.0 && twice_area.norm() / longest >= SLIVER_HEIGHT
    }

    fn flipped(mut self) -> Polygon {
        self.vertices.reverse();
        self.plane = self.plane.flipped();
        self
    }
}

fn polygons(m: &Mesh) -> Vec<Polygon> {
    m.triangle_points()
        .filter_map(|t| {
            BspPlane::from_points(&t).map(|plane| Polygon {
                vertices: t.to_vec(),
                plane,
            })
        })
        .collect()
}

/// A solid as a classifier: its BSP tree, the inverted tree, and its box.
struct Solid {
    tree: Bsp,
    inverted: Bsp,
    bbox: Box3,
}

impl Solid {
    fn new(polygons: &[Polygon], bbox: Box3) -> Solid {
        // slivers have unreliable planes; they stay in the output but do not split space
        let tree = Bsp::from_polygons(polygons.iter().filter(|p| p.is_stable()).cloned().collect());
        let mut inverted = tree.clone();
        inverted.invert();
        Solid {
            tree,
            inverted,
            bbox: bbox.expanded(10.0 * PLANE_EPS),
        }
    }

    /// Keeps the parts of `polygons` outside this solid, or inside it when
    /// `inside` is set. Polygons clear of the bounding box skip the tree.
    fn clip(&self, polygons: Vec<Polygon>, inside: bool) -> Vec<Polygon> {
        let (near, far): (Vec<Polygon>, Vec<Polygon>) = polygons.into_iter().partition(|p| {
            let b = Box3::from_points(p.vertices.iter()).expect("polygon has vertices");
            b.overlaps(&self.bbox, 0.0)
        });
        if inside {
            self.inverted.clip_polygons(near)
        } else {
            let mut out = self.tree.clip_polygons(near);
            out.extend(far);
            out
        }
    }
}

const COPLANAR: u8 = 0;
const FRONT: u8 = 1;
const BACK: u8 = 2;
const SPANNING: u8 = 3;

/// Intersection of segment `p`–`q` with the plane, computed from the
/// lexicographically smaller endpoint so shared edges split identically.
fn edge_intersection(plane: &BspPlane, p: &Point3, q: &Point3) -> Point3 {
    let (a, b) = if (p.x, p.y, p.z) <= (q.x, q.y, q.z) {
        (p, q)
    } else {
        (q, p)
    };
    let d = b - a;
    let t = (plane.w - plane.normal.dot(&a.coords)) / plane.normal.dot(&d);
    a + d * t.clamp(0.0, 1.0)
}

struct SplitOut<'a> {
    coplanar_front: &'a mut Vec<Polygon>,
    coplanar_back: &'a mut Vec<Polygon>,
    front: &'a mut Vec<Polygon>,
    back: &'a mut Vec<Polygon>,
}

fn split_polygon(plane: &BspPlane, poly: Polygon, out: SplitOut<'_>) {
    let mut kind = 0u8;
    let types: Vec<u8> = poly
        .vertices
        .iter()
        .map(|v| {
            let t = plane.normal.dot(&v.coords) - plane.w;
            let ty = if t < -PLANE_EPS {
                BACK
            } else if t > PLANE_EPS {
                FRONT
            } else {
                COPLANAR
            };
            kind |= ty;
            ty
        })
        .collect();
    match kind {
        COPLANAR => {
            if plane.normal.dot(&poly.plane.normal) > 0.0 {
                out.coplanar_front.push(poly);
            } else {
                out.coplanar_back.push(poly);
            }
        }
        FRONT => out.front.push(poly),
        BACK => out.back.push(poly),
        _ => {
            let n = poly.vertices.len();
            let mut f = Vec::with_capacity(n + 1);
            let mut b = Vec::with_capacity(n + 1);
            for i in 0..n {
                let j = (i + 1) % n;
                let (ti, tj) = (types[i], types[j]);
                let (vi, vj) = (poly.vertices[i], poly.vertices[j]);
                if ti != BACK {
                    f.push(vi);
                }
                if ti != FRONT {
                    b.push(vi);
                }
                if (ti | tj) == SPANNING {
                    let v = edge_intersection(plane, &vi, &vj);
                    f.push(v);
                    b.push(v);
                }
            }
            if f.len() >= 3 {
                out.front.push(Polygon {
                    vertices: f,
                    plane: poly.plane,
                });
            }
            if b.len() >= 3 {
                out.back.push(Polygon {
                    vertices: b,
                    plane: poly.plane,
                });
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Node {
    plane: Option<BspPlane>,
    front: Option<usize>,
    back: Option<usize>,
    polygons: Vec<Polygon>,
}

/// Arena-backed BSP tree; all traversals are iterative because trees
/// built from convex meshes degenerate into long chains.
#[derive(Debug, Clone)]
struct Bsp {
    nodes: Vec<Node>,
}

impl Bsp {
    fn from_polygons(polygons: Vec<Polygon>) -> Bsp {
        let mut tree = Bsp {
            nodes: vec![Node::default()],
        };
        tree.build(0, polygons);
        tree
    }

    fn build(&mut self, root: usize, polygons: Vec<Polygon>) {
        let mut stack = vec![(root, polygons)];
        while let Some((id, polys)) = stack.pop() {
            if polys.is_empty() {
                continue;
            }
            let plane = *self.nodes[id].plane.get_or_insert(polys[0].plane);
            let mut coplanar = Vec::new();
            let mut coplanar_back = Vec::new();
            let mut front = Vec::new();
            let mut back = Vec::new();
            for p in polys {
                split_polygon(
                    &plane,
                    p,
                    SplitOut {
                        coplanar_front: &mut coplanar,
                        coplanar_back: &mut coplanar_back,
                        front: &mut front,
                        back: &mut back,
                    },
                );
            }
            coplanar.append(&mut coplanar_back);
            self.nodes[id].polygons.append(&mut coplanar);
            if !front.is_empty() {
                let child = self.child(id, true);
                stack.push((child, front));
            }
            if !back.is_empty() {
                let child = self.child(id, false);
                stack.push((child, back));
            }
        }
    }

    fn child(&mut self, id: usize, front: bool) -> usize {
        let slot = if front {
            self.nodes[id].front
        } else {
            self.nodes[id].back
        };
        if let Some(c) = slot {
            return c;
        }
        let c = self.nodes.len();
        self.nodes.push(Node::default());
        if front {
            self.nodes[id].front = Some(c);
        } else {
            self.nodes[id].back = Some(c);
        }
        c
    }

    fn invert(&mut self) {
        for node in &mut self.nodes {
            node.polygons = std::mem::take(&mut node.polygons)
                .into_iter()
                .map(Polygon::flipped)
                .collect();
            node.plane = node.plane.map(BspPlane::flipped);
            std::mem::swap(&mut node.front, &mut node.back);
        }
    }

    /// Removes the parts of `polygons` inside this solid.
    fn clip_polygons(&self, polygons: Vec<Polygon>) -> Vec<Polygon> {
        let mut result = Vec::new();
        let mut stack = vec![(0usize, polygons)];
        while let Some((id, polys)) = stack.pop() {
            let node = &self.nodes[id];
            let Some(plane) = node.plane else {
                result.extend(polys);
                continue;
            };
            let mut front = Vec::new();
            let mut back = Vec::new();
            let mut cf = Vec::new();
            let mut cb = Vec::new();
            for p in polys {
                split_polygon(
                    &plane,
                    p,
                    SplitOut {
                        coplanar_front: &mut cf,
                        coplanar_back: &mut cb,
                        front: &mut front,
                        back: &mut back,
                    },
                );
            }
            front.append(&mut cf);
            back.append(&mut cb);
            match node.front {
                Some(c) => stack.push((c, front)),
                None => result.extend(front),
            }
            if let Some(c) = node.back {
                stack.push((c, back));
            }
        }
        result
    }
}

fn polygons_to_mesh(polygons: &[Polygon]) -> Result<Mesh, MeshError> {
    if polygons.is_empty() {
        return Ok(Mesh::empty("empty"));
    }
    let mut welder = Welder::new(WELD_TOL);
    let mut faces: Vec<Vec<usize>> = Vec::with_capacity(polygons.len());
    for p in polygons {
        let mut ids: Vec<usize> = p.vertices.iter().map(|v| welder.insert(*v)).collect();
        ids.dedup();
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        if ids.len() >= 3 {
            faces.push(ids);
        }
    }
    let mut vertices = welder.into_points();
    for _ in 0..3 {
        if !stitch_seams(&vertices, &mut faces) {
            break;
        }
    }
    if collapse_open_ends(&vertices, &mut faces) {
        for _ in 0..3 {
            if !stitch_seams(&vertices, &mut faces) {
                break;
            }
        }
    }
    let mut triangles = Vec::new();
    for face in &faces {
        triangulate_convex(&mut vertices, face, &mut triangles);
    }
    let mesh = Mesh::new("boolean", vertices, triangles).compacted();
    if mesh.is_empty() {
        return Ok(mesh);
    }
    if !mesh.is_watertight() {
        return Err(MeshError::BooleanFailure(
            "clipped surface is not closed after seam stitching".into(),
        ));
    }
    Ok(mesh)
}

fn open_edges(faces: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut directed: HashMap<(usize, usize), i32> = HashMap::new();
    for f in faces {
        for k in 0..f.len() {
            *directed.entry((f[k], f[(k + 1) % f.len()])).or_insert(0) += 1;
        }
    }
    let mut open: Vec<(usize, usize)> = directed
        .iter()
        .filter(|(&(u, v), &c)| c > directed.get(&(v, u)).copied().unwrap_or(0))
        .map(|(&e, _)| e)
        .collect();
    open.sort_unstable();
    open
}

/// Merges endpoints of unmatched edges that lie within `COLLAPSE_TOL` of
/// each other, dropping faces that degenerate. Returns whether anything
/// changed.
fn collapse_open_ends(vertices: &[Point3], faces: &mut Vec<Vec<usize>>) -> bool {
    let open = open_edges(faces);
    if open.is_empty() {
        return false;
    }
    let mut ends: Vec<usize> = open.iter().flat_map(|&(u, v)| [u, v]).collect();
    ends.sort_unstable();
    ends.dedup();
    ends.sort_by(|&a, &b| vertices[a].x.total_cmp(&vertices[b].x).then(a.cmp(&b)));
    let mut target: HashMap<usize, usize> = HashMap::new();
    let root = |target: &HashMap<usize, usize>, mut i: usize| {
        while let Some(&j) = target.get(&i) {
            i = j;
        }
        i
    };
    for (k, &a) in ends.iter().enumerate() {
        for &b in &ends[k + 1..] {
            if vertices[b].x - vertices[a].x > COLLAPSE_TOL {
                break;
            }
            if (vertices[b] - vertices[a]).norm() <= COLLAPSE_TOL {
                let (ra, rb) = (root(&target, a), root(&target, b));
                if ra != rb {
                    target.insert(ra.max(rb), ra.min(rb));
                }
            }
        }
    }
    if target.is_empty() {
        return false;
    }
    let mut out = Vec::with_capacity(faces.len());
    for f in faces.iter() {
        let mut ids: Vec<usize> = f.iter().map(|&i| root(&target, i)).collect();
        ids.dedup();
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        if ids.len() >= 3 {
            out.push(ids);
        }
    }
    *faces = out;
    true
}

/// Inserts vertices lying on unmatched edges into those edges. Returns
/// whether anything changed.
fn stitch_seams(vertices: &[Point3], faces: &mut [Vec<usize>]) -> bool {
    let open = open_edges(faces);
    if open.is_empty() {
        return false;
    }
    let mut candidates: Vec<usize> = open.iter().flat_map(|&(u, v)| [u, v]).collect();
    candidates.sort_unstable();
    candidates.dedup();

    // bucket candidates on a coarse grid so each edge only scans nearby ones
    let bbox = super::Box3::from_points(candidates.iter().map(|&i| &vertices[i])).expect("non-empty");
    let diag = bbox.extents().norm().max(1e-9);
    let cell = (diag / (candidates.len() as f64).cbrt()).max(SEAM_TOL * 4.0);
    let key = |p: &Point3| {
        [
            ((p.x - bbox.min.x) / cell).floor() as i64,
            ((p.y - bbox.min.y) / cell).floor() as i64,
            ((p.z - bbox.min.z) / cell).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for &c in &candidates {
        grid.entry(key(&vertices[c])).or_default().push(c);
    }

    let mut inserts: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for &(u, v) in &open {
        let (pu, pv) = (vertices[u], vertices[v]);
        let d = pv - pu;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            continue;
        }
        let lo = key(&pu.inf(&pv).map(|c| c - SEAM_TOL));
        let hi = key(&pu.sup(&pv).map(|c| c + SEAM_TOL));
        let mut hits: Vec<(f64, usize)> = Vec::new();
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let Some(ids) = grid.get(&[x, y, z]) else { continue };
                    for &w in ids {
                        if w == u || w == v {
                            continue;
                        }
                        let t = (vertices[w] - pu).dot(&d) / len2;
                        let len = len2.sqrt();
                        if t * len <= SEAM_TOL || (1.0 - t) * len <= SEAM_TOL {
                            continue;
                        }
                        let off = (vertices[w] - (pu + d * t)).norm();
                        if off <= SEAM_TOL {
                            hits.push((t, w));
                        }
                    }
                }
            }
        }
        if !hits.is_empty() {
            hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            hits.dedup_by_key(|h| h.1);
            inserts.insert((u, v), hits.into_iter().map(|h| h.1).collect());
        }
    }
    if inserts.is_empty() {
        return false;
    }
    for f in faces.iter_mut() {
        let n = f.len();
        let mut out = Vec::with_capacity(n + 2);
        for k in 0..n {
            let (u, v) = (f[k], f[(k + 1) % n]);
            out.push(u);
            if let Some(extra) = inserts.get(&(u, v)) {
                out.extend(extra.iter().copied());
            }
        }
        *f = out;
    }
    true
}

fn triangulate_convex(vertices: &mut Vec<Point3>, face: &[usize], out: &mut Vec<[usize; 3]>) {
    let n = face.len();
    if n == 3 {
        out.push([face[0], face[1], face[2]]);
        return;
    }
    let collinear = (0..n).any(|k| {
        let (p, c, q) = (
            vertices[face[(k + n - 1) % n]],
            vertices[face[k]],
            vertices[face[(k + 1) % n]],
        );
        let (a, b) = (c - p, q - c);
        a.cross(&b).norm() <= 1e-9 * a.norm() * b.norm()
    });
    if !collinear {
        for k in 1..n - 1 {
            out.push([face[0], face[k], face[k + 1]]);
        }
        return;
    }
    // fan from an interior point so collinear runs never form slivers
    let centroid = face.iter().map(|&i| vertices[i].coords).sum::<Vector3>() / n as f64;
    let c = vertices.len();
    vertices.push(Point3::from(centroid));
    for k in 0..n {
        out.push([c, face[k], face[(k + 1) % n]]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_box, make_cylinder, make_uv_sphere, Box3};

    fn unit_cube() -> Mesh {
        make_box(&Box3::new(Point3::origin(), Point3::new(1.0, 1.0, 1.0)))
    }

    #[test]
    fn cube_intersect_itself() {
        let c = unit_cube();
        let r = boolean_op_with(&c, &c, BooleanOp::Intersect, &BooleanOptions {
            strategy: BooleanStrategy::ExactOnly,
            ..Default::default()
        })
        .unwrap();
        assert!((r.volume() - 1.0).abs() < 0.01, "{}", r.volume());
        assert!(r.is_watertight());
    }

    #[test]
    fn cube_intersect_shifted_cube() {
        let c = unit_cube();
        let s = c.translated(Vector3::new(0.5, 0.0, 0.0));
        let exact = BooleanOptions {
            strategy: BooleanStrategy::ExactOnly,
            ..Default::default()
        };
        let r = boolean_op_with(&c, &s, BooleanOp::Intersect, &exact).unwrap();
        assert!((r.volume() - 0.5).abs() < 0.005, "{}", r.volume());
        let d = boolean_op_with(&c, &s, BooleanOp::Subtract, &exact).unwrap();
        assert!((d.volume() - 0.5).abs() < 0.005, "{}", d.volume());
        let u = boolean_op_with(&c, &s, BooleanOp::Union, &exact).unwrap();
        assert!((u.volume() - 1.5).abs() < 0.015, "{}", u.volume());
        for m in [&r, &d, &u] {
            assert!(m.is_watertight());
        }
    }

    #[test]
    fn disjoint_intersection_is_empty() {
        let c = unit_cube();
        let far = c.translated(Vector3::new(5.0, 0.0, 0.0));
        let r = boolean_op(&c, &far, BooleanOp::Intersect).unwrap();
        assert!(r.is_empty());
        assert_eq!(r.volume(), 0.0);
    }

    #[test]
    fn non_watertight_input_rejected() {
        let mut open = unit_cube();
        open.triangles.pop();
        assert!(matches!(
            boolean_op(&open, &unit_cube(), BooleanOp::Union),
            Err(MeshError::NonWatertightInput(_))
        ));
    }

    #[test]
    fn sphere_minus_cylinder_closed() {
        let s = make_uv_sphere(Point3::origin(), 10.0, 16, 32);
        let c = make_cylinder(Point3::new(0.0, 0.0, -20.0), Point3::new(0.0, 0.0, 20.0), 3.0, 24).unwrap();
        let exact = BooleanOptions {
            strategy: BooleanStrategy::ExactOnly,
            ..Default::default()
        };
        let d = boolean_op_with(&s, &c, BooleanOp::Subtract, &exact).unwrap();
        let i = boolean_op_with(&s, &c, BooleanOp::Intersect, &exact).unwrap();
        assert!(d.is_watertight() && i.is_watertight());
        let total = d.volume() + i.volume();
        assert!((total - s.volume()).abs() / s.volume() < 1e-6, "{total} vs {}", s.volume());
    }

    #[test]
    fn voxel_fallback_matches_analytic_overlap() {
        let c = unit_cube().scaled(10.0);
        let s = c.translated(Vector3::new(5.0, 0.0, 0.0));
        let vox = BooleanOptions {
            strategy: BooleanStrategy::VoxelOnly,
            voxel_size: 0.5,
        };
        let r = boolean_op_with(&c, &s, BooleanOp::Intersect, &vox).unwrap();
        assert!((r.volume() - 500.0).abs() / 500.0 < 0.02, "{}", r.volume());
        assert!(r.is_watertight());
    }
}
