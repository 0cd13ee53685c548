//! 3D convex hull with exact orientation predicates, plus point queries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Point3, Vector3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HullError {
    #[error("cannot build a hull from zero points")]
    NoPoints,
    #[error("non-finite input coordinate")]
    NonFinite,
}

/// Dimension of the hull after degeneracy detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HullShape {
    Solid,
    /// All points coplanar; faces triangulate the planar polygon.
    Flat,
    Segment,
    Point,
}

/// Facets are counter-clockwise seen from outside (for flat hulls, seen
/// along the plane normal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHull {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
    pub shape: HullShape,
}

fn orient3d(a: &Point3, b: &Point3, c: &Point3, d: &Point3) -> f64 {
    let c3 = |p: &Point3| robust::Coord3D { x: p.x, y: p.y, z: p.z };
    robust::orient3d(c3(a), c3(b), c3(c), c3(d))
}

/// Point on triangle `abc` closest to `p`.
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn closest_point_on_segment(p: &Point3, a: &Point3, b: &Point3) -> Point3 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    a + d * t
}

struct Face {
    v: [usize; 3],
    alive: bool,
    outside: Vec<usize>,
}

impl ConvexHull {
    pub fn build(points: &[Point3]) -> Result<ConvexHull, HullError> {
        if points.is_empty() {
            return Err(HullError::NoPoints);
        }
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(HullError::NonFinite);
        }
        let mut pts: Vec<Point3> = points.to_vec();
        pts.sort_by(|a, b| {
            a.x.total_cmp(&b.x)
                .then(a.y.total_cmp(&b.y))
                .then(a.z.total_cmp(&b.z))
        });
        pts.dedup();

        let p0 = 0;
        let far = |from: &dyn Fn(&Point3) -> f64| {
            (0..pts.len())
                .map(|i| (from(&pts[i]), i))
                .fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
        };
        let (d01, p1) = far(&|p| (p - pts[p0]).norm());
        let scale = d01.max(1e-300);
        if d01 <= 1e-12 {
            return Ok(ConvexHull {
                vertices: vec![pts[p0]],
                faces: vec![],
                shape: HullShape::Point,
            });
        }
        let dir = (pts[p1] - pts[p0]) / d01;
        let line_dist = |p: &Point3| {
            let v = p - pts[p0];
            (v - dir * v.dot(&dir)).norm()
        };
        let (dl, p2) = far(&line_dist);
        if dl <= 1e-9 * scale {
            // extreme points along the line
            let t = |p: &Point3| (p - pts[p0]).dot(&dir);
            let lo = (0..pts.len()).min_by(|&a, &b| t(&pts[a]).total_cmp(&t(&pts[b]))).unwrap();
            let hi = (0..pts.len()).max_by(|&a, &b| t(&pts[a]).total_cmp(&t(&pts[b]))).unwrap();
            return Ok(ConvexHull {
                vertices: vec![pts[lo], pts[hi]],
                faces: vec![],
                shape: HullShape::Segment,
            });
        }
        let normal = (pts[p1] - pts[p0]).cross(&(pts[p2] - pts[p0])).normalize();
        let (dp, p3) = far(&|p| (p - pts[p0]).dot(&normal).abs());
        if dp <= 1e-9 * scale {
            return Ok(Self::flat(&pts, &pts[p0], &normal));
        }
        Ok(Self::solid(pts, [p0, p1, p2, p3]))
    }

    fn flat(pts: &[Point3], origin: &Point3, normal: &Vector3) -> ConvexHull {
        let helper = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let u = normal.cross(&helper).normalize();
        let v = normal.cross(&u);
        let mut uv: Vec<(f64, f64, usize)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = p - origin;
                (d.dot(&u), d.dot(&v), i)
            })
            .collect();
        uv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let o2 = |a: &(f64, f64, usize), b: &(f64, f64, usize), c: &(f64, f64, usize)| {
            robust::orient2d(
                robust::Coord { x: a.0, y: a.1 },
                robust::Coord { x: b.0, y: b.1 },
                robust::Coord { x: c.0, y: c.1 },
            )
        };
        // Andrew's monotone chain, counter-clockwise in (u, v) which is
        // counter-clockwise about `normal` since u × v = normal
        let mut lower: Vec<(f64, f64, usize)> = Vec::new();
        for p in &uv {
            while lower.len() >= 2 && o2(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(*p);
        }
        let mut upper: Vec<(f64, f64, usize)> = Vec::new();
        for p in uv.iter().rev() {
            while upper.len() >= 2 && o2(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(*p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        let vertices: Vec<Point3> = lower.iter().map(|p| pts[p.2]).collect();
        let faces = (1..vertices.len().saturating_sub(1)).map(|k| [0, k, k + 1]).collect();
        ConvexHull {
            vertices,
            faces,
            shape: HullShape::Flat,
        }
    }

    fn solid(pts: Vec<Point3>, simplex: [usize; 4]) -> ConvexHull {
        let [a, b, c, d] = simplex;
        // orient the tetrahedron so `d` lies behind face (a, b, c)
        let (b, c) = if orient3d(&pts[a], &pts[b], &pts[c], &pts[d]) > 0.0 {
            (b, c)
        } else {
            (c, b)
        };
        let mut faces: Vec<Face> = Vec::new();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        let add_face = |faces: &mut Vec<Face>, edges: &mut HashMap<(usize, usize), usize>, v: [usize; 3]| {
            let id = faces.len();
            for k in 0..3 {
                edges.insert((v[k], v[(k + 1) % 3]), id);
            }
            faces.push(Face {
                v,
                alive: true,
                outside: Vec::new(),
            });
            id
        };
        for v in [[a, b, c], [a, d, b], [b, d, c], [c, d, a]] {
            add_face(&mut faces, &mut edges, v);
        }
        let visible = |f: &Face, p: usize| orient3d(&pts[f.v[0]], &pts[f.v[1]], &pts[f.v[2]], &pts[p]) < 0.0;
        for p in 0..pts.len() {
            if simplex.contains(&p) {
                continue;
            }
            if let Some(f) = (0..4).find(|&f| visible(&faces[f], p)) {
                faces[f].outside.push(p);
            }
        }
        let mut pending: Vec<usize> = (0..4).filter(|&f| !faces[f].outside.is_empty()).collect();
        while let Some(fid) = pending.pop() {
            if !faces[fid].alive || faces[fid].outside.is_empty() {
                continue;
            }
            // farthest conflict point by plane distance
            let f = &faces[fid];
            let (fa, fb, fc) = (pts[f.v[0]], pts[f.v[1]], pts[f.v[2]]);
            let n = (fb - fa).cross(&(fc - fa));
            let eye = *f
                .outside
                .iter()
                .max_by(|&&p, &&q| n.dot(&(pts[p] - fa)).total_cmp(&n.dot(&(pts[q] - fa))).then(q.cmp(&p)))
                .unwrap();

            let mut seen = vec![fid];
            let mut stack = vec![fid];
            let mut visited: HashMap<usize, bool> = HashMap::from([(fid, true)]);
            while let Some(g) = stack.pop() {
                let v = faces[g].v;
                for k in 0..3 {
                    let nb = edges[&(v[(k + 1) % 3], v[k])];
                    if visited.contains_key(&nb) {
                        continue;
                    }
                    let vis = visible(&faces[nb], eye);
                    visited.insert(nb, vis);
                    if vis {
                        seen.push(nb);
                        stack.push(nb);
                    }
                }
            }
            let mut horizon = Vec::new();
            for &g in &seen {
                let v = faces[g].v;
                for k in 0..3 {
                    let (u, w) = (v[k], v[(k + 1) % 3]);
                    let nb = edges[&(w, u)];
                    if !visited[&nb] {
                        horizon.push((u, w));
                    }
                }
            }
            let mut orphans = Vec::new();
            for &g in &seen {
                faces[g].alive = false;
                orphans.append(&mut faces[g].outside);
                let v = faces[g].v;
                for k in 0..3 {
                    let key = (v[k], v[(k + 1) % 3]);
                    if edges.get(&key) == Some(&g) {
                        edges.remove(&key);
                    }
                }
            }
            let new_faces: Vec<usize> = horizon
                .iter()
                .map(|&(u, w)| add_face(&mut faces, &mut edges, [u, w, eye]))
                .collect();
            for p in orphans {
                if p == eye {
                    continue;
                }
                if let Some(&g) = new_faces.iter().find(|&&g| visible(&faces[g], p)) {
                    faces[g].outside.push(p);
                }
            }
            pending.extend(new_faces.iter().filter(|&&g| !faces[g].outside.is_empty()));
        }

        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut out_faces = Vec::new();
        for f in faces.iter().filter(|f| f.alive) {
            let v = f.v.map(|i| {
                *remap.entry(i).or_insert_with(|| {
                    vertices.push(pts[i]);
                    vertices.len() - 1
                })
            });
            out_faces.push(v);
        }
        ConvexHull {
            vertices,
            faces: out_faces,
            shape: HullShape::Solid,
        }
    }

    pub fn face_points(&self, f: usize) -> [Point3; 3] {
        self.faces[f].map(|i| self.vertices[i])
    }

    pub fn volume(&self) -> f64 {
        if self.shape != HullShape::Solid {
            return 0.0;
        }
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Exact inside-or-on test for solid hulls; lower-dimensional hulls
    /// accept points within 1e-9 mm of the set.
    pub fn contains(&self, p: &Point3) -> bool {
        match self.shape {
            HullShape::Solid => self.faces.iter().all(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                orient3d(&a, &b, &c, p) >= 0.0
            }),
            _ => (self.closest_on_surface(p) - p).norm() <= 1e-9,
        }
    }

    fn closest_on_surface(&self, p: &Point3) -> Point3 {
        match self.shape {
            HullShape::Point => self.vertices[0],
            HullShape::Segment => closest_point_on_segment(p, &self.vertices[0], &self.vertices[1]),
            _ => {
                let mut best = self.vertices[0];
                let mut best_d = f64::INFINITY;
                for f in &self.faces {
                    let [a, b, c] = f.map(|i| self.vertices[i]);
                    let q = closest_point_on_triangle(p, &a, &b, &c);
                    let d = (q - p).norm_squared();
                    if d < best_d {
                        best_d = d;
                        best = q;
                    }
                }
                best
            }
        }
    }

    /// `p` itself when inside, else the nearest point of the hull surface.
    pub fn snap(&self, p: &Point3) -> Point3 {
        if self.contains(p) {
            *p
        } else {
            self.closest_on_surface(p)
        }
    }

    /// Zero inside or on the hull, else Euclidean distance to it.
    pub fn distance(&self, p: &Point3) -> f64 {
        (self.snap(p) - p).norm()
    }

    /// Negative inside a solid hull, positive outside.
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        let d = (self.closest_on_surface(p) - p).norm();
        if self.shape == HullShape::Solid && self.contains(p) {
            -d
        } else {
            d
        }
    }
}
