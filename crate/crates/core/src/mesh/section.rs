use std::collections::HashMap;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{Mesh, MeshError, Plane, Point3, Vector3, Welder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    /// Closed boundary loops; outer loops run counter-clockwise about the normal.
    pub loops: Vec<Vec<Point3>>,
    pub area: f64,
    /// Area centroid, or the plane origin when the section is empty.
    pub centroid: Point3,
}

/// Intersects a watertight mesh with a plane.
pub fn cross_section(m: &Mesh, plane: &Plane) -> Result<CrossSection, MeshError> {
    m.require_watertight()?;
    let d: Vec<f64> = m.vertices.iter().map(|p| plane.signed_distance(p)).collect();
    let above = |i: usize| d[i] >= 0.0;
    let crossing = |i: usize, j: usize| {
        // always interpolate from the lower index so both faces of an edge agree
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let t = d[i] / (d[i] - d[j]);
        m.vertices[i] + (m.vertices[j] - m.vertices[i]) * t
    };
    let mut segments: Vec<(Point3, Point3)> = Vec::new();
    for tri in &m.triangles {
        let up = tri.map(above);
        if up[0] == up[1] && up[1] == up[2] {
            continue;
        }
        let mut pts = Vec::with_capacity(2);
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            if above(i) != above(j) {
                pts.push(crossing(i, j));
            }
        }
        let [a, b, c] = tri.map(|i| m.vertices[i]);
        let n_tri = (b - a).cross(&(c - a));
        let dir = plane.normal.cross(&n_tri);
        let (p, q) = (pts[0], pts[1]);
        if (q - p).dot(&dir) >= 0.0 {
            segments.push((p, q));
        } else {
            segments.push((q, p));
        }
    }

    let (origin2, _) = plane.project(&plane.origin);
    let to2 = |p: &Point3| plane.project(p).0 - origin2.coords;
    let mut area2 = 0.0;
    let mut moment = Vector3::zeros();
    for (p, q) in &segments {
        let (a, b) = (to2(p), to2(q));
        let cr = a.x * b.y - a.y * b.x;
        area2 += cr;
        moment.x += (a.x + b.x) * cr;
        moment.y += (a.y + b.y) * cr;
    }
    let area = 0.5 * area2;
    let centroid = if area.abs() > 1e-12 {
        let c2 = Point2::new(moment.x / (3.0 * area2), moment.y / (3.0 * area2)) + origin2.coords;
        let offset = plane.project(&plane.origin).1;
        plane.lift(&c2, offset)
    } else {
        plane.origin
    };
    Ok(CrossSection {
        loops: chain_loops(&segments),
        area,
        centroid,
    })
}

fn chain_loops(segments: &[(Point3, Point3)]) -> Vec<Vec<Point3>> {
    let mut welder = Welder::new(1e-9);
    let edges: Vec<(usize, usize)> = segments
        .iter()
        .map(|(p, q)| (welder.insert(*p), welder.insert(*q)))
        .filter(|(a, b)| a != b)
        .collect();
    let points = welder.into_points();
    let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &(a, _)) in edges.iter().enumerate() {
        next.entry(a).or_default().push(k);
    }
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut k = start;
        loop {
            used[k] = true;
            let (a, b) = edges[k];
            lp.push(points[a]);
            let Some(nk) = next.get(&b).and_then(|c| c.iter().copied().find(|&e| !used[e])) else {
                break;
            };
            k = nk;
        }
        let lp = drop_collinear(lp);
        if lp.len() >= 3 {
            loops.push(lp);
        }
    }
    loops
}

fn drop_collinear(mut lp: Vec<Point3>) -> Vec<Point3> {
    let mut k = 0;
    while lp.len() > 3 && k < lp.len() {
        let n = lp.len();
        let (p, c, q) = (lp[(k + n - 1) % n], lp[k], lp[(k + 1) % n]);
        let (a, b) = (c - p, q - c);
        if a.cross(&b).norm() <= 1e-12 * a.norm() * b.norm() && a.dot(&b) > 0.0 {
            lp.remove(k);
        } else {
            k += 1;
        }
    }
    lp
}
