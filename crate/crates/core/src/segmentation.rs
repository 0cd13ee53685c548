//! Quartering the transformable part into four links.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{boolean_op, cross_section, make_box, Axis, BooleanOp, Box3, Mesh, MeshError, Plane, Point3, Vector3};
use crate::selection::{ShapeClass, ShapeKind};

/// A link whose volume is below this fraction of the part counts as empty.
const EMPTY_FRACTION: f64 = 1e-6;
const CUTTER_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SegmentationMode {
    SlenderQuarter,
    AngularQuarter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    /// Base-adjacent link first.
    pub links: Vec<Mesh>,
    /// Base joint, three inter-link joints, end-effector anchor.
    pub joint_anchors: [Point3; 5],
    pub mode: SegmentationMode,
    /// Slender: offsets of the three cut planes along the axis, ascending.
    pub cuts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentationError {
    #[error("link {0} is empty")]
    EmptyLink(usize),
    #[error("principal axis must be a signed coordinate axis")]
    NotAxisAligned,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn distance_to_boxes(p: &Point3, boxes: &[Box3]) -> Option<f64> {
    boxes.iter().map(|b| b.distance_to(p)).min_by(f64::total_cmp)
}

/// Face center of `b` farthest from the static boxes, or from `fallback`
/// when there are none.
fn far_face_center(b: &Box3, statics: &[Box3], fallback: &Point3) -> Point3 {
    let c = b.center();
    let h = b.extents() / 2.0;
    let mut best: Option<(f64, Point3)> = None;
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut f = c;
            f[axis] += sign * h[axis];
            let d = distance_to_boxes(&f, statics).unwrap_or_else(|| (f - fallback).norm());
            if best.is_none_or(|(bd, _)| d > bd + 1e-9) {
                best = Some((d, f));
            }
        }
    }
    best.expect("six faces").1
}

fn check_links(links: &[Mesh], part_volume: f64) -> Result<(), SegmentationError> {
    for (k, l) in links.iter().enumerate() {
        if l.is_empty() || l.volume() <= EMPTY_FRACTION * part_volume.abs() {
            return Err(SegmentationError::EmptyLink(k));
        }
    }
    Ok(())
}

fn section_centroid(m: &Mesh, plane: &Plane) -> Result<Option<Point3>, MeshError> {
    let s = cross_section(m, plane)?;
    Ok((s.area.abs() > 1e-12).then_some(s.centroid))
}

/// Quarters a slender part along `axis` into equal-length links.
pub fn segment_slender(part: &Mesh, axis: Axis, statics: &[Box3]) -> Result<SegmentationResult, SegmentationError> {
    let b = part.bounding_box()?;
    let i = axis.index();
    let (lo, hi) = (b.min[i], b.max[i]);
    let len = hi - lo;
    let cuts: Vec<f64> = (1..4).map(|k| lo + len * k as f64 / 4.0).collect();
    let bounds = [lo - CUTTER_MARGIN, cuts[0], cuts[1], cuts[2], hi + CUTTER_MARGIN];
    let mut links = Vec::with_capacity(4);
    for q in 0..4 {
        let mut slab = b.expanded(CUTTER_MARGIN);
        slab.min[i] = bounds[q];
        slab.max[i] = bounds[q + 1];
        links.push(boolean_op(part, &make_box(&slab), BooleanOp::Intersect)?);
    }
    check_links(&links, part.volume())?;

    let end_point = |offset: f64| {
        let mut p = b.center();
        p[i] = offset;
        p
    };
    let reversed = match (
        distance_to_boxes(&end_point(lo), statics),
        distance_to_boxes(&end_point(hi), statics),
    ) {
        (Some(dl), Some(dh)) => dh < dl,
        _ => false,
    };
    let inset = 1e-3 * len;
    let section_at = |offset: f64| -> Result<Point3, SegmentationError> {
        Ok(section_centroid(part, &Plane::axis_aligned(axis, offset))?.unwrap_or_else(|| end_point(offset)))
    };
    let start = if reversed { hi - inset } else { lo + inset };
    let mut anchors = [Point3::origin(); 5];
    anchors[0] = section_at(start)?;
    let mut cut_anchors = Vec::with_capacity(3);
    for &c in &cuts {
        cut_anchors.push(section_at(c)?);
    }
    if reversed {
        links.reverse();
        cut_anchors.reverse();
    }
    anchors[1..4].copy_from_slice(&cut_anchors);
    let last = links[3].bounding_box()?;
    anchors[4] = far_face_center(&last, statics, &anchors[0]);
    for (k, l) in links.iter_mut().enumerate() {
        l.name = format!("link_{k}");
    }
    Ok(SegmentationResult {
        links,
        joint_anchors: anchors,
        mode: SegmentationMode::SlenderQuarter,
        cuts,
    })
}

fn axis_of(v: &Vector3) -> Option<Axis> {
    Axis::ALL.into_iter().find(|a| (v.abs() - a.unit()).norm() < 1e-9)
}

/// Quarters a part into four 90° sectors about `principal` through its
/// volume centroid.
pub fn segment_nonslender(
    part: &Mesh,
    principal: &Vector3,
    statics: &[Box3],
) -> Result<SegmentationResult, SegmentationError> {
    let axis = axis_of(principal).ok_or(SegmentationError::NotAxisAligned)?;
    let b = part.bounding_box()?;
    let c = part.centroid();
    let [a1, a2] = axis.others();
    let (e1, e2) = (a1.unit(), a2.unit());
    // boundary directions: sector k lies between dirs[k] and dirs[k + 1]
    let dirs = [e1, e2, -e1, -e2];
    let outer = b.expanded(CUTTER_MARGIN);
    let (i1, i2) = (a1.index(), a2.index());
    let mut sectors = Vec::with_capacity(4);
    for k in 0..4 {
        let mut q = outer;
        let (pos1, pos2) = match k {
            0 => (true, true),
            1 => (false, true),
            2 => (false, false),
            _ => (true, false),
        };
        if pos1 { q.min[i1] = c[i1] } else { q.max[i1] = c[i1] }
        if pos2 { q.min[i2] = c[i2] } else { q.max[i2] = c[i2] }
        sectors.push(boolean_op(part, &make_box(&q), BooleanOp::Intersect)?);
    }
    check_links(&sectors, part.volume())?;

    let dist: Vec<f64> = sectors
        .iter()
        .map(|s| distance_to_boxes(&s.centroid(), statics).unwrap_or(0.0))
        .collect();
    let mut first = 0;
    for k in 1..4 {
        if dist[k] < dist[first] - 1e-9 {
            first = k;
        }
    }
    let clockwise = dist[(first + 3) % 4] < dist[(first + 1) % 4] - 1e-9;
    let order: Vec<usize> = (0..4)
        .map(|s| if clockwise { (first + 4 - s) % 4 } else { (first + s) % 4 })
        .collect();
    // boundary shared by consecutive links, starting with the opening one
    let boundaries: Vec<usize> = (0..4)
        .map(|s| if clockwise { (first + 5 - s) % 4 } else { (first + s) % 4 })
        .collect();

    let extent = b.extents().max();
    let delta = 1e-4 * extent.max(1.0);
    let mut anchors = [Point3::origin(); 5];
    for (s, &j) in boundaries.iter().enumerate() {
        // sector j starts at boundary j; section it just inside that face
        let normal = dirs[(j + 1) % 4];
        let plane = Plane::new(c + normal * delta, normal).expect("unit normal");
        anchors[s] = section_centroid(&sectors[j], &plane)?.unwrap_or(c + dirs[j] * (extent / 4.0));
    }
    let mut links: Vec<Mesh> = order.iter().map(|&k| sectors[k].clone()).collect();
    let last = links[3].bounding_box()?;
    anchors[4] = far_face_center(&last, statics, &anchors[0]);
    for (k, l) in links.iter_mut().enumerate() {
        l.name = format!("link_{k}");
    }
    Ok(SegmentationResult {
        links,
        joint_anchors: anchors,
        mode: SegmentationMode::AngularQuarter,
        cuts: Vec::new(),
    })
}

pub fn segment(part: &Mesh, shape: &ShapeClass, statics: &[Box3]) -> Result<SegmentationResult, SegmentationError> {
    match (shape.kind, shape.principal_axis) {
        (ShapeKind::NonSlender, Some(p)) => segment_nonslender(part, &p, statics),
        _ => segment_slender(part, shape.longest_axis, statics),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_cylinder, make_grid_box, make_torus, make_uv_sphere};

    #[test]
    fn bar_quarters() {
        let bar = make_grid_box(&Box3::new(Point3::origin(), Point3::new(100.0, 20.0, 10.0)), 10.0);
        let s = segment_slender(&bar, Axis::X, &[]).unwrap();
        assert_eq!(s.cuts, vec![25.0, 50.0, 75.0]);
        for l in &s.links {
            assert!((l.volume() - 5000.0).abs() < 50.0, "{}", l.volume());
        }
        for k in 0..4 {
            assert!(s.joint_anchors[k + 1].x > s.joint_anchors[k].x);
        }
        assert!((s.joint_anchors[2] - Point3::new(50.0, 10.0, 5.0)).norm() < 1e-9);
    }

    #[test]
    fn static_end_comes_first() {
        let bar = make_grid_box(&Box3::new(Point3::origin(), Point3::new(100.0, 20.0, 10.0)), 10.0);
        let right = Box3::new(Point3::new(100.0, 0.0, 0.0), Point3::new(150.0, 20.0, 10.0));
        let s = segment_slender(&bar, Axis::X, &[right]).unwrap();
        assert!(s.joint_anchors[0].x > 99.0);
        assert!((s.joint_anchors[4].x - 0.0).abs() < 1e-9);
        assert!(s.links[0].bounding_box().unwrap().min.x >= 75.0 - 1e-9);
    }

    #[test]
    fn dumbbell_has_empty_quarter() {
        let a = make_uv_sphere(Point3::origin(), 10.0, 8, 16);
        let b = make_uv_sphere(Point3::new(100.0, 0.0, 0.0), 10.0, 8, 16);
        let r = segment_slender(&a.merged(&b), Axis::X, &[]);
        assert_eq!(r, Err(SegmentationError::EmptyLink(1)));
    }

    #[test]
    fn cylinder_and_ring_sectors() {
        let cyl = make_cylinder(Point3::origin(), Point3::new(0.0, 0.0, 20.0), 15.0, 48).unwrap();
        let s = segment_nonslender(&cyl, &Vector3::z(), &[]).unwrap();
        let v: Vec<f64> = s.links.iter().map(|l| l.volume()).collect();
        let total = cyl.volume();
        for x in &v {
            assert!((x - total / 4.0).abs() / (total / 4.0) < 0.02);
        }
        let ring = make_torus(Point3::origin(), 30.0, 6.0, 48, 16);
        let r = segment_nonslender(&ring, &Vector3::z(), &[]).unwrap();
        assert_eq!(r.links.len(), 4);
        for a in &r.joint_anchors[..4] {
            // anchors sit inside the tube, not at the empty center
            let radial = (a.x * a.x + a.y * a.y).sqrt();
            assert!((radial - 30.0).abs() < 6.0, "{a}");
        }
    }

    #[test]
    fn non_axis_principal_rejected() {
        let cyl = make_cylinder(Point3::origin(), Point3::new(0.0, 0.0, 20.0), 15.0, 16).unwrap();
        assert_eq!(
            segment_nonslender(&cyl, &Vector3::new(1.0, 1.0, 0.0).normalize(), &[]),
            Err(SegmentationError::NotAxisAligned)
        );
    }
}
