//! Sweep selection of the transformable part, static parts, pillar bridging
//! and shape classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{
    boolean_op, connected_components, cross_section, make_box, make_cylinder, Axis, BooleanOp, Box3, Mesh,
    MeshError, Plane, Vector3,
};

/// Fraction of the smaller lateral extent used as pillar radius.
pub const PILLAR_RADIUS_RATIO: f64 = 0.25;
/// Smallest pillar radius considered printable, mm.
pub const MIN_PILLAR_RADIUS: f64 = 1.0;
/// Static fragments below this volume (mm³) are treated as boolean noise.
pub const MIN_STATIC_VOLUME: f64 = 1.0;
/// Cross-section offsets sampled per axis when looking for the principal axis.
pub const SECTION_SAMPLES: usize = 9;
pub const SLENDER_RATIO: f64 = 4.0;

const PILLAR_SEGMENTS: usize = 32;
/// How far the sweep cuboid reaches past the object on the other axes.
const SWEEP_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSelection {
    pub axis: Axis,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartSplit {
    pub transformable: Mesh,
    pub statics: Vec<Mesh>,
    pub pillar: Option<Mesh>,
    pub selection: SweepSelection,
    pub source: Mesh,
}

impl PartSplit {
    pub fn static_boxes(&self) -> Vec<Box3> {
        self.statics.iter().filter_map(|m| m.bounding_box().ok()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ShapeKind {
    Slender,
    NonSlender,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeClass {
    pub kind: ShapeKind,
    pub longest_axis: Axis,
    /// Set for non-slender parts only.
    pub principal_axis: Option<Vector3>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("selection [{start}, {end}] on {axis:?} is outside [{min}, {max}] or not increasing")]
    SelectionOutOfRange {
        axis: Axis,
        start: f64,
        end: f64,
        min: f64,
        max: f64,
    },
    #[error("selection does not intersect the object")]
    EmptySelection,
    #[error("bridging needs exactly 2 static parts, found {0}")]
    NotDisjoint(usize),
    #[error("no pillar radius >= {MIN_PILLAR_RADIUS} mm leaves {clearance} mm clearance in a {lateral} mm wide part")]
    InsufficientClearance { clearance: f64, lateral: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub fn select_part(source: &Mesh, sel: &SweepSelection) -> Result<PartSplit, SelectionError> {
    let bbox = source.bounding_box()?;
    let i = sel.axis.index();
    let (min, max) = (bbox.min[i], bbox.max[i]);
    let tol = 1e-9 * (1.0 + max.abs().max(min.abs()));
    let valid = sel.start.is_finite()
        && sel.end.is_finite()
        && sel.start < sel.end
        && sel.start >= min - tol
        && sel.end <= max + tol;
    if !valid {
        return Err(SelectionError::SelectionOutOfRange {
            axis: sel.axis,
            start: sel.start,
            end: sel.end,
            min,
            max,
        });
    }
    let mut cuboid = bbox.expanded(SWEEP_MARGIN);
    // ends at the object's extremes are pushed outward to avoid coplanar faces
    cuboid.min[i] = if sel.start <= min + tol { min - SWEEP_MARGIN } else { sel.start };
    cuboid.max[i] = if sel.end >= max - tol { max + SWEEP_MARGIN } else { sel.end };
    let cutter = make_box(&cuboid);
    let transformable = boolean_op(source, &cutter, BooleanOp::Intersect)?.with_name("transformable");
    if transformable.is_empty() || transformable.volume() <= 1e-9 {
        return Err(SelectionError::EmptySelection);
    }
    let rest = boolean_op(source, &cutter, BooleanOp::Subtract)?;
    let mut statics: Vec<Mesh> = if rest.is_empty() {
        Vec::new()
    } else {
        connected_components(&rest)
            .into_iter()
            .filter(|c| c.volume() >= MIN_STATIC_VOLUME)
            .collect()
    };
    statics.sort_by(|a, b| {
        let ca = a.bounding_box().map(|b| b.center()[i]).unwrap_or(0.0);
        let cb = b.bounding_box().map(|b| b.center()[i]).unwrap_or(0.0);
        ca.total_cmp(&cb)
    });
    for (k, s) in statics.iter_mut().enumerate() {
        s.name = format!("static_{k}");
    }
    Ok(PartSplit {
        transformable,
        statics,
        pillar: None,
        selection: *sel,
        source: source.clone(),
    })
}

/// Pillar radius for a part of the given smaller lateral extent.
pub fn pillar_radius(lateral: f64, motor_clearance: f64) -> Result<f64, SelectionError> {
    let r = (PILLAR_RADIUS_RATIO * lateral).min((lateral - 2.0 * motor_clearance) / 2.0);
    if !(r >= MIN_PILLAR_RADIUS) {
        return Err(SelectionError::InsufficientClearance {
            clearance: motor_clearance,
            lateral,
        });
    }
    Ok(r)
}

/// Connects two static parts left on either side of a mid-object selection
/// with a cylinder along the sweep axis.
pub fn bridge_disjoint(split: &PartSplit, motor_clearance: f64) -> Result<PartSplit, SelectionError> {
    if split.statics.len() != 2 {
        return Err(SelectionError::NotDisjoint(split.statics.len()));
    }
    let axis = split.selection.axis;
    let i = axis.index();
    let tb = split.transformable.bounding_box()?;
    let [o1, o2] = axis.others();
    let lateral = tb.extents()[o1.index()].min(tb.extents()[o2.index()]);
    let radius = pillar_radius(lateral, motor_clearance)?;
    let (b0, b1) = (split.statics[0].bounding_box()?, split.statics[1].bounding_box()?);
    let (lo, hi) = if b0.center()[i] <= b1.center()[i] { (b0, b1) } else { (b1, b0) };
    let mut start = tb.center();
    let mut end = tb.center();
    start[i] = lo.max[i];
    end[i] = hi.min[i];
    let pillar = make_cylinder(start, end, radius, PILLAR_SEGMENTS)?.with_name("pillar");
    Ok(PartSplit {
        pillar: Some(pillar),
        ..split.clone()
    })
}

pub fn classify_shape(part: &Mesh) -> Result<ShapeClass, MeshError> {
    let b = part.bounding_box()?;
    let e = b.extents();
    let longest = Axis::ALL
        .into_iter()
        .max_by(|a, c| e[a.index()].total_cmp(&e[c.index()]).then(c.index().cmp(&a.index())))
        .unwrap();
    let l = e[longest.index()];
    let slender = longest
        .others()
        .iter()
        .all(|o| l >= SLENDER_RATIO * e[o.index()]);
    if slender {
        return Ok(ShapeClass {
            kind: ShapeKind::Slender,
            longest_axis: longest,
            principal_axis: None,
        });
    }
    let mut best: Option<(f64, Axis)> = None;
    for axis in Axis::ALL {
        let area = max_section_area(part, &b, axis)?;
        if best.is_none_or(|(a, _)| area > a) {
            best = Some((area, axis));
        }
    }
    let (_, axis) = best.unwrap();
    Ok(ShapeClass {
        kind: ShapeKind::NonSlender,
        longest_axis: longest,
        principal_axis: Some(axis.unit()),
    })
}

/// Largest cross-section area over evenly spaced interior offsets.
pub fn max_section_area(part: &Mesh, b: &Box3, axis: Axis) -> Result<f64, MeshError> {
    let i = axis.index();
    let mut best = 0.0f64;
    for k in 0..SECTION_SAMPLES {
        let t = (k as f64 + 1.0) / (SECTION_SAMPLES as f64 + 1.0);
        let offset = b.min[i] + t * (b.max[i] - b.min[i]);
        let s = cross_section(part, &Plane::axis_aligned(axis, offset))?;
        best = best.max(s.area.abs());
    }
    Ok(best)
}
