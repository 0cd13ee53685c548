//! Motion points, actions and task-level rules.

use nalgebra::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Plane, Point3, Vector3};
use crate::selection::PartSplit;

/// Last and first point closer than this close the motion into a loop.
pub const LOOP_THRESHOLD_MM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Pick,
    Place,
    Trajectory,
    Attach,
}

impl Action {
    pub fn is_pick_place(self) -> bool {
        matches!(self, Action::Pick | Action::Place)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPoint {
    pub position: Point3,
    /// Desired end-effector pointing direction; `None` leaves it free.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Vector3>,
    pub action: Action,
}

impl MotionPoint {
    pub fn new(position: Point3, action: Action) -> Self {
        MotionPoint {
            position,
            orientation: None,
            action,
        }
    }

    pub fn oriented(mut self, dir: Vector3) -> Self {
        self.orientation = Some(dir);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SurfaceKind {
    Cylinder,
    RectangularPrism,
    FlatPlane,
}

impl SurfaceKind {
    pub fn dimension_count(self) -> usize {
        match self {
            SurfaceKind::Cylinder => 2,
            SurfaceKind::RectangularPrism => 3,
            SurfaceKind::FlatPlane => 2,
        }
    }
}

/// Surface an ATTACH point clamps onto. Dimensions are `[radius, length]`
/// for cylinders, `[w, h, d]` for prisms and `[w, h]` for planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachSurface {
    pub kind: SurfaceKind,
    pub position: Point3,
    pub orientation: Vector3,
    pub dimensions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("ATTACH point added but the task has no attach surface")]
    AttachWithoutSurface,
    #[error("attach surface {kind:?} needs {expected} positive dimensions, got {got:?}")]
    BadSurfaceDimensions {
        kind: SurfaceKind,
        expected: usize,
        got: Vec<f64>,
    },
    #[error("attach surface orientation must be unit length")]
    BadSurfaceOrientation,
}

impl AttachSurface {
    pub fn new(kind: SurfaceKind, position: Point3, orientation: Vector3, dimensions: Vec<f64>) -> Result<Self, TaskError> {
        let s = AttachSurface {
            kind,
            position,
            orientation,
            dimensions,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), TaskError> {
        let n = self.kind.dimension_count();
        if self.dimensions.len() != n || !self.dimensions.iter().all(|d| *d > 0.0 && d.is_finite()) {
            return Err(TaskError::BadSurfaceDimensions {
                kind: self.kind,
                expected: n,
                got: self.dimensions.clone(),
            });
        }
        if (self.orientation.norm() - 1.0).abs() > 1e-9 {
            return Err(TaskError::BadSurfaceOrientation);
        }
        Ok(())
    }
}

/// A reference object shown next to the model; never used for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceObject {
    pub mesh_path: String,
    #[serde(default)]
    pub translation: Vector3,
    /// Rotation as a scaled axis, radians.
    #[serde(default)]
    pub rotation: Vector3,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskSpec {
    pub points: Vec<MotionPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attach_surface: Option<AttachSurface>,
    #[serde(default)]
    pub references: Vec<ReferenceObject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Violation {
    NoPoints,
    PickPlaceImbalance { picks: usize, places: usize },
    AttachWithoutSurface { index: usize },
    NonUnitOrientation { index: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NoPoints => write!(f, "task has no motion points"),
            Violation::PickPlaceImbalance { picks, places } => {
                write!(f, "{picks} PICK and {places} PLACE points cannot come from alternation")
            }
            Violation::AttachWithoutSurface { index } => {
                write!(f, "point {index} is ATTACH but no attach surface is set")
            }
            Violation::NonUnitOrientation { index } => {
                write!(f, "point {index} has a non-unit orientation")
            }
        }
    }
}

impl TaskSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_surface(surface: AttachSurface) -> Self {
        TaskSpec {
            attach_surface: Some(surface),
            ..Self::default()
        }
    }

    /// Appends a point. PICK and PLACE are one action class: the role
    /// alternates PICK, PLACE, PICK, ... regardless of which was requested.
    pub fn add_point(&self, p: MotionPoint) -> Result<TaskSpec, TaskError> {
        if p.action == Action::Attach && self.attach_surface.is_none() {
            return Err(TaskError::AttachWithoutSurface);
        }
        let mut p = p;
        if p.action.is_pick_place() {
            let prior = self.points.iter().filter(|q| q.action.is_pick_place()).count();
            p.action = if prior % 2 == 0 { Action::Pick } else { Action::Place };
        }
        let mut next = self.clone();
        next.points.push(p);
        Ok(next)
    }

    pub fn is_loop(&self) -> bool {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) if self.points.len() >= 2 => (b.position - a.position).norm() < LOOP_THRESHOLD_MM,
            _ => false,
        }
    }

    pub fn count(&self, action: Action) -> usize {
        self.points.iter().filter(|p| p.action == action).count()
    }

    pub fn has_pick_place(&self) -> bool {
        self.points.iter().any(|p| p.action.is_pick_place())
    }

    pub fn has_attach(&self) -> bool {
        self.points.iter().any(|p| p.action == Action::Attach)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            out.push(Violation::NoPoints);
        }
        let (picks, places) = (self.count(Action::Pick), self.count(Action::Place));
        if !(picks >= places && places + 1 >= picks) {
            out.push(Violation::PickPlaceImbalance { picks, places });
        }
        for (index, p) in self.points.iter().enumerate() {
            if p.action == Action::Attach && self.attach_surface.is_none() {
                out.push(Violation::AttachWithoutSurface { index });
            }
            if let Some(o) = p.orientation {
                if (o.norm() - 1.0).abs() > 1e-9 {
                    out.push(Violation::NonUnitOrientation { index });
                }
            }
        }
        out
    }
}

/// Plane on which the next point is placed: through the transformable
/// part's box center for the first point, through the previous point after
/// that, always normal to the sweep axis.
pub fn reference_plane(spec: &TaskSpec, part: &PartSplit) -> Plane {
    let normal = part.selection.axis.unit();
    let origin = match spec.points.last() {
        Some(p) => p.position,
        None => part
            .transformable
            .bounding_box()
            .map(|b| b.center())
            .unwrap_or_else(|_| Point3::origin()),
    };
    Plane::new(origin, normal).expect("axis unit vector")
}

pub fn lift_to_3d(plane: &Plane, q: &Point2<f64>, offset: f64) -> Point3 {
    plane.lift(q, offset)
}

pub fn project_to_plane(plane: &Plane, p: &Point3) -> (Point2<f64>, f64) {
    plane.project(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(x: f64) -> MotionPoint {
        MotionPoint::new(Point3::new(x, 0.0, 0.0), Action::Pick)
    }

    #[test]
    fn pick_place_roles_alternate() {
        let s = TaskSpec::new().add_point(pp(0.0)).unwrap();
        assert_eq!(s.points[0].action, Action::Pick);
        let s = s.add_point(MotionPoint::new(Point3::new(1.0, 0.0, 0.0), Action::Trajectory)).unwrap();
        let s = s.add_point(pp(2.0)).unwrap();
        assert_eq!(s.points[2].action, Action::Place);
        let s = s.add_point(MotionPoint::new(Point3::origin(), Action::Place)).unwrap();
        assert_eq!(s.points[3].action, Action::Pick);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn loop_threshold_is_strict() {
        let a = MotionPoint::new(Point3::origin(), Action::Trajectory);
        let s = TaskSpec::new().add_point(a.clone()).unwrap();
        assert!(!s.is_loop());
        let near = s
            .add_point(MotionPoint::new(Point3::new(0.0, 0.0, 49.0), Action::Trajectory))
            .unwrap();
        assert!(near.is_loop());
        let edge = s
            .add_point(MotionPoint::new(Point3::new(0.0, 0.0, 50.0), Action::Trajectory))
            .unwrap();
        assert!(!edge.is_loop());
    }

    #[test]
    fn attach_requires_surface() {
        let p = MotionPoint::new(Point3::origin(), Action::Attach);
        assert_eq!(TaskSpec::new().add_point(p.clone()), Err(TaskError::AttachWithoutSurface));
        let raw = TaskSpec {
            points: vec![p],
            ..Default::default()
        };
        assert_eq!(raw.validate(), vec![Violation::AttachWithoutSurface { index: 0 }]);
    }

    #[test]
    fn validate_examples() {
        let seq = |acts: &[Action]| TaskSpec {
            points: acts.iter().map(|&a| MotionPoint::new(Point3::origin(), a)).collect(),
            ..Default::default()
        };
        assert!(seq(&[Action::Pick, Action::Trajectory, Action::Place]).validate().is_empty());
        assert_eq!(
            seq(&[Action::Place]).validate(),
            vec![Violation::PickPlaceImbalance { picks: 0, places: 1 }]
        );
        assert_eq!(seq(&[]).validate(), vec![Violation::NoPoints]);
        let mut bad = seq(&[Action::Trajectory]);
        bad.points[0].orientation = Some(Vector3::new(0.0, 0.0, 2.0));
        assert_eq!(bad.validate(), vec![Violation::NonUnitOrientation { index: 0 }]);
    }

    #[test]
    fn surface_dimensions_checked() {
        let ok = AttachSurface::new(SurfaceKind::Cylinder, Point3::origin(), Vector3::z(), vec![15.0, 40.0]);
        assert!(ok.is_ok());
        let bad = AttachSurface::new(SurfaceKind::RectangularPrism, Point3::origin(), Vector3::z(), vec![1.0, 0.0, 2.0]);
        assert!(matches!(bad, Err(TaskError::BadSurfaceDimensions { .. })));
    }

    #[test]
    fn lift_examples() {
        let plane = Plane::new(Point3::new(5.0, 0.0, 0.0), Vector3::x()).unwrap();
        assert_eq!(lift_to_3d(&plane, &Point2::origin(), 0.0), Point3::new(5.0, 0.0, 0.0));
        assert_eq!(lift_to_3d(&plane, &Point2::origin(), 10.0), Point3::new(15.0, 0.0, 0.0));
    }
}
