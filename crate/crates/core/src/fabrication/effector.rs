use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{FabricationError, MotorSpec, POCKET_CLEARANCE};
use crate::kinematics::Pose;
use crate::mesh::{boolean_op, make_annular_sector, make_box, make_cylinder, BooleanOp, Box3, Mesh, Point3, Vector3};
use crate::task::{AttachSurface, SurfaceKind, TaskSpec};

/// Radial play between a clamp and the surface it grips, mm.
pub const CLAMP_CLEARANCE: f64 = 0.2;
/// Largest printable part dimension, mm.
pub const PRINT_ENVELOPE: f64 = 200.0;

const CLAMP_WALL: f64 = 3.0;
const CLAMP_LENGTH: f64 = 20.0;
const CLAMP_SEGMENTS: usize = 48;
/// Opening left in a C-clamp so it can snap over the cylinder.
const CLAMP_OPENING: f64 = TAU / 4.0;
const PAD_THICKNESS: f64 = 3.0;
const PAD_HOLE_INSET: f64 = 5.0;
const PAD_HOLE_RADIUS: f64 = 1.6;
const GRIPPER_WALL: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EffectorKind {
    Gripper,
    CClamp,
    UChannel,
    FlatPad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndEffector {
    pub kind: EffectorKind,
    /// Built in its own frame; `mount` places it at the arm's tip.
    pub mesh: Mesh,
    pub mount: Pose,
    /// Whether it carries its own motor.
    pub motor: bool,
    /// Clamp bore radius for cylinder surfaces.
    pub inner_radius: Option<f64>,
}

fn envelope(kind: SurfaceKind, size: f64) -> Result<(), FabricationError> {
    if size > PRINT_ENVELOPE {
        return Err(FabricationError::UnsupportedSurface {
            kind,
            size,
            limit: PRINT_ENVELOPE,
        });
    }
    Ok(())
}

/// Palm housing with an open motor pocket plus two fingers.
fn gripper(motor: &MotorSpec) -> Result<Mesh, FabricationError> {
    let [bx, by, bz] = motor.body;
    let pocket = Vector3::new(bx, by, bz) / 2.0 + Vector3::repeat(POCKET_CLEARANCE);
    let outer = pocket + Vector3::repeat(GRIPPER_WALL);
    let palm = make_box(&Box3::new(Point3::from(-outer), Point3::from(outer)));
    // pocket runs out through the top face so the motor drops in
    let cavity = make_box(&Box3::new(
        Point3::new(-pocket.x, -pocket.y, -pocket.z),
        Point3::new(pocket.x, pocket.y, outer.z + 1.0),
    ));
    let mut mesh = boolean_op(&palm, &cavity, BooleanOp::Subtract)?;
    let finger = Vector3::new(4.0, 8.0, 40.0);
    for side in [-1.0, 1.0] {
        let x = side * (outer.x - finger.x / 2.0);
        let lo = Point3::new(x - finger.x / 2.0, -finger.y / 2.0, -outer.z - 2.0 - finger.z);
        mesh = mesh.merged(&make_box(&Box3::new(lo, lo + finger)));
    }
    Ok(mesh)
}

/// C-shaped band whose flat inner facets are tangent to `inner`.
fn c_clamp(inner: f64, length: f64) -> Result<Mesh, FabricationError> {
    let sweep = TAU - CLAMP_OPENING;
    let step = sweep / CLAMP_SEGMENTS as f64;
    // vertices sit outside the circle so chord midpoints touch it
    let vertex_radius = inner / (step / 2.0).cos();
    Ok(make_annular_sector(
        Point3::origin(),
        Vector3::z(),
        Vector3::new((CLAMP_OPENING / 2.0).cos(), (CLAMP_OPENING / 2.0).sin(), 0.0),
        vertex_radius,
        inner + CLAMP_WALL,
        sweep,
        length,
        CLAMP_SEGMENTS,
    )?)
}

fn u_channel(w: f64, h: f64, length: f64) -> Result<Mesh, FabricationError> {
    let iw = w / 2.0 + CLAMP_CLEARANCE;
    let depth = h + CLAMP_CLEARANCE;
    let outer = make_box(&Box3::new(
        Point3::new(-iw - CLAMP_WALL, -CLAMP_WALL, 0.0),
        Point3::new(iw + CLAMP_WALL, depth, length),
    ));
    let slot = make_box(&Box3::new(Point3::new(-iw, 0.0, -1.0), Point3::new(iw, depth + 1.0, length + 1.0)));
    Ok(boolean_op(&outer, &slot, BooleanOp::Subtract)?)
}

fn flat_pad(w: f64, h: f64) -> Result<Mesh, FabricationError> {
    let mut pad = make_box(&Box3::new(
        Point3::new(-w / 2.0, -h / 2.0, 0.0),
        Point3::new(w / 2.0, h / 2.0, PAD_THICKNESS),
    ));
    if w > 2.0 * PAD_HOLE_INSET + 2.0 * PAD_HOLE_RADIUS && h > 2.0 * PAD_HOLE_INSET + 2.0 * PAD_HOLE_RADIUS {
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let c = Point3::new(sx * (w / 2.0 - PAD_HOLE_INSET), sy * (h / 2.0 - PAD_HOLE_INSET), 0.0);
            let hole = make_cylinder(c - Vector3::z(), c + Vector3::z() * (PAD_THICKNESS + 1.0), PAD_HOLE_RADIUS, 16)?;
            pad = boolean_op(&pad, &hole, BooleanOp::Subtract)?;
        }
    }
    Ok(pad)
}

fn clamp_for(surface: &AttachSurface) -> Result<EndEffector, FabricationError> {
    surface.check()?;
    let d = &surface.dimensions;
    let (kind, mesh, inner_radius) = match surface.kind {
        SurfaceKind::Cylinder => {
            let inner = d[0] + CLAMP_CLEARANCE;
            envelope(surface.kind, 2.0 * (inner + CLAMP_WALL))?;
            let length = d[1].min(CLAMP_LENGTH);
            (EffectorKind::CClamp, c_clamp(inner, length)?, Some(inner))
        }
        SurfaceKind::RectangularPrism => {
            envelope(surface.kind, d[0] + 2.0 * (CLAMP_CLEARANCE + CLAMP_WALL))?;
            envelope(surface.kind, d[1] + CLAMP_CLEARANCE + CLAMP_WALL)?;
            (EffectorKind::UChannel, u_channel(d[0], d[1], d[2].min(CLAMP_LENGTH))?, None)
        }
        SurfaceKind::FlatPlane => {
            envelope(surface.kind, d[0].max(d[1]))?;
            (EffectorKind::FlatPad, flat_pad(d[0], d[1])?, None)
        }
    };
    Ok(EndEffector {
        kind,
        mesh: mesh.with_name("end_effector"),
        mount: Pose::identity(),
        motor: false,
        inner_radius,
    })
}

/// Gripper for pick-and-place tasks, a clamp sized to the attach surface
/// for attach tasks, nothing otherwise. Pick-and-place wins when a task has
/// both.
pub fn make_end_effector(spec: &TaskSpec, motor: &MotorSpec) -> Result<Option<EndEffector>, FabricationError> {
    if spec.has_pick_place() {
        return Ok(Some(EndEffector {
            kind: EffectorKind::Gripper,
            mesh: gripper(motor)?.with_name("end_effector"),
            mount: Pose::identity(),
            motor: true,
            inner_radius: None,
        }));
    }
    match (&spec.attach_surface, spec.has_attach()) {
        (Some(s), true) => Ok(Some(clamp_for(s)?)),
        _ => Ok(None),
    }
}
