//! Modified DH rows, forward kinematics and the seven-row arm template.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{Point3, Vector3};
use crate::segmentation::SegmentationResult;
use crate::selection::{PartSplit, ShapeClass, ShapeKind};

pub const DRIVING_RANGE: f64 = FRAC_PI_2;
pub const STEERING_RANGE: f64 = 150.0 * std::f64::consts::PI / 180.0;
/// Number of actuated joints in every configuration.
pub const JOINTS: usize = 4;
pub const CONFIGURATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JointKind {
    Steering,
    Driving,
    EndEffector,
    Locked,
}

impl JointKind {
    pub fn is_actuated(self) -> bool {
        matches!(self, JointKind::Steering | JointKind::Driving)
    }
}

/// One modified-DH row. `theta` is the joint angle at rest; an actuated
/// joint value is a displacement added to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta: f64,
    pub theta_range: [f64; 2],
    pub kind: JointKind,
}

impl DhRow {
    pub fn fixed(a: f64, alpha: f64, d: f64, theta: f64) -> DhRow {
        DhRow {
            a,
            alpha,
            d,
            theta,
            theta_range: [theta, theta],
            kind: JointKind::Locked,
        }
    }

    pub fn revolute(a: f64, alpha: f64, d: f64, theta: f64, half_range: f64, kind: JointKind) -> DhRow {
        DhRow {
            a,
            alpha,
            d,
            theta,
            theta_range: [theta - half_range, theta + half_range],
            kind,
        }
    }

    /// Range of the joint value (displacement from rest).
    pub fn value_range(&self) -> [f64; 2] {
        [self.theta_range[0] - self.theta, self.theta_range[1] - self.theta]
    }

    pub fn locked(mut self) -> DhRow {
        self.theta_range = [self.theta, self.theta];
        if self.kind.is_actuated() {
            self.kind = JointKind::Locked;
        }
        self
    }
}

/// Rigid transform; rotation columns are the n, o, a axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3,
}

impl Pose {
    pub fn identity() -> Pose {
        Pose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_axes(origin: Point3, x: Vector3, y: Vector3, z: Vector3) -> Pose {
        Pose {
            rotation: Matrix3::from_columns(&[x, y, z]),
            translation: origin.coords,
        }
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn position(&self) -> Point3 {
        Point3::from(self.translation)
    }

    pub fn n_axis(&self) -> Vector3 {
        self.rotation.column(0).into_owned()
    }

    pub fn z_axis(&self) -> Vector3 {
        self.rotation.column(2).into_owned()
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_rigid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        (r.transpose() * r - Matrix3::identity()).abs().max() <= tol && (r.determinant() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("expected {expected} joint values, got {got}")]
    ValueCountMismatch { expected: usize, got: usize },
    #[error("template needs 4 links, got {0}")]
    BadLinkCount(usize),
}

/// Transform of a row's frame relative to the previous one, at the row's
/// own `theta`.
pub fn dh_transform(row: &DhRow) -> Pose {
    dh_at(row, row.theta)
}

fn dh_at(row: &DhRow, theta: f64) -> Pose {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Pose {
        rotation: Matrix3::new(ct, -st, 0.0, st * ca, ct * ca, -sa, st * sa, ct * sa, ca),
        translation: Vector3::new(row.a, -sa * row.d, ca * row.d),
    }
}

pub fn actuated_count(rows: &[DhRow]) -> usize {
    rows.iter().filter(|r| r.kind.is_actuated()).count()
}

/// Frames of every row in order; actuated rows consume one value each.
pub fn chain_frames(rows: &[DhRow], values: &[f64]) -> Result<Vec<Pose>, KinematicsError> {
    let expected = actuated_count(rows);
    if values.len() != expected {
        return Err(KinematicsError::ValueCountMismatch {
            expected,
            got: values.len(),
        });
    }
    let mut out = Vec::with_capacity(rows.len());
    let mut pose = Pose::identity();
    let mut next = values.iter();
    for row in rows {
        let theta = if row.kind.is_actuated() {
            row.theta + next.next().copied().unwrap_or(0.0)
        } else {
            row.theta
        };
        pose = pose.compose(&dh_at(row, theta));
        out.push(pose);
    }
    Ok(out)
}

pub fn forward_kinematics(rows: &[DhRow], values: &[f64]) -> Result<Pose, KinematicsError> {
    Ok(chain_frames(rows, values)?.last().copied().unwrap_or_else(Pose::identity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BaseMode {
    StaticIsBase,
    StaticIsEe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ArmCase {
    Unfolded,
    FoldedEeOnTransformable,
    FoldedEeOnStatic,
}

impl ArmCase {
    pub fn choose(shape: ShapeKind, base_mode: BaseMode) -> ArmCase {
        match (shape, base_mode) {
            (ShapeKind::Slender, _) => ArmCase::Unfolded,
            (ShapeKind::NonSlender, BaseMode::StaticIsBase) => ArmCase::FoldedEeOnTransformable,
            (ShapeKind::NonSlender, BaseMode::StaticIsEe) => ArmCase::FoldedEeOnStatic,
        }
    }

    /// Index, counted from the base of the chain, of the joint that carries
    /// the steering rows.
    pub fn steering_joint(self) -> usize {
        match self {
            ArmCase::Unfolded | ArmCase::FoldedEeOnStatic => 0,
            ArmCase::FoldedEeOnTransformable => 1,
        }
    }
}

/// Seven rows covering all three configurations plus one mask per
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmTemplate {
    pub rows: Vec<DhRow>,
    /// `configurations[k][r]` is true when row `r` is actuated in configuration `k`.
    pub configurations: [[bool; 7]; 3],
    pub base_mode: BaseMode,
    pub case: ArmCase,
    pub base_frame: Pose,
    /// Row indices of the three candidate steering rows.
    pub steering_rows: [usize; 3],
    /// Joint anchors in chain order (four joints, then the end-effector).
    pub chain_anchors: [Point3; 5],
    /// Axis shared by the driving joints.
    pub driving_axis: Vector3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmConfiguration {
    pub index: usize,
    /// All seven rows; steering rows not used by this configuration are locked.
    pub dh_table: Vec<DhRow>,
    /// Rest values of the four actuated joints (all zero).
    pub joint_values: [f64; 4],
    pub link_lengths: [f64; 4],
    pub base_frame: Pose,
    pub case: ArmCase,
    pub base_mode: BaseMode,
    pub steering_joint: usize,
    pub chain_anchors: [Point3; 5],
}

impl ArmConfiguration {
    pub fn actuated_rows(&self) -> Vec<usize> {
        (0..self.dh_table.len())
            .filter(|&r| self.dh_table[r].kind.is_actuated())
            .collect()
    }

    pub fn value_ranges(&self) -> [[f64; 2]; 4] {
        let rows = self.actuated_rows();
        std::array::from_fn(|k| self.dh_table[rows[k]].value_range())
    }

    /// End-effector pose in object coordinates.
    pub fn end_pose(&self, values: &[f64; 4]) -> Pose {
        let fk = forward_kinematics(&self.dh_table, values).expect("four actuated rows");
        self.base_frame.compose(&fk)
    }

    /// Origins of every row frame in object coordinates; the last entry is
    /// the end-effector.
    pub fn joint_positions(&self, values: &[f64; 4]) -> Vec<Point3> {
        chain_frames(&self.dh_table, values)
            .expect("four actuated rows")
            .iter()
            .map(|f| self.base_frame.compose(f).position())
            .collect()
    }

    /// World frames of every row.
    pub fn frames(&self, values: &[f64; 4]) -> Vec<Pose> {
        chain_frames(&self.dh_table, values)
            .expect("four actuated rows")
            .iter()
            .map(|f| self.base_frame.compose(f))
            .collect()
    }

    /// Joint axes and pivots (world) of the actuated joints at `values`.
    pub fn actuated_axes(&self, values: &[f64; 4]) -> Vec<(Point3, Vector3)> {
        let frames = self.frames(values);
        self.actuated_rows()
            .into_iter()
            .map(|r| (frames[r].position(), frames[r].z_axis()))
            .collect()
    }
}

impl ArmTemplate {
    pub fn configuration(&self, index: usize) -> ArmConfiguration {
        let mask = self.configurations[index];
        let dh_table = self
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                if row.kind == JointKind::Steering && !mask[r] {
                    row.locked()
                } else {
                    *row
                }
            })
            .collect();
        let a = &self.chain_anchors;
        ArmConfiguration {
            index,
            dh_table,
            joint_values: [0.0; 4],
            link_lengths: std::array::from_fn(|k| (a[k + 1] - a[k]).norm()),
            base_frame: self.base_frame,
            case: self.case,
            base_mode: self.base_mode,
            steering_joint: self.case.steering_joint(),
            chain_anchors: self.chain_anchors,
        }
    }
}

fn perpendicular_part(v: &Vector3, axis: &Vector3) -> Vector3 {
    v - axis * v.dot(axis)
}

fn signed_angle(from: &Vector3, to: &Vector3, axis: &Vector3) -> f64 {
    from.cross(to).dot(axis).atan2(from.dot(to))
}

/// Builds the seven-row template over `anchors` (four joints then the
/// end-effector, in chain order) with the driving joints about `u` and the
/// steering rows at joint `steering`.
pub fn template_from_anchors(
    anchors: [Point3; 5],
    u: Vector3,
    steering: usize,
    case: ArmCase,
    base_mode: BaseMode,
) -> ArmTemplate {
    let u = u.normalize();
    let seed = {
        // any direction perpendicular to u, for links without planar length
        let h = if u.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        perpendicular_part(&h, &u).normalize()
    };
    // planar direction and length of each link, plus the offset along u
    let mut dirs = [Vector3::zeros(); 4];
    let mut planar = [0.0; 4];
    let mut lift = [0.0; 4];
    let mut prev = None;
    for k in 0..4 {
        let v = anchors[k + 1] - anchors[k];
        let p = perpendicular_part(&v, &u);
        planar[k] = p.norm();
        lift[k] = v.dot(&u);
        dirs[k] = if planar[k] > 1e-9 {
            p / planar[k]
        } else {
            prev.unwrap_or(seed)
        };
        prev = Some(dirs[k]);
    }
    // turn at joint k between the incoming and outgoing link directions
    let turn = |k: usize| if k == 0 { 0.0 } else { signed_angle(&dirs[k - 1], &dirs[k], &u) };

    let x0 = dirs[0];
    let y0 = u.cross(&x0);
    let base_frame = if steering == 0 {
        Pose::from_axes(anchors[0], u, x0, y0)
    } else {
        Pose::from_axes(anchors[0], x0, y0, u)
    };

    let mut rows = Vec::with_capacity(7);
    let mut steering_rows = [0; 3];
    for k in 0..4 {
        let (a, d) = if k == 0 { (0.0, 0.0) } else { (planar[k - 1], lift[k - 1]) };
        if k == steering {
            let first_alpha = if k == 0 { 0.0 } else { -FRAC_PI_2 };
            let first_theta = if k == 0 { 0.0 } else { -FRAC_PI_2 };
            steering_rows = [rows.len(), rows.len() + 1, rows.len() + 2];
            rows.push(DhRow::revolute(a, first_alpha, 0.0, first_theta, STEERING_RANGE, JointKind::Steering));
            rows.push(DhRow::revolute(0.0, -FRAC_PI_2, 0.0, -FRAC_PI_2, STEERING_RANGE, JointKind::Steering));
            rows.push(DhRow::revolute(
                0.0,
                -FRAC_PI_2,
                d,
                -FRAC_PI_2 + turn(k),
                STEERING_RANGE,
                JointKind::Steering,
            ));
        } else {
            rows.push(DhRow::revolute(a, 0.0, d, turn(k), DRIVING_RANGE, JointKind::Driving));
        }
    }
    rows.push(DhRow {
        kind: JointKind::EndEffector,
        ..DhRow::fixed(planar[3], 0.0, lift[3], 0.0)
    });
    let mut configurations = [[false; 7]; 3];
    for (c, mask) in configurations.iter_mut().enumerate() {
        for (r, row) in rows.iter().enumerate() {
            mask[r] = match row.kind {
                JointKind::Driving => true,
                JointKind::Steering => r == steering_rows[c],
                _ => false,
            };
        }
    }
    ArmTemplate {
        rows,
        configurations,
        base_mode,
        case,
        base_frame,
        steering_rows,
        chain_anchors: anchors,
        driving_axis: u,
    }
}

/// Driving axis of a part: the principal axis for non-slender parts, the
/// thinnest lateral axis for slender ones.
pub fn driving_axis(split: &PartSplit, shape: &ShapeClass) -> Vector3 {
    if let Some(p) = shape.principal_axis {
        return p;
    }
    let e = split
        .transformable
        .bounding_box()
        .map(|b| b.extents())
        .unwrap_or_else(|_| Vector3::repeat(1.0));
    let [a, b] = shape.longest_axis.others();
    if e[b.index()] < e[a.index()] {
        b.unit()
    } else {
        a.unit()
    }
}

/// Chain-ordered anchors: from the static part outward when it is the
/// base, from the free end inward when the static part is carried.
pub fn chain_anchors(split: &PartSplit, base_mode: BaseMode, links: &SegmentationResult) -> [Point3; 5] {
    let a = &links.joint_anchors;
    match base_mode {
        BaseMode::StaticIsBase => *a,
        BaseMode::StaticIsEe => {
            let ee = static_tip(split, &a[0]).unwrap_or(a[0]);
            [a[4], a[3], a[2], a[1], ee]
        }
    }
}

/// Face center of the static part's box farthest from `from`.
fn static_tip(split: &PartSplit, from: &Point3) -> Option<Point3> {
    let boxes = split.static_boxes();
    let nearest = boxes
        .iter()
        .min_by(|x, y| x.distance_to(from).total_cmp(&y.distance_to(from)))?;
    let c = nearest.center();
    let h = nearest.extents() / 2.0;
    let mut best: Option<(f64, Point3)> = None;
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let mut f = c;
            f[axis] += sign * h[axis];
            let d = (f - from).norm();
            if best.is_none_or(|(bd, _)| d > bd + 1e-9) {
                best = Some((d, f));
            }
        }
    }
    best.map(|b| b.1)
}

pub fn build_template(
    split: &PartSplit,
    shape: &ShapeClass,
    base_mode: BaseMode,
    links: &SegmentationResult,
) -> Result<ArmTemplate, KinematicsError> {
    if links.links.len() != 4 {
        return Err(KinematicsError::BadLinkCount(links.links.len()));
    }
    let case = ArmCase::choose(shape.kind, base_mode);
    let anchors = chain_anchors(split, base_mode, links);
    let u = driving_axis(split, shape);
    Ok(template_from_anchors(anchors, u, case.steering_joint(), case, base_mode))
}

/// Rotation matrix about a unit axis, for tests and tooling.
pub fn axis_rotation(axis: Vector3, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).into_inner()
}
