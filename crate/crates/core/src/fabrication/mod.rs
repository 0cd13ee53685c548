//! Printable parts for a chosen arm: connectors, motor shells, end-effectors,
//! joint trajectories and the exported bundle.

mod connectors;
mod effector;
mod export;
mod motor;
mod shells;
mod trajectory;

use nalgebra::Rotation3;
use thiserror::Error;

use crate::kinematics::{ArmConfiguration, BaseMode, JointKind};
use crate::mesh::{Mesh, MeshError, Point3, Vector3};
use crate::segmentation::SegmentationResult;
use crate::task::{Action, SurfaceKind};

pub use connectors::{apply_fillets, attach_connectors, Connector, ConnectorKind, Fillet, ScrewSpec};
pub use effector::{make_end_effector, EffectorKind, EndEffector, CLAMP_CLEARANCE, PRINT_ENVELOPE};
pub use export::{
    bundle_files, export_bundle, manifest, trajectory_csv, ComponentEntry, ConnectorEntry, EffectorEntry, Manifest, MotorEntry,
    TRAJECTORY_HEADER,
};
pub use motor::{MotorSpec, RivetHole, MOTOR_SPEC_ENV};
pub use shells::{place_motor_shells, MotorShell, ShellPlacement, POCKET_CLEARANCE, WALL};
pub use trajectory::{plan_trajectory, solve_ik, IkOptions, IkSolution, JointTrajectory, Waypoint, DEFAULT_SPEED_DEG_S};

/// Gap kept between a moving link and its neighbour, mm.
pub const JOINT_CLEARANCE: f64 = 1.0;

#[derive(Debug, Error)]
pub enum FabricationError {
    #[error("expected 4 links, got {0}")]
    BadLinkCount(usize),
    #[error("motor for joint {joint} needs {needed:?} mm but the link offers {available:?} mm")]
    MotorDoesNotFit {
        joint: usize,
        needed: [f64; 2],
        available: [f64; 2],
    },
    #[error("invalid motor spec: {0}")]
    BadMotorSpec(String),
    #[error("{kind:?} clamp would be {size:.1} mm, above the {limit} mm print envelope")]
    UnsupportedSurface { kind: SurfaceKind, size: f64, limit: f64 },
    #[error("motion point {point} is {distance:.3e} mm outside the workspace")]
    OutsideWorkspace { point: usize, distance: f64 },
    #[error("inverse kinematics for motion point {point} stopped {residual:.3} mm from the target")]
    IkDivergence { point: usize, residual: f64 },
    #[error("joint speed must be positive, got {0}")]
    BadSpeed(f64),
    #[error("workspace has no samples")]
    EmptyWorkspace,
    #[error(transparent)]
    Task(#[from] crate::task::TaskError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("export failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Geometry around one actuated joint at the rest pose.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSite {
    /// Chain index, 0 at the base.
    pub joint: usize,
    pub kind: JointKind,
    /// Link indices (segmentation order) on the base side and the moving side.
    pub inboard: Option<usize>,
    pub outboard: usize,
    pub anchor: Point3,
    pub pivot: Point3,
    pub axis: Vector3,
    /// Unit direction from the joint into the moving link, normal to `axis`.
    pub along: Vector3,
    /// `axis × along`.
    pub lateral: Vector3,
    /// Moving-link extent relative to `anchor`, as `[min, max]` along
    /// `along`, `lateral` and `axis`.
    pub spans: [[f64; 2]; 3],
    /// Distance from anchor to pivot along `along`.
    pub offset: f64,
    pub range: [f64; 2],
}

impl JointSite {
    /// Rotation whose columns are `along`, `lateral`, `axis`.
    pub fn frame(&self) -> Rotation3<f64> {
        Rotation3::from_basis_unchecked(&[self.along, self.lateral, self.axis])
    }

    pub fn half_width(&self) -> f64 {
        self.spans[1][0].abs().max(self.spans[1][1].abs())
    }

    pub fn is_locked(&self) -> bool {
        (self.range[1] - self.range[0]).abs() < 1e-12
    }

    /// Point at the given offsets from the anchor in the site frame.
    pub fn local(&self, t: f64, b: f64, w: f64) -> Point3 {
        self.anchor + self.along * t + self.lateral * b + self.axis * w
    }

    /// Middle of the moving link's thickness along the axis.
    pub fn mid_axis(&self) -> f64 {
        (self.spans[2][0] + self.spans[2][1]) / 2.0
    }
}

/// Segmentation index of chain link `k`.
pub fn chain_link(config: &ArmConfiguration, k: usize) -> usize {
    match config.base_mode {
        BaseMode::StaticIsBase => k,
        BaseMode::StaticIsEe => 3 - k,
    }
}

fn span(points: &[Point3], origin: &Point3, dir: &Vector3) -> [f64; 2] {
    points.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], p| {
        let s = (p - origin).dot(dir);
        [lo.min(s), hi.max(s)]
    })
}

fn any_perpendicular(v: &Vector3) -> Vector3 {
    let h = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    (h - v * h.dot(v)).normalize()
}

/// Joint sites for the four actuated joints of `config` at rest. The pivot
/// sits `half_width + JOINT_CLEARANCE` into the moving link (capped at half
/// the link) so its rounded end clears the neighbour while turning.
pub fn joint_sites(seg: &SegmentationResult, config: &ArmConfiguration) -> Result<Vec<JointSite>, FabricationError> {
    if seg.links.len() != 4 {
        return Err(FabricationError::BadLinkCount(seg.links.len()));
    }
    let rest = [0.0; 4];
    let axes = config.actuated_axes(&rest);
    let rows = config.actuated_rows();
    let ranges = config.value_ranges();
    let anchors = &config.chain_anchors;
    let mut sites = Vec::with_capacity(4);
    for j in 0..4 {
        let outboard = chain_link(config, j);
        let link = &seg.links[outboard];
        let axis = axes[j].1.normalize();
        let anchor = anchors[j];
        let to_next = anchors[j + 1] - anchor;
        let planar = to_next - axis * to_next.dot(&axis);
        let along = if planar.norm() > 1e-6 {
            planar.normalize()
        } else {
            let c = link.centroid() - anchor;
            let pc = c - axis * c.dot(&axis);
            if pc.norm() > 1e-6 {
                pc.normalize()
            } else {
                any_perpendicular(&axis)
            }
        };
        let lateral = axis.cross(&along);
        let spans = [
            span(&link.vertices, &anchor, &along),
            span(&link.vertices, &anchor, &lateral),
            span(&link.vertices, &anchor, &axis),
        ];
        let half = spans[1][0].abs().max(spans[1][1].abs());
        let offset = (half + JOINT_CLEARANCE).min(0.5 * planar.norm().max(spans[0][1]));
        sites.push(JointSite {
            joint: j,
            kind: config.dh_table[rows[j]].kind,
            inboard: (j > 0).then(|| chain_link(config, j - 1)),
            outboard,
            anchor,
            pivot: anchor + along * offset,
            axis,
            along,
            lateral,
            spans,
            offset,
            range: ranges[j],
        });
    }
    Ok(sites)
}

/// Axis shared by the driving joints at rest.
pub fn driving_axis_of(config: &ArmConfiguration) -> Option<Vector3> {
    let axes = config.actuated_axes(&[0.0; 4]);
    config
        .actuated_rows()
        .iter()
        .zip(axes)
        .find(|(r, _)| config.dh_table[**r].kind == JointKind::Driving)
        .map(|(_, (_, a))| a.normalize())
}

/// Everything needed to print and assemble one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct FabricationBundle {
    /// Links with fillets and motor pockets applied, segmentation order.
    pub links: Vec<Mesh>,
    pub connectors: Vec<Connector>,
    pub shells: Vec<MotorShell>,
    pub end_effector: Option<EndEffector>,
    pub pillar: Option<Mesh>,
    /// `None` for manual arms.
    pub motor: Option<MotorSpec>,
    pub configuration: ArmConfiguration,
    pub trajectory: JointTrajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FabricationOptions {
    pub motorized: bool,
    pub speed_deg_s: f64,
    pub ik: IkOptions,
}

impl Default for FabricationOptions {
    fn default() -> Self {
        FabricationOptions {
            motorized: true,
            speed_deg_s: DEFAULT_SPEED_DEG_S,
            ik: IkOptions::default(),
        }
    }
}

/// Runs connectors, fillets, shells, end-effector and trajectory planning.
pub fn build_bundle(
    seg: &SegmentationResult,
    config: &ArmConfiguration,
    spec: &crate::task::TaskSpec,
    ws: &crate::workspace::Workspace,
    motor: &MotorSpec,
    pillar: Option<Mesh>,
    options: &FabricationOptions,
) -> Result<FabricationBundle, FabricationError> {
    let connectors = attach_connectors(seg, config, options.motorized)?;
    let filleted = apply_fillets(&seg.links, &connectors)?;
    let (links, shells) = if options.motorized {
        let staged = SegmentationResult {
            links: filleted,
            ..seg.clone()
        };
        let placed = place_motor_shells(&staged, config, motor)?;
        (placed.links, placed.shells)
    } else {
        (filleted, Vec::new())
    };
    let mut end_effector = make_end_effector(spec, motor)?;
    if let Some(e) = end_effector.as_mut() {
        e.mount = config.end_pose(&[0.0; 4]);
        e.motor &= options.motorized;
    }
    let trajectory = trajectory::plan_with(config, ws, spec, options.speed_deg_s, options.motorized, &options.ik)?;
    Ok(FabricationBundle {
        links,
        connectors,
        shells,
        end_effector,
        pillar,
        motor: options.motorized.then(|| motor.clone()),
        configuration: config.clone(),
        trajectory,
    })
}

/// Label used for an optional action in exported files.
pub fn action_label(action: Option<Action>) -> &'static str {
    match action {
        None => "REST",
        Some(Action::Pick) => "PICK",
        Some(Action::Place) => "PLACE",
        Some(Action::Trajectory) => "TRAJECTORY",
        Some(Action::Attach) => "ATTACH",
    }
}
