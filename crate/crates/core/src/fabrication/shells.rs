use nalgebra::{Matrix3, Rotation3};

use super::{joint_sites, FabricationError, JointSite, MotorSpec};
use crate::kinematics::ArmConfiguration;
use crate::mesh::{boolean_op, make_cylinder, make_frame_box, BooleanOp, Mesh, Point3, Vector3};
use crate::segmentation::SegmentationResult;

/// Play around the motor body inside its pocket, mm.
pub const POCKET_CLEARANCE: f64 = 0.3;
/// Minimum material left around a pocket, mm.
pub const WALL: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MotorShell {
    pub joint: usize,
    /// Link (segmentation order) that carries the motor.
    pub link: usize,
    pub pivot: Point3,
    pub axis: Vector3,
    /// Body center and orientation (columns: body x, y, z) in object space.
    pub center: Point3,
    pub rotation: Matrix3<f64>,
    /// Solid removed from the link: pocket, horn bore and rivet holes.
    pub cutter: Mesh,
    /// Rivet hole centers on the body, object space.
    pub rivets: Vec<Point3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellPlacement {
    pub links: Vec<Mesh>,
    pub shells: Vec<MotorShell>,
}

/// Body orientations tried in order, as site-frame images of body x and y;
/// body z always follows the joint axis.
const ORIENTATIONS: [([f64; 3], [f64; 3]); 4] = [
    ([0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]),
    ([0.0, -1.0, 0.0], [1.0, 0.0, 0.0]),
    ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
    ([-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]),
];

struct Fit {
    /// Body rotation in the site frame.
    local: Matrix3<f64>,
    /// Body center relative to the anchor, site frame.
    center: Vector3,
}

fn try_fit(site: &JointSite, motor: &MotorSpec) -> Option<Fit> {
    let e = Vector3::from(motor.body) / 2.0 + Vector3::repeat(POCKET_CLEARANCE);
    for (x, y) in ORIENTATIONS {
        let (x, y) = (Vector3::from(x), Vector3::from(y));
        let local = Matrix3::from_columns(&[x, y, x.cross(&y)]);
        let horn = local * Vector3::new(motor.horn_offset.x, motor.horn_offset.y, 0.0);
        let center = Vector3::new(site.offset - horn.x, -horn.y, site.mid_axis());
        let half = local.abs() * e;
        let fits = (0..3).all(|k| {
            center[k] - half[k] - WALL >= site.spans[k][0].max(if k == 0 { 0.0 } else { f64::NEG_INFINITY })
                && center[k] + half[k] + WALL <= site.spans[k][1]
        });
        if fits {
            return Some(Fit { local, center });
        }
    }
    None
}

fn cutter(site: &JointSite, motor: &MotorSpec, fit: &Fit) -> Result<(Mesh, Matrix3<f64>, Point3, Vec<Point3>), FabricationError> {
    let frame = site.frame().into_inner();
    let rotation = frame * fit.local;
    let center = site.anchor + frame * fit.center;
    let e = Vector3::from(motor.body) / 2.0 + Vector3::repeat(POCKET_CLEARANCE);
    let mut cut = make_frame_box(center, &Rotation3::from_matrix_unchecked(rotation), e);
    // the horn needs an opening through the link face
    let bore_end = site.local(site.offset, 0.0, site.spans[2][1] + 1.0);
    let bore_start = site.local(site.offset, 0.0, fit.center.z);
    let bore = make_cylinder(bore_start, bore_end, motor.horn_radius + POCKET_CLEARANCE, 32)?;
    cut = boolean_op(&cut, &bore, BooleanOp::Union)?;
    let reach = site.spans.iter().map(|s| s[1] - s[0]).fold(0.0, f64::max) + 2.0;
    let bx = rotation.column(0).into_owned();
    let mut rivets = Vec::with_capacity(motor.rivet_holes.len());
    for h in &motor.rivet_holes {
        let p = center + rotation * h.position;
        let hole = make_cylinder(p - bx * reach, p + bx * reach, h.diameter / 2.0, 16)?;
        cut = boolean_op(&cut, &hole, BooleanOp::Union)?;
        rivets.push(p);
    }
    Ok((cut.with_name("motor_pocket"), rotation, center, rivets))
}

/// Subtracts a motor pocket from the moving link of every joint with a
/// non-zero range.
pub fn place_motor_shells(
    seg: &SegmentationResult,
    config: &ArmConfiguration,
    motor: &MotorSpec,
) -> Result<ShellPlacement, FabricationError> {
    motor.check()?;
    let sites = joint_sites(seg, config)?;
    let mut links = seg.links.clone();
    let mut shells = Vec::new();
    for site in sites.iter().filter(|s| !s.is_locked()) {
        let Some(fit) = try_fit(site, motor) else {
            let e = Vector3::from(motor.body) + Vector3::repeat(2.0 * (POCKET_CLEARANCE + WALL));
            return Err(FabricationError::MotorDoesNotFit {
                joint: site.joint,
                needed: [e.z, e.x.min(e.y)],
                available: [site.spans[2][1] - site.spans[2][0], site.spans[1][1] - site.spans[1][0]],
            });
        };
        let (cut, rotation, center, rivets) = cutter(site, motor, &fit)?;
        let name = links[site.outboard].name.clone();
        links[site.outboard] = boolean_op(&links[site.outboard], &cut, BooleanOp::Subtract)?.with_name(name);
        shells.push(MotorShell {
            joint: site.joint,
            link: site.outboard,
            pivot: site.pivot,
            axis: site.axis,
            center,
            rotation,
            cutter: cut,
            rivets,
        });
    }
    Ok(ShellPlacement { links, shells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{build_template, BaseMode};
    use crate::mesh::{make_grid_box, Axis, Box3};
    use crate::segmentation::segment_slender;
    use crate::selection::{select_part, ShapeClass, ShapeKind, SweepSelection};

    fn arm(section: f64) -> (SegmentationResult, ArmConfiguration) {
        let object = make_grid_box(&Box3::new(Point3::origin(), Point3::new(300.0, section, section)), 50.0);
        let split = select_part(&object, &SweepSelection { axis: Axis::X, start: 60.0, end: 300.0 }).unwrap();
        let shape = ShapeClass {
            kind: ShapeKind::Slender,
            longest_axis: Axis::X,
            principal_axis: None,
        };
        let seg = segment_slender(&split.transformable, Axis::X, &split.static_boxes()).unwrap();
        let t = build_template(&split, &shape, BaseMode::StaticIsBase, &seg).unwrap();
        (seg, t.configuration(0))
    }

    /// Ray-parity point membership along a skewed direction.
    fn inside(m: &Mesh, p: &Point3) -> bool {
        let d = Vector3::new(0.5773, 0.5774, 0.5772).normalize();
        let mut hits = 0;
        for [a, b, c] in m.triangle_points() {
            let (e1, e2) = (b - a, c - a);
            let h = d.cross(&e2);
            let det = e1.dot(&h);
            if det.abs() < 1e-12 {
                continue;
            }
            let s = p - a;
            let u = s.dot(&h) / det;
            let q = s.cross(&e1);
            let v = d.dot(&q) / det;
            let t = e2.dot(&q) / det;
            if u >= 0.0 && v >= 0.0 && u + v <= 1.0 && t > 0.0 {
                hits += 1;
            }
        }
        hits % 2 == 1
    }

    #[test]
    fn pocket_fits_thirty_mm_section() {
        let (seg, config) = arm(30.0);
        let motor = MotorSpec::xl320();
        let placed = place_motor_shells(&seg, &config, &motor).unwrap();
        assert_eq!(placed.shells.len(), 4);
        for s in &placed.shells {
            let before = &seg.links[s.link];
            let after = &placed.links[s.link];
            assert!(after.is_watertight());
            assert!(before.volume() - after.volume() >= motor.volume(), "{} -> {}", before.volume(), after.volume());
            assert_eq!(s.rivets.len(), 4);
            let bx = s.rotation.column(0).into_owned();
            for r in &s.rivets {
                // the wall beside each rivet is bored through
                let wall = r + bx * (12.0 + POCKET_CLEARANCE + 1.0);
                assert!(inside(before, &wall));
                assert!(!inside(after, &wall), "rivet at {r}");
            }
        }
    }

    #[test]
    fn thin_link_rejected() {
        let (seg, config) = arm(10.0);
        let r = place_motor_shells(&seg, &config, &MotorSpec::xl320());
        assert!(matches!(r, Err(FabricationError::MotorDoesNotFit { joint: 0, .. })), "{r:?}");
    }

    #[test]
    fn locked_joint_gets_no_shell() {
        let (seg, mut config) = arm(30.0);
        let rows = config.actuated_rows();
        let row = &mut config.dh_table[rows[2]];
        row.theta_range = [row.theta, row.theta];
        let placed = place_motor_shells(&seg, &config, &MotorSpec::xl320()).unwrap();
        assert_eq!(placed.shells.len(), 3);
        assert!(placed.shells.iter().all(|s| s.joint != 2));
        assert_eq!(placed.links[2], seg.links[2]);
    }
}
