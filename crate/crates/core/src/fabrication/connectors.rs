use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{driving_axis_of, joint_sites, FabricationError, JointSite};
use crate::kinematics::ArmConfiguration;
use crate::mesh::{
    boolean_op, make_annular_sector, make_cylinder, make_cylinder_from, make_frame_box, BooleanOp, Mesh, Point3, Vector3,
};
use crate::segmentation::SegmentationResult;

/// Axes within this angle count as parallel.
const PARALLEL_DEG: f64 = 1.0;
/// Moving planes closer than this count as coplanar, mm.
const COPLANAR_MM: f64 = 1.0;
const PLATE_GAP: f64 = 0.5;
const SCREW_RADIUS: f64 = 1.1;
const HINGE_PIN: f64 = 1.5;
const HINGE_GAP: f64 = 0.2;
const HINGE_OUTER: f64 = 4.0;
const FILLET_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectorKind {
    /// Both links turn in one plane.
    A,
    /// The moving planes are offset or tilted; joined with screws.
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrewSpec {
    pub size: String,
    pub count: usize,
}

/// Rounded end cut into a moving link so it clears its neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct Fillet {
    pub link: usize,
    pub site: JointSite,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connector {
    /// Chain index of the joint.
    pub joint: usize,
    pub kind: ConnectorKind,
    /// Inboard and outboard link, segmentation order.
    pub links: [usize; 2],
    pub pivot: Point3,
    pub axis: Vector3,
    /// Print-in-place hinge instead of a motor coupling.
    pub hinge: bool,
    pub meshes: Vec<Mesh>,
    pub screws: Vec<ScrewSpec>,
    pub fillet: Option<Fillet>,
}

impl Connector {
    pub fn merged_mesh(&self) -> Mesh {
        self.meshes
            .iter()
            .fold(Mesh::empty(""), |acc, m| acc.merged(m))
            .with_name(self.file_stem())
    }

    pub fn file_stem(&self) -> String {
        if self.hinge {
            format!("hinge_{}", self.joint)
        } else {
            format!("connector_{}", self.joint)
        }
    }
}

/// Box spanning `[lo, hi]` offsets from the site anchor along `along`,
/// `lateral` and `axis`.
fn site_box(site: &JointSite, t: [f64; 2], b: [f64; 2], w: [f64; 2]) -> Mesh {
    let center = site.local((t[0] + t[1]) / 2.0, (b[0] + b[1]) / 2.0, (w[0] + w[1]) / 2.0);
    let half = Vector3::new((t[1] - t[0]) / 2.0, (b[1] - b[0]) / 2.0, (w[1] - w[0]) / 2.0);
    make_frame_box(center, &site.frame(), half)
}

/// Hole along the site axis through `w`.
fn axial_hole(site: &JointSite, t: f64, b: f64, w: [f64; 2], radius: f64) -> Result<Mesh, FabricationError> {
    Ok(make_cylinder(site.local(t, b, w[0]), site.local(t, b, w[1]), radius, 16)?)
}

fn classify(site: &JointSite, config: &ArmConfiguration) -> ConnectorKind {
    let Some(u) = driving_axis_of(config) else {
        return ConnectorKind::B;
    };
    let parallel = site.axis.dot(&u).abs() >= PARALLEL_DEG.to_radians().cos();
    let a = &config.chain_anchors;
    let j = site.joint;
    let lift_in = (a[j] - a[j - 1]).dot(&site.axis).abs();
    let lift_out = (a[j + 1] - a[j]).dot(&site.axis).abs();
    if parallel && lift_in <= COPLANAR_MM && lift_out <= COPLANAR_MM {
        ConnectorKind::A
    } else {
        ConnectorKind::B
    }
}

/// Extent of `mesh` in the site frame, `[min, max]` per site axis.
fn spans_in(site: &JointSite, mesh: &Mesh) -> [[f64; 2]; 3] {
    let dirs = [site.along, site.lateral, site.axis];
    std::array::from_fn(|k| {
        mesh.vertices.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], p| {
            let s = (p - site.anchor).dot(&dirs[k]);
            [lo.min(s), hi.max(s)]
        })
    })
}

fn coupler(site: &JointSite, kind: ConnectorKind, inboard: &Mesh, horn_radius: f64) -> Result<Mesh, FabricationError> {
    let reach = horn_radius + 4.0;
    let w0 = site.spans[2][1] + PLATE_GAP;
    let thick = if kind == ConnectorKind::A { 2.0 } else { 4.0 };
    let w = [w0, w0 + thick];
    let inb = spans_in(site, inboard);
    let b_hi = if kind == ConnectorKind::B { reach.max(inb[1][1] + 4.5) } else { reach };
    let mut plate = site_box(site, [-14.0, site.offset + reach], [-reach, b_hi], w);
    if kind == ConnectorKind::B {
        // strap down the inboard link's side face
        let strap = site_box(
            site,
            [-13.0, -2.0],
            [inb[1][1] + PLATE_GAP, inb[1][1] + 3.5],
            [inb[2][0].min(site.spans[2][0]), w[1] - 0.5],
        );
        plate = boolean_op(&plate, &strap, BooleanOp::Union)?;
    }
    let through = [w[0] - 1.0, w[1] + 1.0];
    let r = 0.7 * horn_radius;
    for (dt, db) in [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r)] {
        let h = axial_hole(site, site.offset + dt, db, through, 0.5 * SCREW_RADIUS + 0.3)?;
        plate = boolean_op(&plate, &h, BooleanOp::Subtract)?;
    }
    let screw_b: &[f64] = if kind == ConnectorKind::A { &[0.0] } else { &[-4.0, 4.0] };
    for &b in screw_b {
        for t in [-9.0, -4.0] {
            if kind == ConnectorKind::A && t == -4.0 {
                continue;
            }
            let h = axial_hole(site, t, b, through, SCREW_RADIUS)?;
            plate = boolean_op(&plate, &h, BooleanOp::Subtract)?;
        }
    }
    Ok(plate)
}

fn hinge(site: &JointSite) -> Result<Mesh, FabricationError> {
    let len = (site.spans[2][1] - site.spans[2][0]).max(4.0);
    let center = site.local(site.offset, 0.0, site.mid_axis());
    let barrel = make_annular_sector(
        center,
        site.axis,
        site.along,
        HINGE_PIN + HINGE_GAP,
        HINGE_OUTER,
        TAU,
        len,
        32,
    )?;
    let half = site.axis * (len / 2.0 + 1.0);
    let pin = make_cylinder(center - half, center + half, HINGE_PIN, 32)?;
    Ok(barrel.merged(&pin))
}

/// One connector per adjacent link pair, base side first.
pub fn attach_connectors(
    seg: &SegmentationResult,
    config: &ArmConfiguration,
    motorized: bool,
) -> Result<Vec<Connector>, FabricationError> {
    let sites = joint_sites(seg, config)?;
    let horn = super::MotorSpec::xl320().horn_radius;
    let mut out = Vec::with_capacity(3);
    for site in sites.into_iter().skip(1) {
        let kind = classify(&site, config);
        let inboard = site.inboard.expect("joints past the base have an inboard link");
        let (meshes, screws) = if motorized {
            let plate = coupler(&site, kind, &seg.links[inboard], horn)?;
            let screws = match kind {
                ConnectorKind::A => vec![ScrewSpec { size: "M2x6".into(), count: 1 }],
                ConnectorKind::B => vec![ScrewSpec { size: "M2x10".into(), count: 4 }],
            };
            (vec![plate], screws)
        } else {
            (vec![hinge(&site)?], Vec::new())
        };
        let fillet = (kind == ConnectorKind::A).then(|| Fillet {
            link: site.outboard,
            radius: site.half_width(),
            site: site.clone(),
        });
        out.push(Connector {
            joint: site.joint,
            kind,
            links: [inboard, site.outboard],
            pivot: site.pivot,
            axis: site.axis,
            hinge: !motorized,
            meshes,
            screws,
            fillet,
        });
    }
    Ok(out)
}

/// Rounds the joint end of every moving link behind a type-A connector:
/// material between the joint plane and the pivot is kept only within
/// `radius` of the pivot axis.
pub fn apply_fillets(links: &[Mesh], connectors: &[Connector]) -> Result<Vec<Mesh>, FabricationError> {
    let mut out = links.to_vec();
    for f in connectors.iter().filter_map(|c| c.fillet.as_ref()) {
        let s = &f.site;
        let w = [s.spans[2][0] - 1.0, s.spans[2][1] + 1.0];
        let slab = site_box(
            s,
            [s.spans[0][0] - 1.0, s.offset],
            [s.spans[1][0] - 1.0, s.spans[1][1] + 1.0],
            w,
        );
        // half-segment phase keeps rim vertices off the slab face and the link sides
        let half = std::f64::consts::PI / FILLET_SEGMENTS as f64;
        let disc = make_cylinder_from(
            s.local(s.offset, 0.0, w[0] - 1.0),
            s.local(s.offset, 0.0, w[1] + 1.0),
            f.radius,
            FILLET_SEGMENTS,
            s.along * half.cos() + s.lateral * half.sin(),
        )?;
        let corners = boolean_op(&slab, &disc, BooleanOp::Subtract)?;
        let name = out[f.link].name.clone();
        out[f.link] = boolean_op(&out[f.link], &corners, BooleanOp::Subtract)?.with_name(name);
    }
    Ok(out)
}
