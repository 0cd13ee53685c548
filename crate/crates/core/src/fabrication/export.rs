use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{action_label, ConnectorKind, EffectorKind, FabricationBundle, FabricationError, MotorSpec, ScrewSpec};
use crate::kinematics::{ArmCase, BaseMode, DhRow, Pose};
use crate::mesh::{write_stl_binary, Mesh, Point3, Vector3};

pub const TRAJECTORY_HEADER: [&str; 6] = ["t_s", "j1_deg", "j2_deg", "j3_deg", "j4_deg", "action"];
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub file: String,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<usize>,
    pub triangles: usize,
    pub volume_mm3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorEntry {
    pub id: String,
    /// `joint` or `gripper`.
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectorEntry {
    pub joint: usize,
    pub kind: ConnectorKind,
    pub links: [usize; 2],
    pub file: String,
    pub hinge: bool,
    pub pivot: [f64; 3],
    pub axis: [f64; 3],
    pub screws: Vec<ScrewSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectorEntry {
    pub kind: EffectorKind,
    pub file: String,
    /// Row-major 4×4 placement at the rest pose.
    pub mount: [[f64; 4]; 4],
    pub motor: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub motorized: bool,
    pub case: ArmCase,
    pub base_mode: BaseMode,
    pub configuration: usize,
    pub components: Vec<ComponentEntry>,
    pub motors: Vec<MotorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor_spec: Option<MotorSpec>,
    pub connectors: Vec<ConnectorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_effector: Option<EffectorEntry>,
    pub assembly_order: Vec<String>,
    pub base_frame: [[f64; 4]; 4],
    pub dh_table: Vec<DhRow>,
    pub trajectory: String,
}

fn tidy(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn point(p: &Point3) -> [f64; 3] {
    [tidy(p.x), tidy(p.y), tidy(p.z)]
}

fn vector(v: &Vector3) -> [f64; 3] {
    [tidy(v.x), tidy(v.y), tidy(v.z)]
}

fn matrix(p: &Pose) -> [[f64; 4]; 4] {
    let m = p.to_matrix();
    std::array::from_fn(|r| std::array::from_fn(|c| tidy(m[(r, c)])))
}

fn component(file: &str, role: &str, mesh: &Mesh, link: Option<usize>, joint: Option<usize>) -> ComponentEntry {
    ComponentEntry {
        file: file.into(),
        role: role.into(),
        link,
        joint,
        triangles: mesh.triangles.len(),
        volume_mm3: tidy(mesh.volume()),
    }
}

/// Every mesh of the bundle with its file name, in manifest order.
fn meshes(bundle: &FabricationBundle) -> Vec<(String, &'static str, Mesh, Option<usize>, Option<usize>)> {
    let mut out = Vec::new();
    for (k, l) in bundle.links.iter().enumerate() {
        out.push((format!("link_{k}.stl"), "link", l.clone(), Some(k), None));
    }
    for c in &bundle.connectors {
        let role = if c.hinge { "hinge" } else { "connector" };
        out.push((format!("{}.stl", c.file_stem()), role, c.merged_mesh(), None, Some(c.joint)));
    }
    if let Some(e) = &bundle.end_effector {
        out.push(("end_effector.stl".into(), "end_effector", e.mesh.clone(), None, None));
    }
    if let Some(p) = &bundle.pillar {
        out.push(("pillar.stl".into(), "pillar", p.clone(), None, None));
    }
    out
}

pub fn manifest(bundle: &FabricationBundle) -> Manifest {
    let config = &bundle.configuration;
    let components: Vec<ComponentEntry> = meshes(bundle)
        .iter()
        .map(|(f, role, m, link, joint)| component(f, role, m, *link, *joint))
        .collect();
    let mut motors = Vec::new();
    if let Some(spec) = &bundle.motor {
        for s in &bundle.shells {
            motors.push(MotorEntry {
                id: spec.id.clone(),
                role: "joint".into(),
                joint: Some(s.joint),
                link: Some(s.link),
                pivot: Some(point(&s.pivot)),
                axis: Some(vector(&s.axis)),
            });
        }
        if bundle.end_effector.as_ref().is_some_and(|e| e.motor) {
            motors.push(MotorEntry {
                id: spec.id.clone(),
                role: "gripper".into(),
                joint: None,
                link: None,
                pivot: None,
                axis: None,
            });
        }
    }
    let connectors = bundle
        .connectors
        .iter()
        .map(|c| ConnectorEntry {
            joint: c.joint,
            kind: c.kind,
            links: c.links,
            file: format!("{}.stl", c.file_stem()),
            hinge: c.hinge,
            pivot: point(&c.pivot),
            axis: vector(&c.axis),
            screws: c.screws.clone(),
        })
        .collect();
    let end_effector = bundle.end_effector.as_ref().map(|e| EffectorEntry {
        kind: e.kind,
        file: "end_effector.stl".into(),
        mount: matrix(&e.mount),
        motor: e.motor && bundle.motor.is_some(),
        inner_radius_mm: e.inner_radius.map(tidy),
    });
    let mut order = Vec::new();
    if bundle.pillar.is_some() {
        order.push("glue pillar.stl between the two static parts".to_string());
    }
    for j in 0..4 {
        let link = super::chain_link(config, j);
        if bundle.shells.iter().any(|s| s.joint == j) {
            let id = bundle.motor.as_ref().map_or("motor", |m| m.id.as_str());
            order.push(format!("press {id} for joint {j} into link_{link}.stl and rivet"));
        }
        if let Some(c) = bundle.connectors.iter().find(|c| c.joint == j) {
            order.push(format!(
                "join link_{}.stl to link_{}.stl with {}.stl",
                c.links[0],
                c.links[1],
                c.file_stem()
            ));
        } else if j == 0 {
            order.push(format!("mount link_{link}.stl on the base"));
        }
    }
    if end_effector.is_some() {
        order.push("attach end_effector.stl at the arm tip".into());
    }
    Manifest {
        version: MANIFEST_VERSION,
        motorized: bundle.motor.is_some(),
        case: config.case,
        base_mode: config.base_mode,
        configuration: config.index,
        components,
        motors,
        motor_spec: bundle.motor.clone(),
        connectors,
        end_effector,
        assembly_order: order,
        base_frame: matrix(&config.base_frame),
        dh_table: config.dh_table.clone(),
        trajectory: "trajectory.csv".into(),
    }
}

pub fn trajectory_csv(bundle: &FabricationBundle) -> Result<Vec<u8>, FabricationError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_HEADER).map_err(std::io::Error::from)?;
    for wp in &bundle.trajectory.waypoints {
        let mut row = vec![format!("{:.6}", tidy(wp.time))];
        row.extend(wp.angles.iter().map(|a| format!("{:.6}", tidy(a.to_degrees()))));
        row.push(action_label(wp.action).to_string());
        w.write_record(&row).map_err(std::io::Error::from)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// File names and contents of the bundle, sorted by name.
pub fn bundle_files(bundle: &FabricationBundle) -> Result<(Manifest, Vec<(String, Vec<u8>)>), FabricationError> {
    let mut files: Vec<(String, Vec<u8>)> = meshes(bundle)
        .into_iter()
        .map(|(name, _, mut m, _, _)| {
            m.name = name.trim_end_matches(".stl").to_string();
            let bytes = write_stl_binary(&m);
            (name, bytes)
        })
        .collect();
    let manifest = manifest(bundle);
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    files.push(("manifest.json".into(), json));
    files.push(("trajectory.csv".into(), trajectory_csv(bundle)?));
    files.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((manifest, files))
}

/// Writes every bundle file into `dir`, creating it if needed.
pub fn export_bundle(bundle: &FabricationBundle, dir: &Path) -> Result<Manifest, FabricationError> {
    let (manifest, files) = bundle_files(bundle)?;
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        std::fs::write(dir.join(name), bytes)?;
    }
    Ok(manifest)
}
