//! Design files and the four-step run from an object mesh to a bundle.

use std::fmt;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabrication::{
    build_bundle, FabricationBundle, FabricationError, FabricationOptions, MotorSpec, DEFAULT_SPEED_DEG_S, POCKET_CLEARANCE,
    WALL,
};
use crate::kinematics::{build_template, ArmCase, ArmTemplate, BaseMode, KinematicsError};
use crate::mesh::{boolean_op, load_mesh_file, make_cylinder, BooleanOp, Box3, Mesh, MeshError, Point3};
use crate::segmentation::{segment, SegmentationError, SegmentationResult};
use crate::selection::{bridge_disjoint, classify_shape, select_part, PartSplit, SelectionError, ShapeClass, ShapeKind, SweepSelection};
use crate::task::{AttachSurface, MotionPoint, ReferenceObject, TaskError, TaskSpec, Violation};
use crate::workspace::{
    filter_orientation, select_configuration, ScoringMode, SearchOptions, SearchResult, Workspace, WorkspaceError,
    DEFAULT_RESOLUTION, EXTERIOR_EPS,
};

/// Radial gap between a pillar and the links carved around it, mm.
pub const PILLAR_GAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EndEffectorOn {
    #[default]
    Transformable,
    Static,
}

impl EndEffectorOn {
    pub fn base_mode(self) -> BaseMode {
        match self {
            EndEffectorOn::Transformable => BaseMode::StaticIsBase,
            EndEffectorOn::Static => BaseMode::StaticIsEe,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    /// Relative paths resolve against the design file's directory.
    pub mesh_path: PathBuf,
    pub selection: SweepSelection,
    #[serde(default)]
    pub end_effector_on: EndEffectorOn,
    #[serde(default = "default_true")]
    pub motorized: bool,
    pub motion_points: Vec<MotionPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attach_surface: Option<AttachSurface>,
    #[serde(default)]
    pub references: Vec<ReferenceObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_deg_s: Option<f64>,
}

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid design JSON: {0}")]
    Schema(String),
}

impl DesignFile {
    pub fn from_json(text: &str) -> Result<DesignFile, DesignError> {
        serde_json::from_str(text).map_err(|e| DesignError::Schema(e.to_string()))
    }

    /// Parses a design file and makes its paths absolute.
    pub fn load(path: &Path) -> Result<DesignFile, DesignError> {
        let text = std::fs::read_to_string(path).map_err(|e| DesignError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut d = DesignFile::from_json(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        d.resolve_paths(dir);
        Ok(d)
    }

    pub fn resolve_paths(&mut self, dir: &Path) {
        if self.mesh_path.is_relative() {
            self.mesh_path = dir.join(&self.mesh_path);
        }
        for r in &mut self.references {
            let p = Path::new(&r.mesh_path);
            if p.is_relative() {
                r.mesh_path = dir.join(p).to_string_lossy().into_owned();
            }
        }
    }

    pub fn task(&self) -> TaskSpec {
        TaskSpec {
            points: self.motion_points.clone(),
            attach_surface: self.attach_surface.clone(),
            references: self.references.clone(),
        }
    }

    /// Human-readable problems; empty when the design can run.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.mesh_path.is_file() {
            out.push(format!("mesh file {} does not exist", self.mesh_path.display()));
        }
        for r in &self.references {
            if !Path::new(&r.mesh_path).is_file() {
                out.push(format!("reference mesh {} does not exist", r.mesh_path));
            }
        }
        let s = &self.selection;
        if !(s.start.is_finite() && s.end.is_finite() && s.start < s.end) {
            out.push(format!("selection [{}, {}] must be increasing", s.start, s.end));
        }
        if let Some(r) = self.resolution {
            if r < 2 {
                out.push(format!("resolution must be at least 2, got {r}"));
            }
        }
        if let Some(v) = self.speed_deg_s {
            if !(v > 0.0) {
                out.push(format!("speed must be positive, got {v}"));
            }
        }
        if let Some(a) = &self.attach_surface {
            if let Err(e) = a.check() {
                out.push(e.to_string());
            }
        }
        out.extend(self.task().validate().iter().map(|v| v.to_string()));
        out
    }
}

/// The four user-facing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Step {
    Selection,
    Task,
    Generation,
    Fabrication,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Step::Selection => "#1 selection",
            Step::Task => "#2 task",
            Step::Generation => "#3 generation",
            Step::Fabrication => "#4 fabrication",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("task is invalid: {}", join(.0))]
    Task(Vec<Violation>),
    #[error(transparent)]
    TaskInput(#[from] TaskError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Fabrication(#[from] FabricationError),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
#[error("step {step}: {source}")]
pub struct PipelineError {
    pub step: Step,
    #[source]
    pub source: StageError,
}

trait AtStep<T> {
    fn at(self, step: Step) -> Result<T, PipelineError>;
}

impl<T, E: Into<StageError>> AtStep<T> for Result<T, E> {
    fn at(self, step: Step) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            step,
            source: e.into(),
        })
    }
}

/// Output of the selection step.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub split: PartSplit,
    /// Transformable part with room cut for the pillar, when there is one.
    pub part: Mesh,
}

/// Space a motor needs on each side of a pillar, mm.
pub fn motor_clearance(motor: &MotorSpec, motorized: bool) -> f64 {
    if motorized {
        motor.body[2] + 2.0 * (POCKET_CLEARANCE + WALL)
    } else {
        0.0
    }
}

pub fn run_selection(mesh: &Mesh, selection: &SweepSelection, clearance: f64) -> Result<Selected, PipelineError> {
    let split = select_part(mesh, selection).at(Step::Selection)?;
    if split.statics.len() != 2 {
        let part = split.transformable.clone();
        return Ok(Selected { split, part });
    }
    let split = bridge_disjoint(&split, clearance).at(Step::Selection)?;
    let pillar = split.pillar.as_ref().expect("bridged split has a pillar");
    // bore through the transformable part so the links clear the pillar
    let b = pillar.bounding_box().at(Step::Selection)?;
    let i = split.selection.axis.index();
    let radius = b.extents()[split.selection.axis.others()[0].index()] / 2.0 + PILLAR_GAP;
    let mut start = b.center();
    let mut end = b.center();
    start[i] = b.min[i] - 1.0;
    end[i] = b.max[i] + 1.0;
    let bore = make_cylinder(start, end, radius, 48).at(Step::Selection)?;
    let part = boolean_op(&split.transformable, &bore, BooleanOp::Subtract)
        .at(Step::Selection)?
        .with_name("transformable");
    Ok(Selected { split, part })
}

pub fn check_task(spec: &TaskSpec) -> Result<(), PipelineError> {
    let v = spec.validate();
    if v.is_empty() {
        Ok(())
    } else {
        Err(PipelineError {
            step: Step::Task,
            source: StageError::Task(v),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub shape: ShapeClass,
    pub segmentation: SegmentationResult,
    pub template: ArmTemplate,
    pub search: SearchResult,
    /// Motion points outside their (orientation-filtered) workspace.
    pub exterior: Vec<usize>,
}

/// Static boxes the arm must avoid: none when the static part rides on the
/// end-effector.
pub fn obstacles(split: &PartSplit, base_mode: BaseMode) -> Vec<Box3> {
    match base_mode {
        BaseMode::StaticIsBase => split.static_boxes(),
        BaseMode::StaticIsEe => Vec::new(),
    }
}

/// Workspace a point is judged against: filtered by its orientation, if any.
fn point_workspace(ws: &Workspace, p: &MotionPoint) -> Result<Workspace, WorkspaceError> {
    match p.orientation {
        Some(d) => filter_orientation(ws, &d),
        None => Ok(ws.clone()),
    }
}

pub fn exterior_points(ws: &Workspace, spec: &TaskSpec) -> Result<Vec<usize>, WorkspaceError> {
    let mut out = Vec::new();
    for (i, p) in spec.points.iter().enumerate() {
        let sub = point_workspace(ws, p)?;
        let hull = sub.hull.as_ref().ok_or(WorkspaceError::EmptyWorkspace)?;
        if hull.distance(&p.position) > EXTERIOR_EPS {
            out.push(i);
        }
    }
    Ok(out)
}

pub fn run_generation(
    selected: &Selected,
    spec: &TaskSpec,
    base_mode: BaseMode,
    resolution: usize,
    require_all_inside: bool,
) -> Result<Generated, PipelineError> {
    let step = Step::Generation;
    let shape = classify_shape(&selected.part).at(step)?;
    let statics = selected.split.static_boxes();
    let segmentation = segment(&selected.part, &shape, &statics).at(step)?;
    let template = build_template(&selected.split, &shape, base_mode, &segmentation).at(step)?;
    let options = SearchOptions {
        resolution,
        mode: ScoringMode::Surface,
        require_all_inside,
    };
    let search =
        select_configuration(&template, &spec.points, &obstacles(&selected.split, base_mode), &options).at(step)?;
    let exterior = exterior_points(&search.workspace, spec).at(step)?;
    Ok(Generated {
        shape,
        segmentation,
        template,
        search,
        exterior,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapRecord {
    pub index: usize,
    pub from: Point3,
    pub to: Point3,
    pub distance: f64,
}

/// Moves point `index` onto its workspace hull if it lies outside; interior
/// points come back unchanged.
pub fn snap_motion_point(ws: &Workspace, spec: &TaskSpec, index: usize) -> Result<(TaskSpec, Option<SnapRecord>), WorkspaceError> {
    let p = &spec.points[index];
    let sub = point_workspace(ws, p)?;
    let hull = sub.hull.as_ref().ok_or(WorkspaceError::EmptyWorkspace)?;
    let distance = hull.distance(&p.position);
    if distance <= EXTERIOR_EPS {
        return Ok((spec.clone(), None));
    }
    let to = hull.snap(&p.position);
    let mut next = spec.clone();
    next.points[index].position = to;
    Ok((
        next,
        Some(SnapRecord {
            index,
            from: p.position,
            to,
            distance,
        }),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// Overrides the design file's resolution.
    pub resolution: Option<usize>,
    pub snap: bool,
    pub motor: MotorSpec,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            resolution: None,
            snap: true,
            motor: MotorSpec::xl320(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub configuration: usize,
    pub case: ArmCase,
    pub shape: ShapeKind,
    pub steering_joint: usize,
    pub rmse: f64,
    /// RMSE per configuration; `None` when infeasible.
    pub scores: Vec<Option<f64>>,
    pub snapped: Vec<SnapRecord>,
    pub links: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub bundle: FabricationBundle,
    pub generated: Generated,
    pub task: TaskSpec,
    pub snapped: Vec<SnapRecord>,
}

impl PipelineOutput {
    pub fn report(&self, files: Vec<String>) -> PipelineReport {
        let s = &self.generated.search;
        PipelineReport {
            configuration: s.configuration.index,
            case: s.configuration.case,
            shape: self.generated.shape.kind,
            steering_joint: s.configuration.steering_joint,
            rmse: s.score.rmse,
            scores: s.scores.iter().map(|x| x.as_ref().map(|c| c.rmse)).collect(),
            snapped: self.snapped.clone(),
            links: self.bundle.links.len(),
            files,
        }
    }
}

pub fn snap_all(ws: &Workspace, spec: &TaskSpec, exterior: &[usize]) -> Result<(TaskSpec, Vec<SnapRecord>), WorkspaceError> {
    let mut spec = spec.clone();
    let mut records = Vec::new();
    for &i in exterior {
        let (next, rec) = snap_motion_point(ws, &spec, i)?;
        spec = next;
        if let Some(r) = rec {
            info!(
                "snapped motion point {} by {:.3} mm: ({:.3}, {:.3}, {:.3}) -> ({:.3}, {:.3}, {:.3})",
                r.index, r.distance, r.from.x, r.from.y, r.from.z, r.to.x, r.to.y, r.to.z
            );
            records.push(r);
        }
    }
    Ok((spec, records))
}

pub fn run_fabrication(
    selected: &Selected,
    generated: &Generated,
    spec: &TaskSpec,
    motor: &MotorSpec,
    motorized: bool,
    speed_deg_s: f64,
) -> Result<FabricationBundle, PipelineError> {
    let options = FabricationOptions {
        motorized,
        speed_deg_s,
        ..FabricationOptions::default()
    };
    build_bundle(
        &generated.segmentation,
        &generated.search.configuration,
        spec,
        &generated.search.workspace,
        motor,
        selected.split.pillar.clone(),
        &options,
    )
    .at(Step::Fabrication)
}

/// Runs every step on an already loaded mesh.
pub fn run_on_mesh(design: &DesignFile, mesh: &Mesh, options: &PipelineOptions) -> Result<PipelineOutput, PipelineError> {
    let selected = run_selection(mesh, &design.selection, motor_clearance(&options.motor, design.motorized))?;
    let spec = design.task();
    if let Some(a) = &spec.attach_surface {
        a.check().at(Step::Task)?;
    }
    check_task(&spec)?;
    let resolution = options.resolution.or(design.resolution).unwrap_or(DEFAULT_RESOLUTION);
    let base_mode = design.end_effector_on.base_mode();
    let generated = run_generation(&selected, &spec, base_mode, resolution, !options.snap)?;
    let (spec, snapped) = if options.snap {
        snap_all(&generated.search.workspace, &spec, &generated.exterior).at(Step::Generation)?
    } else {
        (spec, Vec::new())
    };
    let speed = design.speed_deg_s.unwrap_or(DEFAULT_SPEED_DEG_S);
    let bundle = run_fabrication(&selected, &generated, &spec, &options.motor, design.motorized, speed)?;
    Ok(PipelineOutput {
        bundle,
        generated,
        task: spec,
        snapped,
    })
}

/// Loads the design's mesh, runs every step and writes the bundle to `out_dir`.
pub fn run_pipeline(design: &DesignFile, out_dir: &Path, options: &PipelineOptions) -> Result<PipelineReport, PipelineError> {
    let mesh = load_mesh_file(&design.mesh_path).at(Step::Selection)?;
    let output = run_on_mesh(design, &mesh, options)?;
    let (_, files) = crate::fabrication::bundle_files(&output.bundle).at(Step::Fabrication)?;
    crate::fabrication::export_bundle(&output.bundle, out_dir).at(Step::Fabrication)?;
    Ok(output.report(files.into_iter().map(|(n, _)| n).collect()))
}
