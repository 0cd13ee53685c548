//! In-memory design sessions over HTTP/JSON.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use forge_core::fabrication::{bundle_files, plan_trajectory, MotorSpec, DEFAULT_SPEED_DEG_S};
use forge_core::hull::ConvexHull;
use forge_core::kinematics::{ArmCase, BaseMode, DhRow};
use forge_core::mesh::{load_mesh, Mesh, MeshFormat};
use forge_core::pipeline::{
    check_task, exterior_points, motor_clearance, run_fabrication, run_generation, run_selection, snap_all,
    snap_motion_point, EndEffectorOn, Generated, PipelineError, Selected,
};
use forge_core::selection::SweepSelection;
use forge_core::task::{lift_to_3d, reference_plane, Action, TaskSpec};
use forge_core::workspace::DEFAULT_RESOLUTION;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

/// How far a session has progressed. Ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionStep {
    /// Created, no mesh yet.
    Empty,
    Loaded,
    Selected,
    Tasked,
    Generated,
}

#[derive(Debug, Default)]
struct Session {
    mesh: Option<Mesh>,
    selected: Option<Selected>,
    end_effector_on: EndEffectorOn,
    motorized: bool,
    spec: Option<TaskSpec>,
    generated: Option<Generated>,
    speed_deg_s: f64,
}

impl Session {
    fn step(&self) -> SessionStep {
        if self.generated.is_some() {
            SessionStep::Generated
        } else if self.spec.is_some() {
            SessionStep::Tasked
        } else if self.selected.is_some() {
            SessionStep::Selected
        } else if self.mesh.is_some() {
            SessionStep::Loaded
        } else {
            SessionStep::Empty
        }
    }

    fn require(&self, allowed: &[SessionStep]) -> Result<(), ApiError> {
        let step = self.step();
        if allowed.contains(&step) {
            Ok(())
        } else {
            Err(ApiError::StepOrder { step, allowed: allowed.to_vec() })
        }
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("invalid request: {0}")]
    Schema(String),
    #[error("no session {0}")]
    NotFound(String),
    #[error("not allowed at step {step:?}; allowed at {allowed:?}")]
    StepOrder { step: SessionStep, allowed: Vec<SessionStep> },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, step) = match &self {
            ApiError::Schema(_) => (StatusCode::BAD_REQUEST, None),
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, None),
            ApiError::StepOrder { .. } => (StatusCode::CONFLICT, None),
            ApiError::Pipeline(e) => (StatusCode::UNPROCESSABLE_ENTITY, Some(e.step.to_string())),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, None),
        };
        (status, Json(json!({ "error": self.to_string(), "step": step }))).into_response()
    }
}

type Shared = Arc<Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Shared>>>,
    motor: Arc<MotorSpec>,
}

impl AppState {
    pub fn new(motor: MotorSpec) -> AppState {
        AppState {
            sessions: Arc::default(),
            motor: Arc::new(motor),
        }
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .lock()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }
}

/// Runs `f` on a blocking thread with the session locked, so calls on one
/// session are serialized while different sessions proceed in parallel.
async fn with_session<T, F>(state: &AppState, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session, &MotorSpec) -> Result<T, ApiError> + Send + 'static,
{
    let session = state.session(id)?;
    let motor = state.motor.clone();
    tokio::task::spawn_blocking(move || {
        let mut s = session.lock().map_err(|_| ApiError::Internal("session poisoned".into()))?;
        f(&mut s, &motor)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
}

fn parse<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::Schema(e.to_string()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/mesh", post(upload_mesh))
        .route("/sessions/{id}/selection", put(put_selection))
        .route("/sessions/{id}/task", put(put_task))
        .route("/sessions/{id}/generate", post(generate))
        .route("/sessions/{id}/snap", post(snap))
        .route("/sessions/{id}/reference_plane", get(get_reference_plane))
        .route("/sessions/{id}/lift", post(lift))
        .route("/sessions/{id}/animation", get(animation))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/restart_step", post(restart_step))
        .with_state(state)
}

async fn create_session(State(state): State<AppState>) -> (StatusCode, Json<serde_json::Value>) {
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session {
        motorized: true,
        speed_deg_s: DEFAULT_SPEED_DEG_S,
        ..Session::default()
    };
    state
        .sessions
        .lock()
        .expect("session table poisoned")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    (StatusCode::CREATED, Json(json!({ "id": id, "step": SessionStep::Empty })))
}

async fn get_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<serde_json::Value>, ApiError> {
    with_session(&state, &id, |s, _| {
        Ok(Json(json!({
            "step": s.step(),
            "motorized": s.motorized,
            "end_effector_on": s.end_effector_on,
            "task": s.spec,
        })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct MeshQuery {
    format: Option<String>,
}

async fn upload_mesh(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<MeshQuery>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    with_session(&state, &id, move |s, _| {
        s.require(&[SessionStep::Empty, SessionStep::Loaded])?;
        let format = match q.format.as_deref() {
            Some("obj") => MeshFormat::Obj,
            Some("stl") | None => MeshFormat::detect(Path::new("upload.stl"), &body).unwrap_or(MeshFormat::StlBinary),
            Some(other) => return Err(ApiError::Schema(format!("unknown mesh format {other}"))),
        };
        let mesh = load_mesh(&body, format).map_err(|e| ApiError::Schema(e.to_string()))?;
        let summary = json!({
            "step": SessionStep::Loaded,
            "triangles": mesh.triangles.len(),
            "watertight": mesh.is_watertight(),
            "bounds": mesh.bounding_box().ok(),
        });
        s.mesh = Some(mesh);
        Ok(Json(summary))
    })
    .await
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionRequest {
    selection: SweepSelection,
    #[serde(default)]
    end_effector_on: EndEffectorOn,
    #[serde(default = "default_true")]
    motorized: bool,
}

async fn put_selection(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let req: SelectionRequest = parse(&body)?;
    with_session(&state, &id, move |s, motor| {
        s.require(&[SessionStep::Loaded, SessionStep::Selected])?;
        let mesh = s.mesh.as_ref().expect("loaded session has a mesh");
        let selected = run_selection(mesh, &req.selection, motor_clearance(motor, req.motorized))?;
        let out = json!({
            "step": SessionStep::Selected,
            "statics": selected.split.statics.len(),
            "pillar": selected.split.pillar.is_some(),
            "transformable_volume": selected.part.volume(),
        });
        s.selected = Some(selected);
        s.end_effector_on = req.end_effector_on;
        s.motorized = req.motorized;
        Ok(Json(out))
    })
    .await
}

async fn put_task(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let spec: TaskSpec = parse(&body)?;
    with_session(&state, &id, move |s, _| {
        s.require(&[SessionStep::Selected, SessionStep::Tasked])?;
        if let Some(a) = &spec.attach_surface {
            a.check().map_err(|e| ApiError::Schema(e.to_string()))?;
        }
        check_task(&spec)?;
        let out = json!({ "step": SessionStep::Tasked, "points": spec.points.len() });
        s.spec = Some(spec);
        Ok(Json(out))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateRequest {
    resolution: Option<usize>,
    speed_deg_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ConfigurationView {
    pub index: usize,
    pub case: ArmCase,
    pub base_mode: BaseMode,
    pub steering_joint: usize,
    pub dh_table: Vec<DhRow>,
    pub base_frame: [[f64; 4]; 4],
    pub value_ranges: [[f64; 2]; 4],
}

#[derive(Debug, Serialize)]
pub struct GenerateResponse {
    pub configuration: ConfigurationView,
    pub rmse: f64,
    pub scores: Vec<Option<f64>>,
    pub hull: Option<ConvexHull>,
    pub exterior: Vec<usize>,
}

fn matrix(m: nalgebra::Matrix4<f64>) -> [[f64; 4]; 4] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

async fn generate(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<GenerateResponse>, ApiError> {
    let req: GenerateRequest = if body.iter().all(|b| b.is_ascii_whitespace()) {
        GenerateRequest::default()
    } else {
        parse(&body)?
    };
    if let Some(v) = req.speed_deg_s {
        if !(v > 0.0) {
            return Err(ApiError::Schema(format!("speed must be positive, got {v}")));
        }
    }
    with_session(&state, &id, move |s, _| {
        s.require(&[SessionStep::Tasked, SessionStep::Generated])?;
        let selected = s.selected.as_ref().expect("tasked session has a selection");
        let spec = s.spec.as_ref().expect("tasked session has a task");
        let resolution = req.resolution.unwrap_or(DEFAULT_RESOLUTION);
        let generated = run_generation(selected, spec, s.end_effector_on.base_mode(), resolution, false)?;
        let c = &generated.search.configuration;
        let response = GenerateResponse {
            configuration: ConfigurationView {
                index: c.index,
                case: c.case,
                base_mode: c.base_mode,
                steering_joint: c.steering_joint,
                dh_table: c.dh_table.clone(),
                base_frame: matrix(c.base_frame.to_matrix()),
                value_ranges: c.value_ranges(),
            },
            rmse: generated.search.score.rmse,
            scores: generated.search.scores.iter().map(|x| x.as_ref().map(|c| c.rmse)).collect(),
            hull: generated.search.workspace.hull.clone(),
            exterior: generated.exterior.clone(),
        };
        s.generated = Some(generated);
        if let Some(v) = req.speed_deg_s {
            s.speed_deg_s = v;
        }
        Ok(Json(response))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapRequest {
    point_index: usize,
}

async fn snap(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let req: SnapRequest = parse(&body)?;
    with_session(&state, &id, move |s, _| {
        s.require(&[SessionStep::Generated])?;
        let spec = s.spec.as_ref().expect("generated session has a task");
        if req.point_index >= spec.points.len() {
            return Err(ApiError::Schema(format!(
                "point_index {} out of range for {} points",
                req.point_index,
                spec.points.len()
            )));
        }
        let generated = s.generated.as_mut().expect("checked step");
        let ws = &generated.search.workspace;
        let (next, record) = snap_motion_point(ws, spec, req.point_index).map_err(|e| PipelineError {
            step: forge_core::pipeline::Step::Generation,
            source: e.into(),
        })?;
        generated.exterior.retain(|&i| i != req.point_index);
        let out = json!({
            "point_index": req.point_index,
            "position": next.points[req.point_index].position,
            "moved": record.is_some(),
            "distance": record.as_ref().map_or(0.0, |r| r.distance),
            "exterior": generated.exterior,
        });
        s.spec = Some(next);
        Ok(Json(out))
    })
    .await
}

/// Task with any remaining exterior points snapped, as the CLI does.
fn snapped_task(generated: &Generated, spec: &TaskSpec) -> Result<TaskSpec, ApiError> {
    let stage = |e: forge_core::workspace::WorkspaceError| PipelineError {
        step: forge_core::pipeline::Step::Generation,
        source: e.into(),
    };
    let ws = &generated.search.workspace;
    let exterior = exterior_points(ws, spec).map_err(stage)?;
    Ok(snap_all(ws, spec, &exterior).map_err(stage)?.0)
}

#[derive(Debug, Serialize)]
pub struct AnimationFrame {
    pub time: f64,
    pub angles_deg: [f64; 4],
    pub action: Option<Action>,
    pub point: Option<usize>,
    /// Joint origins from base to tip.
    pub joint_positions: Vec<[f64; 3]>,
    pub end_pose: [[f64; 4]; 4],
}

async fn animation(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<serde_json::Value>, ApiError> {
    with_session(&state, &id, |s, _| {
        s.require(&[SessionStep::Generated])?;
        let generated = s.generated.as_ref().expect("checked step");
        let spec = snapped_task(generated, s.spec.as_ref().expect("generated session has a task"))?;
        let config = &generated.search.configuration;
        let trajectory = plan_trajectory(config, &generated.search.workspace, &spec, s.speed_deg_s, s.motorized)
            .map_err(|e| PipelineError {
                step: forge_core::pipeline::Step::Fabrication,
                source: e.into(),
            })?;
        let frames: Vec<AnimationFrame> = trajectory
            .waypoints
            .iter()
            .map(|w| AnimationFrame {
                time: w.time,
                angles_deg: w.angles.map(f64::to_degrees),
                action: w.action,
                point: w.point,
                joint_positions: config.joint_positions(&w.angles).iter().map(|p| [p.x, p.y, p.z]).collect(),
                end_pose: matrix(config.end_pose(&w.angles).to_matrix()),
            })
            .collect();
        Ok(Json(json!({ "motorized": trajectory.motorized, "frames": frames })))
    })
    .await
}

async fn export(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let zip = with_session(&state, &id, |s, motor| {
        s.require(&[SessionStep::Generated])?;
        let generated = s.generated.as_ref().expect("checked step");
        let spec = snapped_task(generated, s.spec.as_ref().expect("generated session has a task"))?;
        let selected = s.selected.as_ref().expect("generated session has a selection");
        let bundle = run_fabrication(selected, generated, &spec, motor, s.motorized, s.speed_deg_s)?;
        let (_, files) = bundle_files(&bundle).map_err(|e| PipelineError {
            step: forge_core::pipeline::Step::Fabrication,
            source: e.into(),
        })?;
        crate::zip_bundle(&files).map_err(|e| ApiError::Internal(e.to_string()))
    })
    .await?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"bundle.zip\""),
        ],
        zip,
    )
        .into_response())
}

/// Drops the results of the current step, moving back by one.
async fn restart_step(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<serde_json::Value>, ApiError> {
    with_session(&state, &id, |s, _| {
        match s.step() {
            SessionStep::Generated => s.generated = None,
            SessionStep::Tasked => s.spec = None,
            SessionStep::Selected => s.selected = None,
            SessionStep::Loaded => s.mesh = None,
            SessionStep::Empty => {}
        }
        Ok(Json(json!({ "step": s.step() })))
    })
    .await
}

const PLACING: [SessionStep; 3] = [SessionStep::Selected, SessionStep::Tasked, SessionStep::Generated];

fn current_plane(s: &Session) -> Result<forge_core::mesh::Plane, ApiError> {
    s.require(&PLACING)?;
    let selected = s.selected.as_ref().expect("selected session has a split");
    let empty = TaskSpec::new();
    Ok(reference_plane(s.spec.as_ref().unwrap_or(&empty), &selected.split))
}

/// Plane the next motion point is placed on, with its in-plane axes.
async fn get_reference_plane(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<serde_json::Value>, ApiError> {
    with_session(&state, &id, |s, _| {
        let plane = current_plane(s)?;
        let (u, v) = plane.basis();
        Ok(Json(json!({ "origin": plane.origin, "normal": plane.normal, "u": u, "v": v })))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftRequest {
    /// In-plane coordinates along `u` and `v`.
    plane: [f64; 2],
    #[serde(default)]
    offset: f64,
}

async fn lift(State(state): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let req: LiftRequest = parse(&body)?;
    if !(req.plane.iter().all(|x| x.is_finite()) && req.offset.is_finite()) {
        return Err(ApiError::Schema("lift coordinates must be finite".into()));
    }
    with_session(&state, &id, move |s, _| {
        let plane = current_plane(s)?;
        let p = lift_to_3d(&plane, &nalgebra::Point2::new(req.plane[0], req.plane[1]), req.offset);
        Ok(Json(json!({ "position": p })))
    })
    .await
}
