//! Joint-space sampling, workspace hulls and configuration search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hull::{ConvexHull, HullError};
use crate::kinematics::{ArmConfiguration, ArmTemplate, CONFIGURATIONS};
use crate::mesh::{Box3, Point3, Vector3};
use crate::task::MotionPoint;

pub const DEFAULT_RESOLUTION: usize = 15;
/// Largest chord |n - dir| at which an orientation still matches.
pub const ORIENTATION_TOLERANCE: f64 = 0.5;
/// Points farther than this from the hull count as exterior.
pub const EXTERIOR_EPS: f64 = 1e-6;
const HULL_LATTICE: f64 = (1u64 << 30) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSample {
    pub position: Point3,
    pub n_axis: Vector3,
    pub joint_values: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub samples: Vec<WorkspaceSample>,
    /// `None` exactly when there are no samples.
    pub hull: Option<ConvexHull>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkspaceError {
    #[error("resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("every sample lies within 1e-6 mm of one point")]
    DegenerateWorkspace,
    #[error("no sample matches orientation {0:?}")]
    NoMatchingOrientation([f64; 3]),
    #[error("workspace has no samples")]
    EmptyWorkspace,
    #[error("no motion points to score")]
    NoPoints,
    #[error("no configuration can serve the task")]
    AllConfigsInfeasible,
    #[error(transparent)]
    Hull(#[from] HullError),
}

impl Workspace {
    pub fn from_samples(samples: Vec<WorkspaceSample>) -> Result<Workspace, WorkspaceError> {
        let hull = if samples.is_empty() {
            None
        } else {
            // FK rounding leaves near-duplicate points that only produce
            // needle facets; a 2^-30 mm lattice merges them
            let q = |x: f64| (x * HULL_LATTICE).round() / HULL_LATTICE;
            let pts: Vec<Point3> = samples.iter().map(|s| s.position.map(q)).collect();
            Some(ConvexHull::build(&pts)?)
        };
        Ok(Workspace { samples, hull })
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn hull(&self) -> Result<&ConvexHull, WorkspaceError> {
        self.hull.as_ref().ok_or(WorkspaceError::EmptyWorkspace)
    }
}

/// Evenly spaced values over `range`, endpoints included.
pub fn grid_values(range: [f64; 2], resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|k| {
            if k + 1 == resolution {
                range[1]
            } else {
                range[0] + (range[1] - range[0]) * k as f64 / (resolution - 1) as f64
            }
        })
        .collect()
}

/// Evaluates FK on the `resolution⁴` grid over the joint ranges.
pub fn sample_workspace(config: &ArmConfiguration, resolution: usize) -> Result<Workspace, WorkspaceError> {
    if resolution < 2 {
        return Err(WorkspaceError::BadResolution(resolution));
    }
    let grids: Vec<Vec<f64>> = config
        .value_ranges()
        .iter()
        .map(|r| grid_values(*r, resolution))
        .collect();
    let r = resolution;
    let samples: Vec<WorkspaceSample> = (0..r * r * r * r)
        .into_par_iter()
        .map(|idx| {
            let v = [
                grids[0][idx / (r * r * r)],
                grids[1][(idx / (r * r)) % r],
                grids[2][(idx / r) % r],
                grids[3][idx % r],
            ];
            let pose = config.end_pose(&v);
            WorkspaceSample {
                position: pose.position(),
                n_axis: pose.n_axis(),
                joint_values: v,
            }
        })
        .collect();
    let first = samples[0].position;
    if samples.iter().all(|s| (s.position - first).norm() <= 1e-6) {
        return Err(WorkspaceError::DegenerateWorkspace);
    }
    Workspace::from_samples(samples)
}

pub fn orientation_matches(n: &Vector3, dir: &Vector3) -> bool {
    (n - dir).norm() <= ORIENTATION_TOLERANCE
}

pub fn filter_orientation(ws: &Workspace, dir: &Vector3) -> Result<Workspace, WorkspaceError> {
    let kept: Vec<WorkspaceSample> = ws
        .samples
        .iter()
        .filter(|s| orientation_matches(&s.n_axis, dir))
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(WorkspaceError::NoMatchingOrientation([dir.x, dir.y, dir.z]));
    }
    Workspace::from_samples(kept)
}

/// Drops samples where any joint frame origin lies strictly inside an
/// obstacle box.
pub fn eliminate_collisions(
    ws: &Workspace,
    obstacles: &[Box3],
    config: &ArmConfiguration,
) -> Result<Workspace, WorkspaceError> {
    if obstacles.is_empty() {
        return Ok(ws.clone());
    }
    let kept: Vec<WorkspaceSample> = ws
        .samples
        .par_iter()
        .filter(|s| {
            let joints = config.joint_positions(&s.joint_values);
            !joints
                .iter()
                .any(|p| obstacles.iter().any(|b| b.contains_strictly(p, 1e-9)))
        })
        .copied()
        .collect();
    Workspace::from_samples(kept)
}

/// How the distance from a motion point to a workspace is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScoringMode {
    /// Zero inside the hull, distance to the hull surface outside.
    #[default]
    Surface,
    /// Distance to the nearest raw sample.
    NearestSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigScore {
    pub config_index: usize,
    pub rmse: f64,
    pub per_point_distance: Vec<f64>,
}

pub fn rmse(distances: &[f64]) -> f64 {
    if distances.is_empty() {
        return 0.0;
    }
    (distances.iter().map(|d| d * d).sum::<f64>() / distances.len() as f64).sqrt()
}

/// Workspace a point is measured against: the orientation-filtered one
/// when the point asks for an orientation.
pub fn workspace_for_point(ws: &Workspace, p: &MotionPoint) -> Result<Workspace, WorkspaceError> {
    match p.orientation {
        Some(dir) => filter_orientation(ws, &dir),
        None => Ok(ws.clone()),
    }
}

fn point_distance(ws: &Workspace, p: &Point3, mode: ScoringMode) -> Result<f64, WorkspaceError> {
    match mode {
        ScoringMode::Surface => Ok(ws.hull()?.distance(p)),
        ScoringMode::NearestSample => ws
            .samples
            .iter()
            .map(|s| (s.position - p).norm())
            .min_by(f64::total_cmp)
            .ok_or(WorkspaceError::EmptyWorkspace),
    }
}

pub fn score_config(
    ws: &Workspace,
    points: &[MotionPoint],
    config_index: usize,
    mode: ScoringMode,
) -> Result<ConfigScore, WorkspaceError> {
    if ws.is_empty() {
        return Err(WorkspaceError::EmptyWorkspace);
    }
    if points.is_empty() {
        return Err(WorkspaceError::NoPoints);
    }
    let mut filtered: Vec<([u64; 3], Workspace)> = Vec::new();
    let mut distances = Vec::with_capacity(points.len());
    for p in points {
        let d = match p.orientation {
            None => point_distance(ws, &p.position, mode)?,
            Some(dir) => {
                let key = [dir.x.to_bits(), dir.y.to_bits(), dir.z.to_bits()];
                if !filtered.iter().any(|(k, _)| *k == key) {
                    filtered.push((key, filter_orientation(ws, &dir)?));
                }
                let sub = &filtered.iter().find(|(k, _)| *k == key).unwrap().1;
                point_distance(sub, &p.position, mode)?
            }
        };
        distances.push(d);
    }
    Ok(ConfigScore {
        config_index,
        rmse: rmse(&distances),
        per_point_distance: distances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub resolution: usize,
    pub mode: ScoringMode,
    /// Reject configurations that leave any point outside their workspace.
    pub require_all_inside: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            resolution: DEFAULT_RESOLUTION,
            mode: ScoringMode::Surface,
            require_all_inside: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub configuration: ArmConfiguration,
    pub score: ConfigScore,
    /// Per configuration; `None` when infeasible.
    pub scores: Vec<Option<ConfigScore>>,
    /// Obstacle-filtered workspace of the chosen configuration.
    pub workspace: Workspace,
}

/// Samples and scores one configuration; `Ok(None)` when it cannot serve
/// the task at all.
pub fn evaluate_configuration(
    config: &ArmConfiguration,
    points: &[MotionPoint],
    obstacles: &[Box3],
    options: &SearchOptions,
) -> Result<Option<(ConfigScore, Workspace)>, WorkspaceError> {
    let ws = match sample_workspace(config, options.resolution) {
        Ok(ws) => ws,
        Err(WorkspaceError::DegenerateWorkspace) => return Ok(None),
        Err(e) => return Err(e),
    };
    let ws = eliminate_collisions(&ws, obstacles, config)?;
    if ws.is_empty() {
        return Ok(None);
    }
    let score = match score_config(&ws, points, config.index, options.mode) {
        Ok(s) => s,
        Err(WorkspaceError::NoMatchingOrientation(_)) | Err(WorkspaceError::EmptyWorkspace) => return Ok(None),
        Err(e) => return Err(e),
    };
    if options.require_all_inside && score.per_point_distance.iter().any(|d| *d > EXTERIOR_EPS) {
        return Ok(None);
    }
    Ok(Some((score, ws)))
}

/// Lowest RMSE wins; scores within `EXTERIOR_EPS` of each other tie and
/// the lower index is kept.
pub fn select_configuration(
    template: &ArmTemplate,
    points: &[MotionPoint],
    obstacles: &[Box3],
    options: &SearchOptions,
) -> Result<SearchResult, WorkspaceError> {
    if points.is_empty() {
        return Err(WorkspaceError::NoPoints);
    }
    let mut scores = Vec::with_capacity(CONFIGURATIONS);
    let mut best: Option<(ArmConfiguration, ConfigScore, Workspace)> = None;
    for c in 0..CONFIGURATIONS {
        let config = template.configuration(c);
        match evaluate_configuration(&config, points, obstacles, options)? {
            None => scores.push(None),
            Some((score, ws)) => {
                scores.push(Some(score.clone()));
                let better = best.as_ref().is_none_or(|(_, b, _)| score.rmse < b.rmse - EXTERIOR_EPS);
                if better {
                    best = Some((config, score, ws));
                }
            }
        }
    }
    let (configuration, score, workspace) = best.ok_or(WorkspaceError::AllConfigsInfeasible)?;
    Ok(SearchResult {
        configuration,
        score,
        scores,
        workspace,
    })
}

pub fn snap_point(ws: &Workspace, p: &Point3) -> Result<Point3, WorkspaceError> {
    Ok(ws.hull()?.snap(p))
}
