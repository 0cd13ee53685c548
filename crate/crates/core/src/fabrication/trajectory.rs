use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::FabricationError;
use crate::kinematics::ArmConfiguration;
use crate::mesh::{Point3, Vector3};
use crate::task::{Action, MotionPoint, TaskSpec};
use crate::workspace::{orientation_matches, Workspace, EXTERIOR_EPS};

pub const DEFAULT_SPEED_DEG_S: f64 = 60.0;
/// Shortest time between two waypoints, s.
pub const MIN_STEP_S: f64 = 0.1;
/// Largest joint change applied in one solver iteration, rad.
const MAX_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkOptions {
    pub damping: f64,
    pub orientation_weight: f64,
    pub max_iterations: usize,
    /// Residual above which a point counts as unreachable, mm.
    pub divergence_mm: f64,
    /// Nearest workspace samples tried as starting points.
    pub seeds: usize,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            damping: 0.05,
            orientation_weight: 0.3,
            max_iterations: 200,
            divergence_mm: 2.0,
            seeds: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub angles: [f64; 4],
    /// Position error at `angles`, mm.
    pub residual: f64,
    pub seed: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub time: f64,
    /// Joint displacements from the rest pose, rad.
    pub angles: [f64; 4],
    /// `None` for the rest pose.
    pub action: Option<Action>,
    /// Index of the motion point this waypoint serves.
    pub point: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub waypoints: Vec<Waypoint>,
    pub motorized: bool,
}

fn clamp(q: &mut [f64; 4], ranges: &[[f64; 2]; 4]) {
    for (v, r) in q.iter_mut().zip(ranges) {
        *v = v.clamp(r[0], r[1]);
    }
}

/// Position rows, then weighted orientation rows when `dir` is set.
fn residual_and_jacobian(
    config: &ArmConfiguration,
    q: &[f64; 4],
    target: &Point3,
    dir: Option<(&Vector3, f64)>,
) -> (DVector<f64>, DMatrix<f64>) {
    let frames = config.frames(q);
    let ee = frames.last().expect("end-effector frame");
    let p = ee.position();
    let n = ee.n_axis();
    let rows = config.actuated_rows();
    let m = if dir.is_some() { 6 } else { 3 };
    let mut e = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, 4);
    e.fixed_rows_mut::<3>(0).copy_from(&(target - p));
    for (k, &r) in rows.iter().enumerate() {
        let z = frames[r].z_axis();
        let o = frames[r].position();
        jac.fixed_view_mut::<3, 1>(0, k).copy_from(&z.cross(&(p - o)));
        if let Some((_, w)) = dir {
            jac.fixed_view_mut::<3, 1>(3, k).copy_from(&(z.cross(&n) * w));
        }
    }
    if let Some((d, w)) = dir {
        e.fixed_rows_mut::<3>(3).copy_from(&((d - n) * w));
    }
    (e, jac)
}

fn damped_step(e: &DVector<f64>, jac: &DMatrix<f64>, damping: f64) -> DVector<f64> {
    let m = e.len();
    let a = jac * jac.transpose() + DMatrix::identity(m, m) * (damping * damping);
    let x = a.cholesky().map(|c| c.solve(e)).unwrap_or_else(|| DVector::zeros(m));
    let mut step = jac.transpose() * x;
    let big = step.amax();
    if big > MAX_STEP {
        step *= MAX_STEP / big;
    }
    step
}

fn refine(
    config: &ArmConfiguration,
    seed: [f64; 4],
    target: &Point3,
    dir: Option<&Vector3>,
    opts: &IkOptions,
) -> [f64; 4] {
    let ranges = config.value_ranges();
    let mut q = seed;
    // orientation is a soft goal: weighted pass first, then position only
    let passes: Vec<Option<(&Vector3, f64)>> = match dir {
        Some(d) => vec![Some((d, opts.orientation_weight)), None],
        None => vec![None],
    };
    for pass in passes {
        for _ in 0..opts.max_iterations {
            let (e, jac) = residual_and_jacobian(config, &q, target, pass);
            if e.rows(0, 3).norm() < 1e-12 && pass.is_none() {
                break;
            }
            let step = damped_step(&e, &jac, opts.damping);
            if step.amax() < 1e-15 {
                break;
            }
            for k in 0..4 {
                q[k] += step[k];
            }
            clamp(&mut q, &ranges);
        }
    }
    q
}

/// Starting points: the nearest samples (orientation-matched ones first when
/// an orientation is requested), ties broken by sample order.
fn seeds(ws: &Workspace, target: &MotionPoint, count: usize) -> Vec<[f64; 4]> {
    let matching: Vec<usize> = match target.orientation {
        Some(d) => (0..ws.samples.len())
            .filter(|&i| orientation_matches(&ws.samples[i].n_axis, &d))
            .collect(),
        None => Vec::new(),
    };
    let pool: Vec<usize> = if matching.is_empty() {
        (0..ws.samples.len()).collect()
    } else {
        matching
    };
    let mut ranked: Vec<(f64, usize)> = pool
        .into_iter()
        .map(|i| ((ws.samples[i].position - target.position).norm(), i))
        .collect();
    let count = count.max(1).min(ranked.len());
    if count < ranked.len() {
        ranked.select_nth_unstable_by(count - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ranked.truncate(count);
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, i)| ws.samples[i].joint_values).collect()
}

fn position_error(config: &ArmConfiguration, q: &[f64; 4], target: &Point3) -> f64 {
    (config.end_pose(q).position() - target).norm()
}

fn max_delta(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Best solution over the sample seeds plus `prefer`. Among solutions
/// within 1e-6 mm of the best residual, the one closest to `prefer` wins.
fn solve_from(
    config: &ArmConfiguration,
    ws: &Workspace,
    target: &MotionPoint,
    opts: &IkOptions,
    prefer: Option<&[f64; 4]>,
) -> Result<IkSolution, FabricationError> {
    let mut starts = seeds(ws, target, opts.seeds);
    if starts.is_empty() {
        return Err(FabricationError::EmptyWorkspace);
    }
    if let Some(p) = prefer {
        starts.push(*p);
    }
    let solutions: Vec<IkSolution> = starts
        .iter()
        .map(|s| {
            let angles = refine(config, *s, &target.position, target.orientation.as_ref(), opts);
            IkSolution {
                angles,
                residual: position_error(config, &angles, &target.position),
                seed: *s,
            }
        })
        .collect();
    let best = solutions.iter().map(|s| s.residual).fold(f64::INFINITY, f64::min);
    let pick = solutions
        .iter()
        .filter(|s| s.residual <= best + 1e-6)
        .min_by(|a, b| {
            let key = |s: &IkSolution| prefer.map_or(0.0, |p| max_delta(&s.angles, p));
            key(a).total_cmp(&key(b))
        })
        .expect("at least one solution");
    Ok(*pick)
}

/// Joint values that put the end-effector on `target`, refined by damped
/// least squares from the nearest workspace samples.
pub fn solve_ik(
    config: &ArmConfiguration,
    ws: &Workspace,
    target: &MotionPoint,
    opts: &IkOptions,
) -> Result<IkSolution, FabricationError> {
    solve_from(config, ws, target, opts, None)
}

pub fn plan_trajectory(
    config: &ArmConfiguration,
    ws: &Workspace,
    spec: &TaskSpec,
    speed_deg_s: f64,
    motorized: bool,
) -> Result<JointTrajectory, FabricationError> {
    plan_with(config, ws, spec, speed_deg_s, motorized, &IkOptions::default())
}

pub(crate) fn plan_with(
    config: &ArmConfiguration,
    ws: &Workspace,
    spec: &TaskSpec,
    speed_deg_s: f64,
    motorized: bool,
    opts: &IkOptions,
) -> Result<JointTrajectory, FabricationError> {
    if !(speed_deg_s > 0.0) || !speed_deg_s.is_finite() {
        return Err(FabricationError::BadSpeed(speed_deg_s));
    }
    let hull = ws.hull.as_ref().ok_or(FabricationError::EmptyWorkspace)?;
    for (point, p) in spec.points.iter().enumerate() {
        let distance = hull.distance(&p.position);
        if distance > EXTERIOR_EPS {
            return Err(FabricationError::OutsideWorkspace { point, distance });
        }
    }
    let speed = speed_deg_s.to_radians();
    let mut waypoints = vec![Waypoint {
        time: 0.0,
        angles: [0.0; 4],
        action: None,
        point: None,
    }];
    for (point, p) in spec.points.iter().enumerate() {
        let prev = waypoints.last().expect("rest waypoint").clone();
        let sol = solve_from(config, ws, p, opts, Some(&prev.angles))?;
        if sol.residual > opts.divergence_mm {
            return Err(FabricationError::IkDivergence {
                point,
                residual: sol.residual,
            });
        }
        let dt = (max_delta(&sol.angles, &prev.angles) / speed).max(MIN_STEP_S);
        waypoints.push(Waypoint {
            time: prev.time + dt,
            angles: sol.angles,
            action: Some(p.action),
            point: Some(point),
        });
    }
    if spec.is_loop() {
        let first = waypoints[1].clone();
        let prev = waypoints.last().expect("motion waypoint");
        let dt = (max_delta(&first.angles, &prev.angles) / speed).max(MIN_STEP_S);
        waypoints.push(Waypoint {
            time: prev.time + dt,
            ..first
        });
    }
    Ok(JointTrajectory { waypoints, motorized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{template_from_anchors, ArmCase, BaseMode};
    use crate::workspace::sample_workspace;

    /// Two real links of 100 and 80 mm in the z = 0 plane; the other two
    /// have zero length. Configuration 2 keeps every joint about z.
    fn planar() -> ArmConfiguration {
        let a = [
            Point3::origin(),
            Point3::new(100.0, 0.0, 0.0),
            Point3::new(180.0, 0.0, 0.0),
            Point3::new(180.0, 0.0, 0.0),
            Point3::new(180.0, 0.0, 0.0),
        ];
        template_from_anchors(a, Vector3::z(), 0, ArmCase::Unfolded, BaseMode::StaticIsBase).configuration(2)
    }

    #[test]
    fn sample_target_converges_at_seed() {
        let a = [
            Point3::origin(),
            Point3::new(60.0, 0.0, 0.0),
            Point3::new(110.0, 0.0, 0.0),
            Point3::new(150.0, 0.0, 0.0),
            Point3::new(180.0, 0.0, 0.0),
        ];
        let c = template_from_anchors(a, Vector3::z(), 0, ArmCase::Unfolded, BaseMode::StaticIsBase).configuration(0);
        let ws = sample_workspace(&c, 9).unwrap();
        let s = ws.samples[1234];
        let sol = solve_ik(&c, &ws, &MotionPoint::new(s.position, Action::Trajectory), &IkOptions::default()).unwrap();
        assert!(sol.residual <= 1e-6);
        assert_eq!(sol.seed, s.joint_values);
        assert!(max_delta(&sol.angles, &s.joint_values) < 1e-6);
    }

    #[test]
    fn planar_round_trip() {
        let c = planar();
        let ws = sample_workspace(&c, 9).unwrap();
        let target = Point3::new(100.0, 80.0, 0.0);
        let sol = solve_ik(&c, &ws, &MotionPoint::new(target, Action::Trajectory), &IkOptions::default()).unwrap();
        assert!((c.end_pose(&sol.angles).position() - target).norm() <= 0.1);
    }

    #[test]
    fn exterior_point_is_a_precondition_error() {
        let c = planar();
        let ws = sample_workspace(&c, 9).unwrap();
        let spec = TaskSpec::new()
            .add_point(MotionPoint::new(Point3::new(500.0, 0.0, 0.0), Action::Trajectory))
            .unwrap();
        let r = plan_trajectory(&c, &ws, &spec, DEFAULT_SPEED_DEG_S, true);
        assert!(matches!(r, Err(FabricationError::OutsideWorkspace { point: 0, .. })));
        assert!(matches!(
            plan_trajectory(&c, &ws, &TaskSpec::new(), 0.0, true),
            Err(FabricationError::BadSpeed(_))
        ));
    }

    #[test]
    fn times_increase_and_angles_stay_in_range() {
        let c = planar();
        let ws = sample_workspace(&c, 9).unwrap();
        let mut spec = TaskSpec::new();
        // all within the elbow's ±90° reach: 128 to 180 mm from the base
        for p in [(100.0, 80.0), (150.0, -40.0), (40.0, 150.0), (101.0, 79.0)] {
            spec = spec
                .add_point(MotionPoint::new(Point3::new(p.0, p.1, 0.0), Action::Trajectory))
                .unwrap();
        }
        let t = plan_trajectory(&c, &ws, &spec, DEFAULT_SPEED_DEG_S, true).unwrap();
        // rest, four points, loop closure
        assert_eq!(t.waypoints.len(), 6);
        assert_eq!(t.waypoints[5].point, Some(0));
        let ranges = c.value_ranges();
        for w in t.waypoints.windows(2) {
            assert!(w[1].time - w[0].time >= MIN_STEP_S - 1e-12);
        }
        for w in &t.waypoints {
            for k in 0..4 {
                assert!(w.angles[k] >= ranges[k][0] && w.angles[k] <= ranges[k][1]);
            }
            if let Some(i) = w.point {
                assert!((c.end_pose(&w.angles).position() - spec.points[i].position).norm() <= 0.1);
            }
        }
    }
}
