use forge_core::fabrication::{bundle_files, export_bundle, MotorSpec};
use forge_core::mesh::{make_grid_box, write_stl_binary, Axis, Box3, Mesh, Point3};
use forge_core::pipeline::{
    run_fabrication, run_generation, run_on_mesh, run_pipeline, DesignFile, EndEffectorOn, PipelineOptions, StageError, Step,
};
use forge_core::selection::SweepSelection;
use forge_core::task::{Action, MotionPoint, TaskSpec};
use forge_core::workspace::WorkspaceError;

fn bar() -> Mesh {
    make_grid_box(&Box3::new(Point3::origin(), Point3::new(300.0, 30.0, 30.0)), 50.0)
}

fn design(motorized: bool, points: Vec<MotionPoint>) -> DesignFile {
    DesignFile {
        mesh_path: "bar.stl".into(),
        selection: SweepSelection { axis: Axis::X, start: 60.0, end: 300.0 },
        end_effector_on: EndEffectorOn::Transformable,
        motorized,
        motion_points: points,
        attach_surface: None,
        references: Vec::new(),
        resolution: Some(9),
        speed_deg_s: None,
    }
}

fn tip() -> MotionPoint {
    MotionPoint::new(Point3::new(300.0, 15.0, 15.0), Action::Trajectory)
}

#[test]
fn manual_bar_bundle_has_links_hinges_and_no_motors() {
    let out = run_on_mesh(&design(false, vec![tip()]), &bar(), &PipelineOptions::default()).unwrap();
    let (manifest, files) = bundle_files(&out.bundle).unwrap();
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("link_")).count(), 4);
    assert_eq!(manifest.connectors.iter().filter(|c| c.hinge).count(), 3);
    assert!(names.contains(&"manifest.json") && names.contains(&"trajectory.csv"));
    assert!(manifest.motors.is_empty() && manifest.motor_spec.is_none());
    let json = String::from_utf8(files.iter().find(|(n, _)| n == "manifest.json").unwrap().1.clone()).unwrap();
    assert!(!json.contains("XL-320"));
}

#[test]
fn motorized_pick_place_lists_five_motors() {
    let d = design(true, vec![tip()]);
    let mesh = bar();
    let first = run_on_mesh(&d, &mesh, &PipelineOptions::default()).unwrap();
    // two sample positions of the chosen workspace are reachable exactly
    let ws = &first.generated.search.workspace;
    let n = ws.samples.len();
    let spec = TaskSpec::new()
        .add_point(MotionPoint::new(ws.samples[n / 3].position, Action::Pick))
        .unwrap()
        .add_point(MotionPoint::new(ws.samples[2 * n / 3].position, Action::Place))
        .unwrap();
    assert_eq!(spec.count(Action::Place), 1);
    let selected = forge_core::pipeline::run_selection(&mesh, &d.selection, 0.0).unwrap();
    let generated = run_generation(&selected, &spec, d.end_effector_on.base_mode(), 9, false).unwrap();
    let bundle = run_fabrication(&selected, &generated, &spec, &MotorSpec::xl320(), true, 60.0).unwrap();
    let (manifest, _) = bundle_files(&bundle).unwrap();
    assert_eq!(manifest.motors.len(), 5);
    assert_eq!(manifest.motors.iter().filter(|m| m.role == "gripper").count(), 1);
    assert!(manifest.end_effector.is_some());
}

#[test]
fn re_export_is_byte_identical() {
    let out = run_on_mesh(&design(true, vec![tip()]), &bar(), &PipelineOptions::default()).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export_bundle(&out.bundle, a.path()).unwrap();
    export_bundle(&out.bundle, b.path()).unwrap();
    export_bundle(&out.bundle, b.path()).unwrap();
    let (_, files) = bundle_files(&out.bundle).unwrap();
    for (name, bytes) in files {
        assert_eq!(std::fs::read(a.path().join(&name)).unwrap(), bytes, "{name}");
        assert_eq!(std::fs::read(b.path().join(&name)).unwrap(), bytes, "{name}");
    }
}

#[test]
fn slender_bar_runs_end_to_end_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bar.stl"), write_stl_binary(&bar())).unwrap();
    let path = dir.path().join("bar.json");
    std::fs::write(&path, serde_json::to_string(&design(true, vec![tip()])).unwrap()).unwrap();
    let d = DesignFile::load(&path).unwrap();
    assert!(d.problems().is_empty(), "{:?}", d.problems());
    let out = dir.path().join("out");
    let report = run_pipeline(&d, &out, &PipelineOptions::default()).unwrap();
    assert_eq!(report.links, 4);
    for k in 0..4 {
        assert!(out.join(format!("link_{k}.stl")).is_file());
    }
    assert!(report.files.contains(&"manifest.json".to_string()));
}

#[test]
fn empty_selection_fails_at_step_one() {
    let mut d = design(true, vec![tip()]);
    d.selection.start = 120.0;
    d.selection.end = 120.0;
    let e = run_on_mesh(&d, &bar(), &PipelineOptions::default()).unwrap_err();
    assert_eq!(e.step, Step::Selection);
    assert!(e.to_string().contains("#1 selection"), "{e}");
}

#[test]
fn unreachable_points_without_snapping_are_infeasible() {
    let far = MotionPoint::new(Point3::new(5000.0, 0.0, 0.0), Action::Trajectory);
    let opts = PipelineOptions {
        snap: false,
        ..PipelineOptions::default()
    };
    let e = run_on_mesh(&design(true, vec![far]), &bar(), &opts).unwrap_err();
    assert_eq!(e.step, Step::Generation);
    assert!(matches!(e.source, StageError::Workspace(WorkspaceError::AllConfigsInfeasible)), "{e}");
}

#[test]
fn invalid_task_fails_at_step_two() {
    let place_only = MotionPoint::new(Point3::new(300.0, 15.0, 15.0), Action::Place);
    let e = run_on_mesh(&design(true, vec![place_only]), &bar(), &PipelineOptions::default()).unwrap_err();
    assert_eq!(e.step, Step::Task);
}
