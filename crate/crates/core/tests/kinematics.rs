use std::f64::consts::{FRAC_PI_2, PI};

use forge_core::kinematics::{
    chain_frames, dh_transform, forward_kinematics, template_from_anchors, ArmCase, BaseMode, DhRow, JointKind, Pose,
};
use forge_core::mesh::{Point3, Vector3};
use forge_core::selection::ShapeKind;
use nalgebra::{Isometry3, Matrix4, Translation3, UnitQuaternion};
use proptest::prelude::*;

/// Rot_x(α) · Trans_x(a) · Rot_z(θ) · Trans_z(d), composed from nalgebra
/// isometries rather than written out entry by entry.
fn oracle(a: f64, alpha: f64, d: f64, theta: f64) -> Matrix4<f64> {
    let rx = Isometry3::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::x_axis(), alpha));
    let tx = Isometry3::from_parts(Translation3::new(a, 0.0, 0.0), UnitQuaternion::identity());
    let rz = Isometry3::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta));
    let tz = Isometry3::from_parts(Translation3::new(0.0, 0.0, d), UnitQuaternion::identity());
    (rx * tx * rz * tz).to_homogeneous()
}

fn max_abs(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    (a - b).abs().max()
}

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

proptest! {
    #[test]
    fn row_matches_composed_oracle(a in -500.0..500.0f64, alpha in angle(), d in -500.0..500.0f64, theta in angle()) {
        let got = dh_transform(&DhRow::fixed(a, alpha, d, theta)).to_matrix();
        prop_assert!(max_abs(&got, &oracle(a, alpha, d, theta)) <= 1e-12);
    }

    #[test]
    fn chain_is_product_of_rows(
        rows in prop::collection::vec((-200.0..200.0f64, angle(), -200.0..200.0f64, angle()), 1..8),
        values in prop::collection::vec(angle(), 8),
    ) {
        let table: Vec<DhRow> = rows
            .iter()
            .map(|&(a, al, d, th)| DhRow::revolute(a, al, d, th, PI, JointKind::Driving))
            .collect();
        let used = &values[..table.len()];
        let fk = forward_kinematics(&table, used).unwrap();
        let mut expected = Matrix4::identity();
        for (&(a, al, d, th), v) in rows.iter().zip(used) {
            expected *= oracle(a, al, d, th + v);
        }
        let scale = 1.0 + expected.abs().max();
        prop_assert!(max_abs(&fk.to_matrix(), &expected) <= 1e-12 * scale * table.len() as f64);
        prop_assert!(fk.is_rigid(1e-9));
    }

    #[test]
    fn locked_rows_consume_no_value(theta in angle(), v in angle()) {
        let table = [
            DhRow::revolute(10.0, 0.0, 0.0, 0.0, PI, JointKind::Driving),
            DhRow::fixed(20.0, FRAC_PI_2, 5.0, theta),
        ];
        let frames = chain_frames(&table, &[v]).unwrap();
        prop_assert_eq!(frames.len(), 2);
        let expected = oracle(10.0, 0.0, 0.0, v) * oracle(20.0, FRAC_PI_2, 5.0, theta);
        prop_assert!(max_abs(&frames[1].to_matrix(), &expected) <= 1e-12 * 40.0);
    }
}

#[test]
fn planar_two_link_closed_form() {
    let table = [
        DhRow::revolute(0.0, 0.0, 0.0, 0.0, PI, JointKind::Driving),
        DhRow::revolute(100.0, 0.0, 0.0, 0.0, PI, JointKind::Driving),
        DhRow::fixed(80.0, 0.0, 0.0, 0.0),
    ];
    let (t1, t2) = (30f64.to_radians(), 45f64.to_radians());
    let p = forward_kinematics(&table, &[t1, t2]).unwrap().position();
    let expected = Point3::new(
        100.0 * t1.cos() + 80.0 * (t1 + t2).cos(),
        100.0 * t1.sin() + 80.0 * (t1 + t2).sin(),
        0.0,
    );
    assert!((p - expected).norm() <= 1e-9, "{p:?} vs {expected:?}");
}

#[test]
fn all_zero_rows_are_identity() {
    let table = vec![DhRow::fixed(0.0, 0.0, 0.0, 0.0); 5];
    let fk = forward_kinematics(&table, &[]).unwrap();
    assert!(max_abs(&fk.to_matrix(), &Pose::identity().to_matrix()) == 0.0);
}

#[test]
fn case_follows_shape_and_base() {
    assert_eq!(ArmCase::choose(ShapeKind::Slender, BaseMode::StaticIsBase), ArmCase::Unfolded);
    assert_eq!(ArmCase::choose(ShapeKind::Slender, BaseMode::StaticIsEe), ArmCase::Unfolded);
    assert_eq!(
        ArmCase::choose(ShapeKind::NonSlender, BaseMode::StaticIsBase),
        ArmCase::FoldedEeOnTransformable
    );
    assert_eq!(ArmCase::choose(ShapeKind::NonSlender, BaseMode::StaticIsEe), ArmCase::FoldedEeOnStatic);
    assert_eq!(ArmCase::Unfolded.steering_joint(), 0);
    assert_eq!(ArmCase::FoldedEeOnTransformable.steering_joint(), 1);
    assert_eq!(ArmCase::FoldedEeOnStatic.steering_joint(), 0);
}

fn anchors() -> [Point3; 5] {
    [
        Point3::origin(),
        Point3::new(60.0, 0.0, 0.0),
        Point3::new(110.0, 5.0, 0.0),
        Point3::new(150.0, 5.0, 10.0),
        Point3::new(180.0, 0.0, 10.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn configurations_share_rest_pose_and_keep_four_joints(
        steering in 0usize..2,
        q in prop::array::uniform4(-1.0..1.0f64),
    ) {
        let case = if steering == 0 { ArmCase::Unfolded } else { ArmCase::FoldedEeOnTransformable };
        let t = template_from_anchors(anchors(), Vector3::z(), steering, case, BaseMode::StaticIsBase);
        let rest = t.configuration(0).end_pose(&[0.0; 4]).position();
        for c in 0..3 {
            let config = t.configuration(c);
            prop_assert_eq!(config.actuated_rows().len(), 4);
            prop_assert!((config.end_pose(&[0.0; 4]).position() - rest).norm() <= 1e-9);
            let ranges = config.value_ranges();
            let v: [f64; 4] = std::array::from_fn(|k| q[k].clamp(ranges[k][0], ranges[k][1]));
            prop_assert!(config.end_pose(&v).is_rigid(1e-9));
        }
    }
}
