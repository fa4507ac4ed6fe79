mod common;

use common::rotation_error;
use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;

use dfvo_core::eval::{ate, align_trajectory, Alignment};
use dfvo_core::io::format_poses;
use dfvo_core::model_selection::TrackerKind;
use dfvo_core::pipeline::{process_pair, run_sequence, Odometry};
use dfvo_core::simulator::{scenario, NoiseConfig, Scenario};
use dfvo_core::trajectory::chain;
use dfvo_core::{FlowField, FrameInput, PipelineConfig, RigidTransform, Trajectory};

fn frames(kind: Scenario, n: usize, seed: u64) -> Vec<FrameInput> {
    scenario(kind, n, seed).unwrap().frames().map(|f| f.unwrap()).collect()
}

#[test]
fn exact_general_frame_is_recovered() {
    let seq = scenario(Scenario::General, 4, 21).unwrap();
    for k in 1..4 {
        let truth = seq.true_relative(k);
        let (pose, diag) = process_pair(&seq.frame(k).unwrap(), &RigidTransform::identity(), 0.0, &PipelineConfig::default());
        assert_eq!(diag.used, TrackerKind::Essential);
        let t_err = (pose.translation - truth.translation).norm() / truth.translation.norm();
        assert!(t_err < 1e-4, "frame {k}: relative translation error {t_err}");
        assert!(rotation_error(&pose.rotation, &truth.rotation) < 1e-6);
    }
}

#[test]
fn tripped_gate_returns_previous_motion() {
    let seq = scenario(Scenario::General, 2, 3).unwrap();
    let mut f = seq.frame(1).unwrap();
    let (w, h) = (f.depth.width(), f.depth.height());
    // Every forward target leaves the image.
    f.flow_bwd = Some(FlowField::constant(w, h, Vector2::new(10.0 * w as f64, 0.0)).unwrap());
    let prev = RigidTransform::from_axis_angle(Vector3::new(0.0, 0.01, 0.0), Vector3::new(0.1, 0.0, 0.9));
    let (pose, diag) = process_pair(&f, &prev, 1.0, &PipelineConfig::default());
    assert_eq!(pose, prev);
    assert_eq!(diag.used, TrackerKind::ConstantMotion);
    assert!(diag.fallback.unwrap().contains("insufficient"));

    let mut missing = seq.frame(1).unwrap();
    missing.flow_fwd = None;
    assert_eq!(process_pair(&missing, &prev, 1.0, &PipelineConfig::default()).0, prev);
}

#[test]
fn pure_rotation_uses_pnp() {
    let seq = scenario(Scenario::PureRotation, 4, 5).unwrap();
    for k in 1..4 {
        let truth = seq.true_relative(k);
        let (pose, diag) = process_pair(&seq.frame(k).unwrap(), &RigidTransform::identity(), 0.0, &PipelineConfig::default());
        assert_eq!(diag.used, TrackerKind::Pnp, "frame {k}");
        assert!(rotation_error(&pose.rotation, &truth.rotation).to_degrees() < 0.1);
    }
}

#[test]
fn two_frame_stream() {
    let f = frames(Scenario::General, 2, 1);
    let out = run_sequence(&f, &PipelineConfig::default()).unwrap();
    assert_eq!(out.trajectory.len(), 2);
    assert_eq!(out.trajectory.poses()[0], RigidTransform::identity());
    let (rel, _) = process_pair(&f[1], &RigidTransform::identity(), 0.0, &PipelineConfig::default());
    let second = out.trajectory.poses()[1];
    assert!((second.translation - rel.translation).norm() < 1e-12);
    assert!((second.rotation - rel.rotation).norm() < 1e-12);
    assert_eq!(out.diagnostics.len(), 1);
}

#[test]
fn circle_run_has_small_ate() {
    let seq = scenario(Scenario::Circle, 50, 2).unwrap();
    let f: Vec<FrameInput> = seq.frames().map(|f| f.unwrap()).collect();
    let out = run_sequence(&f, &PipelineConfig::default()).unwrap();
    let gt = seq.ground_truth();
    assert!(ate(&out.trajectory, &gt).unwrap() < 1e-3);
    let aligned = align_trajectory(&out.trajectory, &gt, Alignment::Similarity).unwrap();
    assert!(ate(&aligned.aligned, &gt).unwrap() < 1e-3);
    // Exact inputs leave nothing for 7-DoF alignment to fix.
    assert!((aligned.transform.scale - 1.0).abs() < 1e-4);
}

#[test]
fn chaining_relatives_reproduces_absolutes() {
    let f = frames(Scenario::General, 12, 4);
    let mut odo = Odometry::new(PipelineConfig::default()).unwrap();
    let abs: Vec<RigidTransform> = f.iter().map(|x| odo.push(x).unwrap()).collect();
    let out = odo.finish().unwrap();
    let mut acc = RigidTransform::identity();
    assert_eq!(abs[0], acc);
    for (k, rel) in out.relatives.iter().enumerate() {
        acc = chain(&acc, rel);
        assert_eq!(acc, abs[k + 1]);
        assert_eq!(acc, out.trajectory.poses()[k + 1]);
    }
    let rebuilt = Trajectory::from_relative(out.trajectory.ids().to_vec(), &out.relatives).unwrap();
    assert_eq!(rebuilt, out.trajectory);
}

#[test]
fn long_chains_stay_orthonormal() {
    let step = RigidTransform::from_axis_angle(Vector3::new(0.013, -0.021, 0.007), Vector3::new(0.1, 0.0, 1.0));
    let mut acc = RigidTransform::identity();
    for _ in 0..10_000 {
        acc = chain(&acc, &step);
        assert!(acc.orthonormality_error() < 1e-9);
    }
    assert!((acc.rotation.determinant() - 1.0).abs() < 1e-9);
}

#[test]
fn runs_are_deterministic() {
    let seq = scenario(Scenario::General, 8, 6)
        .unwrap()
        .with_noise(Some(NoiseConfig { flow_noise_std: 0.5, depth_noise_rel: 0.02, outlier_fraction: 0.1, outlier_magnitude: 8.0, seed: 6, ..Default::default() }))
        .unwrap();
    let f: Vec<FrameInput> = seq.frames().map(|f| f.unwrap()).collect();
    let cfg = PipelineConfig { seed: 77, ..Default::default() };
    let a = run_sequence(&f, &cfg).unwrap();
    let b = run_sequence(&f, &cfg).unwrap();
    assert_eq!(format_poses(&a.trajectory), format_poses(&b.trajectory));
    assert_eq!(a.relatives, b.relatives);
}

#[test]
fn out_of_order_frames_are_rejected() {
    let f = frames(Scenario::General, 3, 1);
    let mut odo = Odometry::new(PipelineConfig::default()).unwrap();
    odo.push(&f[0]).unwrap();
    odo.push(&f[1]).unwrap();
    assert!(odo.push(&f[1]).is_err());
    assert!(Odometry::new(PipelineConfig { scale: dfvo_core::scale::IterScaleParams { rel_tol: 0.0, ..Default::default() }, ..Default::default() }).is_err());
}

#[test]
fn essential_branch_only_when_permitted() {
    for (kind, seed) in [(Scenario::General, 1), (Scenario::PureRotation, 2), (Scenario::Planar, 3), (Scenario::StopAndGo, 4)] {
        let out = run_sequence(&frames(kind, 9, seed), &PipelineConfig::default()).unwrap();
        for d in &out.diagnostics {
            if d.used == TrackerKind::Essential {
                assert_eq!(d.decision.chosen, TrackerKind::Essential);
                assert!(d.decision.gric_e <= d.decision.gric_h && d.decision.cheirality_pass);
                assert!(d.scale.is_some());
            }
        }
    }
}

#[test]
fn flow_gate_routes_small_motion_to_pnp() {
    let f = frames(Scenario::General, 2, 9);
    let cfg = PipelineConfig { flow_gate: Some(1e6), ..Default::default() };
    let (_, diag) = process_pair(&f[1], &RigidTransform::identity(), 0.0, &cfg);
    assert_eq!(diag.used, TrackerKind::Pnp);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chaining_matches_matrix_products(seed in any::<u64>(), n in 2usize..40) {
        let mut r = common::rng(seed);
        let rel: Vec<RigidTransform> = (0..n).map(|_| common::random_pose(&mut r, 0.3, 1.0)).collect();
        let t = Trajectory::from_relative((0..=n).collect(), &rel).unwrap();
        let mut m = nalgebra::Matrix4::identity();
        for (k, x) in rel.iter().enumerate() {
            m *= x.to_matrix();
            prop_assert!((t.poses()[k + 1].to_matrix() - m).norm() < 1e-9);
        }
    }
}
