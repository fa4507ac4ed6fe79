mod common;

use std::fs;

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use proptest::prelude::*;
use rand::Rng;

use dfvo_core::eval::{
    align_trajectory, arc_lengths, ate, evaluate, kitti_odometry_errors, rpe, umeyama, Alignment, EvalOptions,
    Similarity, KITTI_LENGTHS,
};
use dfvo_core::io::{
    self, decode, encode_depth, encode_flow, format_config, format_intrinsics, format_poses, parse_config,
    parse_intrinsics, parse_poses, write_dataset, Dataset, Manifest, Raster, MANIFEST_FILE,
};
use dfvo_core::pipeline::{run_sequence, ScaleMethod};
use dfvo_core::simulator::{scenario, Scenario};
use dfvo_core::{DepthMap, Error, FlowField, Intrinsics, PipelineConfig, RigidTransform, Trajectory};

fn random_trajectory(r: &mut impl Rng, n: usize, step: f64) -> Trajectory {
    let mut poses = vec![RigidTransform::identity()];
    for _ in 1..n {
        let axis = Vector3::new(r.random_range(-0.02..0.02), r.random_range(-0.05..0.05), r.random_range(-0.02..0.02));
        let t = Vector3::new(r.random_range(-0.2..0.2), r.random_range(-0.1..0.1), step * r.random_range(0.5..1.5));
        let rel = RigidTransform::from_axis_angle(axis, t);
        poses.push(*poses.last().unwrap() * rel);
    }
    Trajectory::from_poses(poses)
}

fn perturb(r: &mut impl Rng, t: &Trajectory, rot: f64, trans: f64) -> Trajectory {
    let rel = t.relatives();
    let noisy: Vec<RigidTransform> = rel
        .iter()
        .map(|x| {
            let d = RigidTransform::from_axis_angle(
                Vector3::new(r.random_range(-rot..rot), r.random_range(-rot..rot), r.random_range(-rot..rot)),
                Vector3::new(r.random_range(-trans..trans), r.random_range(-trans..trans), r.random_range(-trans..trans)),
            );
            *x * d
        })
        .collect();
    Trajectory::from_relative(t.ids().to_vec(), &noisy).unwrap()
}

fn transformed(t: &Trajectory, g: &RigidTransform) -> Trajectory {
    Trajectory::new(t.ids().to_vec(), t.poses().iter().map(|p| *g * *p).collect()).unwrap()
}

// ---------------------------------------------------------------- rasters

#[test]
fn raster_layout_is_bit_exact() {
    // Hand-built file: header, then row-major channel-interleaved f32 LE.
    let mut bytes = b"DFVR".to_vec();
    bytes.extend([1, 0, 2, 0]);
    bytes.extend(2u32.to_le_bytes());
    bytes.extend(3u32.to_le_bytes());
    let vals: Vec<f32> = (0..12).map(|i| i as f32 * 0.5 - 1.25).collect();
    for v in &vals {
        bytes.extend(v.to_le_bytes());
    }
    let Raster::Flow(f) = decode(&bytes).unwrap() else { panic!("expected flow") };
    assert_eq!((f.width(), f.height()), (3, 2));
    assert_eq!(f.get(2, 1), Vector2::new(vals[10] as f64, vals[11] as f64));
    assert_eq!(f.get(1, 0), Vector2::new(vals[2] as f64, vals[3] as f64));
    assert_eq!(encode_flow(&f).unwrap(), bytes);
}

#[test]
fn raster_errors() {
    let d = DepthMap::constant(10, 10, 3.0).unwrap();
    let mut bytes = encode_depth(&d).unwrap();
    assert_eq!(bytes.len(), 16 + 400);
    bytes[..4].copy_from_slice(b"XXXX");
    assert!(matches!(decode(&bytes), Err(Error::Format(_))));

    // 10×10×2 header with a 100-float payload.
    let mut short = b"DFVR".to_vec();
    short.extend([1, 0, 2, 0]);
    short.extend(10u32.to_le_bytes());
    short.extend(10u32.to_le_bytes());
    short.extend(vec![0u8; 400]);
    assert!(matches!(decode(&short), Err(Error::Length { expected: 800, found: 400 })));

    let mut nan = encode_depth(&d).unwrap();
    nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(decode(&nan).is_err());
}

#[test]
fn raster_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = FlowField::from_fn(7, 5, |x, y| Vector2::new(x as f64 * 0.25, -(y as f64) * 1.5)).unwrap();
    io::write_flow(&f, dir.path().join("f.dfvr")).unwrap();
    assert_eq!(io::read_flow(dir.path().join("f.dfvr")).unwrap(), f);
    let d = DepthMap::from_fn(7, 5, |x, y| if x == y { 0.0 } else { 1.0 + x as f64 }).unwrap();
    io::write_depth(&d, dir.path().join("d.dfvr")).unwrap();
    assert_eq!(io::read_depth(dir.path().join("d.dfvr")).unwrap(), d);
    assert!(io::read_depth(dir.path().join("f.dfvr")).is_err());
    assert!(io::read_flow(dir.path().join("missing.dfvr")).is_err());
}

proptest! {
    #[test]
    fn raster_bytes_round_trip(w in 1u32..20, h in 1u32..20, channels in 1u8..=2, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let mut bytes = b"DFVR".to_vec();
        bytes.extend([1, 0, channels, 0]);
        bytes.extend(h.to_le_bytes());
        bytes.extend(w.to_le_bytes());
        for _ in 0..(w * h * channels as u32) {
            let v: f32 = if channels == 1 { r.random_range(0.0..1e4) } else { r.random_range(-1e3..1e3) };
            bytes.extend(v.to_le_bytes());
        }
        let re = match decode(&bytes).unwrap() {
            Raster::Depth(d) => encode_depth(&d).unwrap(),
            Raster::Flow(f) => encode_flow(&f).unwrap(),
        };
        prop_assert_eq!(re, bytes);
    }
}

// ------------------------------------------------------------ text formats

#[test]
fn pose_text_round_trips_losslessly() {
    let mut r = common::rng(3);
    let t = random_trajectory(&mut r, 30, 1.0);
    let text = format_poses(&t);
    assert_eq!(text.lines().count(), 30);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 12));
    let back = parse_poses(&text).unwrap();
    assert_eq!(back.poses(), t.poses());
    assert!(parse_poses("1 0 0 0 0 1 0 0 0 0 1\n").is_err());
    assert!(parse_poses("1 0 0 0 0 1 0 0 0 0 1 x\n").is_err());
    // Off-orthonormal blocks are read, not rejected.
    let skewed = parse_poses("1.01 0 0 0 0 1 0 0 0 0 1 0\n").unwrap();
    assert_eq!(skewed.poses()[0].rotation[(0, 0)], 1.01);
}

#[test]
fn intrinsics_text() {
    let k = parse_intrinsics("\n718.856 718.856 607.1928 185.2157\n").unwrap();
    assert_eq!((k.fx, k.fy, k.cx, k.cy), (718.856, 718.856, 607.1928, 185.2157));
    assert_eq!(parse_intrinsics(&format_intrinsics(&k)).unwrap(), k);
    assert!(parse_intrinsics("1 2 3").is_err());
    assert!(parse_intrinsics("-1 2 3 4").is_err());
    let dir = tempfile::tempdir().unwrap();
    io::write_intrinsics(&k, dir.path().join("k.txt")).unwrap();
    assert_eq!(io::read_intrinsics(dir.path().join("k.txt")).unwrap(), k);
}

#[test]
fn config_files() {
    let text = "# tuned run\nn_total = 1000\ngrid_rows=5 # coarse\nscale_method = simple\nflow_gate = 2.5\nseed = 9\n";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.selection.n_total, 1000);
    assert_eq!(cfg.selection.grid_rows, 5);
    assert_eq!(cfg.scale_method, ScaleMethod::Simple);
    assert_eq!(cfg.flow_gate, Some(2.5));
    assert_eq!(cfg.seed, 9);
    assert_eq!(parse_config(&format_config(&cfg)).unwrap(), cfg);
    assert_eq!(parse_config("").unwrap(), PipelineConfig::default());
    assert!(matches!(parse_config("\nbogus = 1\n"), Err(Error::Parse { line: 2, .. })));
    assert!(parse_config("n_total = 5\n").is_err());
    assert!(parse_config("delta_fc = 0\n").is_err());
}

// ---------------------------------------------------------------- datasets

#[test]
fn dataset_from_directories_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let seq = scenario(Scenario::General, 4, 2).unwrap();
    let manifest = write_dataset(dir.path(), &seq, "general-2").unwrap();
    assert_eq!(manifest.frame_count, 4);
    let k = io::read_intrinsics(dir.path().join("intrinsics.txt")).unwrap();
    assert_eq!(k, *seq.scene().intrinsics());
    let gt = io::read_poses(dir.path().join("gt_poses.txt")).unwrap();
    assert_eq!(gt.len(), 4);

    let a = Dataset::from_dirs(&dir.path().join("depth"), &dir.path().join("flow_fwd"), &dir.path().join("flow_bwd"), k).unwrap();
    let b = Dataset::from_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!((a.len(), b.len()), (4, 4));
    for i in 0..4 {
        let (fa, fb) = (a.frame(i).unwrap(), b.frame(i).unwrap());
        assert_eq!(fa, fb);
        let truth = seq.frame(i).unwrap();
        assert_eq!(fa.flow_fwd.is_some(), i > 0);
        if let (Some(x), Some(y)) = (&fa.flow_bwd, &truth.flow_bwd) {
            let worst = x.data().iter().zip(y.data()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-3);
        }
    }
    let cfg = PipelineConfig::default();
    let fa: Vec<_> = a.frames().map(|f| f.unwrap()).collect();
    let out = run_sequence(&fa, &cfg).unwrap();
    assert!(ate(&out.trajectory, &gt).unwrap() < 1e-3);

    // Missing flow file.
    fs::remove_file(dir.path().join("flow_bwd/000002.dfvr")).unwrap();
    assert!(Dataset::from_dirs(&dir.path().join("depth"), &dir.path().join("flow_fwd"), &dir.path().join("flow_bwd"), k).is_err());
    assert!(Dataset::from_manifest(&dir.path().join(MANIFEST_FILE)).unwrap().frame(3).is_err());
}

#[test]
fn manifest_written_by_another_tool_is_consumed() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::create_dir_all(root.join("pred")).unwrap();
    for k in 0..3 {
        io::write_depth(&DepthMap::constant(12, 8, 5.0).unwrap(), root.join(format!("pred/d{k}.dfvr"))).unwrap();
    }
    for k in 1..3 {
        io::write_flow(&FlowField::constant(12, 8, Vector2::zeros()).unwrap(), root.join(format!("pred/f{k}.dfvr"))).unwrap();
        io::write_flow(&FlowField::constant(12, 8, Vector2::zeros()).unwrap(), root.join(format!("pred/b{k}.dfvr"))).unwrap();
    }
    let json = r#"{
        "sequence_id": "stub",
        "frame_count": 3,
        "image_size": {"width": 12, "height": 8},
        "intrinsics": {"fx": 10.0, "fy": 10.0, "cx": 5.5, "cy": 3.5},
        "frames": [
            {"depth": "pred/d0.dfvr", "flow_fwd": null, "flow_bwd": null},
            {"depth": "pred/d1.dfvr", "flow_fwd": "pred/f1.dfvr", "flow_bwd": "pred/b1.dfvr"},
            {"depth": "pred/d2.dfvr", "flow_fwd": "pred/f2.dfvr", "flow_bwd": "pred/b2.dfvr"}
        ]
    }"#;
    fs::write(root.join("m.json"), json).unwrap();
    let ds = Dataset::from_manifest(&root.join("m.json")).unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(*ds.intrinsics(), Intrinsics::new(10.0, 10.0, 5.5, 3.5).unwrap());
    let f2 = ds.frame(2).unwrap();
    assert_eq!(f2.depth.data()[0], 5.0);
    assert!(f2.flow_fwd.unwrap().data().iter().all(|v| *v == Vector2::zeros()));
    let m = Manifest::from_json(json).unwrap();
    assert_eq!(Manifest::from_json(&m.to_json().unwrap()).unwrap(), m);

    // Inconsistent manifests.
    assert!(Manifest::from_json(&json.replace("\"frame_count\": 3", "\"frame_count\": 4")).is_err());
    assert!(Manifest::from_json(&json.replace("\"flow_fwd\": \"pred/f1.dfvr\"", "\"flow_fwd\": null")).is_err());
    assert!(Manifest::from_json(&json.replace("\"fx\": 10.0", "\"fx\": -1.0")).is_err());
    assert!(Manifest::from_json("{}").is_err());
    fs::write(root.join("wrong.json"), json.replace("\"width\": 12", "\"width\": 13")).unwrap();
    assert!(matches!(Dataset::from_manifest(&root.join("wrong.json")).unwrap().frame(0), Err(Error::Shape(_))));
}

// -------------------------------------------------------------- alignment

#[test]
fn similarity_is_recovered() {
    let mut r = common::rng(5);
    let gt = random_trajectory(&mut r, 40, 1.0);
    let s = Similarity {
        scale: 2.5,
        rotation: *Rotation3::from_scaled_axis(Vector3::new(0.3, -1.1, 0.4)).matrix(),
        translation: Vector3::new(4.0, -2.0, 7.0),
    };
    let est = s.apply_trajectory(&gt);
    let a7 = align_trajectory(&est, &gt, Alignment::Similarity).unwrap();
    assert!(ate(&a7.aligned, &gt).unwrap() < 1e-9);
    assert!((a7.transform.scale - 0.4).abs() < 1e-12);
    assert!(!a7.degenerate);

    let a6 = align_trajectory(&est, &gt, Alignment::Rigid).unwrap();
    assert_eq!(a6.transform.scale, 1.0);
    let ate6 = ate(&a6.aligned, &gt).unwrap();
    // Best rigid fit of a 2.5× copy leaves a residual of 1.5× the spread.
    let pos = gt.positions();
    let mean = pos.iter().sum::<Vector3<f64>>() / pos.len() as f64;
    let spread = (pos.iter().map(|p| (p - mean).norm_squared()).sum::<f64>() / pos.len() as f64).sqrt();
    assert!((ate6 - 1.5 * spread).abs() < 1e-9 * spread);

    let none = align_trajectory(&est, &gt, Alignment::None).unwrap();
    assert_eq!(none.aligned, est);
}

#[test]
fn umeyama_reflection_and_degeneracy() {
    let src = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0), Vector3::new(2.0, 0.0, 0.0)];
    let dst: Vec<Vector3<f64>> = src.iter().map(|p| Vector3::new(p.y, p.x * 2.0, 1.0)).collect();
    let (s, degenerate) = umeyama(&src, &dst, true).unwrap();
    assert!(degenerate);
    assert!((s.rotation.determinant() - 1.0).abs() < 1e-12);
    assert!((s.scale - 2.0).abs() < 1e-12);
    for (p, q) in src.iter().zip(&dst) {
        assert!((s.apply(p) - q).norm() < 1e-12);
    }
    // A mirrored cloud must still come back as a proper rotation.
    let cloud: Vec<Vector3<f64>> = (0..10).map(|i| Vector3::new(i as f64, (i * i) as f64 * 0.1, (i as f64).sin())).collect();
    let mirror: Vec<Vector3<f64>> = cloud.iter().map(|p| Vector3::new(-p.x, p.y, p.z)).collect();
    let (s, _) = umeyama(&cloud, &mirror, false).unwrap();
    assert!((s.rotation.determinant() - 1.0).abs() < 1e-12);
    assert!(umeyama(&cloud[..1], &mirror[..1], true).is_err());
}

#[test]
fn alignment_needs_common_frames() {
    let a = Trajectory::new(vec![0, 1], vec![RigidTransform::identity(); 2]).unwrap();
    let b = Trajectory::new(vec![1, 2], vec![RigidTransform::identity(); 2]).unwrap();
    assert!(matches!(align_trajectory(&a, &b, Alignment::Similarity), Err(Error::TrajectoryMismatch(_))));
    assert!(ate(&a, &b).is_err());
    assert!(rpe(&a, &b).is_err());
    assert!(evaluate(&a, &b, &EvalOptions::default()).is_err());
}

#[test]
fn alignment_parses_names() {
    for (name, a) in [("6dof", Alignment::Rigid), ("7DoF", Alignment::Similarity), ("none", Alignment::None)] {
        assert_eq!(name.parse::<Alignment>().unwrap(), a);
    }
    assert_eq!(Alignment::Similarity.to_string(), "7dof");
    assert!("8dof".parse::<Alignment>().is_err());
}

// ---------------------------------------------------------------- metrics

#[test]
fn ate_and_rpe_examples() {
    let mut r = common::rng(8);
    let gt = random_trajectory(&mut r, 25, 1.0);
    assert_eq!(ate(&gt, &gt).unwrap(), 0.0);
    let z = rpe(&gt, &gt).unwrap();
    assert!(z.mean_trans < 1e-12 && z.mean_rot_deg < 1e-6);

    let shifted = Trajectory::new(
        gt.ids().to_vec(),
        gt.poses().iter().map(|p| RigidTransform::new(p.rotation, p.translation + Vector3::new(0.3, 0.0, 0.0))).collect(),
    )
    .unwrap();
    assert!((ate(&shifted, &gt).unwrap() - 0.3).abs() < 1e-12);

    // Each relative step rotated by exactly 0.5° about a random axis.
    let rel: Vec<RigidTransform> = gt
        .relatives()
        .iter()
        .map(|x| {
            let axis = common::random_unit(&mut r) * 0.5f64.to_radians();
            *x * RigidTransform::from_axis_angle(axis, Vector3::zeros())
        })
        .collect();
    let est = Trajectory::from_relative(gt.ids().to_vec(), &rel).unwrap();
    let e = rpe(&est, &gt).unwrap();
    assert!((e.mean_rot_deg - 0.5).abs() < 1e-9);
    assert!(e.rot_deg.iter().all(|d| (d - 0.5).abs() < 1e-9));
    assert!(e.mean_trans < 1e-12);
}

/// Direct double loop over lengths and start frames with a linear scan for
/// the end frame.
fn brute_force_kitti(est: &Trajectory, gt: &Trajectory) -> Option<(f64, f64)> {
    let (e, g) = (est.poses(), gt.poses());
    let mut dist = vec![0.0];
    for k in 1..g.len() {
        dist.push(dist[k - 1] + (g[k].translation - g[k - 1].translation).norm());
    }
    let (mut t, mut rr, mut n) = (0.0, 0.0, 0);
    for len in [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0] {
        for first in 0..g.len() {
            let Some(last) = (first..g.len()).find(|&j| dist[j] >= dist[first] + len) else { continue };
            let dg = g[first].inverse().to_matrix() * g[last].to_matrix();
            let de = e[first].inverse().to_matrix() * e[last].to_matrix();
            let err = de.try_inverse().unwrap() * dg;
            let rot: Matrix3<f64> = err.fixed_view::<3, 3>(0, 0).into();
            let cos = ((rot.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
            t += err.fixed_view::<3, 1>(0, 3).norm() / len;
            rr += cos.acos() / len;
            n += 1;
        }
    }
    (n > 0).then(|| (100.0 * t / n as f64, 100.0 * rr.to_degrees() / n as f64))
}

#[test]
fn kitti_errors_match_brute_force() {
    for seed in 0..20 {
        let mut r = common::rng(1000 + seed);
        let n = r.random_range(120..400);
        let gt = random_trajectory(&mut r, n, 2.0);
        let est = perturb(&mut r, &gt, 0.003, 0.05);
        let k = kitti_odometry_errors(&est, &gt).unwrap();
        let (t, rr) = brute_force_kitti(&est, &gt).unwrap();
        assert!((k.t_err.unwrap() - t).abs() < 1e-9, "seed {seed}");
        // acos near zero loses digits, so rotation is compared relatively.
        assert!((k.r_err.unwrap() - rr).abs() < 1e-6 * rr.max(1.0), "seed {seed}");
        assert!(!k.too_short);
        assert_eq!(k.per_length.len(), KITTI_LENGTHS.len());
    }
}

#[test]
fn uniform_scale_inflation_gives_one_percent() {
    let gt = Trajectory::from_poses((0..1000).map(|k| RigidTransform::from_translation(Vector3::new(0.0, 0.0, k as f64))).collect());
    let est = Trajectory::from_poses(gt.poses().iter().map(|p| RigidTransform::from_translation(p.translation * 1.01)).collect());
    let k = kitti_odometry_errors(&est, &gt).unwrap();
    assert!((k.t_err.unwrap() - 1.0).abs() < 1e-6);
    assert!(k.r_err.unwrap().abs() < 1e-12);
    let same = kitti_odometry_errors(&gt, &gt).unwrap();
    assert_eq!((same.t_err, same.r_err), (Some(0.0), Some(0.0)));
}

#[test]
fn short_paths_are_flagged() {
    let gt = Trajectory::from_poses((0..91).map(|k| RigidTransform::from_translation(Vector3::new(k as f64, 0.0, 0.0))).collect());
    assert_eq!(arc_lengths(gt.poses()).last().copied(), Some(90.0));
    let k = kitti_odometry_errors(&gt, &gt).unwrap();
    assert!(k.too_short);
    assert!(k.t_err.is_none() && k.r_err.is_none());
    assert!(k.per_length.iter().all(|l| l.count == 0 && l.t_err.is_none()));
    let ev = evaluate(&gt, &gt, &EvalOptions::default()).unwrap();
    let json = serde_json::to_value(&ev.report).unwrap();
    assert!(json["t_err"].is_null());
    for key in ["t_err", "r_err", "ate", "rpe_trans", "rpe_rot", "alignment"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["alignment"], "7dof");
}

#[test]
fn evaluation_skips_leading_frames() {
    let mut r = common::rng(4);
    let gt = random_trajectory(&mut r, 60, 3.0);
    let est = perturb(&mut r, &gt, 0.002, 0.02);
    let full = evaluate(&est, &gt, &EvalOptions::default()).unwrap();
    let skipped = evaluate(&est, &gt, &EvalOptions { skip: 20, ..Default::default() }).unwrap();
    assert_eq!(full.alignment.aligned.len(), 60);
    assert_eq!(skipped.alignment.aligned.len(), 40);
    assert_eq!(skipped.rpe.trans.len(), 39);
}

#[test]
fn svg_plot_contains_both_paths() {
    let mut r = common::rng(1);
    let gt = random_trajectory(&mut r, 10, 1.0);
    let svg = dfvo_core::eval::trajectory_svg(&perturb(&mut r, &gt, 0.01, 0.1), &gt);
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn umeyama_beats_identity(seed in any::<u64>(), n in 3usize..50) {
        let mut r = common::rng(seed);
        let src: Vec<Vector3<f64>> = (0..n).map(|_| Vector3::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), r.random_range(-5.0..5.0))).collect();
        let dst: Vec<Vector3<f64>> = (0..n).map(|_| Vector3::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), r.random_range(-5.0..5.0))).collect();
        let rms = |f: &dyn Fn(&Vector3<f64>) -> Vector3<f64>| (src.iter().zip(&dst).map(|(s, d)| (f(s) - d).norm_squared()).sum::<f64>() / n as f64).sqrt();
        let base = rms(&|p| *p);
        for with_scale in [false, true] {
            let (s, _) = umeyama(&src, &dst, with_scale).unwrap();
            prop_assert!(rms(&|p| s.apply(p)) <= base + 1e-12);
        }
    }

    #[test]
    fn metrics_are_rigid_invariant(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let gt = random_trajectory(&mut r, 80, 3.0);
        let est = perturb(&mut r, &gt, 0.003, 0.1);
        let g = common::random_pose(&mut r, 3.0, 20.0);
        let (est2, gt2) = (transformed(&est, &g), transformed(&gt, &g));
        for mode in [Alignment::Rigid, Alignment::Similarity] {
            let opts = EvalOptions { alignment: mode, skip: 0 };
            let a = evaluate(&est, &gt, &opts).unwrap().report;
            let b = evaluate(&est2, &gt2, &opts).unwrap().report;
            prop_assert!((a.ate - b.ate).abs() < 1e-7 * (1.0 + a.ate));
            prop_assert!((a.rpe_trans - b.rpe_trans).abs() < 1e-7);
            prop_assert!((a.rpe_rot - b.rpe_rot).abs() < 1e-5);
            match (a.t_err, b.t_err) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-6),
                (x, y) => prop_assert_eq!(x, y),
            }
        }
        let r0 = rpe(&est, &gt).unwrap();
        let r1 = rpe(&est2, &gt2).unwrap();
        prop_assert!((r0.mean_trans - r1.mean_trans).abs() < 1e-9);
    }

    #[test]
    fn similarity_ate_never_exceeds_rigid(seed in any::<u64>(), s in 0.2..5.0f64) {
        let mut r = common::rng(seed);
        let gt = random_trajectory(&mut r, 30, 1.0);
        let est = perturb(&mut r, &gt, 0.01, 0.2);
        let est = Similarity { scale: s, rotation: Matrix3::identity(), translation: Vector3::zeros() }.apply_trajectory(&est);
        let a6 = ate(&align_trajectory(&est, &gt, Alignment::Rigid).unwrap().aligned, &gt).unwrap();
        let a7 = ate(&align_trajectory(&est, &gt, Alignment::Similarity).unwrap().aligned, &gt).unwrap();
        prop_assert!(a7 <= a6 + 1e-9);
    }
}
