#![allow(dead_code)]

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dfvo_core::geometry::{PointPixel, RigidTransform};
use dfvo_core::{Intrinsics, Match};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kitti_like() -> Intrinsics {
    Intrinsics::new(200.0, 200.0, 119.5, 89.5).unwrap()
}

pub fn random_unit(r: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Moderate rotation and a translation of the given length.
pub fn random_pose(r: &mut ChaCha8Rng, max_angle: f64, t_len: f64) -> RigidTransform {
    let axis = random_unit(r) * r.random_range(0.0..max_angle);
    RigidTransform::from_axis_angle(axis, random_unit(r) * t_len)
}

/// Points in front of the view-i camera that also project in front of view j
/// and inside a 240×180 image in both.
pub fn visible_points(r: &mut ChaCha8Rng, n: usize, pose: &RigidTransform, k: &Intrinsics) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(n);
    let inside = |p: &Vector2<f64>| p.x >= 0.0 && p.x <= 239.0 && p.y >= 0.0 && p.y <= 179.0;
    while out.len() < n {
        let px = Vector2::new(r.random_range(0.0..239.0), r.random_range(0.0..179.0));
        let x = k.backproject(&px, r.random_range(4.0..30.0));
        let y = pose.transform_point(&x);
        if y.z > 0.5 && inside(&k.project(&y)) {
            out.push(x);
        }
    }
    out
}

pub fn matches_for(points: &[Vector3<f64>], pose: &RigidTransform, k: &Intrinsics) -> Vec<Match> {
    points
        .iter()
        .map(|x| Match::new(k.project(x), k.project(&pose.transform_point(x))))
        .collect()
}

pub fn pairs_for(points: &[Vector3<f64>], pose: &RigidTransform, k: &Intrinsics) -> Vec<PointPixel> {
    points
        .iter()
        .map(|x| PointPixel {
            point: *x,
            pixel: k.project(&pose.transform_point(x)),
        })
        .collect()
}

pub fn rotation_error(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    dfvo_core::geometry::rotation_angle(&(a.transpose() * b))
}

pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Equality up to scale and sign, as the norm of the difference of the
/// normalized matrices with the better sign.
pub fn up_to_scale(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let (a, b) = (a / a.norm(), b / b.norm());
    (a - b).norm().min((a + b).norm())
}
