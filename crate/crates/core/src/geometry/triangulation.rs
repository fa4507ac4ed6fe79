use nalgebra::{Matrix3x4, Matrix4, Vector2, Vector3};

use super::{Intrinsics, PointCloudSparse, RigidTransform, SparsePoint};
use crate::correspondence::Match;
use crate::error::{Error, Result};

/// Triangulated cloud plus bookkeeping of which matches survived.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triangulation {
    pub cloud: PointCloudSparse,
    /// Index into the input matches for every cloud point.
    pub kept: Vec<usize>,
    /// Matches with nonpositive (or undefined) depth in either view.
    pub dropped: Vec<usize>,
}

/// Linear (DLT) triangulation of normalized rays `a` (view i, camera `[I|0]`)
/// and `b` (view j, camera `[R|t]`). Returns the point in the view-i frame,
/// or `None` when it lies at infinity.
pub fn triangulate_point(pose: &RigidTransform, a: &Vector2<f64>, b: &Vector2<f64>) -> Option<Vector3<f64>> {
    let p1 = Matrix3x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let mut p2 = Matrix3x4::zeros();
    p2.fixed_view_mut::<3, 3>(0, 0).copy_from(&pose.rotation);
    p2.fixed_view_mut::<3, 1>(0, 3).copy_from(&pose.translation);
    let mut a_mat = Matrix4::zeros();
    a_mat.set_row(0, &(p1.row(2) * a.x - p1.row(0)));
    a_mat.set_row(1, &(p1.row(2) * a.y - p1.row(1)));
    a_mat.set_row(2, &(p2.row(2) * b.x - p2.row(0)));
    a_mat.set_row(3, &(p2.row(2) * b.y - p2.row(1)));
    // Row scaling keeps the system balanced when the two rays differ in length.
    for r in 0..4 {
        let n = a_mat.row(r).norm();
        if n > 0.0 {
            a_mat.row_mut(r).unscale_mut(n);
        }
    }
    let svd = a_mat.svd(false, true);
    let vt = svd.v_t?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let x = vt.row(k);
    if x[3].abs() < f64::EPSILON * x.norm() {
        return None;
    }
    let p = Vector3::new(x[0] / x[3], x[1] / x[3], x[2] / x[3]);
    p.iter().all(|v| v.is_finite()).then_some(p)
}

/// Triangulates every match under `relative_pose` (view i → view j). Points
/// are returned in the view-i frame; matches with nonpositive depth in
/// either view are dropped.
pub fn triangulate(matches: &[Match], k: &Intrinsics, relative_pose: &RigidTransform) -> Result<Triangulation> {
    if !(relative_pose.translation.norm() > 1e-12) {
        return Err(Error::DegenerateTriangulation);
    }
    let mut out = Triangulation::default();
    for (i, m) in matches.iter().enumerate() {
        let a = k.normalize(&m.source);
        let b = k.normalize(&m.target);
        match triangulate_point(relative_pose, &a, &b) {
            Some(p) if p.z > 0.0 && relative_pose.transform_point(&p).z > 0.0 => {
                out.cloud.points.push(SparsePoint {
                    pixel: m.source,
                    point: p,
                });
                out.kept.push(i);
            }
            _ => out.dropped.push(i),
        }
    }
    Ok(out)
}
