use serde::Serialize;

use super::align::Alignment;
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::trajectory::Trajectory;

/// Sub-sequence lengths, in trajectory units, of the drift metric.
pub const KITTI_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

fn check_ids(est: &Trajectory, gt: &Trajectory) -> Result<()> {
    if est.ids() != gt.ids() {
        return Err(Error::TrajectoryMismatch(format!(
            "frame ids differ ({} estimated, {} ground truth)",
            est.len(),
            gt.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    Ok(())
}

/// Root-mean-square position error.
pub fn ate(est: &Trajectory, gt: &Trajectory) -> Result<f64> {
    check_ids(est, gt)?;
    let sum: f64 = est
        .poses()
        .iter()
        .zip(gt.poses())
        .map(|(e, g)| (e.translation - g.translation).norm_squared())
        .sum();
    Ok((sum / est.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rpe {
    /// Per consecutive pair: translation error norm.
    pub trans: Vec<f64>,
    /// Per consecutive pair: rotation error angle in degrees.
    pub rot_deg: Vec<f64>,
    pub mean_trans: f64,
    pub mean_rot_deg: f64,
}

/// Frame-to-frame error `(ΔT_gt)⁻¹ ΔT_est` over consecutive frames.
pub fn rpe(est: &Trajectory, gt: &Trajectory) -> Result<Rpe> {
    check_ids(est, gt)?;
    if est.len() < 2 {
        return Err(Error::Empty("relative pose error needs two frames"));
    }
    let (mut trans, mut rot_deg) = (Vec::new(), Vec::new());
    for (e, g) in est.relatives().iter().zip(gt.relatives()) {
        let err = g.inverse() * *e;
        trans.push(err.translation.norm());
        rot_deg.push(err.rotation_angle().to_degrees());
    }
    let n = trans.len() as f64;
    Ok(Rpe {
        mean_trans: trans.iter().sum::<f64>() / n,
        mean_rot_deg: rot_deg.iter().sum::<f64>() / n,
        trans,
        rot_deg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthErrors {
    pub length: f64,
    pub count: usize,
    /// Mean translation error over the length, percent.
    pub t_err: Option<f64>,
    /// Mean rotation error, degrees per 100 units.
    pub r_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KittiErrors {
    pub per_length: Vec<LengthErrors>,
    /// Averages over all sub-sequences of all lengths.
    pub t_err: Option<f64>,
    pub r_err: Option<f64>,
    /// Ground truth shorter than the smallest length; no sub-sequence exists.
    pub too_short: bool,
}

/// Cumulative path length along the positions.
pub fn arc_lengths(poses: &[RigidTransform]) -> Vec<f64> {
    let mut out = Vec::with_capacity(poses.len());
    let mut acc = 0.0;
    for (i, p) in poses.iter().enumerate() {
        if i > 0 {
            acc += (p.translation - poses[i - 1].translation).norm();
        }
        out.push(acc);
    }
    out
}

/// Drift over sub-sequences: from every start frame and for each length ℓ,
/// the end is the first frame whose ground-truth arc length from the start
/// reaches ℓ. Errors are the endpoint relative-pose error divided by ℓ.
pub fn kitti_odometry_errors(est: &Trajectory, gt: &Trajectory) -> Result<KittiErrors> {
    check_ids(est, gt)?;
    let dist = arc_lengths(gt.poses());
    let (e, g) = (est.poses(), gt.poses());
    let mut per_length = Vec::with_capacity(KITTI_LENGTHS.len());
    let (mut t_all, mut r_all, mut n_all) = (0.0, 0.0, 0usize);
    for &len in &KITTI_LENGTHS {
        let (mut t_sum, mut r_sum, mut count) = (0.0, 0.0, 0usize);
        for first in 0..g.len() {
            let target = dist[first] + len;
            // `dist` is nondecreasing, so the end frame is a partition point.
            let last = first + dist[first..].partition_point(|d| *d < target);
            if last >= g.len() {
                break;
            }
            let delta_gt = g[first].inverse() * g[last];
            let delta_est = e[first].inverse() * e[last];
            let err = delta_est.inverse() * delta_gt;
            t_sum += err.translation.norm() / len;
            r_sum += err.rotation_angle() / len;
            count += 1;
        }
        t_all += t_sum;
        r_all += r_sum;
        n_all += count;
        let stat = |s: f64, k: f64| (count > 0).then(|| s / count as f64 * k);
        per_length.push(LengthErrors {
            length: len,
            count,
            t_err: stat(t_sum, 100.0),
            r_err: stat(r_sum, 100.0f64.to_degrees()),
        });
    }
    let stat = |s: f64, k: f64| (n_all > 0).then(|| s / n_all as f64 * k);
    Ok(KittiErrors {
        per_length,
        t_err: stat(t_all, 100.0),
        r_err: stat(r_all, 100.0f64.to_degrees()),
        too_short: n_all == 0,
    })
}

/// Serialized metric summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    /// Percent; `None` when the trajectory is too short.
    pub t_err: Option<f64>,
    /// Degrees per 100 units; `None` when the trajectory is too short.
    pub r_err: Option<f64>,
    pub ate: f64,
    pub rpe_trans: f64,
    pub rpe_rot: f64,
    pub alignment: Alignment,
}
