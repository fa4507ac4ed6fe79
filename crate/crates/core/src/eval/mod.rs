//! Trajectory alignment and error metrics.

mod align;
mod metrics;
mod plot;

pub use align::{align_trajectory, umeyama, Alignment, AlignmentResult, Similarity};
pub use metrics::{
    arc_lengths, ate, kitti_odometry_errors, rpe, KittiErrors, LengthErrors, MetricReport, Rpe, KITTI_LENGTHS,
};
pub use plot::trajectory_svg;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub alignment: Alignment,
    /// Frames dropped from the start of both trajectories before evaluation.
    pub skip: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            alignment: Alignment::Similarity,
            skip: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricReport,
    pub alignment: AlignmentResult,
    pub rpe: Rpe,
    pub kitti: KittiErrors,
}

/// Aligns, then scores. Both trajectories must carry the same frame ids.
pub fn evaluate(est: &Trajectory, gt: &Trajectory, opts: &EvalOptions) -> Result<Evaluation> {
    if est.ids() != gt.ids() {
        return Err(Error::TrajectoryMismatch(format!(
            "estimate has {} frames, ground truth {}",
            est.len(),
            gt.len()
        )));
    }
    let (est, gt) = (est.skip(opts.skip), gt.skip(opts.skip));
    let alignment = align_trajectory(&est, &gt, opts.alignment)?;
    if alignment.degenerate {
        log::warn!("trajectory positions are collinear; the alignment rotation is not unique");
    }
    let aligned = &alignment.aligned;
    let rpe = rpe(aligned, &gt)?;
    let kitti = kitti_odometry_errors(aligned, &gt)?;
    let report = MetricReport {
        t_err: kitti.t_err,
        r_err: kitti.r_err,
        ate: ate(aligned, &gt)?,
        rpe_trans: rpe.mean_trans,
        rpe_rot: rpe.mean_rot_deg,
        alignment: opts.alignment,
    };
    Ok(Evaluation {
        report,
        alignment,
        rpe,
        kitti,
    })
}
