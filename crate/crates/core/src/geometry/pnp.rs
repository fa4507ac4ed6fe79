use nalgebra::{Matrix2x3, Matrix3, Matrix6, Rotation3, Vector3, Vector6};

use super::ransac::{self, Estimator, RansacParams};
use super::{p3p, skew_symmetric, Intrinsics, PointPixel, RigidTransform};
use crate::error::{Error, Result};

const GN_MAX_ITERATIONS: usize = 20;
const GN_STEP_TOLERANCE: f64 = 1e-10;

/// PnP result. Both RMS values are measured over the inliers of the best
/// minimal-solver hypothesis, so they are directly comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct PnpEstimate {
    /// Maps source-frame points into the target camera.
    pub pose: RigidTransform,
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    pub iterations: usize,
    pub hypothesis_rms: f64,
    pub refined_rms: f64,
}

#[inline]
fn reprojection_error(pose: &RigidTransform, k: &Intrinsics, c: &PointPixel) -> f64 {
    let p = pose.transform_point(&c.point);
    if !(p.z > 0.0) {
        return f64::INFINITY;
    }
    (k.project(&p) - c.pixel).norm()
}

fn rms(pose: &RigidTransform, k: &Intrinsics, pairs: &[PointPixel], mask: &[bool]) -> f64 {
    let (sum, n) = pairs
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .fold((0.0, 0usize), |(s, n), (c, _)| (s + reprojection_error(pose, k, c).powi(2), n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

struct PnpProblem<'a> {
    pairs: &'a [PointPixel],
    bearings: Vec<Vector3<f64>>,
    k: &'a Intrinsics,
}

impl Estimator for PnpProblem<'_> {
    type Model = RigidTransform;
    const SAMPLE_SIZE: usize = 4;

    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn fit(&self, sample: &[usize]) -> Vec<RigidTransform> {
        let pts = [self.pairs[sample[0]].point, self.pairs[sample[1]].point, self.pairs[sample[2]].point];
        let brg = [self.bearings[sample[0]], self.bearings[sample[1]], self.bearings[sample[2]]];
        let check = &self.pairs[sample[3]];
        p3p::solve(&pts, &brg)
            .into_iter()
            .map(|(r, t)| RigidTransform::new(r, t))
            .filter(|pose| sample[..3].iter().all(|&i| pose.transform_point(&self.pairs[i].point).z > 0.0))
            .map(|pose| (reprojection_error(&pose, self.k, check), pose))
            .filter(|(e, _)| e.is_finite())
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, pose)| pose)
            .into_iter()
            .collect()
    }

    fn residual(&self, model: &RigidTransform, index: usize) -> f64 {
        reprojection_error(model, self.k, &self.pairs[index])
    }
}

/// Gauss–Newton on the summed squared reprojection error. Steps that do not
/// reduce the cost are rejected, so the returned pose is never worse than
/// the input over `pairs`.
pub fn refine_pose(initial: &RigidTransform, pairs: &[PointPixel], k: &Intrinsics) -> (RigidTransform, usize) {
    let cost = |pose: &RigidTransform| -> f64 {
        pairs
            .iter()
            .map(|c| {
                let p = pose.transform_point(&c.point);
                if p.z > 0.0 {
                    (k.project(&p) - c.pixel).norm_squared()
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    };
    let mut pose = *initial;
    let mut current = cost(&pose);
    let mut iterations = 0;
    while iterations < GN_MAX_ITERATIONS && current.is_finite() {
        iterations += 1;
        let mut h = Matrix6::zeros();
        let mut g = Vector6::zeros();
        for c in pairs {
            let p = pose.transform_point(&c.point);
            let iz = 1.0 / p.z;
            let proj = Matrix2x3::new(
                k.fx * iz,
                0.0,
                -k.fx * p.x * iz * iz,
                0.0,
                k.fy * iz,
                -k.fy * p.y * iz * iz,
            );
            let mut j = nalgebra::Matrix2x6::zeros();
            j.fixed_view_mut::<2, 3>(0, 0).copy_from(&(proj * -skew_symmetric(&p)));
            j.fixed_view_mut::<2, 3>(0, 3).copy_from(&proj);
            let r = k.project(&p) - c.pixel;
            h += j.transpose() * j;
            g += j.transpose() * r;
        }
        let Some(step) = h.cholesky().map(|ch| -ch.solve(&g)) else { break };
        let omega = Vector3::new(step[0], step[1], step[2]);
        let dr: Matrix3<f64> = *Rotation3::new(omega).matrix();
        let candidate = RigidTransform::new(
            dr * pose.rotation,
            dr * pose.translation + Vector3::new(step[3], step[4], step[5]),
        )
        .orthonormalized();
        let next = cost(&candidate);
        if next <= current {
            pose = candidate;
            current = next;
        } else {
            break;
        }
        if step.norm() < GN_STEP_TOLERANCE {
            break;
        }
    }
    (pose, iterations)
}

/// P3P hypotheses (fourth point disambiguates) inside RANSAC, then
/// Gauss–Newton refinement over the consensus set.
pub fn solve_pnp_ransac(pairs: &[PointPixel], k: &Intrinsics, params: &RansacParams) -> Result<PnpEstimate> {
    if pairs.len() < 4 {
        return Err(Error::InsufficientMatches {
            needed: 4,
            got: pairs.len(),
        });
    }
    let problem = PnpProblem {
        pairs,
        bearings: pairs
            .iter()
            .map(|c| {
                let x = k.normalize(&c.pixel);
                Vector3::new(x.x, x.y, 1.0).normalize()
            })
            .collect(),
        k,
    };
    let consensus = ransac::run(&problem, params)?;
    let hypothesis = consensus.model;
    let hypothesis_mask = consensus.inliers;
    let inlier_pairs: Vec<PointPixel> = pairs
        .iter()
        .zip(&hypothesis_mask)
        .filter_map(|(c, m)| m.then_some(*c))
        .collect();
    let (refined, _) = refine_pose(&hypothesis, &inlier_pairs, k);
    let hypothesis_rms = rms(&hypothesis, k, pairs, &hypothesis_mask);
    let refined_rms = rms(&refined, k, pairs, &hypothesis_mask);
    let inliers: Vec<bool> = pairs
        .iter()
        .map(|c| reprojection_error(&refined, k, c) <= params.inlier_threshold)
        .collect();
    let inlier_count = inliers.iter().filter(|b| **b).count();
    if inlier_count < params.min_inliers.max(4) {
        return Err(Error::NoConsensus {
            inliers: inlier_count,
            needed: params.min_inliers.max(4),
        });
    }
    Ok(PnpEstimate {
        pose: refined,
        inliers,
        inlier_count,
        iterations: consensus.iterations,
        hypothesis_rms,
        refined_rms,
    })
}
