//! Translation scale from predicted depth: one-shot median alignment and the
//! iterative depth/flow consistency loop.

use nalgebra::{Matrix3, Vector3};

use crate::correspondence::{rigid_flow, Match};
use crate::error::{Error, Result};
use crate::geometry::{
    decompose_essential, estimate_essential_ransac, triangulate, Intrinsics, Pixel, PointCloudSparse, RansacParams,
    RigidTransform,
};
use crate::raster::DepthMap;

const SCALE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleResult {
    pub scale: f64,
    /// Points that entered the final median.
    pub inlier_count: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Indices of the matches (or cloud points) used in the final alignment.
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterScaleParams {
    /// Optical/rigid flow disagreement threshold in pixels.
    pub delta_rigid: f64,
    pub max_iterations: usize,
    pub rel_tol: f64,
}

impl Default for IterScaleParams {
    fn default() -> Self {
        Self {
            delta_rigid: 1.0,
            max_iterations: 5,
            rel_tol: 1e-3,
        }
    }
}

impl IterScaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_rigid > 0.0) || self.max_iterations == 0 || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "delta_rigid, max_iterations and rel_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Output of the iterative loop, including the pose it settled on.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeScale {
    pub result: ScaleResult,
    pub rotation: Matrix3<f64>,
    /// Unit translation direction.
    pub translation: Vector3<f64>,
}

impl IterativeScale {
    /// `[R, s t̂]`.
    pub fn pose(&self) -> RigidTransform {
        RigidTransform::new(self.rotation, self.translation * self.result.scale)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median of `predicted / triangulated` depth over the cloud.
pub fn align_scale_simple(triangulated: &PointCloudSparse, predicted: &DepthMap) -> Result<ScaleResult> {
    let mut ratios = Vec::with_capacity(triangulated.len());
    let mut selected = Vec::with_capacity(triangulated.len());
    for (i, p) in triangulated.points.iter().enumerate() {
        let z = p.point.z;
        if !(z > 0.0) {
            continue;
        }
        if let Some(d) = predicted.sample_bilinear(&p.pixel) {
            let r = d / z;
            if r.is_finite() {
                ratios.push(r);
                selected.push(i);
            }
        }
    }
    if ratios.is_empty() {
        return Err(Error::AlignmentFailed);
    }
    Ok(ScaleResult {
        scale: median(&mut ratios),
        inlier_count: ratios.len(),
        iterations: 1,
        converged: true,
        selected,
    })
}

/// Triangulates `idx` under `[R, t̂]` and aligns; indices in the result refer to `matches`.
fn align_subset(
    matches: &[Match],
    idx: &[usize],
    rotation: &Matrix3<f64>,
    t_unit: &Vector3<f64>,
    predicted: &DepthMap,
    k: &Intrinsics,
) -> Result<ScaleResult> {
    let subset: Vec<Match> = idx.iter().map(|&i| matches[i]).collect();
    let tri = triangulate(&subset, k, &RigidTransform::new(*rotation, *t_unit))?;
    let mut res = align_scale_simple(&tri.cloud, predicted)?;
    res.selected = res.selected.iter().map(|&c| idx[tri.kept[c]]).collect();
    Ok(res)
}

/// Alternates between selecting matches whose flow agrees with the rigid
/// flow of `[R, s t̂]` under the predicted depth, re-estimating the pose on
/// them, and re-aligning the scale. `ransac` drives the inner pose
/// re-estimation.
#[allow(clippy::too_many_arguments)]
pub fn recover_scale_iterative(
    rotation: &Matrix3<f64>,
    t_unit: &Vector3<f64>,
    matches: &[Match],
    predicted: &DepthMap,
    k: &Intrinsics,
    s_init: f64,
    params: &IterScaleParams,
    ransac: &RansacParams,
) -> Result<IterativeScale> {
    params.validate()?;
    if matches.is_empty() {
        return Err(Error::Empty("scale recovery needs matches"));
    }
    if (t_unit.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter("translation direction must be a unit vector".into()));
    }
    let sources: Vec<Pixel> = matches.iter().map(|m| m.source).collect();
    let mut r = *rotation;
    let mut t = *t_unit;
    let mut s = if s_init.is_finite() { s_init.max(0.0) } else { 0.0 };
    let mut last: Option<ScaleResult> = None;

    for iteration in 1..=params.max_iterations {
        let hypothesis = RigidTransform::new(r, t * s);
        let rigid = rigid_flow(&hypothesis, predicted, k, &sources);
        let kept: Vec<usize> = matches
            .iter()
            .zip(&rigid.flow)
            .enumerate()
            .filter_map(|(i, (m, f))| f.filter(|f| (m.flow() - f).norm() < params.delta_rigid).map(|_| i))
            .collect();
        if kept.is_empty() {
            return fallback(matches, &r, &t, predicted, k, iteration);
        }
        // A zero-scale hypothesis is rotation-only and keeps mostly
        // low-parallax matches, on which E is ill-conditioned.
        if s > 0.0 && kept.len() >= 8 {
            let subset: Vec<Match> = kept.iter().map(|&i| matches[i]).collect();
            if let Ok(est) = estimate_essential_ransac(&subset, k, ransac) {
                if let Ok(dec) = decompose_essential(&est.essential, &subset, k) {
                    r = dec.rotation;
                    t = dec.translation;
                }
            }
        }
        let mut res = match align_subset(matches, &kept, &r, &t, predicted, k) {
            Ok(res) => res,
            Err(_) => return fallback(matches, &r, &t, predicted, k, iteration),
        };
        let change = (res.scale - s).abs() / s.max(SCALE_EPS);
        s = res.scale;
        res.iterations = iteration;
        res.converged = change < params.rel_tol;
        let done = res.converged;
        last = Some(res);
        if done {
            break;
        }
    }
    Ok(IterativeScale {
        result: last.expect("at least one iteration"),
        rotation: r,
        translation: t,
    })
}

fn fallback(
    matches: &[Match],
    r: &Matrix3<f64>,
    t: &Vector3<f64>,
    predicted: &DepthMap,
    k: &Intrinsics,
    iteration: usize,
) -> Result<IterativeScale> {
    let all: Vec<usize> = (0..matches.len()).collect();
    let mut res = align_subset(matches, &all, r, t, predicted, k)?;
    res.iterations = iteration;
    res.converged = false;
    Ok(IterativeScale {
        result: res,
        rotation: *r,
        translation: *t,
    })
}
