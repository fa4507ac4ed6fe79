//! Frame-to-frame tracking: selection, model choice, E or PnP tracking, scale
//! recovery, constant-motion fallback and pose chaining.

use std::time::Instant;

use serde::Serialize;

use crate::correspondence::{
    flow_consistency, lift_to_3d, select_local_best_k, sufficiency_gate, GateOutcome, Match, SelectionConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{solve_pnp_ransac, triangulate, Intrinsics, RansacParams, RigidTransform};
use crate::model_selection::{
    flow_magnitude_gate, select_tracker, FlowMagnitude, TrackerDecision, TrackerKind, TrackerSelectionConfig,
};
use crate::raster::{DepthMap, FlowField};
use crate::scale::{align_scale_simple, recover_scale_iterative, IterScaleParams, ScaleResult};
use crate::trajectory::{chain, Trajectory};

/// Predictions for frame `i`. Matches run from view `i` (where `depth`
/// lives) to view `i − 1`, so both flows are required for every frame but
/// the first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameInput {
    pub index: usize,
    pub depth: DepthMap,
    /// View `i − 1` → view `i`.
    pub flow_fwd: Option<FlowField>,
    /// View `i` → view `i − 1`.
    pub flow_bwd: Option<FlowField>,
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    Simple,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub selection: SelectionConfig,
    pub tracker: TrackerSelectionConfig,
    pub scale_method: ScaleMethod,
    pub scale: IterScaleParams,
    pub pnp_ransac: RansacParams,
    /// When set, frames whose mean flow does not exceed this many pixels skip
    /// the E-tracker.
    pub flow_gate: Option<f64>,
    /// Base RANSAC seed; frame `i` uses `seed + i`.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            selection: SelectionConfig::default(),
            tracker: TrackerSelectionConfig::default(),
            scale_method: ScaleMethod::Iterative,
            scale: IterScaleParams::default(),
            pnp_ransac: RansacParams::pnp(),
            flow_gate: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        self.scale.validate()?;
        self.tracker.essential_ransac.validate()?;
        self.tracker.homography_ransac.validate()?;
        self.pnp_ransac.validate()?;
        if !(self.tracker.gric.sigma > 0.0) {
            return Err(Error::InvalidParameter("gric sigma must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.tracker.cheirality_min_ratio) {
            return Err(Error::InvalidParameter("cheirality_min_ratio must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    pub index: usize,
    pub decision: TrackerDecision,
    /// Tracker that actually produced the pose after fallbacks.
    pub used: TrackerKind,
    /// Why a fallback fired, if one did.
    pub fallback: Option<String>,
    pub scale: Option<ScaleResultRecord>,
    pub match_count: usize,
    pub valid_regions: usize,
    pub pnp_inliers: Option<usize>,
    pub elapsed_ms: f64,
}

/// Serializable summary of a [`ScaleResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleResultRecord {
    pub scale: f64,
    pub inlier_count: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&ScaleResult> for ScaleResultRecord {
    fn from(r: &ScaleResult) -> Self {
        Self {
            scale: r.scale,
            inlier_count: r.inlier_count,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

/// Estimates `T^{i−1}_i` for one frame. Never fails: every problem degrades
/// to the constant-motion model and is recorded in the diagnostics.
pub fn process_pair(
    input: &FrameInput,
    prev_relative: &RigidTransform,
    prev_scale: f64,
    config: &PipelineConfig,
) -> (RigidTransform, FrameDiagnostics) {
    let start = Instant::now();
    let mut diag = FrameDiagnostics {
        index: input.index,
        decision: TrackerDecision::constant_motion(0.0),
        used: TrackerKind::ConstantMotion,
        fallback: None,
        scale: None,
        match_count: 0,
        valid_regions: 0,
        pnp_inliers: None,
        elapsed_ms: 0.0,
    };
    let pose = track(input, prev_scale, config, &mut diag).unwrap_or_else(|reason| {
        log::debug!("frame {}: constant motion ({reason})", input.index);
        diag.used = TrackerKind::ConstantMotion;
        diag.fallback = Some(reason);
        *prev_relative
    });
    diag.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    (pose, diag)
}

fn track(
    input: &FrameInput,
    prev_scale: f64,
    config: &PipelineConfig,
    diag: &mut FrameDiagnostics,
) -> std::result::Result<RigidTransform, String> {
    let (Some(fwd), Some(bwd)) = (&input.flow_fwd, &input.flow_bwd) else {
        return Err("missing flow".into());
    };
    if !bwd.same_shape(fwd) || !bwd.same_shape(&input.depth) {
        return Err("raster shapes differ".into());
    }
    let k = &input.intrinsics;
    let mut consistency = flow_consistency(bwd, fwd).map_err(|e| e.to_string())?;
    // Only pixels with a usable depth can feed scale recovery and PnP.
    for (v, d) in consistency.valid.iter_mut().zip(input.depth.valid_mask()) {
        *v &= *d;
    }
    let (selected, report) = select_local_best_k(&consistency, bwd, &config.selection).map_err(|e| e.to_string())?;
    diag.match_count = report.valid_matches;
    diag.valid_regions = report.valid_regions;
    if sufficiency_gate(&report, &config.selection) == GateOutcome::UseConstantMotion {
        return Err(format!(
            "insufficient matches ({} in {} regions)",
            report.valid_matches, report.valid_regions
        ));
    }
    let matches: &[Match] = &selected;
    let seed = config.seed.wrapping_add(input.index as u64);
    let selection = select_tracker(matches, k, &config.tracker.with_seed(seed));
    diag.decision = selection.decision;
    let gated_small = config
        .flow_gate
        .is_some_and(|thr| flow_magnitude_gate(bwd, thr) == FlowMagnitude::Small);

    let mut notes = Vec::new();
    if selection.decision.chosen == TrackerKind::Essential && !gated_small {
        let dec = selection.decomposition.as_ref().expect("essential choice implies a decomposition");
        match essential_pose(matches, &input.depth, k, dec, &selection, prev_scale, config, seed) {
            Ok((pose, scale)) => {
                diag.used = TrackerKind::Essential;
                diag.scale = Some((&scale).into());
                return Ok(pose);
            }
            Err(e) => notes.push(format!("E-tracker failed: {e}")),
        }
    }
    if selection.decision.chosen != TrackerKind::ConstantMotion || gated_small {
        let lifted = lift_to_3d(matches, &input.depth, k);
        match solve_pnp_ransac(&lifted.pairs, k, &config.pnp_ransac.with_seed(seed)) {
            Ok(est) => {
                diag.used = TrackerKind::Pnp;
                diag.pnp_inliers = Some(est.inlier_count);
                if !notes.is_empty() {
                    diag.fallback = Some(notes.join("; "));
                }
                return Ok(est.pose);
            }
            Err(e) => notes.push(format!("PnP-tracker failed: {e}")),
        }
    } else {
        notes.push("no model could be estimated".into());
    }
    Err(notes.join("; "))
}

#[allow(clippy::too_many_arguments)]
fn essential_pose(
    matches: &[Match],
    depth: &DepthMap,
    k: &Intrinsics,
    dec: &crate::geometry::DecomposedEssential,
    selection: &crate::model_selection::ModelSelection,
    prev_scale: f64,
    config: &PipelineConfig,
    seed: u64,
) -> Result<(RigidTransform, ScaleResult)> {
    let (pose, scale) = match config.scale_method {
        ScaleMethod::Iterative => {
            let ransac = config.tracker.essential_ransac.with_seed(seed);
            let it = recover_scale_iterative(
                &dec.rotation,
                &dec.translation,
                matches,
                depth,
                k,
                prev_scale,
                &config.scale,
                &ransac,
            )?;
            (it.pose(), it.result)
        }
        ScaleMethod::Simple => {
            let est = selection.essential.as_ref().ok_or(Error::DegenerateEssential)?;
            let inliers: Vec<Match> = matches
                .iter()
                .zip(&est.inliers)
                .filter_map(|(m, b)| b.then_some(*m))
                .collect();
            let unit = RigidTransform::new(dec.rotation, dec.translation);
            let tri = triangulate(&inliers, k, &unit)?;
            let res = align_scale_simple(&tri.cloud, depth)?;
            (RigidTransform::new(dec.rotation, dec.translation * res.scale), res)
        }
    };
    if !(scale.scale > 0.0 && scale.scale.is_finite()) {
        return Err(Error::AlignmentFailed);
    }
    Ok((pose, scale))
}

/// Incremental driver: feed frames in order, collect the trajectory at the end.
#[derive(Debug, Clone)]
pub struct Odometry {
    config: PipelineConfig,
    ids: Vec<usize>,
    relatives: Vec<RigidTransform>,
    absolute: RigidTransform,
    prev_relative: RigidTransform,
    prev_scale: f64,
    diagnostics: Vec<FrameDiagnostics>,
}

/// Everything a sequence run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutput {
    pub trajectory: Trajectory,
    /// `relatives[k]` is `T^{k}_{k+1}` between consecutive trajectory entries.
    pub relatives: Vec<RigidTransform>,
    pub diagnostics: Vec<FrameDiagnostics>,
}

impl Odometry {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            ids: Vec::new(),
            relatives: Vec::new(),
            absolute: RigidTransform::identity(),
            prev_relative: RigidTransform::identity(),
            prev_scale: 0.0,
            diagnostics: Vec::new(),
        })
    }

    /// Adds the next frame and returns the current camera-to-world pose.
    pub fn push(&mut self, input: &FrameInput) -> Result<RigidTransform> {
        if let Some(&last) = self.ids.last() {
            if input.index <= last {
                return Err(Error::TrajectoryMismatch(format!(
                    "frame {} does not follow frame {last}",
                    input.index
                )));
            }
        } else {
            self.ids.push(input.index);
            return Ok(self.absolute);
        }
        let (rel, diag) = process_pair(input, &self.prev_relative, self.prev_scale, &self.config);
        match diag.used {
            TrackerKind::Essential => {
                self.prev_scale = diag.scale.map_or(self.prev_scale, |s| s.scale);
            }
            TrackerKind::Pnp => self.prev_scale = rel.translation.norm(),
            TrackerKind::ConstantMotion => {}
        }
        self.absolute = chain(&self.absolute, &rel);
        self.prev_relative = rel;
        self.ids.push(input.index);
        self.relatives.push(rel);
        self.diagnostics.push(diag);
        Ok(self.absolute)
    }

    pub fn diagnostics(&self) -> &[FrameDiagnostics] {
        &self.diagnostics
    }

    pub fn finish(self) -> Result<SequenceOutput> {
        if self.ids.len() < 2 {
            return Err(Error::Empty("a sequence needs at least two frames"));
        }
        let trajectory = Trajectory::from_relative(self.ids, &self.relatives)?;
        Ok(SequenceOutput {
            trajectory,
            relatives: self.relatives,
            diagnostics: self.diagnostics,
        })
    }
}

/// Runs the tracker over an ordered frame stream.
pub fn run_sequence<'a>(
    inputs: impl IntoIterator<Item = &'a FrameInput>,
    config: &PipelineConfig,
) -> Result<SequenceOutput> {
    let mut odo = Odometry::new(*config)?;
    for input in inputs {
        odo.push(input)?;
    }
    odo.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn frame(index: usize, flows: bool) -> FrameInput {
        let k = Intrinsics::new(50.0, 50.0, 19.5, 14.5).unwrap();
        FrameInput {
            index,
            depth: DepthMap::constant(40, 30, 5.0).unwrap(),
            flow_fwd: flows.then(|| FlowField::constant(40, 30, Vector2::new(100.0, 0.0)).unwrap()),
            flow_bwd: flows.then(|| FlowField::constant(40, 30, Vector2::new(-100.0, 0.0)).unwrap()),
            intrinsics: k,
        }
    }

    #[test]
    fn out_of_view_flow_falls_back_to_constant_motion() {
        let prev = RigidTransform::from_translation(nalgebra::Vector3::new(0.0, 0.0, 0.7));
        let (pose, diag) = process_pair(&frame(1, true), &prev, 1.0, &PipelineConfig::default());
        assert_eq!(pose, prev);
        assert_eq!(diag.used, TrackerKind::ConstantMotion);
        assert_eq!(diag.match_count, 0);
    }

    #[test]
    fn single_frame_is_an_error() {
        assert!(run_sequence([&frame(0, false)], &PipelineConfig::default()).is_err());
        assert!(run_sequence(std::iter::empty(), &PipelineConfig::default()).is_err());
    }
}
