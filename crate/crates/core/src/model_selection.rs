//! Per-frame choice between the essential-matrix tracker and the PnP tracker.

use serde::Serialize;

use crate::correspondence::Match;
use crate::error::{Error, Result};
use crate::geometry::{
    decompose_essential, estimate_essential_ransac, estimate_homography_ransac, fundamental_from_essential,
    sampson_distance, transfer_error, DecomposedEssential, EssentialEstimate, HomographyEstimate, Intrinsics,
    RansacParams,
};
use crate::raster::FlowField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GricConfig {
    /// Residual noise standard deviation in pixels.
    pub sigma: f64,
    /// Data dimension; 4 for two views.
    pub r: f64,
    pub lambda3: f64,
}

impl Default for GricConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            r: 4.0,
            lambda3: 2.0,
        }
    }
}

impl GricConfig {
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            sigma,
            ..Self::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Essential,
    Fundamental,
    Homography,
}

/// Parameter count `k` and structure dimension `d` of a motion model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    kind: ModelKind,
    k: u32,
    d: u32,
}

impl ModelSpec {
    pub const ESSENTIAL: ModelSpec = ModelSpec {
        kind: ModelKind::Essential,
        k: 5,
        d: 3,
    };
    pub const FUNDAMENTAL: ModelSpec = ModelSpec {
        kind: ModelKind::Fundamental,
        k: 7,
        d: 3,
    };
    pub const HOMOGRAPHY: ModelSpec = ModelSpec {
        kind: ModelKind::Homography,
        k: 8,
        d: 2,
    };

    pub fn of(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Essential => Self::ESSENTIAL,
            ModelKind::Fundamental => Self::FUNDAMENTAL,
            ModelKind::Homography => Self::HOMOGRAPHY,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> u32 {
        self.d
    }
}

/// `min(e²/σ², λ₃(r − d))`.
pub fn robust_rho(e_sq: f64, cfg: &GricConfig, spec: &ModelSpec) -> f64 {
    (e_sq / (cfg.sigma * cfg.sigma)).min(cfg.lambda3 * (cfg.r - spec.d as f64))
}

/// `Σρ(eᵢ²) + ln4·d·n + ln(4n)·k` over residuals in pixels.
pub fn gric_score(residuals: &[f64], cfg: &GricConfig, spec: &ModelSpec) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Empty("GRIC needs at least one residual"));
    }
    let n = residuals.len() as f64;
    let data: f64 = residuals.iter().map(|e| robust_rho(e * e, cfg, spec)).sum();
    Ok(data + 4f64.ln() * spec.d as f64 * n + (4.0 * n).ln() * spec.k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerKind {
    Essential,
    Pnp,
    ConstantMotion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackerDecision {
    pub chosen: TrackerKind,
    /// `+∞` when the model could not be estimated.
    pub gric_e: f64,
    pub gric_h: f64,
    pub cheirality_count: usize,
    pub cheirality_pass: bool,
    /// Mean match displacement in pixels.
    pub flow_magnitude: f64,
}

impl TrackerDecision {
    pub fn constant_motion(flow_magnitude: f64) -> Self {
        Self {
            chosen: TrackerKind::ConstantMotion,
            gric_e: f64::INFINITY,
            gric_h: f64::INFINITY,
            cheirality_count: 0,
            cheirality_pass: false,
            flow_magnitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerSelectionConfig {
    pub gric: GricConfig,
    /// Which two-view model scores the epipolar hypothesis.
    pub epipolar_spec: ModelSpec,
    pub essential_ransac: RansacParams,
    pub homography_ransac: RansacParams,
    pub cheirality_min_ratio: f64,
}

impl Default for TrackerSelectionConfig {
    fn default() -> Self {
        Self {
            gric: GricConfig::default(),
            epipolar_spec: ModelSpec::ESSENTIAL,
            essential_ransac: RansacParams::essential(),
            homography_ransac: RansacParams::homography(),
            cheirality_min_ratio: 0.9,
        }
    }
}

impl TrackerSelectionConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self {
            essential_ransac: self.essential_ransac.with_seed(seed),
            homography_ransac: self.homography_ransac.with_seed(seed),
            ..self
        }
    }
}

/// The decision plus the estimates it was based on, so the chosen tracker
/// does not have to recompute them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSelection {
    pub decision: TrackerDecision,
    pub essential: Option<EssentialEstimate>,
    pub decomposition: Option<DecomposedEssential>,
    pub homography: Option<HomographyEstimate>,
}

/// Fits E and H, scores both with GRIC and checks cheirality of the E
/// decomposition over the E inliers.
pub fn select_tracker(matches: &[Match], k: &Intrinsics, cfg: &TrackerSelectionConfig) -> ModelSelection {
    let flow_magnitude = if matches.is_empty() {
        0.0
    } else {
        matches.iter().map(|m| m.flow().norm()).sum::<f64>() / matches.len() as f64
    };
    let essential = estimate_essential_ransac(matches, k, &cfg.essential_ransac).ok();
    let homography = estimate_homography_ransac(matches, &cfg.homography_ransac).ok();

    let gric_e = essential
        .as_ref()
        .and_then(|est| {
            let f = fundamental_from_essential(&est.essential, k);
            let res: Vec<f64> = matches.iter().map(|m| sampson_distance(&f, m)).collect();
            gric_score(&res, &cfg.gric, &cfg.epipolar_spec).ok()
        })
        .unwrap_or(f64::INFINITY);
    let gric_h = homography
        .as_ref()
        .and_then(|est| {
            let h = est.homography.0;
            let h_inv = h.try_inverse()?;
            let res: Vec<f64> = matches.iter().map(|m| transfer_error(&h, &h_inv, m)).collect();
            gric_score(&res, &cfg.gric, &ModelSpec::HOMOGRAPHY).ok()
        })
        .unwrap_or(f64::INFINITY);

    let decomposition = essential.as_ref().and_then(|est| {
        let inliers: Vec<Match> = matches
            .iter()
            .zip(&est.inliers)
            .filter_map(|(m, b)| b.then_some(*m))
            .collect();
        decompose_essential(&est.essential, &inliers, k).ok()
    });
    let (cheirality_count, cheirality_pass) = match (&essential, &decomposition) {
        (Some(est), Some(dec)) => (
            dec.cheirality_count,
            dec.cheirality_count as f64 >= cfg.cheirality_min_ratio * est.inlier_count as f64,
        ),
        _ => (0, false),
    };

    let chosen = if essential.is_none() && homography.is_none() {
        TrackerKind::ConstantMotion
    } else if gric_e > gric_h || !cheirality_pass {
        TrackerKind::Pnp
    } else {
        TrackerKind::Essential
    };
    ModelSelection {
        decision: TrackerDecision {
            chosen,
            gric_e,
            gric_h,
            cheirality_count,
            cheirality_pass,
            flow_magnitude,
        },
        essential,
        decomposition,
        homography,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMagnitude {
    Large,
    Small,
}

/// Mean per-pixel flow norm compared strictly against `threshold`.
pub fn flow_magnitude_gate(fwd: &FlowField, threshold: f64) -> FlowMagnitude {
    if fwd.mean_magnitude() > threshold {
        FlowMagnitude::Large
    } else {
        FlowMagnitude::Small
    }
}
