use nalgebra::Vector2;

use crate::geometry::{reproject, Intrinsics, Pixel, PointPixel, RigidTransform};
use crate::raster::DepthMap;

use super::Match;

/// Rigid flow at a list of pixels; `None` where the depth is unusable or the
/// warped point lands behind the target camera.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidFlow {
    pub flow: Vec<Option<Vector2<f64>>>,
}

impl RigidFlow {
    pub fn invalid_count(&self) -> usize {
        self.flow.iter().filter(|f| f.is_none()).count()
    }
}

/// `K T K⁻¹ (x D[x]) − x` for every queried pixel, with depth sampled bilinearly.
pub fn rigid_flow(pose: &RigidTransform, depth: &DepthMap, k: &Intrinsics, pixels: &[Pixel]) -> RigidFlow {
    RigidFlow {
        flow: pixels
            .iter()
            .map(|x| {
                let d = depth.sample_bilinear(x)?;
                reproject(k, d, pose, x).ok().map(|r| r.pixel - x)
            })
            .collect(),
    }
}

/// 3D–2D correspondences built by lifting match sources through a depth map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LiftedMatches {
    pub pairs: Vec<PointPixel>,
    /// Index of the originating match for every pair.
    pub indices: Vec<usize>,
    pub dropped: usize,
}

/// Back-projects each source pixel with its bilinearly sampled depth.
/// Matches without a positive depth are dropped and counted.
pub fn lift_to_3d(matches: &[Match], depth: &DepthMap, k: &Intrinsics) -> LiftedMatches {
    let mut out = LiftedMatches::default();
    for (i, m) in matches.iter().enumerate() {
        match depth.sample_bilinear(&m.source) {
            Some(d) => {
                out.pairs.push(PointPixel {
                    point: k.backproject(&m.source, d),
                    pixel: m.target,
                });
                out.indices.push(i);
            }
            None => out.dropped += 1,
        }
    }
    out
}
