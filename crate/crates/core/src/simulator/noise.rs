use nalgebra::Vector2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scene::RenderedPair;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, FlowField};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoiseConfig {
    /// Per-component Gaussian flow noise, pixels.
    pub flow_noise_std: f64,
    /// Multiplicative Gaussian depth noise, as a fraction of depth.
    pub depth_noise_rel: f64,
    /// Share of pixels of each flow field replaced by outliers.
    pub outlier_fraction: f64,
    /// Outlier displacement length in pixels, in a uniform random direction.
    pub outlier_magnitude: f64,
    /// Replace flow at pixels that are not co-visible with a random in-image
    /// target, as a flow network would hallucinate there.
    pub randomize_occluded: bool,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.flow_noise_std,
            self.depth_noise_rel,
            self.outlier_fraction,
            self.outlier_magnitude,
        ]
        .iter()
        .all(|v| *v >= 0.0 && v.is_finite());
        if !ok || self.outlier_fraction > 1.0 {
            return Err(Error::InvalidParameter("noise parameters must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.flow_noise_std == 0.0
            && self.depth_noise_rel == 0.0
            && (self.outlier_fraction == 0.0 || self.outlier_magnitude == 0.0)
            && !self.randomize_occluded
    }
}

/// Seeded corruption of a rendered pair. The input is left untouched so it can
/// serve as the oracle.
pub fn corrupt(pair: &RenderedPair, noise: &NoiseConfig) -> Result<RenderedPair> {
    noise.validate()?;
    let mut out = pair.clone();
    if noise.is_zero() {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    out.flow_fwd = corrupt_flow(&pair.flow_fwd, &pair.covisible_i, noise, &mut rng)?;
    out.flow_bwd = corrupt_flow(&pair.flow_bwd, &pair.covisible_j, noise, &mut rng)?;
    out.depth_i = corrupt_depth(&pair.depth_i, noise, &mut rng)?;
    out.depth_j = corrupt_depth(&pair.depth_j, noise, &mut rng)?;
    Ok(out)
}

fn corrupt_flow(
    flow: &FlowField,
    covisible: &[bool],
    noise: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<FlowField> {
    let (w, h) = (flow.width(), flow.height());
    let mut data = flow.data().to_vec();
    if noise.randomize_occluded {
        for (i, v) in data.iter_mut().enumerate() {
            if !covisible[i] {
                let target = Vector2::new(rng.random_range(0.0..(w - 1) as f64), rng.random_range(0.0..(h - 1) as f64));
                *v = target - Vector2::new((i % w) as f64, (i / w) as f64);
            }
        }
    }
    if noise.flow_noise_std > 0.0 {
        let n = Normal::new(0.0, noise.flow_noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for v in data.iter_mut() {
            v.x += n.sample(rng);
            v.y += n.sample(rng);
        }
    }
    if noise.outlier_fraction > 0.0 && noise.outlier_magnitude > 0.0 {
        let count = (noise.outlier_fraction * data.len() as f64).round() as usize;
        for i in index::sample(rng, data.len(), count.min(data.len())) {
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            data[i] += Vector2::new(a.cos(), a.sin()) * noise.outlier_magnitude;
        }
    }
    FlowField::new(w, h, data)
}

pub(super) fn corrupt_depth(depth: &DepthMap, noise: &NoiseConfig, rng: &mut ChaCha8Rng) -> Result<DepthMap> {
    if noise.depth_noise_rel == 0.0 {
        return Ok(depth.clone());
    }
    let n = Normal::new(0.0, noise.depth_noise_rel).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    // Every pixel draws, valid or not, so the stream does not depend on content.
    let factors: Vec<f64> = (0..depth.data().len()).map(|_| 1.0 + n.sample(rng)).collect();
    Ok(depth.map_valid(|i, d| d * factors[i].max(1e-3)))
}
