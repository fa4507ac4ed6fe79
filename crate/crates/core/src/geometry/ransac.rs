use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Parameters shared by every RANSAC estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub max_iterations: usize,
    /// Residual threshold in pixels.
    pub inlier_threshold: f64,
    /// Target probability of drawing one all-inlier sample; drives early exit.
    pub confidence: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl RansacParams {
    /// Defaults for essential / fundamental estimation.
    pub fn essential() -> Self {
        Self {
            max_iterations: 1000,
            inlier_threshold: 1.0,
            confidence: 0.99,
            min_inliers: 10,
            seed: 0,
        }
    }

    /// Defaults for homography and PnP estimation.
    pub fn homography() -> Self {
        Self {
            inlier_threshold: 3.0,
            ..Self::essential()
        }
    }

    pub fn pnp() -> Self {
        Self::homography()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_threshold(self, inlier_threshold: f64) -> Self {
        Self {
            inlier_threshold,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidParameter("inlier_threshold must be positive".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidParameter("confidence must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A model family that RANSAC can hypothesize and score.
pub(crate) trait Estimator {
    type Model: Clone;
    const SAMPLE_SIZE: usize;

    fn len(&self) -> usize;
    /// Zero or more candidate models from a minimal sample.
    fn fit(&self, sample: &[usize]) -> Vec<Self::Model>;
    /// Residual in pixels.
    fn residual(&self, model: &Self::Model, index: usize) -> f64;
}

pub(crate) struct Consensus<M> {
    pub model: M,
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    pub iterations: usize,
}

/// Scores a model: inlier count first, then lower truncated squared error.
pub(crate) fn score<E: Estimator>(est: &E, model: &E::Model, threshold: f64) -> (usize, f64, Vec<bool>) {
    let mut count = 0;
    let mut cost = 0.0;
    let mask = (0..est.len())
        .map(|i| {
            let r = est.residual(model, i);
            let inlier = r <= threshold;
            if inlier {
                count += 1;
                cost += r * r;
            } else {
                cost += threshold * threshold;
            }
            inlier
        })
        .collect();
    (count, cost, mask)
}

fn required_iterations(inlier_ratio: f64, sample_size: usize, confidence: f64) -> usize {
    let good = inlier_ratio.powi(sample_size as i32);
    if good >= 1.0 {
        return 1;
    }
    if good <= 0.0 {
        return usize::MAX;
    }
    let n = (1.0 - confidence).ln() / (1.0 - good).ln();
    if n.is_finite() {
        n.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

/// Plain RANSAC with adaptive early exit. Deterministic in `params.seed`.
pub(crate) fn run<E: Estimator>(est: &E, params: &RansacParams) -> Result<Consensus<E::Model>> {
    params.validate()?;
    let n = est.len();
    if n < E::SAMPLE_SIZE {
        return Err(Error::InsufficientMatches {
            needed: E::SAMPLE_SIZE,
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(usize, f64, Vec<bool>, E::Model)> = None;
    let mut needed = params.max_iterations;
    let mut iterations = 0;
    while iterations < needed.min(params.max_iterations) {
        iterations += 1;
        let sample = index::sample(&mut rng, n, E::SAMPLE_SIZE).into_vec();
        for model in est.fit(&sample) {
            let (count, cost, mask) = score(est, &model, params.inlier_threshold);
            let better = match &best {
                None => true,
                Some((bc, bcost, _, _)) => count > *bc || (count == *bc && cost < *bcost),
            };
            if better {
                needed = required_iterations(count as f64 / n as f64, E::SAMPLE_SIZE, params.confidence);
                best = Some((count, cost, mask, model));
            }
        }
    }
    match best {
        Some((count, _, mask, model)) if count >= params.min_inliers.max(E::SAMPLE_SIZE) => Ok(Consensus {
            model,
            inliers: mask,
            inlier_count: count,
            iterations,
        }),
        Some((count, ..)) => Err(Error::NoConsensus {
            inliers: count,
            needed: params.min_inliers.max(E::SAMPLE_SIZE),
        }),
        None => Err(Error::NoConsensus {
            inliers: 0,
            needed: params.min_inliers.max(E::SAMPLE_SIZE),
        }),
    }
}
