use nalgebra::{DMatrix, Matrix3, Vector2};

use super::essential::{apply, hartley_normalization, null_vector9};
use super::ransac::{self, Estimator, RansacParams};
use super::{Homography, Pixel};
use crate::correspondence::Match;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HomographyEstimate {
    pub homography: Homography,
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    pub iterations: usize,
}

/// Symmetric transfer error in pixels: the RMS of the forward and backward
/// one-way transfer distances.
pub fn transfer_error(h: &Matrix3<f64>, h_inv: &Matrix3<f64>, m: &Match) -> f64 {
    let fwd = project(h, &m.source);
    let bwd = project(h_inv, &m.target);
    match (fwd, bwd) {
        (Some(f), Some(b)) => (0.5 * ((f - m.target).norm_squared() + (b - m.source).norm_squared())).sqrt(),
        _ => f64::INFINITY,
    }
}

#[inline]
fn project(h: &Matrix3<f64>, p: &Pixel) -> Option<Pixel> {
    let w = h[(2, 0)] * p.x + h[(2, 1)] * p.y + h[(2, 2)];
    if w == 0.0 {
        return None;
    }
    Some(Pixel::new(
        (h[(0, 0)] * p.x + h[(0, 1)] * p.y + h[(0, 2)]) / w,
        (h[(1, 0)] * p.x + h[(1, 1)] * p.y + h[(1, 2)]) / w,
    ))
}

/// Normalized DLT on at least four correspondences.
fn dlt(sources: &[Vector2<f64>], targets: &[Vector2<f64>]) -> Option<Homography> {
    if sources.len() < 4 {
        return None;
    }
    let ts = hartley_normalization(sources);
    let tt = hartley_normalization(targets);
    let mut a = DMatrix::zeros(2 * sources.len(), 9);
    for (r, (s, t)) in sources.iter().zip(targets).enumerate() {
        let (p, q) = (apply(&ts, s), apply(&tt, t));
        let rows = [
            [-p.x, -p.y, -1.0, 0.0, 0.0, 0.0, q.x * p.x, q.x * p.y, q.x],
            [0.0, 0.0, 0.0, -p.x, -p.y, -1.0, q.y * p.x, q.y * p.y, q.y],
        ];
        for (k, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                a[(2 * r + k, c)] = *v;
            }
        }
    }
    let v = null_vector9(a)?;
    let hn = Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]);
    let tt_inv = tt.try_inverse()?;
    Homography::new(tt_inv * hn * ts).ok()
}

struct HomographyProblem<'a> {
    matches: &'a [Match],
    sources: Vec<Vector2<f64>>,
    targets: Vec<Vector2<f64>>,
}

#[derive(Clone)]
struct HomographyModel {
    h: Homography,
    inverse: Matrix3<f64>,
}

impl HomographyProblem<'_> {
    fn solve(&self, indices: impl Iterator<Item = usize>) -> Option<HomographyModel> {
        let (s, t): (Vec<_>, Vec<_>) = indices.map(|i| (self.sources[i], self.targets[i])).unzip();
        let h = dlt(&s, &t)?;
        Some(HomographyModel {
            inverse: h.0.try_inverse()?,
            h,
        })
    }
}

impl Estimator for HomographyProblem<'_> {
    type Model = HomographyModel;
    const SAMPLE_SIZE: usize = 4;

    fn len(&self) -> usize {
        self.matches.len()
    }

    fn fit(&self, sample: &[usize]) -> Vec<HomographyModel> {
        self.solve(sample.iter().copied()).into_iter().collect()
    }

    fn residual(&self, model: &HomographyModel, index: usize) -> f64 {
        transfer_error(&model.h.0, &model.inverse, &self.matches[index])
    }
}

/// DLT homography inside RANSAC on symmetric transfer error, refit on inliers.
pub fn estimate_homography_ransac(matches: &[Match], params: &RansacParams) -> Result<HomographyEstimate> {
    if matches.len() < 4 {
        return Err(Error::InsufficientMatches {
            needed: 4,
            got: matches.len(),
        });
    }
    let problem = HomographyProblem {
        matches,
        sources: matches.iter().map(|m| m.source).collect(),
        targets: matches.iter().map(|m| m.target).collect(),
    };
    let consensus = ransac::run(&problem, params)?;
    let mut best = (consensus.model, consensus.inliers, consensus.inlier_count);
    for _ in 0..2 {
        let idx = best.1.iter().enumerate().filter_map(|(i, b)| b.then_some(i));
        let Some(model) = problem.solve(idx) else { break };
        let (count, _, mask) = ransac::score(&problem, &model, params.inlier_threshold);
        if count < best.2 {
            break;
        }
        best = (model, mask, count);
    }
    Ok(HomographyEstimate {
        homography: best.0.h,
        inliers: best.1,
        inlier_count: best.2,
        iterations: consensus.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mapping_recovers_identity() {
        let ms: Vec<Match> = (0..40)
            .map(|i| {
                let p = Pixel::new((i * 37 % 100) as f64, (i * 53 % 80) as f64);
                Match::new(p, p)
            })
            .collect();
        let est = estimate_homography_ransac(&ms, &RansacParams::homography()).unwrap();
        let h = est.homography.0 / est.homography.0[(2, 2)];
        assert!((h - Matrix3::identity()).norm() < 1e-9);
        assert_eq!(est.inlier_count, 40);
    }

    #[test]
    fn too_few_matches() {
        let ms = vec![Match::new(Pixel::zeros(), Pixel::zeros()); 3];
        assert!(matches!(
            estimate_homography_ransac(&ms, &RansacParams::homography()),
            Err(Error::InsufficientMatches { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn transfer_error_of_known_offset() {
        let h = Matrix3::identity();
        let m = Match::new(Pixel::new(1.0, 1.0), Pixel::new(4.0, 5.0));
        // 5 px each way
        assert!((transfer_error(&h, &h, &m) - 5.0).abs() < 1e-12);
    }
}
