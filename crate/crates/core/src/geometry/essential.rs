use nalgebra::{DMatrix, Matrix3, SVector, Vector2, Vector3};

use super::ransac::{self, Estimator, RansacParams};
use super::{fundamental_from_essential, EssentialMatrix, Intrinsics};
use crate::correspondence::Match;
use crate::error::{Error, Result};

/// Essential matrix with its RANSAC consensus.
#[derive(Debug, Clone, PartialEq)]
pub struct EssentialEstimate {
    pub essential: EssentialMatrix,
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    pub iterations: usize,
}

/// Relative pose recovered from an essential matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposedEssential {
    pub rotation: Matrix3<f64>,
    /// Unit translation direction.
    pub translation: Vector3<f64>,
    /// Matches triangulating in front of both cameras under the chosen pose.
    pub cheirality_count: usize,
}

/// First-order geometric distance (pixels) of a correspondence to the
/// epipolar constraint of the pixel-space fundamental matrix `f`.
#[inline]
pub fn sampson_distance(f: &Matrix3<f64>, m: &Match) -> f64 {
    let a = Vector3::new(m.source.x, m.source.y, 1.0);
    let b = Vector3::new(m.target.x, m.target.y, 1.0);
    let fa = f * a;
    let ftb = f.transpose() * b;
    let num = b.dot(&fa);
    let den = fa.x * fa.x + fa.y * fa.y + ftb.x * ftb.x + ftb.y * ftb.y;
    if den <= 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (num * num / den).sqrt()
}

/// Similarity that moves points to zero mean and √2 mean distance.
pub(crate) fn hartley_normalization(points: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let c = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let mean_dist = points.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    let s = if mean_dist > 0.0 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * c.x, 0.0, s, -s * c.y, 0.0, 0.0, 1.0)
}

#[inline]
pub(crate) fn apply(t: &Matrix3<f64>, p: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(t[(0, 0)] * p.x + t[(0, 2)], t[(1, 1)] * p.y + t[(1, 2)])
}

/// Right singular vector of the smallest singular value. Rows are zero-padded
/// to at least nine so the full right basis is available.
pub(crate) fn null_vector9(mut a: DMatrix<f64>) -> Option<SVector<f64, 9>> {
    if a.nrows() < 9 {
        let rows = a.nrows();
        a = a.resize_vertically(9, 0.0);
        debug_assert!(rows <= 9);
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let v: SVector<f64, 9> = SVector::from_iterator(vt.row(k).iter().copied());
    v.iter().all(|x| x.is_finite()).then_some(v)
}

/// Normalized eight-point solve for `M` with `bᵀ M a = 0`, `a`/`b` in any
/// consistent 2D coordinates. Needs at least eight points; returns the raw
/// (unconstrained) least-squares matrix.
pub fn eight_point(sources: &[Vector2<f64>], targets: &[Vector2<f64>]) -> Option<Matrix3<f64>> {
    if sources.len() < 8 || sources.len() != targets.len() {
        return None;
    }
    let ts = hartley_normalization(sources);
    let tt = hartley_normalization(targets);
    let mut a = DMatrix::zeros(sources.len(), 9);
    for (r, (s, t)) in sources.iter().zip(targets).enumerate() {
        let (x1, x2) = (apply(&ts, s), apply(&tt, t));
        let row = [
            x2.x * x1.x,
            x2.x * x1.y,
            x2.x,
            x2.y * x1.x,
            x2.y * x1.y,
            x2.y,
            x1.x,
            x1.y,
            1.0,
        ];
        for (c, v) in row.into_iter().enumerate() {
            a[(r, c)] = v;
        }
    }
    let v = null_vector9(a)?;
    let m = Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]);
    Some(tt.transpose() * m * ts)
}

struct EssentialProblem<'a> {
    matches: &'a [Match],
    sources: Vec<Vector2<f64>>,
    targets: Vec<Vector2<f64>>,
    k: &'a Intrinsics,
}

#[derive(Clone)]
struct EssentialModel {
    essential: EssentialMatrix,
    fundamental: Matrix3<f64>,
}

impl EssentialProblem<'_> {
    fn solve(&self, indices: impl Iterator<Item = usize>) -> Option<EssentialModel> {
        let (s, t): (Vec<_>, Vec<_>) = indices.map(|i| (self.sources[i], self.targets[i])).unzip();
        let m = eight_point(&s, &t)?;
        let essential = EssentialMatrix::project(&m).ok()?;
        Some(EssentialModel {
            fundamental: fundamental_from_essential(&essential, self.k),
            essential,
        })
    }
}

impl Estimator for EssentialProblem<'_> {
    type Model = EssentialModel;
    const SAMPLE_SIZE: usize = 8;

    fn len(&self) -> usize {
        self.matches.len()
    }

    fn fit(&self, sample: &[usize]) -> Vec<EssentialModel> {
        self.solve(sample.iter().copied()).into_iter().collect()
    }

    fn residual(&self, model: &EssentialModel, index: usize) -> f64 {
        sampson_distance(&model.fundamental, &self.matches[index])
    }
}

/// Normalized eight-point inside RANSAC on Sampson distance, followed by a
/// least-squares refit on the consensus set. The result lies on the
/// essential manifold.
pub fn estimate_essential_ransac(
    matches: &[Match],
    k: &Intrinsics,
    params: &RansacParams,
) -> Result<EssentialEstimate> {
    if matches.len() < 8 {
        return Err(Error::InsufficientMatches {
            needed: 8,
            got: matches.len(),
        });
    }
    let problem = EssentialProblem {
        matches,
        sources: matches.iter().map(|m| k.normalize(&m.source)).collect(),
        targets: matches.iter().map(|m| k.normalize(&m.target)).collect(),
        k,
    };
    let consensus = ransac::run(&problem, params)?;
    let mut best = (consensus.model, consensus.inliers, consensus.inlier_count);
    // Two refit rounds; a refit is kept only if it does not lose inliers.
    for _ in 0..2 {
        let inlier_idx = best.1.iter().enumerate().filter_map(|(i, b)| b.then_some(i));
        let Some(model) = problem.solve(inlier_idx) else { break };
        let (count, _, mask) = ransac::score(&problem, &model, params.inlier_threshold);
        if count < best.2 {
            break;
        }
        best = (model, mask, count);
    }
    Ok(EssentialEstimate {
        essential: best.0.essential,
        inliers: best.1,
        inlier_count: best.2,
        iterations: consensus.iterations,
    })
}

/// Depths `(d_i, d_j)` of the point seen along normalized rays `a` (view i)
/// and `b` (view j) under `X_j = R X_i + t`, by linear least squares on
/// `d_j b = d_i R a + t`. `None` for (numerically) parallel rays.
#[inline]
pub(crate) fn ray_depths(
    r: &Matrix3<f64>,
    t: &Vector3<f64>,
    a: &Vector2<f64>,
    b: &Vector2<f64>,
) -> Option<(f64, f64)> {
    let c = r * Vector3::new(a.x, a.y, 1.0);
    let b = Vector3::new(b.x, b.y, 1.0);
    let (cc, bb, cb) = (c.dot(&c), b.dot(&b), c.dot(&b));
    let det = cc * bb - cb * cb;
    if !(det > 1e-24 * cc * bb) {
        return None;
    }
    let (rhs1, rhs2) = (-c.dot(t), b.dot(t));
    let di = (rhs1 * bb + cb * rhs2) / det;
    let dj = (cc * rhs2 + cb * rhs1) / det;
    Some((di, dj))
}

/// Chooses among the four `(R, ±t)` factorizations of `e` the one placing the
/// most matches in front of both cameras.
pub fn decompose_essential(e: &EssentialMatrix, matches: &[Match], k: &Intrinsics) -> Result<DecomposedEssential> {
    if matches.is_empty() {
        return Err(Error::Empty("cheirality needs at least one match"));
    }
    let e = EssentialMatrix::project(&e.0)?;
    let svd = e.0.svd(true, true);
    let (u0, vt0) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut u = Matrix3::from_columns(&[u0.column(order[0]), u0.column(order[1]), u0.column(order[2])]);
    let v = vt0.transpose();
    let mut v = Matrix3::from_columns(&[v.column(order[0]), v.column(order[1]), v.column(order[2])]);
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v.determinant() < 0.0 {
        v = -v;
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * v.transpose();
    let r2 = u * w.transpose() * v.transpose();
    let t = u.column(2).into_owned().normalize();

    let rays: Vec<(Vector2<f64>, Vector2<f64>)> = matches
        .iter()
        .map(|m| (k.normalize(&m.source), k.normalize(&m.target)))
        .collect();
    let count = |r: &Matrix3<f64>, t: &Vector3<f64>| {
        rays.iter()
            .filter(|(a, b)| matches!(ray_depths(r, t, a, b), Some((di, dj)) if di > 0.0 && dj > 0.0))
            .count()
    };
    let mut best: Option<DecomposedEssential> = None;
    for (r, t) in [(r1, t), (r1, -t), (r2, t), (r2, -t)] {
        let c = count(&r, &t);
        if best.is_none_or(|b| c > b.cheirality_count) {
            best = Some(DecomposedEssential {
                rotation: r,
                translation: t,
                cheirality_count: c,
            });
        }
    }
    Ok(best.expect("four candidates"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{essential_from_pose, Pixel, RigidTransform};

    fn k() -> Intrinsics {
        Intrinsics::new(200.0, 200.0, 120.0, 90.0).unwrap()
    }

    fn synth(pose: &RigidTransform, n: usize) -> Vec<Match> {
        let k = k();
        (0..n)
            .map(|i| {
                let f = i as f64;
                let p = Vector3::new((f * 0.37).sin() * 3.0, (f * 0.61).cos() * 2.0, 6.0 + (f * 0.23).sin() * 3.0);
                Match::new(k.project(&p), k.project(&pose.transform_point(&p)))
            })
            .collect()
    }

    #[test]
    fn sampson_is_zero_on_exact_matches() {
        let pose = RigidTransform::from_axis_angle(Vector3::new(0.01, 0.05, 0.0), Vector3::new(0.3, 0.0, -1.0));
        let e = essential_from_pose(&pose.rotation, &pose.translation).unwrap();
        let f = fundamental_from_essential(&e, &k());
        for m in synth(&pose, 30) {
            assert!(sampson_distance(&f, &m) < 1e-9);
        }
        let mut off = synth(&pose, 1)[0];
        off.target += Pixel::new(0.0, 3.0);
        assert!(sampson_distance(&f, &off) > 0.1);
    }

    #[test]
    fn decomposition_of_lateral_motion() {
        let pose = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let e = essential_from_pose(&pose.rotation, &pose.translation).unwrap();
        let ms = synth(&pose, 100);
        let d = decompose_essential(&e, &ms, &k()).unwrap();
        let dr = RigidTransform::new(d.rotation, Vector3::zeros()).rotation_angle();
        assert!(dr < 1e-8, "rotation error {dr}");
        assert!(d.translation.angle(&Vector3::x()) < 1e-8);
        assert_eq!(d.cheirality_count, 100);
        assert!(decompose_essential(&e, &[], &k()).is_err());
    }

    #[test]
    fn insufficient_matches() {
        let pose = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let ms = synth(&pose, 5);
        assert!(matches!(
            estimate_essential_ransac(&ms, &k(), &RansacParams::essential()),
            Err(Error::InsufficientMatches { needed: 8, got: 5 })
        ));
    }

    #[test]
    fn rank_deficient_input_is_rejected() {
        let bad = EssentialMatrix(Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let pose = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            decompose_essential(&bad, &synth(&pose, 10), &k()),
            Err(Error::InvalidEssential(_))
        ));
    }
}
