//! Two-view geometry: camera model, rigid transforms, essential/homography
//! estimation, triangulation and PnP.
//!
//! Camera frames follow the x-right, y-down, z-forward convention. A relative
//! pose `T` between a source view `i` and a target view `j` maps source-frame
//! points into the target frame, `X_j = R X_i + t`; the matching essential
//! matrix satisfies `x_jᵀ E x_i = 0` for normalized image points.

mod essential;
mod homography;
mod p3p;
mod pnp;
mod ransac;
mod triangulation;

pub use essential::{
    decompose_essential, eight_point, estimate_essential_ransac, sampson_distance,
    DecomposedEssential, EssentialEstimate,
};
pub use homography::{estimate_homography_ransac, transfer_error, HomographyEstimate};
pub use pnp::{refine_pose, solve_pnp_ransac, PnpEstimate};
pub use ransac::RansacParams;
pub use triangulation::{triangulate, triangulate_point, Triangulation};

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Continuous pixel coordinate; `(0, 0)` is the centre of the top-left pixel.
pub type Pixel = Vector2<f64>;

/// Pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !cx.is_finite() || !cy.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "intrinsics need positive focal lengths, got fx={fx} fy={fy}"
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// Whether the principal point lies inside a `width`×`height` image.
    pub fn fits_image(&self, width: usize, height: usize) -> bool {
        (0.0..=(width as f64 - 1.0)).contains(&self.cx)
            && (0.0..=(height as f64 - 1.0)).contains(&self.cy)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Normalized image coordinates of a pixel (the ray with unit z).
    #[inline]
    pub fn normalize(&self, p: &Pixel) -> Vector2<f64> {
        Vector2::new((p.x - self.cx) / self.fx, (p.y - self.cy) / self.fy)
    }

    #[inline]
    pub fn denormalize(&self, x: &Vector2<f64>) -> Pixel {
        Pixel::new(self.fx * x.x + self.cx, self.fy * x.y + self.cy)
    }

    /// Back-projects a pixel to the camera-frame point at the given depth.
    #[inline]
    pub fn backproject(&self, p: &Pixel, depth: f64) -> Vector3<f64> {
        let x = self.normalize(p);
        Vector3::new(x.x * depth, x.y * depth, depth)
    }

    /// Projects a camera-frame point. The caller is responsible for `z > 0`.
    #[inline]
    pub fn project(&self, point: &Vector3<f64>) -> Pixel {
        Pixel::new(
            self.fx * point.x / point.z + self.cx,
            self.fy * point.y / point.z + self.cy,
        )
    }
}

/// Rigid SE(3) transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), translation)
    }

    /// Rotation about `axisangle` (axis scaled by angle in radians) plus translation.
    pub fn from_axis_angle(axisangle: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self::new(*Rotation3::new(axisangle).matrix(), translation)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Rotation angle in radians, robust near zero and π.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    /// Replaces the rotation block with its nearest rotation matrix.
    pub fn orthonormalized(&self) -> Self {
        Self::new(nearest_rotation(&self.rotation), self.translation)
    }

    /// Max deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        let d = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        d.max((self.rotation.determinant() - 1.0).abs())
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

/// Angle of a rotation matrix in radians.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    // atan2 form stays accurate for tiny angles where acos loses precision.
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = 0.5 * skew.norm();
    let cos = 0.5 * (r.trace() - 1.0);
    sin.atan2(cos)
}

/// Projection onto SO(3) in the Frobenius sense.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let mut u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    if (u * vt).determinant() < 0.0 {
        let k = svd.singular_values.imin();
        u.column_mut(k).neg_mut();
    }
    u * vt
}

/// Essential matrix, defined up to scale; stored with singular values (1, 1, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialMatrix(pub Matrix3<f64>);

impl EssentialMatrix {
    /// Projects an arbitrary 3×3 matrix onto the essential manifold.
    pub fn project(m: &Matrix3<f64>) -> Result<Self> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidEssential("non-finite entries"));
        }
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
        let mut order = [0usize, 1, 2];
        let s = svd.singular_values;
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        if s[order[0]] <= 0.0 || s[order[1]] <= 1e-12 * s[order[0]] {
            return Err(Error::InvalidEssential("rank below two"));
        }
        let mut d = Matrix3::zeros();
        d[(order[0], order[0])] = 1.0;
        d[(order[1], order[1])] = 1.0;
        Ok(Self(u * d * vt))
    }

    /// Ratio of the smallest to the largest singular value.
    pub fn singular_ratio(&self) -> f64 {
        let s = self.0.singular_values();
        let max = s.max();
        if max == 0.0 {
            return f64::INFINITY;
        }
        s.min() / max
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// Planar homography, normalized to unit Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let norm = m.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("homography has zero norm".into()));
        }
        let h = m / norm;
        if h.determinant().abs() <= 1e-12 {
            return Err(Error::InvalidParameter("singular homography".into()));
        }
        Ok(Self(h))
    }

    #[inline]
    pub fn apply(&self, p: &Pixel) -> Pixel {
        let q = self.0 * Vector3::new(p.x, p.y, 1.0);
        Pixel::new(q.x / q.z, q.y / q.z)
    }
}

/// One triangulated or depth-lifted point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsePoint {
    /// Source pixel in view i.
    pub pixel: Pixel,
    /// Point in the view-i camera frame.
    pub point: Vector3<f64>,
}

/// Sparse cloud in the source camera frame; every stored depth is positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloudSparse {
    pub points: Vec<SparsePoint>,
}

impl PointCloudSparse {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A 3D point in the source frame paired with its observation in the target view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPixel {
    pub point: Vector3<f64>,
    pub pixel: Pixel,
}

/// Cross-product matrix: `skew_symmetric(t) * v == t.cross(v)`.
pub fn skew_symmetric(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// `E = [t]× R` for the relative pose mapping view i into view j.
pub fn essential_from_pose(rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Result<EssentialMatrix> {
    if translation.norm() == 0.0 {
        return Err(Error::DegenerateEssential);
    }
    Ok(EssentialMatrix(skew_symmetric(translation) * rotation))
}

/// `F = K⁻ᵀ E K⁻¹` for pixel-coordinate correspondences.
pub fn fundamental_from_essential(e: &EssentialMatrix, k: &Intrinsics) -> Matrix3<f64> {
    let kinv = k.inverse_matrix();
    kinv.transpose() * e.0 * kinv
}

/// Result of warping a pixel with a depth and a pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reprojection {
    pub pixel: Pixel,
    /// Depth of the transformed point in the target camera.
    pub depth: f64,
}

/// Back-projects `x` at `depth` in view i, moves it with `pose` into view j and
/// projects it. Points landing at `z ≤ 0` yield [`Error::BehindCamera`].
pub fn reproject(k: &Intrinsics, depth: f64, pose: &RigidTransform, x: &Pixel) -> Result<Reprojection> {
    let p = pose.transform_point(&k.backproject(x, depth));
    if !(p.z > 0.0) {
        return Err(Error::BehindCamera(p.z));
    }
    Ok(Reprojection {
        pixel: k.project(&p),
        depth: p.z,
    })
}
