//! Grunert's three-point pose solver, in the form surveyed by Haralick et al.
//! (1994). Distances along the three bearing rays are found from a quartic,
//! then the pose follows from absolute orientation of the two triangles.

use nalgebra::{Matrix3, Matrix4, Vector3};

/// Candidate poses `(R, t)` with `f_k ∝ R X_k + t` for unit bearings `f_k`.
pub(crate) fn solve(points: &[Vector3<f64>; 3], bearings: &[Vector3<f64>; 3]) -> Vec<(Matrix3<f64>, Vector3<f64>)> {
    let f: [Vector3<f64>; 3] = [bearings[0].normalize(), bearings[1].normalize(), bearings[2].normalize()];
    let a2 = (points[1] - points[2]).norm_squared();
    let b2 = (points[0] - points[2]).norm_squared();
    let c2 = (points[0] - points[1]).norm_squared();
    if a2 == 0.0 || b2 == 0.0 || c2 == 0.0 {
        return Vec::new();
    }
    let (ca, cb, cg) = (f[1].dot(&f[2]), f[0].dot(&f[2]), f[0].dot(&f[1]));

    let p = (a2 - c2) / b2;
    let q = (a2 + c2) / b2;
    let coeffs = [
        (1.0 + p).powi(2) - 4.0 * a2 / b2 * cg * cg,
        4.0 * (-p * (1.0 + p) * cb + 2.0 * a2 / b2 * cg * cg * cb - (1.0 - q) * ca * cg),
        2.0 * (p * p - 1.0 + 2.0 * p * p * cb * cb + 2.0 * (b2 - c2) / b2 * ca * ca - 4.0 * q * ca * cb * cg
            + 2.0 * (b2 - a2) / b2 * cg * cg),
        4.0 * (p * (1.0 - p) * cb - (1.0 - q) * ca * cg + 2.0 * c2 / b2 * ca * ca * cb),
        (p - 1.0).powi(2) - 4.0 * c2 / b2 * ca * ca,
    ];

    let mut out = Vec::with_capacity(4);
    for v in real_quartic_roots(&coeffs) {
        if v <= 0.0 {
            continue;
        }
        let den = 2.0 * (cg - v * ca);
        if den.abs() < 1e-14 {
            continue;
        }
        let u = ((p - 1.0) * v * v - 2.0 * p * cb * v + 1.0 + p) / den;
        if u <= 0.0 {
            continue;
        }
        let s1_sq = c2 / (1.0 + u * u - 2.0 * u * cg);
        if !(s1_sq > 0.0) {
            continue;
        }
        let s1 = s1_sq.sqrt();
        let cam = [f[0] * s1, f[1] * (u * s1), f[2] * (v * s1)];
        if let Some(pose) = absolute_orientation(points, &cam) {
            out.push(pose);
        }
    }
    out
}

/// Real roots of `c0 + c1 x + c2 x² + c3 x³ + c4 x⁴`, polished by Newton steps.
fn real_quartic_roots(c: &[f64; 5]) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || c[4].abs() < 1e-12 * scale {
        return Vec::new();
    }
    let n: Vec<f64> = c.iter().map(|v| v / c[4]).collect();
    #[rustfmt::skip]
    let companion = Matrix4::new(
        0.0, 0.0, 0.0, -n[0],
        1.0, 0.0, 0.0, -n[1],
        0.0, 1.0, 0.0, -n[2],
        0.0, 0.0, 1.0, -n[3],
    );
    let eval = |x: f64| (((n[4] * x + n[3]) * x + n[2]) * x + n[1]) * x + n[0];
    let deriv = |x: f64| ((4.0 * n[4] * x + 3.0 * n[3]) * x + 2.0 * n[2]) * x + n[1];
    companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-6 * (1.0 + z.re.abs()))
        .map(|z| {
            let mut x = z.re;
            for _ in 0..5 {
                let d = deriv(x);
                if d == 0.0 {
                    break;
                }
                let step = eval(x) / d;
                x -= step;
                if step.abs() <= 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
            x
        })
        .filter(|x| x.is_finite())
        .collect()
}

/// Least-squares rigid transform taking `src` onto `dst` (Kabsch).
pub(crate) fn absolute_orientation(
    src: &[Vector3<f64>],
    dst: &[Vector3<f64>],
) -> Option<(Matrix3<f64>, Vector3<f64>)> {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let h = src
        .iter()
        .zip(dst)
        .fold(Matrix3::zeros(), |acc, (s, d)| acc + (s - cs) * (d - cd).transpose());
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u?, svd.v_t?);
    let v = vt.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v * d * u.transpose();
    let t = cd - r * cs;
    (r.iter().all(|x| x.is_finite()) && t.iter().all(|x| x.is_finite())).then_some((r, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RigidTransform;

    #[test]
    fn recovers_known_pose() {
        let pose = RigidTransform::from_axis_angle(Vector3::new(0.1, -0.2, 0.05), Vector3::new(0.3, -0.1, 0.5));
        let pts = [
            Vector3::new(-1.0, 0.5, 6.0),
            Vector3::new(1.2, -0.3, 5.0),
            Vector3::new(0.1, 1.1, 7.5),
        ];
        let bearings = pts.map(|p| pose.transform_point(&p).normalize());
        let sols = solve(&pts, &bearings);
        assert!(!sols.is_empty());
        let best = sols
            .iter()
            .map(|(r, t)| (r - pose.rotation).norm() + (t - pose.translation).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-9, "best candidate error {best}");
    }

    #[test]
    fn quartic_roots() {
        // (x-1)(x-2)(x-3)(x+4) = x⁴ - 2x³ - 13x² + 38x - 24
        let mut r = real_quartic_roots(&[-24.0, 38.0, -13.0, -2.0, 1.0]);
        r.sort_by(f64::total_cmp);
        let want = [-4.0, 1.0, 2.0, 3.0];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
