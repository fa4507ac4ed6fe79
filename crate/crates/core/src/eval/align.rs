use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::trajectory::Trajectory;

/// Trajectory alignment mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alignment {
    /// Rotation and translation.
    Rigid,
    /// Rotation, translation and scale.
    Similarity,
    None,
}

impl Alignment {
    pub fn name(&self) -> &'static str {
        match self {
            Alignment::Rigid => "6dof",
            Alignment::Similarity => "7dof",
            Alignment::None => "none",
        }
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Alignment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "6dof" => Ok(Alignment::Rigid),
            "7dof" => Ok(Alignment::Similarity),
            "none" => Ok(Alignment::None),
            _ => Err(Error::InvalidParameter(format!("unknown alignment '{s}', expected 6dof, 7dof or none"))),
        }
    }
}

impl Serialize for Alignment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// `x ↦ s·R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }

    /// Maps a camera-to-world pose into the aligned world frame.
    pub fn apply_pose(&self, pose: &RigidTransform) -> RigidTransform {
        RigidTransform::new(self.rotation * pose.rotation, self.apply(&pose.translation))
    }

    pub fn apply_trajectory(&self, t: &Trajectory) -> Trajectory {
        Trajectory::new(t.ids().to_vec(), t.poses().iter().map(|p| self.apply_pose(p)).collect())
            .expect("ids are unchanged")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub transform: Similarity,
    pub aligned: Trajectory,
    /// Fewer than two independent directions among the positions; the
    /// rotation is then not unique.
    pub degenerate: bool,
}

/// Closed-form least-squares similarity or rigid transform taking `src`
/// onto `dst`, minimizing Σ‖dst − (sR·src + t)‖².
pub fn umeyama(src: &[Vector3<f64>], dst: &[Vector3<f64>], with_scale: bool) -> Result<(Similarity, bool)> {
    if src.len() != dst.len() {
        return Err(Error::TrajectoryMismatch(format!("{} vs {} points", src.len(), dst.len())));
    }
    let n = src.len();
    if n < 2 {
        return Err(Error::InsufficientMatches { needed: 2, got: n });
    }
    let nf = n as f64;
    let mu_s = src.iter().sum::<Vector3<f64>>() / nf;
    let mu_d = dst.iter().sum::<Vector3<f64>>() / nf;
    let mut cov = Matrix3::zeros();
    let mut src_cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (cs, cd) = (s - mu_s, d - mu_d);
        cov += cd * cs.transpose();
        src_cov += cs * cs.transpose();
        var_s += cs.norm_squared();
    }
    cov /= nf;
    var_s /= nf;

    let spread = src_cov.symmetric_eigenvalues();
    let mut ev: Vec<f64> = spread.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let degenerate = ev[0] <= 0.0 || ev[1] <= 1e-12 * ev[0];

    let svd = cov.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    // Singular values come sorted in decreasing order, so the reflection fix
    // goes on the last one.
    let mut sign = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        sign[(2, 2)] = -1.0;
    }
    let rotation = u * sign * vt;
    let scale = if with_scale {
        if var_s <= 0.0 {
            return Err(Error::AlignmentFailed);
        }
        (svd.singular_values.component_mul(&sign.diagonal())).sum() / var_s
    } else {
        1.0
    };
    let translation = mu_d - scale * rotation * mu_s;
    Ok((
        Similarity {
            scale,
            rotation,
            translation,
        },
        degenerate,
    ))
}

/// Aligns `est` to `gt` over their common frame ids; the whole of `est` is
/// transformed.
pub fn align_trajectory(est: &Trajectory, gt: &Trajectory, mode: Alignment) -> Result<AlignmentResult> {
    let (src, dst) = common_positions(est, gt);
    if src.len() < 2 {
        return Err(Error::TrajectoryMismatch(format!(
            "alignment needs at least 2 common frames, found {}",
            src.len()
        )));
    }
    let (transform, degenerate) = match mode {
        Alignment::None => (Similarity::identity(), false),
        Alignment::Rigid => umeyama(&src, &dst, false)?,
        Alignment::Similarity => umeyama(&src, &dst, true)?,
    };
    Ok(AlignmentResult {
        transform,
        aligned: transform.apply_trajectory(est),
        degenerate,
    })
}

fn common_positions(a: &Trajectory, b: &Trajectory) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let (mut pa, mut pb) = (Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    let (ia, ib) = (a.ids(), b.ids());
    while i < ia.len() && j < ib.len() {
        match ia[i].cmp(&ib[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                pa.push(a.poses()[i].translation);
                pb.push(b.poses()[j].translation);
                i += 1;
                j += 1;
            }
        }
    }
    (pa, pb)
}
