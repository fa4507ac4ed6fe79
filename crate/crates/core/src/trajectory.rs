use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

/// Camera-to-world poses keyed by strictly increasing frame ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    ids: Vec<usize>,
    poses: Vec<RigidTransform>,
}

impl Trajectory {
    pub fn new(ids: Vec<usize>, poses: Vec<RigidTransform>) -> Result<Self> {
        if ids.len() != poses.len() {
            return Err(Error::TrajectoryMismatch(format!(
                "{} ids for {} poses",
                ids.len(),
                poses.len()
            )));
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::TrajectoryMismatch("frame ids must be strictly increasing".into()));
        }
        Ok(Self { ids, poses })
    }

    /// Ids `0..poses.len()`.
    pub fn from_poses(poses: Vec<RigidTransform>) -> Self {
        Self {
            ids: (0..poses.len()).collect(),
            poses,
        }
    }

    /// Left-chains relative poses from the identity, `T_k = T_{k-1} T^{k-1}_k`,
    /// projecting the rotation back onto SO(3) after every step.
    /// `relatives[k]` links `ids[k]` to `ids[k + 1]`.
    pub fn from_relative(ids: Vec<usize>, relatives: &[RigidTransform]) -> Result<Self> {
        if ids.len() != relatives.len() + 1 {
            return Err(Error::TrajectoryMismatch(format!(
                "{} ids need {} relative poses, got {}",
                ids.len(),
                ids.len().saturating_sub(1),
                relatives.len()
            )));
        }
        let mut poses = Vec::with_capacity(ids.len());
        let mut current = RigidTransform::identity();
        poses.push(current);
        for rel in relatives {
            current = chain(&current, rel);
            poses.push(current);
        }
        Self::new(ids, poses)
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn poses(&self) -> &[RigidTransform] {
        &self.poses
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.poses.iter().map(|p| p.translation).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &RigidTransform)> {
        self.ids.iter().copied().zip(&self.poses)
    }

    /// Drops the first `n` frames.
    pub fn skip(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            ids: self.ids[n..].to_vec(),
            poses: self.poses[n..].to_vec(),
        }
    }

    /// Relative transforms between consecutive poses.
    pub fn relatives(&self) -> Vec<RigidTransform> {
        self.poses.windows(2).map(|w| w[0].inverse() * w[1]).collect()
    }
}

/// One chaining step with re-orthonormalization.
pub fn chain(absolute: &RigidTransform, relative: &RigidTransform) -> RigidTransform {
    (*absolute * *relative).orthonormalized()
}
