use nalgebra::{Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

/// Camera path families. Cameras start at the origin looking down +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryKind {
    /// Constant translation `step` per frame.
    Straight { step: Vector3<f64> },
    /// Drives along a circle of `radius` in the x–z plane, turning by `turn`
    /// radians about +y per frame while facing along the path.
    Circle { radius: f64, turn: f64 },
    /// Rotation by the axis-angle `step` per frame, no translation.
    PureRotation { step: Vector3<f64> },
    /// `go` frames of `step`, then `stop` frames standing still, repeated.
    StopAndGo {
        step: Vector3<f64>,
        go: usize,
        stop: usize,
    },
}

/// Seeded perturbation added on top of a path: a rotation with `rotation`
/// radians std per axis and a translation with `translation` std per axis.
/// Translation jitter is not applied to pure-rotation paths.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jitter {
    pub rotation: f64,
    pub translation: f64,
}

/// Camera-to-world poses, the first being the identity.
pub fn generate_trajectory(
    kind: &TrajectoryKind,
    n_frames: usize,
    jitter: &Jitter,
    seed: u64,
) -> Result<Vec<RigidTransform>> {
    if n_frames < 2 {
        return Err(Error::InvalidParameter("a trajectory needs at least two frames".into()));
    }
    if !(jitter.rotation >= 0.0 && jitter.translation >= 0.0) {
        return Err(Error::InvalidParameter("jitter must be nonnegative".into()));
    }
    let mut poses: Vec<RigidTransform> = match *kind {
        TrajectoryKind::Straight { step } => (0..n_frames)
            .map(|k| RigidTransform::from_translation(step * k as f64))
            .collect(),
        TrajectoryKind::Circle { radius, turn } => {
            if !(radius > 0.0) {
                return Err(Error::InvalidParameter("circle radius must be positive".into()));
            }
            (0..n_frames)
                .map(|k| {
                    let phi = turn * k as f64;
                    RigidTransform::from_axis_angle(
                        Vector3::new(0.0, phi, 0.0),
                        Vector3::new(radius * (1.0 - phi.cos()), 0.0, radius * phi.sin()),
                    )
                })
                .collect()
        }
        TrajectoryKind::PureRotation { step } => (0..n_frames)
            .map(|k| RigidTransform::from_axis_angle(step * k as f64, Vector3::zeros()))
            .collect(),
        TrajectoryKind::StopAndGo { step, go, stop } => {
            if go == 0 {
                return Err(Error::InvalidParameter("stop-and-go needs at least one moving frame".into()));
            }
            let mut position = Vector3::zeros();
            (0..n_frames)
                .map(|k| {
                    if k > 0 && (k - 1) % (go + stop) < go {
                        position += step;
                    }
                    RigidTransform::from_translation(position)
                })
                .collect()
        }
    };
    if jitter.rotation > 0.0 || jitter.translation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rot = Normal::new(0.0, jitter.rotation).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let trans = Normal::new(0.0, jitter.translation).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let translate = !matches!(kind, TrajectoryKind::PureRotation { .. });
        for pose in poses.iter_mut().skip(1) {
            let w = Vector3::from_fn(|_, _| rot.sample(&mut rng));
            let dt = Vector3::from_fn(|_, _| trans.sample(&mut rng));
            pose.rotation = Rotation3::new(w).matrix() * pose.rotation;
            if translate {
                pose.translation += dt;
            }
        }
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_steps() {
        let p = generate_trajectory(
            &TrajectoryKind::Straight {
                step: Vector3::new(1.0, 0.0, 0.0),
            },
            3,
            &Jitter::default(),
            0,
        )
        .unwrap();
        for (k, pose) in p.iter().enumerate() {
            assert_eq!(pose.translation, Vector3::new(k as f64, 0.0, 0.0));
            assert_eq!(pose.rotation, nalgebra::Matrix3::identity());
        }
    }

    #[test]
    fn circle_chords() {
        let (r, theta) = (7.0, 0.05);
        let p = generate_trajectory(&TrajectoryKind::Circle { radius: r, turn: theta }, 40, &Jitter::default(), 0)
            .unwrap();
        let chord = 2.0 * r * (theta / 2.0).sin();
        for w in p.windows(2) {
            assert!(((w[1].translation - w[0].translation).norm() - chord).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_rotation_has_no_translation_even_with_jitter() {
        let kind = TrajectoryKind::PureRotation {
            step: Vector3::new(0.0, 0.02, 0.0),
        };
        let jitter = Jitter {
            rotation: 0.01,
            translation: 0.5,
        };
        for pose in generate_trajectory(&kind, 10, &jitter, 3).unwrap() {
            assert_eq!(pose.translation, Vector3::zeros());
        }
    }

    #[test]
    fn stop_and_go_pauses() {
        let kind = TrajectoryKind::StopAndGo {
            step: Vector3::new(0.0, 0.0, 1.0),
            go: 2,
            stop: 1,
        };
        let z: Vec<f64> = generate_trajectory(&kind, 7, &Jitter::default(), 0)
            .unwrap()
            .iter()
            .map(|p| p.translation.z)
            .collect();
        assert_eq!(z, vec![0.0, 1.0, 2.0, 2.0, 3.0, 4.0, 4.0]);
    }
}
