use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use super::noise::{corrupt, corrupt_depth, NoiseConfig};
use super::scene::{RenderedPair, Scene, SceneConfig, SceneKind};
use super::trajectory::{generate_trajectory, Jitter, TrajectoryKind};
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::pipeline::FrameInput;
use crate::trajectory::Trajectory;

/// A scene plus a camera path; frames are rendered on demand so long runs do
/// not hold every raster in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSequence {
    scene: Scene,
    poses: Vec<RigidTransform>,
    noise: Option<NoiseConfig>,
}

impl SimulatedSequence {
    pub fn new(scene: Scene, poses: Vec<RigidTransform>, noise: Option<NoiseConfig>) -> Result<Self> {
        if poses.len() < 2 {
            return Err(Error::InvalidParameter("a sequence needs at least two frames".into()));
        }
        if let Some(n) = &noise {
            n.validate()?;
        }
        Ok(Self { scene, poses, noise })
    }

    pub fn with_noise(self, noise: Option<NoiseConfig>) -> Result<Self> {
        Self::new(self.scene, self.poses, noise)
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn poses(&self) -> &[RigidTransform] {
        &self.poses
    }

    pub fn noise(&self) -> Option<&NoiseConfig> {
        self.noise.as_ref()
    }

    pub fn ground_truth(&self) -> Trajectory {
        Trajectory::from_poses(self.poses.clone())
    }

    /// `T^{k−1}_k`, mapping view-k coordinates into view k−1.
    pub fn true_relative(&self, k: usize) -> RigidTransform {
        self.poses[k - 1].inverse() * self.poses[k]
    }

    /// Exact render of view `k` (as view i) against view `k − 1` (as view j).
    pub fn exact_pair(&self, k: usize) -> Result<RenderedPair> {
        if k == 0 || k >= self.len() {
            return Err(Error::InvalidParameter(format!("pair index {k} out of range")));
        }
        self.scene
            .render_pair_at(&self.poses[k], k as i64, &self.poses[k - 1], k as i64 - 1)
    }

    /// [`Self::exact_pair`] with the sequence noise applied (seeded per frame).
    pub fn pair(&self, k: usize) -> Result<RenderedPair> {
        let exact = self.exact_pair(k)?;
        match &self.noise {
            Some(n) => corrupt(
                &exact,
                &NoiseConfig {
                    seed: n.seed.wrapping_add(k as u64),
                    ..*n
                },
            ),
            None => Ok(exact),
        }
    }

    /// Pipeline input for frame `k`; frame 0 carries depth only.
    pub fn frame(&self, k: usize) -> Result<FrameInput> {
        let intrinsics = *self.scene.intrinsics();
        if k == 0 {
            let mut depth = self.scene.render_depth(&self.poses[0], 0)?;
            if let Some(n) = &self.noise {
                let mut rng = rand::SeedableRng::seed_from_u64(n.seed);
                depth = corrupt_depth(&depth, n, &mut rng)?;
            }
            return Ok(FrameInput {
                index: 0,
                depth,
                flow_fwd: None,
                flow_bwd: None,
                intrinsics,
            });
        }
        let pair = self.pair(k)?;
        Ok(FrameInput {
            index: k,
            depth: pair.depth_i,
            // The pair renders view k against view k − 1.
            flow_fwd: Some(pair.flow_bwd),
            flow_bwd: Some(pair.flow_fwd),
            intrinsics,
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<FrameInput>> + '_ {
        (0..self.len()).map(|k| self.frame(k))
    }
}

/// Named presets used by tests, benchmarks and the `simulate` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Curved path with jitter over ground plane and spheres.
    General,
    Straight,
    /// Long closed loop.
    Circle,
    PureRotation,
    /// Translation in front of a single wall.
    Planar,
    /// Forward motion toward an oncoming body that covers ~30% of the view.
    /// The body moves along the camera's line of travel, so its flow
    /// satisfies the static epipolar geometry and only depth reveals it.
    /// Meant for short runs: the body reaches the camera after a few frames.
    Dynamic,
    StopAndGo,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::General,
        Scenario::Straight,
        Scenario::Circle,
        Scenario::PureRotation,
        Scenario::Planar,
        Scenario::Dynamic,
        Scenario::StopAndGo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::General => "general",
            Scenario::Straight => "straight",
            Scenario::Circle => "circle",
            Scenario::PureRotation => "pure-rotation",
            Scenario::Planar => "planar",
            Scenario::Dynamic => "dynamic",
            Scenario::StopAndGo => "stop-and-go",
        }
    }

    pub fn scene_kind(&self) -> SceneKind {
        match self {
            Scenario::Planar => SceneKind::Plane,
            _ => SceneKind::Mixed,
        }
    }

    /// Path family and jitter of the preset.
    pub fn path(&self) -> (TrajectoryKind, Jitter) {
        let none = Jitter::default();
        match self {
            Scenario::General => (
                TrajectoryKind::Circle {
                    radius: 25.0,
                    turn: 0.04,
                },
                Jitter {
                    rotation: 0.003,
                    translation: 0.05,
                },
            ),
            Scenario::Straight => (
                TrajectoryKind::Straight {
                    step: Vector3::new(0.1, 0.0, 1.0),
                },
                none,
            ),
            Scenario::Circle => (
                TrajectoryKind::Circle {
                    radius: 40.0,
                    turn: std::f64::consts::TAU / 250.0,
                },
                none,
            ),
            Scenario::PureRotation => (
                TrajectoryKind::PureRotation {
                    step: Vector3::new(0.004, 0.02, 0.002),
                },
                Jitter {
                    rotation: 0.002,
                    translation: 0.0,
                },
            ),
            Scenario::Planar => (
                TrajectoryKind::Straight {
                    step: Vector3::new(0.25, 0.05, 0.1),
                },
                Jitter {
                    rotation: 0.003,
                    translation: 0.0,
                },
            ),
            Scenario::Dynamic => (
                TrajectoryKind::Straight {
                    step: Vector3::new(0.0, 0.0, 1.0),
                },
                none,
            ),
            Scenario::StopAndGo => (
                TrajectoryKind::StopAndGo {
                    step: Vector3::new(0.0, 0.0, 1.0),
                    go: 5,
                    stop: 2,
                },
                none,
            ),
        }
    }

    /// Scene settings of the preset for a path of `frames` frames.
    pub fn scene_config(&self, frames: usize, seed: u64) -> SceneConfig {
        let mut cfg = SceneConfig::new(self.scene_kind());
        cfg.seed = seed;
        cfg.count = 60 + (frames.min(250) as f64 * 0.8) as usize;
        if *self == Scenario::Dynamic {
            cfg.dynamic_fraction = 0.3;
            cfg.dynamic_motion = RigidTransform::from_translation(Vector3::new(0.0, 0.0, -0.5));
        }
        cfg
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidParameter(format!("unknown scenario '{s}', expected one of {}", names.join(", ")))
            })
    }
}

/// Builds a preset: path, then a scene placed along it. Noise-free.
pub fn scenario(kind: Scenario, frames: usize, seed: u64) -> Result<SimulatedSequence> {
    let (path, jitter) = kind.path();
    let poses = generate_trajectory(&path, frames, &jitter, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let scene = Scene::generate(&kind.scene_config(frames, seed), &poses)?;
    SimulatedSequence::new(scene, poses, None)
}
