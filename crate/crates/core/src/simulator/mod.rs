//! Synthetic ground truth: camera paths, ray-cast scenes with exact depth and
//! bidirectional flow, seeded corruption and ready-made scenarios.

mod noise;
mod scenarios;
mod scene;
mod trajectory;

pub use noise::{corrupt, NoiseConfig};
pub use scenarios::{scenario, Scenario, SimulatedSequence};
pub use scene::{Plane, RenderedPair, Scene, SceneConfig, SceneKind, Sphere, GROUND_HEIGHT};
pub use trajectory::{generate_trajectory, Jitter, TrajectoryKind};
