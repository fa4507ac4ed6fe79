//! Monocular visual odometry driven by dense depth and bidirectional optical
//! flow predictions.
//!
//! The crate covers the full chain from rasters to trajectories:
//! [`correspondence`] turns flows into sparse matches, [`geometry`] holds the
//! two-view and 3D–2D solvers, [`scale`] recovers the translation scale from
//! predicted depth, [`model_selection`] picks a tracker per frame and
//! [`pipeline`] chains it all. [`simulator`] renders exact synthetic inputs,
//! [`io`] reads and writes files and [`eval`] scores trajectories.

pub mod correspondence;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod model_selection;
pub mod pipeline;
pub mod raster;
pub mod scale;
pub mod simulator;
pub mod trajectory;

pub use correspondence::{Match, MatchSet};
pub use error::{Error, Result};
pub use geometry::{EssentialMatrix, Homography, Intrinsics, Pixel, PointCloudSparse, RansacParams, RigidTransform};
pub use pipeline::{run_sequence, FrameInput, PipelineConfig};
pub use raster::{DepthMap, FlowField};
pub use trajectory::Trajectory;
