use thiserror::Error;

/// Errors produced across the odometry engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate essential matrix: translation has zero norm")]
    DegenerateEssential,
    #[error("invalid essential matrix: {0}")]
    InvalidEssential(&'static str),
    #[error("insufficient matches: need at least {needed}, got {got}")]
    InsufficientMatches { needed: usize, got: usize },
    #[error("no consensus: best hypothesis has {inliers} inliers, need {needed}")]
    NoConsensus { inliers: usize, needed: usize },
    #[error("degenerate triangulation: relative pose has zero baseline")]
    DegenerateTriangulation,
    #[error("point lands behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("raster shape mismatch: {0}")]
    Shape(String),
    #[error("scale alignment failed: no usable points")]
    AlignmentFailed,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("scene renders empty: nothing in front of the camera")]
    EmptyRender,
    #[error("raster format: {0}")]
    Format(String),
    #[error("raster length: expected {expected} payload bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
