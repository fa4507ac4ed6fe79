//! Text formats: KITTI pose files and intrinsics files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, RigidTransform};
use crate::trajectory::Trajectory;

/// Rotation blocks further than this from orthonormal are reported.
const ORTHONORMAL_WARN: f64 = 1e-6;

fn parse_numbers(line: &str, lineno: usize, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("'{tok}': {e}"),
            })
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {expected} numbers, found {}", values.len()),
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse {
            line: lineno,
            message: format!("non-finite value {v}"),
        });
    }
    Ok(values)
}

/// One pose per non-empty line: the row-major top 3×4 block of the
/// camera-to-world matrix. Frame ids are line order.
pub fn parse_poses(text: &str) -> Result<Trajectory> {
    let mut poses = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = parse_numbers(line, i + 1, 12)?;
        let pose = RigidTransform::new(
            Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]),
            Vector3::new(v[3], v[7], v[11]),
        );
        let err = pose.orthonormality_error();
        if err > ORTHONORMAL_WARN {
            log::warn!("line {}: rotation deviates from orthonormal by {err:.3e}", i + 1);
        }
        poses.push(pose);
    }
    Ok(Trajectory::from_poses(poses))
}

/// Writes with 17 significant digits so float64 values survive a round trip.
pub fn format_poses(trajectory: &Trajectory) -> String {
    let mut out = String::new();
    for pose in trajectory.poses() {
        let (r, t) = (&pose.rotation, &pose.translation);
        let row = |i: usize| [r[(i, 0)], r[(i, 1)], r[(i, 2)], t[i]];
        let vals: Vec<String> = (0..3).flat_map(row).map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    out
}

pub fn read_poses(path: impl AsRef<Path>) -> Result<Trajectory> {
    parse_poses(&fs::read_to_string(path)?)
}

pub fn write_poses(trajectory: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_poses(trajectory))?;
    Ok(())
}

/// `fx fy cx cy` on the first non-empty line.
pub fn parse_intrinsics(text: &str) -> Result<Intrinsics> {
    let (i, line) = text
        .lines()
        .enumerate()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or(Error::Parse {
            line: 1,
            message: "empty intrinsics file".into(),
        })?;
    let v = parse_numbers(line, i + 1, 4)?;
    Intrinsics::new(v[0], v[1], v[2], v[3])
}

pub fn format_intrinsics(k: &Intrinsics) -> String {
    format!("{} {} {} {}\n", k.fx, k.fy, k.cx, k.cy)
}

pub fn read_intrinsics(path: impl AsRef<Path>) -> Result<Intrinsics> {
    parse_intrinsics(&fs::read_to_string(path)?)
}

pub fn write_intrinsics(k: &Intrinsics, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_intrinsics(k))?;
    Ok(())
}
