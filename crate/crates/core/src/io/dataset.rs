//! Sequences on disk.
//!
//! Two equivalent descriptions are accepted. A directory triple holds one
//! depth raster per frame and one raster per consecutive pair in each flow
//! directory, all matched by sorted file name: flow file `m` of the forward
//! directory maps frame `m` to `m + 1`, the backward one maps `m + 1` to `m`.
//! A JSON manifest lists the same files explicitly, with paths relative to the
//! manifest. Frames are decoded on demand.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::raster::{read_depth, read_flow, write_depth, write_flow};
use super::text::{write_intrinsics, write_poses};
use crate::error::{Error, Result};
use crate::geometry::Intrinsics;
use crate::pipeline::FrameInput;
use crate::simulator::SimulatedSequence;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: usize,
    pub height: usize,
}

/// Files of one frame. Frame 0 has no flows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub depth: String,
    #[serde(default)]
    pub flow_fwd: Option<String>,
    #[serde(default)]
    pub flow_bwd: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub sequence_id: String,
    pub frame_count: usize,
    pub image_size: ImageSize,
    pub intrinsics: Intrinsics,
    pub frames: Vec<ManifestFrame>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.frames.len() != self.frame_count {
            return Err(Error::Format(format!(
                "manifest lists {} frames but frame_count is {}",
                self.frames.len(),
                self.frame_count
            )));
        }
        let k = &self.intrinsics;
        Intrinsics::new(k.fx, k.fy, k.cx, k.cy)?;
        for (i, f) in self.frames.iter().enumerate().skip(1) {
            if f.flow_fwd.is_none() || f.flow_bwd.is_none() {
                return Err(Error::Format(format!("manifest frame {i} lacks a flow path")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(format!("manifest: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct FramePaths {
    depth: PathBuf,
    flows: Option<(PathBuf, PathBuf)>,
}

/// A sequence of raster files with shared intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    intrinsics: Intrinsics,
    size: Option<ImageSize>,
    frames: Vec<FramePaths>,
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

impl Dataset {
    pub fn from_dirs(depth_dir: &Path, fwd_dir: &Path, bwd_dir: &Path, intrinsics: Intrinsics) -> Result<Self> {
        let depth = sorted_files(depth_dir)?;
        let fwd = sorted_files(fwd_dir)?;
        let bwd = sorted_files(bwd_dir)?;
        if depth.len() < 2 {
            return Err(Error::Empty("a sequence needs at least two depth rasters"));
        }
        for (name, flows) in [("forward", &fwd), ("backward", &bwd)] {
            if flows.len() != depth.len() - 1 {
                return Err(Error::Format(format!(
                    "{} depth rasters need {} {name} flows, found {}",
                    depth.len(),
                    depth.len() - 1,
                    flows.len()
                )));
            }
        }
        let frames = depth
            .into_iter()
            .enumerate()
            .map(|(i, d)| FramePaths {
                depth: d,
                flows: (i > 0).then(|| (fwd[i - 1].clone(), bwd[i - 1].clone())),
            })
            .collect();
        Ok(Self {
            intrinsics,
            size: None,
            frames,
        })
    }

    pub fn from_manifest(path: &Path) -> Result<Self> {
        let manifest = Manifest::from_json(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let frames = manifest
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| FramePaths {
                depth: base.join(&f.depth),
                flows: match (i, &f.flow_fwd, &f.flow_bwd) {
                    (0, _, _) => None,
                    (_, Some(a), Some(b)) => Some((base.join(a), base.join(b))),
                    _ => unreachable!("validated manifest"),
                },
            })
            .collect();
        Ok(Self {
            intrinsics: manifest.intrinsics,
            size: Some(manifest.image_size),
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    /// Decodes frame `k`. Rasters must agree in shape with each other and with
    /// the manifest size when one was given.
    pub fn frame(&self, k: usize) -> Result<FrameInput> {
        let paths = self
            .frames
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("frame {k} out of range")))?;
        let depth = read_depth(&paths.depth)?;
        let (flow_fwd, flow_bwd) = match &paths.flows {
            Some((f, b)) => (Some(read_flow(f)?), Some(read_flow(b)?)),
            None => (None, None),
        };
        let (w, h) = (depth.width(), depth.height());
        if let Some(size) = self.size {
            if (size.width, size.height) != (w, h) {
                return Err(Error::Shape(format!(
                    "frame {k}: depth is {w}x{h}, manifest says {}x{}",
                    size.width, size.height
                )));
            }
        }
        for flow in flow_fwd.iter().chain(flow_bwd.iter()) {
            if (flow.width(), flow.height()) != (w, h) {
                return Err(Error::Shape(format!(
                    "frame {k}: flow is {}x{}, depth is {w}x{h}",
                    flow.width(),
                    flow.height()
                )));
            }
        }
        Ok(FrameInput {
            index: k,
            depth,
            flow_fwd,
            flow_bwd,
            intrinsics: self.intrinsics,
        })
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<FrameInput>> + '_ {
        (0..self.len()).map(|k| self.frame(k))
    }
}

/// Renders `seq` into `dir`: `depth/`, `flow_fwd/`, `flow_bwd/`,
/// `intrinsics.txt`, `gt_poses.txt` and a manifest.
pub fn write_dataset(dir: &Path, seq: &SimulatedSequence, sequence_id: &str) -> Result<Manifest> {
    for sub in ["depth", "flow_fwd", "flow_bwd"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let mut frames = Vec::with_capacity(seq.len());
    let mut size = None;
    for k in 0..seq.len() {
        let input = seq.frame(k)?;
        size.get_or_insert(ImageSize {
            width: input.depth.width(),
            height: input.depth.height(),
        });
        let depth = format!("depth/{k:06}.dfvr");
        write_depth(&input.depth, dir.join(&depth))?;
        let mut frame = ManifestFrame {
            depth,
            flow_fwd: None,
            flow_bwd: None,
        };
        if let (Some(f), Some(b)) = (&input.flow_fwd, &input.flow_bwd) {
            let (fp, bp) = (format!("flow_fwd/{:06}.dfvr", k - 1), format!("flow_bwd/{:06}.dfvr", k - 1));
            write_flow(f, dir.join(&fp))?;
            write_flow(b, dir.join(&bp))?;
            frame.flow_fwd = Some(fp);
            frame.flow_bwd = Some(bp);
        }
        frames.push(frame);
    }
    write_intrinsics(seq.scene().intrinsics(), dir.join("intrinsics.txt"))?;
    write_poses(&seq.ground_truth(), dir.join("gt_poses.txt"))?;
    let manifest = Manifest {
        sequence_id: sequence_id.to_string(),
        frame_count: seq.len(),
        image_size: size.expect("sequences have at least two frames"),
        intrinsics: *seq.scene().intrinsics(),
        frames,
    };
    fs::write(dir.join(MANIFEST_FILE), manifest.to_json()?)?;
    Ok(manifest)
}
