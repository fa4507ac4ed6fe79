//! File formats: DFVR rasters, KITTI pose text, intrinsics text, key=value
//! configuration and sequence layouts.

pub mod config;
pub mod dataset;
pub mod raster;
pub mod text;

pub use config::{format_config, parse_config, read_config};
pub use dataset::{write_dataset, Dataset, ImageSize, Manifest, ManifestFrame, MANIFEST_FILE};
pub use raster::{
    decode, encode_depth, encode_flow, read_depth, read_flow, read_raster, write_depth, write_flow, write_raster,
    Raster,
};
pub use text::{
    format_intrinsics, format_poses, parse_intrinsics, parse_poses, read_intrinsics, read_poses, write_intrinsics,
    write_poses,
};
