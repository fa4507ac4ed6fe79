//! DFVR binary rasters.
//!
//! Layout: magic `DFVR`, version `u8 = 1`, dtype `u8 = 0` (float32), channel
//! count `u8` (1 = depth, 2 = flow), one reserved byte, height and width as
//! little-endian `u32`, then the row-major, channel-interleaved float32
//! little-endian payload. Invalid depth is stored as 0.

use std::fs;
use std::path::Path;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::raster::{DepthMap, FlowField};

pub const MAGIC: &[u8; 4] = b"DFVR";
pub const VERSION: u8 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: usize = 16;

/// A decoded raster of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Depth(DepthMap),
    Flow(FlowField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterHeader {
    pub channels: u8,
    pub height: u32,
    pub width: u32,
}

fn header_bytes(channels: u8, width: usize, height: usize) -> Result<Vec<u8>> {
    let w = u32::try_from(width).map_err(|_| Error::Format(format!("width {width} exceeds u32")))?;
    let h = u32::try_from(height).map_err(|_| Error::Format(format!("height {height} exceeds u32")))?;
    let mut out = Vec::with_capacity(HEADER_LEN + width * height * channels as usize * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, DTYPE_F32, channels, 0]);
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&w.to_le_bytes());
    Ok(out)
}

fn push_f32(out: &mut Vec<u8>, v: f64) -> Result<()> {
    let f = v as f32;
    if !f.is_finite() {
        return Err(Error::Format(format!("value {v} is not representable as a finite float32")));
    }
    out.extend_from_slice(&f.to_le_bytes());
    Ok(())
}

pub fn encode_depth(depth: &DepthMap) -> Result<Vec<u8>> {
    let mut out = header_bytes(1, depth.width(), depth.height())?;
    for (d, ok) in depth.data().iter().zip(depth.valid_mask()) {
        push_f32(&mut out, if *ok { *d } else { 0.0 })?;
    }
    Ok(out)
}

pub fn encode_flow(flow: &FlowField) -> Result<Vec<u8>> {
    let mut out = header_bytes(2, flow.width(), flow.height())?;
    for v in flow.data() {
        push_f32(&mut out, v.x)?;
        push_f32(&mut out, v.y)?;
    }
    Ok(out)
}

pub fn parse_header(bytes: &[u8]) -> Result<RasterHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Length {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4]))));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", bytes[4])));
    }
    if bytes[5] != DTYPE_F32 {
        return Err(Error::Format(format!("unsupported dtype {}", bytes[5])));
    }
    let channels = bytes[6];
    if channels != 1 && channels != 2 {
        return Err(Error::Format(format!("unsupported channel count {channels}")));
    }
    let height = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let width = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
    Ok(RasterHeader {
        channels,
        height,
        width,
    })
}

pub fn decode(bytes: &[u8]) -> Result<Raster> {
    let header = parse_header(bytes)?;
    let (w, h) = (header.width as usize, header.height as usize);
    let expected = w * h * header.channels as usize * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Length {
            expected,
            found: payload.len(),
        });
    }
    let mut values = Vec::with_capacity(expected / 4);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(Error::Format(format!("non-finite value at element {}", values.len())));
        }
        values.push(v as f64);
    }
    match header.channels {
        1 => Ok(Raster::Depth(DepthMap::new(w, h, values)?)),
        _ => Ok(Raster::Flow(FlowField::new(
            w,
            h,
            values.chunks_exact(2).map(|c| Vector2::new(c[0], c[1])).collect(),
        )?)),
    }
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    decode(&fs::read(path)?)
}

pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    match read_raster(path)? {
        Raster::Depth(d) => Ok(d),
        Raster::Flow(_) => Err(Error::Format(format!("{} holds flow, expected depth", path.display()))),
    }
}

pub fn read_flow(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    match read_raster(path)? {
        Raster::Flow(f) => Ok(f),
        Raster::Depth(_) => Err(Error::Format(format!("{} holds depth, expected flow", path.display()))),
    }
}

pub fn write_depth(depth: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_depth(depth)?)?;
    Ok(())
}

pub fn write_flow(flow: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_flow(flow)?)?;
    Ok(())
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    match raster {
        Raster::Depth(d) => write_depth(d, path),
        Raster::Flow(f) => write_flow(f, path),
    }
}
