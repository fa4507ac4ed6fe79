//! Dense per-pixel rasters: optical flow and depth.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::Pixel;

/// Dense 2-channel displacement field in pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<Vector2<f64>>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, data: Vec<Vector2<f64>>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "flow is not finite at pixel ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn constant(width: usize, height: usize, value: Vector2<f64>) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Vector2<f64>) -> Result<Self> {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[Vector2<f64>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Vector2<f64>] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Vector2<f64> {
        self.data[y * self.width + x]
    }

    pub fn same_shape<T: RasterShape>(&self, other: &T) -> bool {
        self.width == other.width() && self.height == other.height()
    }

    /// Bilinear interpolation of the four surrounding grid vectors. `None` when
    /// `p` lies outside `[0, W−1] × [0, H−1]`.
    pub fn sample_bilinear(&self, p: &Pixel) -> Option<Vector2<f64>> {
        let (x0, y0, x1, y1, ax, ay) = bilinear_cell(self.width, self.height, p)?;
        let w = self.width;
        let a = self.data[y0 * w + x0];
        let b = self.data[y0 * w + x1];
        let c = self.data[y1 * w + x0];
        let d = self.data[y1 * w + x1];
        Some((a * (1.0 - ax) + b * ax) * (1.0 - ay) + (c * (1.0 - ax) + d * ax) * ay)
    }

    /// Mean Euclidean magnitude over all pixels.
    pub fn mean_magnitude(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).sum::<f64>() / self.data.len() as f64
    }
}

/// Dense depth in scene units with a validity mask. Valid depths are finite and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    /// Builds a depth map; non-finite or nonpositive entries are marked invalid.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        let valid = data.iter().map(|d| d.is_finite() && *d > 0.0).collect();
        Ok(Self {
            width,
            height,
            data,
            valid,
        })
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Result<Self> {
        Self::new(width, height, vec![depth; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw depths; entries at invalid pixels carry no meaning.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.data[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Applies `f` to every valid depth, re-validating the result.
    pub fn map_valid(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&self.valid)
            .enumerate()
            .map(|(i, (d, v))| if *v { f(i, *d) } else { *d })
            .collect();
        let valid = data
            .iter()
            .zip(&self.valid)
            .map(|(d, v)| *v && d.is_finite() && *d > 0.0)
            .collect();
        Self {
            width: self.width,
            height: self.height,
            data,
            valid,
        }
    }

    /// Bilinear depth at a continuous pixel. Every corner carrying nonzero
    /// weight must be valid.
    pub fn sample_bilinear(&self, p: &Pixel) -> Option<f64> {
        let (x0, y0, x1, y1, ax, ay) = bilinear_cell(self.width, self.height, p)?;
        let w = self.width;
        let corners = [
            (y0 * w + x0, (1.0 - ax) * (1.0 - ay)),
            (y0 * w + x1, ax * (1.0 - ay)),
            (y1 * w + x0, (1.0 - ax) * ay),
            (y1 * w + x1, ax * ay),
        ];
        let mut acc = 0.0;
        for (i, wt) in corners {
            if wt == 0.0 {
                continue;
            }
            if !self.valid[i] {
                return None;
            }
            acc += wt * self.data[i];
        }
        (acc > 0.0).then_some(acc)
    }
}

/// Anything with raster dimensions.
pub trait RasterShape {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
}

impl RasterShape for FlowField {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

impl RasterShape for DepthMap {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!("raster dimensions must be positive, got {width}x{height}")));
    }
    if len != width * height {
        return Err(Error::Shape(format!(
            "{width}x{height} raster needs {} values, got {len}",
            width * height
        )));
    }
    Ok(())
}

/// Grid cell and fractional offsets for bilinear lookup, clamped so that the
/// last row/column is addressable exactly.
#[inline]
fn bilinear_cell(width: usize, height: usize, p: &Pixel) -> Option<(usize, usize, usize, usize, f64, f64)> {
    let (maxx, maxy) = ((width - 1) as f64, (height - 1) as f64);
    if !(p.x >= 0.0 && p.y >= 0.0 && p.x <= maxx && p.y <= maxy) {
        return None;
    }
    let x0 = p.x.floor() as usize;
    let y0 = p.y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    Some((x0, y0, x1, y1, p.x - x0 as f64, p.y - y0 as f64))
}
