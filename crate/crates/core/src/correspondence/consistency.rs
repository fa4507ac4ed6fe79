use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Pixel;
use crate::raster::FlowField;

/// Per-pixel forward–backward inconsistency. Pixels whose forward target
/// leaves the image are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl ConsistencyMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Valid inconsistencies in row-major order.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.valid).filter_map(|(v, ok)| ok.then_some(*v))
    }
}

/// `‖F_fwd[x] + F_bwd[x + F_fwd[x]]‖₂` at every pixel, with the backward flow
/// sampled bilinearly.
pub fn flow_consistency(fwd: &FlowField, bwd: &FlowField) -> Result<ConsistencyMap> {
    if !fwd.same_shape(bwd) {
        return Err(Error::Shape(format!(
            "forward flow is {}x{}, backward flow is {}x{}",
            fwd.width(),
            fwd.height(),
            bwd.width(),
            bwd.height()
        )));
    }
    let (w, h) = (fwd.width(), fwd.height());
    let (values, valid): (Vec<f64>, Vec<bool>) = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let f = fwd.get(x, y);
            let target = Pixel::new(x as f64 + f.x, y as f64 + f.y);
            match bwd.sample_bilinear(&target) {
                Some(b) => ((f + b).norm(), true),
                None => (0.0, false),
            }
        })
        .unzip();
    Ok(ConsistencyMap {
        width: w,
        height: h,
        values,
        valid,
    })
}
