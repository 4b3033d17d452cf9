//! Deterministic feature-grid sampling: bilinear reads, axis-aligned and
//! rotated region pooling, and a geometric region mask.
//!
//! Sample coordinates passed to [`bilinear_sample`] are in grid space, where
//! cell `(r, c)` sits at `(x = c, y = r)`. The pooling operators take boxes
//! in image pixels; with level stride `s`, pixel `p` maps to grid space as
//! `p / s - 0.5`, i.e. cell `(r, c)` covers the pixel square centred on
//! `((c + 0.5) s, (r + 0.5) s)`. Reads outside the grid clamp to the border.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{HorizontalBox, Point, RotatedBox};
use crate::math;
use crate::{Error, Result};

/// Dense `(channel, row, col)` array.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidConfig("feature grid dimensions must be >= 1"));
        }
        if values.len() != channels * height * width {
            return Err(Error::InvalidConfig("value count does not match grid dimensions"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("feature values must be finite"));
        }
        Ok(FeatureGrid { channels, height, width, values })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Result<Self> {
        FeatureGrid::new(channels, height, width, vec![value; channels * height * width])
    }

    /// Builds a grid from `f(channel, row, col)`.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(channels * height * width);
        for ch in 0..channels {
            for r in 0..height {
                for c in 0..width {
                    values.push(f(ch, r, c));
                }
            }
        }
        FeatureGrid::new(channels, height, width, values)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.values[(channel * self.height + row) * self.width + col]
    }

    /// Mean over every value of one channel.
    pub fn channel_mean(&self, channel: usize) -> f64 {
        let n = self.height * self.width;
        let start = channel * n;
        self.values[start..start + n].iter().sum::<f64>() / n as f64
    }
}

/// Output shape and sub-sampling density for the pooling operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    pub out_h: usize,
    pub out_w: usize,
    /// Samples per bin along each axis; each bin averages `samples_per_bin²` reads.
    pub samples_per_bin: usize,
    /// Image pixels per feature cell.
    pub stride: f64,
}

impl AlignConfig {
    pub fn new(out_h: usize, out_w: usize) -> Self {
        AlignConfig { out_h, out_w, samples_per_bin: 2, stride: 1.0 }
    }

    pub fn with_samples(mut self, samples_per_bin: usize) -> Self {
        self.samples_per_bin = samples_per_bin;
        self
    }

    pub fn with_stride(mut self, stride: f64) -> Self {
        self.stride = stride;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.out_h == 0 || self.out_w == 0 || self.samples_per_bin == 0 {
            return Err(Error::InvalidConfig("output size and samples per bin must be >= 1"));
        }
        if !(self.stride.is_finite() && self.stride > 0.0) {
            return Err(Error::InvalidConfig("stride must be positive"));
        }
        Ok(())
    }
}

/// Bilinear interpolation between the four nearest cells, clamping to the
/// border. `(x, y)` are grid coordinates (column, row).
pub fn bilinear_sample(grid: &FeatureGrid, x: f64, y: f64, channel: usize) -> f64 {
    let x = x.clamp(0.0, (grid.width - 1) as f64);
    let y = y.clamp(0.0, (grid.height - 1) as f64);
    let x0 = math::floor(x) as usize;
    let y0 = math::floor(y) as usize;
    let x1 = (x0 + 1).min(grid.width - 1);
    let y1 = (y0 + 1).min(grid.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = grid.get(channel, y0, x0) * (1.0 - fx) + grid.get(channel, y0, x1) * fx;
    let bottom = grid.get(channel, y1, x0) * (1.0 - fx) + grid.get(channel, y1, x1) * fx;
    top * (1.0 - fy) + bottom * fy
}

#[inline]
fn pixel_to_grid(p: Point, stride: f64) -> Point {
    Point::new(p.x / stride - 0.5, p.y / stride - 0.5)
}

/// Shared pooling loop: `map(u, v)` takes normalized template coordinates in
/// `[0, 1]²` (u across columns, v down rows) to image pixels.
fn pool(grid: &FeatureGrid, cfg: &AlignConfig, map: impl Fn(f64, f64) -> Point) -> Result<FeatureGrid> {
    let s = cfg.samples_per_bin;
    let norm = 1.0 / (s * s) as f64;
    let mut points = Vec::with_capacity(cfg.out_h * cfg.out_w * s * s);
    for i in 0..cfg.out_h {
        for j in 0..cfg.out_w {
            for a in 0..s {
                for b in 0..s {
                    let v = (i as f64 + (a as f64 + 0.5) / s as f64) / cfg.out_h as f64;
                    let u = (j as f64 + (b as f64 + 0.5) / s as f64) / cfg.out_w as f64;
                    points.push(pixel_to_grid(map(u, v), cfg.stride));
                }
            }
        }
    }
    let per_bin = s * s;
    FeatureGrid::from_fn(grid.channels, cfg.out_h, cfg.out_w, |ch, i, j| {
        let start = (i * cfg.out_w + j) * per_bin;
        points[start..start + per_bin]
            .iter()
            .map(|p| bilinear_sample(grid, p.x, p.y, ch))
            .sum::<f64>()
            * norm
    })
}

/// Axis-aligned region pooling over `region` (image pixels).
pub fn roi_align(grid: &FeatureGrid, region: &HorizontalBox, cfg: &AlignConfig) -> Result<FeatureGrid> {
    cfg.validate()?;
    if region.validate().is_err() {
        return Err(Error::DegenerateGeometry("zero-area region"));
    }
    let (x0, y0, w, h) = (region.xmin, region.ymin, region.width(), region.height());
    pool(grid, cfg, |u, v| Point::new(x0 + u * w, y0 + v * h))
}

/// Rotated region pooling: the regular bin grid of a `w × h` template,
/// columns along the box's `w` axis and rows along its `h` axis, mapped
/// through the box's rotation and translation.
pub fn rroi_align(grid: &FeatureGrid, region: &RotatedBox, cfg: &AlignConfig) -> Result<FeatureGrid> {
    cfg.validate()?;
    if region.validate().is_err() {
        return Err(Error::DegenerateGeometry("zero-area region"));
    }
    let (ax_u, ax_v) = region.axes();
    let c = region.center();
    let (w, h) = (region.w, region.h);
    pool(grid, cfg, move |u, v| c + ax_u * ((u - 0.5) * w) + ax_v * ((v - 0.5) * h))
}

/// Binary single-channel mask over `window`: cell `(r, c)` is 1 when the
/// window's bin centre lies inside `inner`.
pub fn geometric_mask(
    window: &HorizontalBox,
    inner: &RotatedBox,
    out_h: usize,
    out_w: usize,
) -> Result<FeatureGrid> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidConfig("mask size must be >= 1"));
    }
    if window.validate().is_err() {
        return Err(Error::DegenerateGeometry("zero-area window"));
    }
    inner.validate()?;
    let bw = window.width() / out_w as f64;
    let bh = window.height() / out_h as f64;
    FeatureGrid::from_fn(1, out_h, out_w, |_, r, c| {
        let p = Point::new(
            window.xmin + (c as f64 + 0.5) * bw,
            window.ymin + (r as f64 + 0.5) * bh,
        );
        if inner.contains(p) {
            1.0
        } else {
            0.0
        }
    })
}
