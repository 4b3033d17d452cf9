//! Oriented-bounding-box detection core.
//!
//! Everything in this crate is pure arithmetic over immutable inputs and
//! builds without `std` (only `alloc` is required). File formats, the CLI
//! and anything touching the filesystem live in the `skewdet` crate.
//!
//! Conventions shared by every module:
//!
//! * Image coordinates, `y` grows downward.
//! * A [`RotatedBox`] stores its angle in degrees; the canonical range is
//!   `[-90, 0)`. Corners are `center + R(theta) * (±w/2, ±h/2)` with
//!   `R(theta) = [[cos, -sin], [sin, cos]]`.
//! * Side `i` of a box is the edge from corner `i` to corner `i + 1 mod 4`
//!   of [`RotatedBox::corners`].

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod anchors;
pub mod batch;
pub mod encoding;
mod error;
pub mod evaluation;
pub mod geometry;
pub mod loss;
mod math;
pub mod nms;
pub mod sampling;
pub mod tiling;

pub use error::{Error, Result};
pub use geometry::{
    bounding_hbox, canonicalize, convex_intersection, horizontal_iou, iou_rasterized,
    min_area_rect, polygon_area, skew_iou, to_corners, HorizontalBox, Point, Polygon, RotatedBox,
};
pub use encoding::{HorizontalTarget, ProwSide, RegressionTarget};
pub use nms::{Detection, RnmsConfig};
