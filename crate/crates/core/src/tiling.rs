//! Large-scene tiling: overlapping tile plans, center-based assignment of
//! boxes to tiles and the merge of per-tile detections back into the scene.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geometry::{HorizontalBox, Point, RotatedBox};
use crate::math;
use crate::nms::{rank_order, rnms, Detection, RnmsConfig};
use crate::{Error, Result};

pub const DEFAULT_TILE: u32 = 1000;
pub const DEFAULT_OVERLAP: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct TilePlan {
    pub scene_w: u32,
    pub scene_h: u32,
    pub tile: u32,
    pub overlap: f64,
    pub stride: u32,
    /// Tile origins along x, ascending.
    pub xs: Vec<u32>,
    /// Tile origins along y, ascending.
    pub ys: Vec<u32>,
}

/// Origins along one axis: multiples of `stride`, with the last one clamped
/// so the tile ends at the scene edge.
pub fn axis_origins(dim: u32, tile: u32, stride: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut o = 0u32;
    loop {
        out.push(o);
        if o.saturating_add(tile) >= dim {
            break;
        }
        o += stride;
        if o + tile > dim {
            o = dim - tile;
        }
        if out.last() == Some(&o) {
            break;
        }
    }
    out
}

pub fn plan_tiles(scene_w: u32, scene_h: u32, tile: u32, overlap: f64) -> Result<TilePlan> {
    if scene_w == 0 || scene_h == 0 || tile == 0 {
        return Err(Error::InvalidConfig("scene and tile sizes must be positive"));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidConfig("overlap must lie in [0, 1)"));
    }
    let stride = math::round(tile as f64 * (1.0 - overlap)) as u32;
    if stride == 0 {
        return Err(Error::InvalidConfig("overlap leaves a zero stride"));
    }
    Ok(TilePlan {
        scene_w,
        scene_h,
        tile,
        overlap,
        stride,
        xs: axis_origins(scene_w, tile, stride),
        ys: axis_origins(scene_h, tile, stride),
    })
}

/// Index of the origin whose ownership interval holds `p`. Neighbouring
/// tiles split their overlap at its midpoint; a point exactly on the split
/// belongs to the lower tile.
fn owner_on_axis(origins: &[u32], tile: u32, p: f64) -> usize {
    for i in 0..origins.len() - 1 {
        let split = (origins[i + 1] as f64 + origins[i] as f64 + tile as f64) / 2.0;
        if p <= split {
            return i;
        }
    }
    origins.len() - 1
}

impl TilePlan {
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Origins in row-major order (y outer, x inner); a tile's index is its
    /// position here.
    pub fn origins(&self) -> Vec<(u32, u32)> {
        self.ys.iter().flat_map(|&y| self.xs.iter().map(move |&x| (x, y))).collect()
    }

    pub fn origin(&self, index: usize) -> Option<(u32, u32)> {
        (index < self.len()).then(|| (self.xs[index % self.xs.len()], self.ys[index / self.xs.len()]))
    }

    pub fn tile_rect(&self, index: usize) -> Option<HorizontalBox> {
        let (x, y) = self.origin(index)?;
        let t = self.tile as f64;
        Some(HorizontalBox { xmin: x as f64, ymin: y as f64, xmax: x as f64 + t, ymax: y as f64 + t })
    }

    /// The single tile responsible for a box centered at `(cx, cy)`, or
    /// `None` when the center is outside that tile (and so outside the
    /// scene coverage).
    pub fn owner(&self, cx: f64, cy: f64) -> Option<usize> {
        if !(cx.is_finite() && cy.is_finite()) {
            return None;
        }
        let xi = owner_on_axis(&self.xs, self.tile, cx);
        let yi = owner_on_axis(&self.ys, self.tile, cy);
        let index = yi * self.xs.len() + xi;
        let rect = self.tile_rect(index)?;
        rect.contains(Point::new(cx, cy)).then_some(index)
    }
}

/// Boxes owned by tile `index`, as `(input index, tile-frame box)`. Boxes
/// that cross the tile edge are kept whole.
pub fn assign_to_tile(plan: &TilePlan, index: usize, boxes: &[RotatedBox]) -> Result<Vec<(usize, RotatedBox)>> {
    let (ox, oy) = plan.origin(index).ok_or(Error::OutOfRange("tile index"))?;
    Ok(boxes
        .iter()
        .enumerate()
        .filter(|(_, b)| plan.owner(b.cx, b.cy) == Some(index))
        .map(|(i, b)| (i, b.translated(-(ox as f64), -(oy as f64))))
        .collect())
}

/// [`assign_to_tile`] for every tile at once; entry `k` belongs to tile `k`.
pub fn partition(plan: &TilePlan, boxes: &[RotatedBox]) -> Vec<Vec<(usize, RotatedBox)>> {
    let mut out = alloc::vec![Vec::new(); plan.len()];
    for (i, b) in boxes.iter().enumerate() {
        if let Some(t) = plan.owner(b.cx, b.cy) {
            let (ox, oy) = plan.origin(t).unwrap_or((0, 0));
            out[t].push((i, b.translated(-(ox as f64), -(oy as f64))));
        }
    }
    out
}

/// Shifts tile-frame detections into the scene frame, runs R-NMS per class
/// over the whole scene and returns the survivors by descending score.
/// `per_tile[k]` holds the detections of tile `k`; every output detection
/// carries `scene_id`.
pub fn merge_tiles(plan: &TilePlan, per_tile: &[Vec<Detection>], cfg: &RnmsConfig, scene_id: &str) -> Result<Vec<Detection>> {
    if per_tile.len() > plan.len() {
        return Err(Error::OutOfRange("more detection groups than tiles"));
    }
    let mut by_class: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    for (k, dets) in per_tile.iter().enumerate() {
        let (ox, oy) = plan.origin(k).ok_or(Error::OutOfRange("tile index"))?;
        for d in dets {
            let mut g = d.clone();
            g.bbox = d.bbox.translated(ox as f64, oy as f64);
            g.image_id = scene_id.into();
            by_class.entry(d.class_id).or_default().push(g);
        }
    }
    let mut out = Vec::new();
    for dets in by_class.values() {
        out.extend(rnms(dets, cfg)?);
    }
    out.sort_by(|a, b| rank_order(a, b).then(a.class_id.cmp(&b.class_id)));
    Ok(out)
}
