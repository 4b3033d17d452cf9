//! Flat-array entry points for foreign callers. Boxes travel as contiguous
//! row-major `N × 5` matrices of `(cx, cy, w, h, theta_deg)` and are
//! canonicalized on the way in.

use alloc::vec::Vec;

use crate::encoding::{decode, encode, RegressionTarget};
use crate::geometry::{skew_iou, RotatedBox};
use crate::nms::{rnms_indices, Detection, RnmsConfig};
use crate::{Error, Result};

pub const ROW: usize = 5;

fn rows(flat: &[f64]) -> Result<impl Iterator<Item = [f64; ROW]> + '_> {
    if !flat.len().is_multiple_of(ROW) {
        return Err(Error::InvalidConfig("batch length must be a multiple of 5"));
    }
    Ok(flat.chunks_exact(ROW).map(|c| [c[0], c[1], c[2], c[3], c[4]]))
}

/// Parses and canonicalizes every row.
pub fn boxes_from_rows(flat: &[f64]) -> Result<Vec<RotatedBox>> {
    rows(flat)?.map(|r| RotatedBox::new(r[0], r[1], r[2], r[3], r[4]).canonicalize()).collect()
}

pub fn boxes_to_rows(boxes: &[RotatedBox]) -> Vec<f64> {
    boxes.iter().flat_map(|b| [b.cx, b.cy, b.w, b.h, b.theta]).collect()
}

/// `N × M` skew IoU matrix, row-major.
pub fn batch_skew_iou(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let a = boxes_from_rows(a)?;
    let b = boxes_from_rows(b)?;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            out.push(skew_iou(x, y)?);
        }
    }
    Ok(out)
}

/// Indices of the rows kept by R-NMS, in the core's output order.
pub fn batch_rnms(boxes: &[f64], scores: &[f64], cfg: &RnmsConfig) -> Result<Vec<usize>> {
    let boxes = boxes_from_rows(boxes)?;
    if boxes.len() != scores.len() {
        return Err(Error::InvalidConfig("one score per box required"));
    }
    let dets: Vec<Detection> = boxes.into_iter().zip(scores).map(|(b, &s)| Detection::new(b, s, 0)).collect();
    rnms_indices(&dets, cfg)
}

/// Row-wise [`encode`]; the result is `N × 5` of `(tx, ty, tw, th, ttheta)`.
pub fn batch_encode(gts: &[f64], anchors: &[f64]) -> Result<Vec<f64>> {
    let g = boxes_from_rows(gts)?;
    let a = boxes_from_rows(anchors)?;
    if g.len() != a.len() {
        return Err(Error::InvalidConfig("one anchor per ground truth required"));
    }
    let mut out = Vec::with_capacity(g.len() * ROW);
    for (g, a) in g.iter().zip(&a) {
        out.extend(encode(g, a)?.to_array());
    }
    Ok(out)
}

/// Row-wise [`decode`]; `targets` is `N × 5`.
pub fn batch_decode(anchors: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    let a = boxes_from_rows(anchors)?;
    let t: Vec<[f64; ROW]> = rows(targets)?.collect();
    if a.len() != t.len() {
        return Err(Error::InvalidConfig("one target per anchor required"));
    }
    let decoded: Result<Vec<RotatedBox>> =
        a.iter().zip(&t).map(|(a, t)| decode(a, &RegressionTarget::from_array(*t))).collect();
    Ok(boxes_to_rows(&decoded?))
}
