//! Rotational NMS with the IoU-band angle rule, plus horizontal NMS and
//! Gaussian Soft-NMS baselines.
//!
//! All three expect the detections of a single (image, class) group; the
//! caller does the grouping.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::encoding::ProwSide;
use crate::geometry::{bounding_hbox, horizontal_iou, skew_iou, RotatedBox};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: RotatedBox,
    pub score: f64,
    pub class_id: u32,
    pub prow: Option<ProwSide>,
    pub image_id: String,
}

impl Detection {
    pub fn new(bbox: RotatedBox, score: f64, class_id: u32) -> Self {
        Detection { bbox, score, class_id, prow: None, image_id: String::new() }
    }

    pub fn with_image(mut self, image_id: impl Into<String>) -> Self {
        self.image_id = image_id.into();
        self
    }

    pub fn with_prow(mut self, side: ProwSide) -> Self {
        self.prow = Some(side);
        self
    }
}

/// Descending score; equal scores fall back to ascending box order.
pub fn rank_order(a: &Detection, b: &Detection) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.bbox.lexicographic_cmp(&b.bbox))
}

/// Which side of the angle threshold is discarded inside the IoU band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandRule {
    /// Suppress band overlaps whose angle difference exceeds the threshold.
    #[default]
    DiscardLargeAngle,
    /// Suppress band overlaps whose angle difference is within the threshold.
    DiscardSmallAngle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnmsConfig {
    /// Overlaps at or above this are always suppressed.
    pub iou_hi: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    /// Degrees, compared strictly.
    pub angle_thresh_deg: f64,
    pub band_rule: BandRule,
}

impl Default for RnmsConfig {
    fn default() -> Self {
        RnmsConfig {
            iou_hi: 0.7,
            band_lo: 0.3,
            band_hi: 0.7,
            angle_thresh_deg: 15.0,
            band_rule: BandRule::DiscardLargeAngle,
        }
    }
}

impl RnmsConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.iou_hi) && unit(self.band_lo) && unit(self.band_hi) && self.band_lo <= self.band_hi) {
            return Err(Error::InvalidConfig("IoU thresholds must lie in [0, 1] with band_lo <= band_hi"));
        }
        if !(self.angle_thresh_deg > 0.0 && self.angle_thresh_deg < 90.0) {
            return Err(Error::InvalidConfig("angle threshold must lie in (0, 90) degrees"));
        }
        Ok(())
    }

    /// Whether a lower-ranked box with this overlap against a kept box is
    /// suppressed.
    pub fn suppresses(&self, iou: f64, angle_diff_deg: f64) -> bool {
        if iou >= self.iou_hi {
            return true;
        }
        if iou >= self.band_lo && iou <= self.band_hi {
            return match self.band_rule {
                BandRule::DiscardLargeAngle => angle_diff_deg > self.angle_thresh_deg,
                BandRule::DiscardSmallAngle => angle_diff_deg <= self.angle_thresh_deg,
            };
        }
        false
    }
}

/// Angle difference in degrees with period 90, in `[0, 45]`.
pub fn angle_difference(a_deg: f64, b_deg: f64) -> f64 {
    let d = math::fmod((a_deg - b_deg).abs(), 90.0);
    d.min(90.0 - d)
}

fn sorted(dets: &[Detection]) -> Vec<Detection> {
    let mut v = dets.to_vec();
    v.sort_by(rank_order);
    v
}

/// Greedy suppression over rank order; returns input indices of the kept
/// detections. Exact duplicates keep their input order.
fn greedy<F>(dets: &[Detection], mut suppress: F) -> Result<Vec<usize>>
where
    F: FnMut(&Detection, &Detection) -> Result<bool>,
{
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| rank_order(&dets[a], &dets[b]));
    let mut kept: Vec<usize> = Vec::new();
    'outer: for i in order {
        for &k in &kept {
            if suppress(&dets[k], &dets[i])? {
                continue 'outer;
            }
        }
        kept.push(i);
    }
    Ok(kept)
}

/// Rotational NMS returning the input indices of the survivors in
/// descending score order.
pub fn rnms_indices(dets: &[Detection], cfg: &RnmsConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    greedy(dets, |kept, cand| {
        let iou = skew_iou(&kept.bbox, &cand.bbox)?;
        Ok(cfg.suppresses(iou, angle_difference(kept.bbox.theta, cand.bbox.theta)))
    })
}

/// Rotational NMS. Output is in descending score order.
pub fn rnms(dets: &[Detection], cfg: &RnmsConfig) -> Result<Vec<Detection>> {
    Ok(rnms_indices(dets, cfg)?.into_iter().map(|i| dets[i].clone()).collect())
}

/// Classic greedy NMS on the axis-aligned hulls; suppresses when the
/// horizontal IoU is strictly above `iou_thresh`.
pub fn hnms(dets: &[Detection], iou_thresh: f64) -> Result<Vec<Detection>> {
    if !(0.0..=1.0).contains(&iou_thresh) {
        return Err(Error::InvalidConfig("IoU threshold must lie in [0, 1]"));
    }
    let kept = greedy(dets, |kept, cand| {
        let iou = horizontal_iou(&bounding_hbox(&kept.bbox)?, &bounding_hbox(&cand.bbox)?)?;
        Ok(iou > iou_thresh)
    })?;
    Ok(kept.into_iter().map(|i| dets[i].clone()).collect())
}

/// Gaussian Soft-NMS on skew IoU: each pick decays the remaining scores by
/// `exp(-iou² / sigma)`; detections whose score drops below `score_thresh`
/// are dropped. Output is in pick order with the decayed scores.
pub fn soft_nms(dets: &[Detection], sigma: f64, score_thresh: f64) -> Result<Vec<Detection>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidConfig("sigma must be positive"));
    }
    let mut pool = sorted(dets);
    pool.retain(|d| d.score >= score_thresh);
    let mut out = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let best = (0..pool.len())
            .min_by(|&i, &j| rank_order(&pool[i], &pool[j]))
            .unwrap_or(0);
        let pick = pool.swap_remove(best);
        for d in pool.iter_mut() {
            let iou = skew_iou(&pick.bbox, &d.bbox)?;
            d.score *= math::exp(-(iou * iou) / sigma);
        }
        pool.retain(|d| d.score >= score_thresh);
        out.push(pick);
    }
    Ok(out)
}
