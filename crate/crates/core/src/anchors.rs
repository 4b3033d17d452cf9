//! Multiscale anchor generation, IoU-based anchor labelling and seeded
//! minibatch sampling.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::RotatedBox;
use crate::math;
use crate::{Error, Result};

/// Anchor aspect ratios (`w:h`) placed at every feature cell.
pub const ANCHOR_RATIOS: [f64; 9] = [
    1.0 / 7.0,
    1.0 / 5.0,
    1.0 / 3.0,
    1.0 / 2.0,
    1.0,
    2.0,
    3.0,
    5.0,
    7.0,
];

/// Parameters regressed per anchor (`x, y, w, h, theta`).
pub const BOX_PARAMS: usize = 5;
/// Classification logits per anchor (object / background).
pub const CLASS_LOGITS: usize = 2;

/// One feature-pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevelConfig {
    pub name: String,
    /// Image pixels per feature cell.
    pub stride: u32,
    /// Anchor side for ratio 1, in pixels.
    pub scale: f64,
    pub ratios: Vec<f64>,
}

impl PyramidLevelConfig {
    /// The five standard levels P2..P6 (strides 4..64, scales 32..512).
    pub fn standard_levels() -> Vec<PyramidLevelConfig> {
        [("P2", 4, 32.0), ("P3", 8, 64.0), ("P4", 16, 128.0), ("P5", 32, 256.0), ("P6", 64, 512.0)]
            .into_iter()
            .map(|(name, stride, scale)| PyramidLevelConfig {
                name: String::from(name),
                stride,
                scale,
                ratios: ANCHOR_RATIOS.to_vec(),
            })
            .collect()
    }

    /// Looks a standard level up by name (`"P2"` .. `"P6"`).
    pub fn standard(name: &str) -> Option<PyramidLevelConfig> {
        Self::standard_levels().into_iter().find(|l| l.name.eq_ignore_ascii_case(name))
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.stride, 4 | 8 | 16 | 32 | 64) {
            return Err(Error::InvalidConfig("stride must be one of 4, 8, 16, 32, 64"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidConfig("anchor scale must be positive"));
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidConfig("anchor ratios must be positive"));
        }
        Ok(())
    }

    /// Feature-grid size covering an image dimension.
    pub fn grid_size(&self, image_dim: u32) -> u32 {
        image_dim.div_ceil(self.stride)
    }

    /// Network head widths per feature cell implied by this level.
    pub fn per_cell_outputs(&self) -> CellOutputs {
        let anchors = self.ratios.len();
        CellOutputs { anchors, regression: anchors * BOX_PARAMS, classification: anchors * CLASS_LOGITS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellOutputs {
    pub anchors: usize,
    pub regression: usize,
    pub classification: usize,
}

/// Anchors for every cell of a `grid_h × grid_w` feature map, row-major,
/// ratios in configuration order. All anchors are axis-aligned
/// (`theta = -90`) and area-preserving (`w * h = scale²`).
pub fn generate_anchors(level: &PyramidLevelConfig, grid_h: u32, grid_w: u32) -> Result<Vec<RotatedBox>> {
    level.validate()?;
    if grid_h == 0 || grid_w == 0 {
        return Err(Error::InvalidConfig("grid dimensions must be >= 1"));
    }
    let stride = level.stride as f64;
    let shapes: Vec<(f64, f64)> = level
        .ratios
        .iter()
        .map(|&r| {
            let s = math::sqrt(r);
            (level.scale * s, level.scale / s)
        })
        .collect();
    let mut out = Vec::with_capacity(grid_h as usize * grid_w as usize * shapes.len());
    for r in 0..grid_h {
        let cy = (r as f64 + 0.5) * stride;
        for c in 0..grid_w {
            let cx = (c as f64 + 0.5) * stride;
            out.extend(shapes.iter().map(|&(w, h)| RotatedBox::new(cx, cy, w, h, -90.0)));
        }
    }
    Ok(out)
}

/// Labelling thresholds and minibatch composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Positive iff best IoU is strictly greater.
    pub pos_iou: f64,
    /// Negative iff best IoU is strictly smaller.
    pub neg_iou: f64,
    pub batch: usize,
    pub pos_fraction: f64,
}

impl MatchConfig {
    /// Region-proposal stage: 0.6 / 0.25, 256 samples, half positive.
    pub const RPN: MatchConfig = MatchConfig { pos_iou: 0.6, neg_iou: 0.25, batch: 256, pos_fraction: 0.5 };
    /// Second stage: threshold 0.5, 128 samples, half positive.
    pub const SECOND_STAGE: MatchConfig = MatchConfig { pos_iou: 0.5, neg_iou: 0.5, batch: 128, pos_fraction: 0.5 };

    pub fn validate(&self) -> Result<()> {
        let ok = self.neg_iou >= 0.0
            && self.pos_iou <= 1.0
            && self.neg_iou <= self.pos_iou
            && (0.0..=1.0).contains(&self.pos_fraction)
            && self.batch > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("need 0 <= neg_iou <= pos_iou <= 1, pos_fraction in [0, 1], batch > 0"))
        }
    }
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig::RPN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorLabel {
    Positive { gt: usize },
    Negative,
    Ignore,
}

impl AnchorLabel {
    pub fn is_positive(&self) -> bool {
        matches!(self, AnchorLabel::Positive { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub labels: Vec<AnchorLabel>,
    /// Best IoU of each anchor over all ground truths (0 when there are none).
    pub max_iou: Vec<f64>,
}

impl MatchResult {
    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(|(_, l)| l.is_positive()).map(|(i, _)| i)
    }

    pub fn negatives(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, AnchorLabel::Negative))
            .map(|(i, _)| i)
    }
}

/// Labels anchors against ground truths with `iou_fn`.
///
/// Besides the threshold rule, the best anchor of each ground truth (lowest
/// index on ties) is forced positive for that ground truth, so no ground
/// truth is left without a positive anchor.
pub fn match_anchors<F>(anchors: &[RotatedBox], gts: &[RotatedBox], cfg: &MatchConfig, iou_fn: F) -> Result<MatchResult>
where
    F: Fn(&RotatedBox, &RotatedBox) -> Result<f64>,
{
    cfg.validate()?;
    if anchors.is_empty() {
        return Err(Error::EmptyInput("anchor list"));
    }
    let mut labels = Vec::with_capacity(anchors.len());
    let mut max_iou = Vec::with_capacity(anchors.len());
    let mut gt_best: Vec<(f64, usize)> = alloc::vec![(f64::NEG_INFINITY, 0); gts.len()];

    for (ai, anchor) in anchors.iter().enumerate() {
        let mut best = 0.0f64;
        let mut best_gt = None;
        for (gi, gt) in gts.iter().enumerate() {
            let iou = iou_fn(anchor, gt)?;
            if best_gt.is_none() || iou > best {
                best = iou;
                best_gt = Some(gi);
            }
            if iou > gt_best[gi].0 {
                gt_best[gi] = (iou, ai);
            }
        }
        let label = match best_gt {
            Some(gt) if best > cfg.pos_iou => AnchorLabel::Positive { gt },
            _ if best < cfg.neg_iou => AnchorLabel::Negative,
            _ => AnchorLabel::Ignore,
        };
        labels.push(label);
        max_iou.push(best);
    }
    for (gi, &(_, ai)) in gt_best.iter().enumerate() {
        if !matches!(labels[ai], AnchorLabel::Positive { .. }) || max_iou[ai] <= cfg.pos_iou {
            labels[ai] = AnchorLabel::Positive { gt: gi };
        }
    }
    Ok(MatchResult { labels, max_iou })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minibatch {
    /// Sampled positives first, then sampled negatives.
    pub indices: Vec<usize>,
    pub positives: usize,
    pub negatives: usize,
    /// Fewer than `batch` samples were available.
    pub short: bool,
}

/// Draws up to `batch * pos_fraction` positives uniformly without
/// replacement and fills the remainder with negatives. The same `seed`
/// always yields the same batch.
pub fn sample_minibatch(result: &MatchResult, cfg: &MatchConfig, seed: u64) -> Result<Minibatch> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos: Vec<usize> = result.positives().collect();
    let neg: Vec<usize> = result.negatives().collect();

    let pos_quota = math::floor(cfg.batch as f64 * cfg.pos_fraction) as usize;
    let n_pos = pos_quota.min(pos.len());
    let n_neg = (cfg.batch - n_pos).min(neg.len());

    let mut indices = Vec::with_capacity(n_pos + n_neg);
    indices.extend(index::sample(&mut rng, pos.len(), n_pos).into_iter().map(|i| pos[i]));
    indices.extend(index::sample(&mut rng, neg.len(), n_neg).into_iter().map(|i| neg[i]));
    Ok(Minibatch { short: indices.len() < cfg.batch, indices, positives: n_pos, negatives: n_neg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::skew_iou;
    use alloc::vec;

    #[test]
    fn single_cell_has_nine_centred_anchors() {
        for level in PyramidLevelConfig::standard_levels() {
            let a = generate_anchors(&level, 1, 1).unwrap();
            assert_eq!(a.len(), 9);
            let half = level.stride as f64 / 2.0;
            assert!(a.iter().all(|b| b.cx == half && b.cy == half && b.theta == -90.0));
            assert!(a.iter().all(|b| (b.area() - level.scale * level.scale).abs() < 1e-9));
        }
    }

    #[test]
    fn unit_ratio_is_square() {
        let p2 = PyramidLevelConfig::standard("p2").unwrap();
        let a = generate_anchors(&p2, 1, 1).unwrap();
        assert_eq!((a[4].w, a[4].h), (32.0, 32.0));
    }

    #[test]
    fn row_major_order() {
        let p3 = PyramidLevelConfig::standard("P3").unwrap();
        let a = generate_anchors(&p3, 2, 3).unwrap();
        assert_eq!(a.len(), 54);
        assert_eq!((a[9].cx, a[9].cy), (12.0, 4.0));
        assert_eq!((a[27].cx, a[27].cy), (4.0, 12.0));
    }

    #[test]
    fn bad_level_rejected() {
        let mut l = PyramidLevelConfig::standard("P4").unwrap();
        l.stride = 12;
        assert!(generate_anchors(&l, 1, 1).is_err());
        let l = PyramidLevelConfig::standard("P4").unwrap();
        assert!(generate_anchors(&l, 0, 1).is_err());
    }

    fn sized(w: f64) -> RotatedBox {
        RotatedBox::new(0.0, 0.0, w, 10.0, -90.0)
    }

    // IoU of a w×10 box with a 10×10 box sharing its centre is w/10 for w <= 10.
    #[test]
    fn threshold_labels() {
        let gt = [sized(10.0)];
        let anchors = [sized(6.5), sized(2.0), sized(4.0), sized(10.0)];
        let r = match_anchors(&anchors, &gt, &MatchConfig::RPN, skew_iou).unwrap();
        assert_eq!(r.labels[0], AnchorLabel::Positive { gt: 0 });
        assert_eq!(r.labels[1], AnchorLabel::Negative);
        assert_eq!(r.labels[2], AnchorLabel::Ignore);
        assert_eq!(r.labels[3], AnchorLabel::Positive { gt: 0 });
    }

    #[test]
    fn best_anchor_is_forced_positive() {
        let gt = [sized(10.0)];
        let anchors = [sized(3.0), sized(5.0), sized(4.0)];
        let r = match_anchors(&anchors, &gt, &MatchConfig::RPN, skew_iou).unwrap();
        assert_eq!(r.labels[1], AnchorLabel::Positive { gt: 0 });
        assert_eq!(r.positives().count(), 1);
    }

    #[test]
    fn empty_anchor_list_is_an_error() {
        assert!(match_anchors(&[], &[sized(1.0)], &MatchConfig::RPN, skew_iou).is_err());
    }

    #[test]
    fn no_ground_truth_means_all_negative() {
        let r = match_anchors(&[sized(1.0), sized(2.0)], &[], &MatchConfig::RPN, skew_iou).unwrap();
        assert!(r.labels.iter().all(|l| *l == AnchorLabel::Negative));
    }

    fn synthetic(npos: usize, nneg: usize) -> MatchResult {
        let mut labels = vec![AnchorLabel::Positive { gt: 0 }; npos];
        labels.extend(vec![AnchorLabel::Negative; nneg]);
        labels.push(AnchorLabel::Ignore);
        let max_iou = vec![0.0; labels.len()];
        MatchResult { labels, max_iou }
    }

    #[test]
    fn minibatch_half_positive() {
        let r = synthetic(300, 10_000);
        let b = sample_minibatch(&r, &MatchConfig::RPN, 7).unwrap();
        assert_eq!((b.positives, b.negatives, b.indices.len(), b.short), (128, 128, 256, false));
        assert!(b.indices[..128].iter().all(|&i| i < 300));
        assert!(b.indices[128..].iter().all(|&i| (300..10_300).contains(&i)));
    }

    #[test]
    fn minibatch_shortfall_fills_with_negatives() {
        let r = synthetic(10, 10_000);
        let b = sample_minibatch(&r, &MatchConfig::RPN, 7).unwrap();
        assert_eq!((b.positives, b.negatives), (10, 246));
    }

    #[test]
    fn minibatch_without_negatives_is_short() {
        let r = synthetic(10, 0);
        let b = sample_minibatch(&r, &MatchConfig::RPN, 7).unwrap();
        assert!(b.short);
        assert_eq!(b.indices.len(), 10);
    }

    #[test]
    fn minibatch_is_seeded() {
        let r = synthetic(300, 10_000);
        let a = sample_minibatch(&r, &MatchConfig::RPN, 42).unwrap();
        let b = sample_minibatch(&r, &MatchConfig::RPN, 42).unwrap();
        let c = sample_minibatch(&r, &MatchConfig::RPN, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn match_config_validation() {
        assert!(MatchConfig::RPN.validate().is_ok());
        assert!(MatchConfig::SECOND_STAGE.validate().is_ok());
        let bad = MatchConfig { pos_iou: 0.2, neg_iou: 0.3, ..MatchConfig::RPN };
        assert!(bad.validate().is_err());
    }
}
