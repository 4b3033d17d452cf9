//! Rotated-IoU detection metrics: greedy matching, precision / recall / F1,
//! precision-recall curves, AP and mAP, and prow-direction accuracy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::encoding::{prow_vector, side_facing, ProwSide};
use crate::geometry::{skew_iou, RotatedBox};
use crate::math;
use crate::nms::{rank_order, Detection};
use crate::{Error, Result};

/// Ground-truth object.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub bbox: RotatedBox,
    pub class_id: u32,
    /// Difficult objects neither count as misses nor consume matches.
    pub difficult: bool,
    pub prow: Option<ProwSide>,
    pub image_id: String,
}

impl GroundTruth {
    pub fn new(bbox: RotatedBox, class_id: u32) -> Self {
        GroundTruth { bbox, class_id, difficult: false, prow: None, image_id: String::new() }
    }

    pub fn with_image(mut self, image_id: impl Into<String>) -> Self {
        self.image_id = image_id.into();
        self
    }

    pub fn with_prow(mut self, side: ProwSide) -> Self {
        self.prow = Some(side);
        self
    }

    pub fn difficult(mut self, difficult: bool) -> Self {
        self.difficult = difficult;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision, recall and F1 with `0/0` read as 0.
pub fn precision_recall_f1(c: &EvalCounts) -> PrecisionRecall {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    PrecisionRecall { precision, recall, f1: f1_score(precision, recall) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchFlag {
    TruePositive { gt: usize },
    FalsePositive,
    /// Best overlap is a difficult object; excluded from the counts.
    Ignored,
}

/// Per-image matching outcome, indexed like the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatch {
    pub det_flags: Vec<MatchFlag>,
    pub gt_matched: Vec<bool>,
}

impl ImageMatch {
    pub fn counts(&self, gts: &[GroundTruth]) -> EvalCounts {
        let tp = self.det_flags.iter().filter(|f| matches!(f, MatchFlag::TruePositive { .. })).count();
        let fp = self.det_flags.iter().filter(|f| matches!(f, MatchFlag::FalsePositive)).count();
        let npos = gts.iter().filter(|g| !g.difficult).count();
        EvalCounts { tp, fp, fn_: npos - tp }
    }
}

/// Greedy one-to-one matching of one image's detections to its ground
/// truths: detections are visited by descending score and take the
/// unmatched, non-difficult ground truth of highest skew IoU (lowest index
/// on ties) when that IoU reaches `iou_thresh`. A detection that fails but
/// reaches the threshold on a difficult object is [`MatchFlag::Ignored`].
pub fn match_detections(dets: &[Detection], gts: &[GroundTruth], iou_thresh: f64) -> Result<ImageMatch> {
    if let Some(first) = dets.first().map(|d| &d.image_id).or(gts.first().map(|g| &g.image_id)) {
        let same = dets.iter().all(|d| &d.image_id == first) && gts.iter().all(|g| &g.image_id == first);
        if !same {
            return Err(Error::MixedImages);
        }
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| rank_order(&dets[a], &dets[b]));

    let mut det_flags = alloc::vec![MatchFlag::FalsePositive; dets.len()];
    let mut gt_matched = alloc::vec![false; gts.len()];
    for di in order {
        let mut best: Option<(usize, f64)> = None;
        let mut hits_difficult = false;
        for (gi, gt) in gts.iter().enumerate() {
            let iou = skew_iou(&dets[di].bbox, &gt.bbox)?;
            if gt.difficult {
                hits_difficult |= iou >= iou_thresh;
                continue;
            }
            if gt_matched[gi] {
                continue;
            }
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        det_flags[di] = match best {
            Some((gi, iou)) if iou >= iou_thresh => {
                gt_matched[gi] = true;
                MatchFlag::TruePositive { gt: gi }
            }
            _ if hits_difficult => MatchFlag::Ignored,
            _ => MatchFlag::FalsePositive,
        };
    }
    Ok(ImageMatch { det_flags, gt_matched })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Score of the detection that produced this point.
    pub score: f64,
}

/// Precision-recall curve, one point per ranked detection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    /// Number of non-difficult ground truths.
    pub num_gt: usize,
}

impl PrCurve {
    /// Builds the curve from `(score, is_tp)` pairs that are already in rank
    /// order.
    pub fn from_ranked(ranked: impl IntoIterator<Item = (f64, bool)>, num_gt: usize) -> PrCurve {
        let (mut tp, mut fp) = (0usize, 0usize);
        let points = ranked
            .into_iter()
            .map(|(score, is_tp)| {
                if is_tp {
                    tp += 1;
                } else {
                    fp += 1;
                }
                PrPoint { recall: ratio(tp, num_gt), precision: ratio(tp, tp + fp), score }
            })
            .collect();
        PrCurve { points, num_gt }
    }

    /// Operating point when every detection scoring at least `threshold`
    /// is kept.
    pub fn at_threshold(&self, threshold: f64) -> Option<PrPoint> {
        self.points.iter().rev().find(|p| p.score >= threshold).copied()
    }

    /// Highest F1 along the curve and the score threshold that reaches it.
    pub fn best_f1(&self) -> (f64, Option<f64>) {
        let mut best = (0.0, None);
        for p in &self.points {
            let f = f1_score(p.precision, p.recall);
            if f > best.0 {
                best = (f, Some(p.score));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApMode {
    /// Area under the precision envelope.
    #[default]
    AllPoint,
    /// Mean of the envelope at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

pub fn average_precision(curve: &PrCurve, mode: ApMode) -> f64 {
    if curve.points.is_empty() {
        return 0.0;
    }
    match mode {
        ApMode::AllPoint => {
            let n = curve.points.len();
            // Envelope: running max of precision from the right.
            let mut env = alloc::vec![0.0; n];
            let mut run = 0.0f64;
            for i in (0..n).rev() {
                run = run.max(curve.points[i].precision);
                env[i] = run;
            }
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (p, e) in curve.points.iter().zip(&env) {
                if p.recall > prev_recall {
                    ap += (p.recall - prev_recall) * e;
                    prev_recall = p.recall;
                }
            }
            ap
        }
        ApMode::ElevenPoint => {
            let mut sum = 0.0;
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let p = curve
                    .points
                    .iter()
                    .filter(|p| p.recall >= t)
                    .map(|p| p.precision)
                    .fold(0.0, f64::max);
                sum += p;
            }
            sum / 11.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub iou_thresh: f64,
    pub ap_mode: ApMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou_thresh: 0.5, ap_mode: ApMode::AllPoint }
    }
}

/// A true-positive pair whose detection and ground truth both carry a
/// prow side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProwPair {
    pub pred_box: RotatedBox,
    pub pred_side: ProwSide,
    pub gt_box: RotatedBox,
    pub gt_side: ProwSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// Prow-direction accuracy overall and per heading octant. Octant `k`
/// covers ground-truth prow headings within 22.5° of `45 k` degrees,
/// measured from +x toward +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProwReport {
    pub overall: Tally,
    pub bins: [Tally; 8],
}

/// Heading octant of a direction vector.
pub fn heading_bin(dx: f64, dy: f64) -> usize {
    let deg = math::atan2(dy, dx).to_degrees();
    let mut shifted = math::fmod(deg + 22.5, 360.0);
    if shifted < 0.0 {
        shifted += 360.0;
    }
    (math::floor(shifted / 45.0) as usize) % 8
}

/// Scores predicted prow sides. The predicted side is first carried over
/// to the ground-truth box as the side facing the same physical direction,
/// so boxes whose canonical encodings differ still compare correctly.
pub fn prow_accuracy(pairs: &[ProwPair]) -> Result<ProwReport> {
    let mut report = ProwReport::default();
    for p in pairs {
        let dir = prow_vector(&p.pred_box, p.pred_side)?;
        let aligned = side_facing(&p.gt_box, dir);
        let gt_dir = prow_vector(&p.gt_box, p.gt_side)?;
        let bin = heading_bin(gt_dir.x, gt_dir.y);
        let hit = (aligned == p.gt_side) as usize;
        report.overall.correct += hit;
        report.overall.total += 1;
        report.bins[bin].correct += hit;
        report.bins[bin].total += 1;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub class_id: u32,
    pub ap: f64,
    pub best_f1: f64,
    pub best_f1_threshold: Option<f64>,
    /// Counts with every detection kept.
    pub counts: EvalCounts,
    pub curve: PrCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// One entry per class with at least one non-difficult ground truth,
    /// ascending class id.
    pub classes: Vec<ClassReport>,
    pub map: f64,
    pub prow: ProwReport,
}

impl EvalReport {
    pub fn class(&self, class_id: u32) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    /// Counts summed over classes.
    pub fn total_counts(&self) -> EvalCounts {
        self.classes.iter().fold(EvalCounts::default(), |acc, c| EvalCounts {
            tp: acc.tp + c.counts.tp,
            fp: acc.fp + c.counts.fp,
            fn_: acc.fn_ + c.counts.fn_,
        })
    }
}

fn ranked_cmp(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.image_id.cmp(&b.image_id))
        .then_with(|| a.bbox.lexicographic_cmp(&b.bbox))
}

/// Full evaluation: per-class AP, best F1 and PR curve, mAP as the
/// unweighted mean of per-class AP, and prow accuracy over matched pairs.
/// Detections of classes without ground truth are not scored.
pub fn evaluate(dets: &[Detection], gts: &[GroundTruth], cfg: &EvalConfig) -> Result<EvalReport> {
    if !(0.0..=1.0).contains(&cfg.iou_thresh) {
        return Err(Error::InvalidConfig("evaluation IoU threshold must lie in [0, 1]"));
    }
    let classes: BTreeSet<u32> = gts.iter().filter(|g| !g.difficult).map(|g| g.class_id).collect();

    let mut det_groups: BTreeMap<(u32, &str), Vec<Detection>> = BTreeMap::new();
    for d in dets {
        det_groups.entry((d.class_id, d.image_id.as_str())).or_default().push(d.clone());
    }
    let mut gt_groups: BTreeMap<(u32, &str), Vec<GroundTruth>> = BTreeMap::new();
    for g in gts {
        gt_groups.entry((g.class_id, g.image_id.as_str())).or_default().push(g.clone());
    }

    let mut reports = Vec::with_capacity(classes.len());
    let mut prow_pairs = Vec::new();
    for &class_id in &classes {
        let mut scored: Vec<(Detection, bool)> = Vec::new();
        let mut num_gt = 0usize;
        let images: BTreeSet<&str> = det_groups
            .keys()
            .chain(gt_groups.keys())
            .filter(|(c, _)| *c == class_id)
            .map(|(_, img)| *img)
            .collect();
        for img in images {
            let empty_d: Vec<Detection> = Vec::new();
            let empty_g: Vec<GroundTruth> = Vec::new();
            let ds = det_groups.get(&(class_id, img)).unwrap_or(&empty_d);
            let gs = gt_groups.get(&(class_id, img)).unwrap_or(&empty_g);
            num_gt += gs.iter().filter(|g| !g.difficult).count();
            let m = match_detections(ds, gs, cfg.iou_thresh)?;
            for (d, flag) in ds.iter().zip(&m.det_flags) {
                match flag {
                    MatchFlag::TruePositive { gt } => {
                        scored.push((d.clone(), true));
                        if let (Some(ps), Some(gs_side)) = (d.prow, gs[*gt].prow) {
                            prow_pairs.push(ProwPair {
                                pred_box: d.bbox,
                                pred_side: ps,
                                gt_box: gs[*gt].bbox,
                                gt_side: gs_side,
                            });
                        }
                    }
                    MatchFlag::FalsePositive => scored.push((d.clone(), false)),
                    MatchFlag::Ignored => {}
                }
            }
        }
        scored.sort_by(|a, b| ranked_cmp(&a.0, &b.0).then(b.1.cmp(&a.1)));
        let tp = scored.iter().filter(|(_, t)| *t).count();
        let counts = EvalCounts { tp, fp: scored.len() - tp, fn_: num_gt - tp };
        let curve = PrCurve::from_ranked(scored.iter().map(|(d, t)| (d.score, *t)), num_gt);
        let (best_f1, best_f1_threshold) = curve.best_f1();
        reports.push(ClassReport {
            class_id,
            ap: average_precision(&curve, cfg.ap_mode),
            best_f1,
            best_f1_threshold,
            counts,
            curve,
        });
    }

    let map = if reports.is_empty() {
        0.0
    } else {
        reports.iter().map(|r| r.ap).sum::<f64>() / reports.len() as f64
    };
    // Pair order depends on grouping only, never on input order.
    prow_pairs.sort_by(|a, b| a.gt_box.lexicographic_cmp(&b.gt_box).then(a.pred_box.lexicographic_cmp(&b.pred_box)));
    let prow = prow_accuracy(&prow_pairs)?;
    Ok(EvalReport { classes: reports, map, prow })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn b(cx: f64) -> RotatedBox {
        RotatedBox::new(cx, 0.0, 10.0, 4.0, -30.0)
    }

    #[test]
    fn table_row_counts() {
        let r = precision_recall_f1(&EvalCounts { tp: 852, fp: 156, fn_: 148 });
        assert!((r.recall - 0.852).abs() < 1e-12);
        assert!((r.precision * 100.0 - 84.5).abs() < 0.1);
        assert!((r.f1 * 100.0 - 84.9).abs() < 0.1);
    }

    #[test]
    fn degenerate_counts() {
        let z = precision_recall_f1(&EvalCounts { tp: 0, fp: 3, fn_: 2 });
        assert_eq!((z.precision, z.recall, z.f1), (0.0, 0.0, 0.0));
        let z = precision_recall_f1(&EvalCounts::default());
        assert_eq!(z.f1, 0.0);
        let one = precision_recall_f1(&EvalCounts { tp: 5, fp: 0, fn_: 0 });
        assert_eq!((one.precision, one.recall, one.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn single_match() {
        let g = [GroundTruth::new(b(0.0), 0)];
        let d = [Detection::new(b(0.2), 0.9, 0)];
        let m = match_detections(&d, &g, 0.5).unwrap();
        assert_eq!(m.det_flags, vec![MatchFlag::TruePositive { gt: 0 }]);
        assert_eq!(m.counts(&g), EvalCounts { tp: 1, fp: 0, fn_: 0 });
    }

    #[test]
    fn one_to_one() {
        let g = [GroundTruth::new(b(0.0), 0)];
        let d = [Detection::new(b(0.3), 0.6, 0), Detection::new(b(0.1), 0.9, 0)];
        let m = match_detections(&d, &g, 0.5).unwrap();
        assert_eq!(m.det_flags, vec![MatchFlag::FalsePositive, MatchFlag::TruePositive { gt: 0 }]);
    }

    #[test]
    fn difficult_objects_are_neutral() {
        let g = [GroundTruth::new(b(0.0), 0).difficult(true)];
        let d = [Detection::new(b(0.1), 0.9, 0), Detection::new(b(40.0), 0.8, 0)];
        let m = match_detections(&d, &g, 0.5).unwrap();
        assert_eq!(m.det_flags, vec![MatchFlag::Ignored, MatchFlag::FalsePositive]);
        assert_eq!(m.counts(&g), EvalCounts { tp: 0, fp: 1, fn_: 0 });
        assert_eq!(m.gt_matched, vec![false]);
    }

    #[test]
    fn mixed_images_rejected() {
        let g = [GroundTruth::new(b(0.0), 0).with_image("a")];
        let d = [Detection::new(b(0.0), 0.9, 0).with_image("b")];
        assert_eq!(match_detections(&d, &g, 0.5), Err(Error::MixedImages));
    }

    #[test]
    fn ap_examples() {
        let c = PrCurve::from_ranked([(0.9, true)], 1);
        assert_eq!(average_precision(&c, ApMode::AllPoint), 1.0);
        assert_eq!(average_precision(&c, ApMode::ElevenPoint), 1.0);
        let c = PrCurve::from_ranked([(0.9, false), (0.8, true)], 1);
        assert_eq!(average_precision(&c, ApMode::AllPoint), 0.5);
        let c = PrCurve::from_ranked([(0.9, true), (0.8, true), (0.7, false), (0.1, false)], 2);
        assert_eq!(average_precision(&c, ApMode::AllPoint), 1.0);
        assert_eq!(average_precision(&PrCurve::default(), ApMode::AllPoint), 0.0);
    }

    #[test]
    fn evaluate_perfect_and_empty() {
        let gts: Vec<_> = (0..5).map(|i| GroundTruth::new(b(i as f64 * 30.0), i % 2).with_image("img")).collect();
        let dets: Vec<_> = gts.iter().map(|g| Detection::new(g.bbox, 1.0, g.class_id).with_image("img")).collect();
        let r = evaluate(&dets, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, 1.0);
        assert!(r.classes.iter().all(|c| c.best_f1 == 1.0));
        let r = evaluate(&[], &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, 0.0);
        assert_eq!(r.total_counts().tp, 0);
        assert_eq!(precision_recall_f1(&r.total_counts()).recall, 0.0);
    }

    #[test]
    fn heading_bins() {
        assert_eq!(heading_bin(1.0, 0.0), 0);
        assert_eq!(heading_bin(0.0, 1.0), 2);
        assert_eq!(heading_bin(-1.0, 0.0), 4);
        assert_eq!(heading_bin(0.0, -1.0), 6);
        assert_eq!(heading_bin(1.0, -0.1), 0);
        assert_eq!(heading_bin(1.0, 1.0), 1);
    }

    #[test]
    fn prow_alignment_across_encodings() {
        // Same physical rectangle encoded on either side of the angle wrap.
        let gt_box = RotatedBox::new(0.0, 0.0, 8.0, 2.0, -89.9);
        let pred_box = RotatedBox::new(0.0, 0.0, 2.0, 8.0, -0.1);
        let gt_side = ProwSide::new(1).unwrap();
        let dir = prow_vector(&gt_box, gt_side).unwrap();
        let pred_side = side_facing(&pred_box, dir);
        assert_ne!(pred_side, gt_side);
        let r = prow_accuracy(&[ProwPair { pred_box, pred_side, gt_box, gt_side }]).unwrap();
        assert_eq!(r.overall, Tally { correct: 1, total: 1 });
        let wrong = ProwPair { pred_box, pred_side: pred_side.opposite(), gt_box, gt_side };
        assert_eq!(prow_accuracy(&[wrong]).unwrap().overall.accuracy(), Some(0.0));
    }
}
