//! JSON documents for tile plans and evaluation reports, the PR-curve CSV,
//! and file-level evaluation.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skewdet_core::evaluation::{evaluate, precision_recall_f1, ApMode, EvalConfig, EvalReport, Tally};
use skewdet_core::tiling::TilePlan;

use crate::annotation::{read_annotations, Annotation};
use crate::detections::{read_detections, ClassMap, DetectionRecord};
use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileJson {
    pub index: usize,
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilePlanJson {
    pub scene_w: u32,
    pub scene_h: u32,
    pub tile: u32,
    pub overlap: f64,
    pub stride: u32,
    pub tiles: Vec<TileJson>,
}

impl From<&TilePlan> for TilePlanJson {
    fn from(p: &TilePlan) -> Self {
        TilePlanJson {
            scene_w: p.scene_w,
            scene_h: p.scene_h,
            tile: p.tile,
            overlap: p.overlap,
            stride: p.stride,
            tiles: p.origins().into_iter().enumerate().map(|(index, (x, y))| TileJson { index, x, y }).collect(),
        }
    }
}

pub fn tile_plan_json(plan: &TilePlan) -> Result<String> {
    serde_json::to_string_pretty(&TilePlanJson::from(plan)).map_err(|e| IoError::Data(e.to_string()))
}

/// Tile image id: `<scene>_<x>_<y>`.
pub fn tile_image_id(scene: &str, x: u32, y: u32) -> String {
    format!("{scene}_{x}_{y}")
}

/// Splits a tile image id back into scene id and origin.
pub fn parse_tile_image_id(id: &str) -> Option<(&str, u32, u32)> {
    let (rest, y) = id.rsplit_once('_')?;
    let (scene, x) = rest.rsplit_once('_')?;
    Some((scene, x.parse().ok()?, y.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePointJson {
    pub recall: f64,
    pub precision: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassJson {
    pub class: String,
    pub ap: f64,
    pub best_f1: f64,
    pub best_f1_threshold: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub curve: Vec<CurvePointJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallyJson {
    pub correct: usize,
    pub total: usize,
    pub accuracy: Option<f64>,
}

impl From<&Tally> for TallyJson {
    fn from(t: &Tally) -> Self {
        TallyJson { correct: t.correct, total: t.total, accuracy: t.accuracy() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProwJson {
    pub overall: TallyJson,
    /// Heading octants centred on 0, 45, ..., 315 degrees.
    pub bins: Vec<TallyJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReportJson {
    pub iou_thresh: f64,
    pub ap_mode: &'static str,
    pub map: f64,
    pub classes: Vec<ClassJson>,
    pub prow: ProwJson,
}

pub fn ap_mode_name(mode: ApMode) -> &'static str {
    match mode {
        ApMode::AllPoint => "all-point",
        ApMode::ElevenPoint => "11-point",
    }
}

impl EvalReportJson {
    pub fn new(report: &EvalReport, classes: &ClassMap, cfg: &EvalConfig) -> Self {
        EvalReportJson {
            iou_thresh: cfg.iou_thresh,
            ap_mode: ap_mode_name(cfg.ap_mode),
            map: report.map,
            classes: report
                .classes
                .iter()
                .map(|c| {
                    let prf = precision_recall_f1(&c.counts);
                    ClassJson {
                        class: classes.name(c.class_id).unwrap_or("?").to_string(),
                        ap: c.ap,
                        best_f1: c.best_f1,
                        best_f1_threshold: c.best_f1_threshold,
                        tp: c.counts.tp,
                        fp: c.counts.fp,
                        fn_: c.counts.fn_,
                        precision: prf.precision,
                        recall: prf.recall,
                        f1: prf.f1,
                        curve: c
                            .curve
                            .points
                            .iter()
                            .map(|p| CurvePointJson { recall: p.recall, precision: p.precision, score: p.score })
                            .collect(),
                    }
                })
                .collect(),
            prow: ProwJson {
                overall: (&report.prow.overall).into(),
                bins: report.prow.bins.iter().map(TallyJson::from).collect(),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| IoError::Data(e.to_string()))
    }
}

/// PR-curve points as CSV: `class,recall,precision,score`.
pub fn pr_curve_csv(report: &EvalReport, classes: &ClassMap) -> String {
    let mut out = String::from("class,recall,precision,score\n");
    for c in &report.classes {
        let name = classes.name(c.class_id).unwrap_or("?");
        let name = if name.contains([',', '"', '\n']) { format!("\"{}\"", name.replace('"', "\"\"")) } else { name.to_string() };
        for p in &c.curve.points {
            let _ = writeln!(out, "{name},{:.9},{:.9},{:.9}", p.recall, p.precision, p.score);
        }
    }
    out
}

/// Evaluates detection records against annotations. Class ids come from
/// the sorted union of class names on both sides.
pub fn evaluate_records(dets: &[DetectionRecord], gts: &[Annotation], cfg: &EvalConfig) -> Result<(EvalReport, ClassMap)> {
    let classes = ClassMap::from_names(dets.iter().map(|d| d.class.as_str()).chain(gts.iter().map(|a| a.class.as_str())));
    let dets = dets.iter().map(|d| d.to_detection(&classes)).collect::<Result<Vec<_>>>()?;
    let gts: Vec<_> = gts
        .iter()
        .map(|a| a.to_ground_truth(classes.id(&a.class).unwrap_or(0)))
        .collect();
    Ok((evaluate(&dets, &gts, cfg)?, classes))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Reads a detection file and an annotation file and evaluates them.
pub fn evaluate_files(dets: &Path, gts: &Path, cfg: &EvalConfig) -> Result<(EvalReport, ClassMap)> {
    let d = read_detections(&read_file(dets)?)?;
    let g = read_annotations(&read_file(gts)?)?;
    evaluate_records(&d, &g, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use skewdet_core::tiling::plan_tiles;

    #[test]
    fn tile_ids_round_trip() {
        let id = tile_image_id("harbour_07", 600, 1200);
        assert_eq!(id, "harbour_07_600_1200");
        assert_eq!(parse_tile_image_id(&id), Some(("harbour_07", 600, 1200)));
        assert_eq!(parse_tile_image_id("plain"), None);
        assert_eq!(parse_tile_image_id("a_b_3"), None);
    }

    #[test]
    fn plan_document() {
        let plan = plan_tiles(1600, 1000, 1000, 0.4).unwrap();
        let doc: TilePlanJson = serde_json::from_str(&tile_plan_json(&plan).unwrap()).unwrap();
        assert_eq!(doc.stride, 600);
        assert_eq!(doc.tiles, vec![TileJson { index: 0, x: 0, y: 0 }, TileJson { index: 1, x: 600, y: 0 }]);
    }
}
