//! The `skewdet` batch front end.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags or flag values),
//! 2 on data errors (unreadable or malformed input).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use skewdet_core::anchors::{generate_anchors, match_anchors, sample_minibatch, AnchorLabel, MatchConfig, PyramidLevelConfig};
use skewdet_core::evaluation::{ApMode, EvalConfig};
use skewdet_core::geometry::{bounding_hbox, horizontal_iou, skew_iou, RotatedBox};
use skewdet_core::nms::{hnms, rnms, soft_nms, BandRule, Detection, RnmsConfig};
use skewdet_core::tiling::{merge_tiles, plan_tiles, TilePlan};

use crate::annotation::{parse_dota, parse_srss, read_annotations, write_annotations, Annotation};
use crate::detections::{read_detections, write_detections, ClassMap, DetectionRecord};
use crate::error::IoError;
use crate::report::{
    evaluate_records, parse_tile_image_id, pr_curve_csv, read_file, tile_image_id, tile_plan_json, EvalReportJson,
};

#[derive(Debug, Parser)]
#[command(name = "skewdet", version, about = "Oriented bounding-box detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Skew and horizontal IoU of two boxes given as "cx,cy,w,h,theta".
    Iou(IouArgs),
    /// Dump a pyramid level's anchors, or label them against ground truth.
    Anchors(AnchorArgs),
    /// Filter a detection file with rotational, horizontal or soft NMS.
    Nms(NmsArgs),
    /// Plan tiles for a scene, split annotations into tiles or merge tile detections.
    Tile(TileArgs),
    /// Convert DOTA text or prow-first contours into annotation JSON-lines.
    Convert(ConvertArgs),
    /// Evaluate detections against annotations.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct IouArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: RotatedBox,
    #[arg(long, allow_hyphen_values = true)]
    b: RotatedBox,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Stage {
    Rpn,
    Second,
}

#[derive(Debug, Args)]
struct AnchorArgs {
    /// Pyramid level, P2..P6.
    #[arg(long, default_value = "P2")]
    level: String,
    #[arg(long, default_value_t = 1000)]
    width: u32,
    #[arg(long, default_value_t = 1000)]
    height: u32,
    /// Annotation JSON-lines to match against; prints a labelling summary.
    #[arg(long)]
    gts: Option<PathBuf>,
    /// Only use annotations of this image.
    #[arg(long)]
    image: Option<String>,
    #[arg(long, value_enum, default_value = "rpn")]
    stage: Stage,
    #[arg(long)]
    pos_iou: Option<f64>,
    #[arg(long)]
    neg_iou: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    pos_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BandRuleArg {
    /// Suppress band overlaps more than the angle threshold apart.
    Large,
    /// Suppress band overlaps within the angle threshold.
    Small,
}

#[derive(Debug, Args)]
struct RnmsFlags {
    /// Overlaps at or above this are always suppressed.
    #[arg(long, default_value_t = 0.7)]
    iou_hi: f64,
    #[arg(long, default_value_t = 0.3)]
    band_lo: f64,
    #[arg(long, default_value_t = 0.7)]
    band_hi: f64,
    /// Angle threshold in degrees for the band rule.
    #[arg(long, default_value_t = 15.0)]
    angle: f64,
    #[arg(long, value_enum, default_value = "large")]
    band: BandRuleArg,
}

impl RnmsFlags {
    fn config(&self) -> Result<RnmsConfig, CliError> {
        let cfg = RnmsConfig {
            iou_hi: self.iou_hi,
            band_lo: self.band_lo,
            band_hi: self.band_hi,
            angle_thresh_deg: self.angle,
            band_rule: match self.band {
                BandRuleArg::Large => BandRule::DiscardLargeAngle,
                BandRuleArg::Small => BandRule::DiscardSmallAngle,
            },
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NmsMode {
    Rnms,
    Hnms,
    Soft,
}

#[derive(Debug, Args)]
struct NmsArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rnms")]
    mode: NmsMode,
    #[command(flatten)]
    rnms: RnmsFlags,
    /// Horizontal NMS threshold.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Soft-NMS Gaussian width.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Soft-NMS score floor.
    #[arg(long, default_value_t = 0.001)]
    score_thresh: f64,
}

#[derive(Debug, Args)]
struct TileArgs {
    #[arg(long)]
    width: u32,
    #[arg(long)]
    height: u32,
    #[arg(long, default_value_t = 1000)]
    tile: u32,
    #[arg(long, default_value_t = 0.4)]
    overlap: f64,
    /// Annotation JSON-lines in scene coordinates to split into tiles.
    #[arg(long, conflicts_with = "merge")]
    split: Option<PathBuf>,
    /// Detection JSON-lines with `<scene>_<x>_<y>` tile ids to merge.
    #[arg(long)]
    merge: Option<PathBuf>,
    #[command(flatten)]
    rnms: RnmsFlags,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Dota,
    Srss,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long, short)]
    input: PathBuf,
    /// Image id for DOTA files; defaults to the file stem.
    #[arg(long)]
    image_id: Option<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ApModeArg {
    #[value(name = "all-point")]
    AllPoint,
    #[value(name = "11-point")]
    ElevenPoint,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    dets: PathBuf,
    #[arg(long)]
    gts: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[arg(long, value_enum, default_value = "all-point")]
    ap_mode: ApModeArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write PR-curve points as CSV.
    #[arg(long)]
    pr_csv: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<skewdet_core::Error> for CliError {
    fn from(e: skewdet_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Data(e.to_string())),
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Iou(a) => run_iou(&a, out),
        Command::Anchors(a) => run_anchors(&a, out),
        Command::Nms(a) => run_nms(&a, out),
        Command::Tile(a) => run_tile(&a, out),
        Command::Convert(a) => run_convert(&a, out),
        Command::Eval(a) => run_eval(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(CliError::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn run_iou(a: &IouArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let skew = skew_iou(&a.a, &a.b)?;
    let horiz = horizontal_iou(&bounding_hbox(&a.a)?, &bounding_hbox(&a.b)?)?;
    emit(&format!("skew_iou {skew:.6}\nhorizontal_iou {horiz:.6}\n"), None, out)
}

#[derive(Serialize)]
struct MinibatchJson {
    seed: u64,
    positives: usize,
    negatives: usize,
    short: bool,
    indices: Vec<usize>,
}

#[derive(Serialize)]
struct MatchSummaryJson {
    level: String,
    grid: [u32; 2],
    anchors: usize,
    ground_truths: usize,
    positives: usize,
    negatives: usize,
    ignored: usize,
    minibatch: MinibatchJson,
}

fn run_anchors(a: &AnchorArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let level = PyramidLevelConfig::standard(&a.level)
        .ok_or_else(|| CliError::Usage(format!("unknown level `{}`, expected P2..P6", a.level)))?;
    let base = match a.stage {
        Stage::Rpn => MatchConfig::RPN,
        Stage::Second => MatchConfig::SECOND_STAGE,
    };
    let cfg = MatchConfig {
        pos_iou: a.pos_iou.unwrap_or(base.pos_iou),
        neg_iou: a.neg_iou.unwrap_or(base.neg_iou),
        batch: a.batch.unwrap_or(base.batch),
        pos_fraction: a.pos_fraction.unwrap_or(base.pos_fraction),
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if a.width == 0 || a.height == 0 {
        return Err(CliError::Usage("image dimensions must be positive".into()));
    }
    let (gw, gh) = (level.grid_size(a.width), level.grid_size(a.height));
    let anchors = generate_anchors(&level, gh, gw)?;

    let Some(gts_path) = &a.gts else {
        let mut text = String::with_capacity(anchors.len() * 96);
        for (i, b) in anchors.iter().enumerate() {
            let _ = writeln!(
                text,
                "{{\"index\":{i},\"cx\":{:.9},\"cy\":{:.9},\"w\":{:.9},\"h\":{:.9},\"theta_deg\":{:.9}}}",
                b.cx, b.cy, b.w, b.h, b.theta
            );
        }
        return emit(&text, a.output.as_deref(), out);
    };

    let anns = read_annotations(&read_file(gts_path)?)?;
    let gts: Vec<RotatedBox> = anns
        .iter()
        .filter(|x| a.image.as_ref().is_none_or(|id| &x.image_id == id))
        .map(|x| x.bbox)
        .collect();
    let result = match_anchors(&anchors, &gts, &cfg, skew_iou)?;
    let batch = sample_minibatch(&result, &cfg, a.seed)?;
    let count = |f: fn(&AnchorLabel) -> bool| result.labels.iter().filter(|l| f(l)).count();
    let summary = MatchSummaryJson {
        level: level.name.clone(),
        grid: [gh, gw],
        anchors: anchors.len(),
        ground_truths: gts.len(),
        positives: count(|l| l.is_positive()),
        negatives: count(|l| matches!(l, AnchorLabel::Negative)),
        ignored: count(|l| matches!(l, AnchorLabel::Ignore)),
        minibatch: MinibatchJson {
            seed: a.seed,
            positives: batch.positives,
            negatives: batch.negatives,
            short: batch.short,
            indices: batch.indices,
        },
    };
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    emit(&text, a.output.as_deref(), out)
}

/// Detections grouped by (image, class), in sorted key order.
fn group(dets: &[Detection]) -> BTreeMap<(String, u32), Vec<Detection>> {
    let mut groups: BTreeMap<(String, u32), Vec<Detection>> = BTreeMap::new();
    for d in dets {
        groups.entry((d.image_id.clone(), d.class_id)).or_default().push(d.clone());
    }
    groups
}

fn load_detections(path: &Path) -> Result<(Vec<Detection>, ClassMap), CliError> {
    let recs = read_detections(&read_file(path)?)?;
    let classes = ClassMap::from_names(recs.iter().map(|r| r.class.as_str()));
    let dets = recs.iter().map(|r| r.to_detection(&classes)).collect::<Result<Vec<_>, _>>()?;
    Ok((dets, classes))
}

fn detections_text(dets: &[Detection], classes: &ClassMap) -> Result<String, CliError> {
    let recs = dets.iter().map(|d| DetectionRecord::from_detection(d, classes)).collect::<Result<Vec<_>, _>>()?;
    Ok(write_detections(&recs))
}

fn run_nms(a: &NmsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.rnms.config()?;
    match a.mode {
        NmsMode::Hnms if !(0.0..=1.0).contains(&a.iou) => return Err(CliError::Usage("--iou must lie in [0, 1]".into())),
        NmsMode::Soft if !(a.sigma.is_finite() && a.sigma > 0.0) => {
            return Err(CliError::Usage("--sigma must be positive".into()))
        }
        _ => {}
    }
    let (dets, classes) = load_detections(&a.input)?;
    let mut kept = Vec::new();
    for group in group(&dets).values() {
        kept.extend(match a.mode {
            NmsMode::Rnms => rnms(group, &cfg)?,
            NmsMode::Hnms => hnms(group, a.iou)?,
            NmsMode::Soft => soft_nms(group, a.sigma, a.score_thresh)?,
        });
    }
    emit(&detections_text(&kept, &classes)?, a.output.as_deref(), out)
}

fn tile_index(plan: &TilePlan, x: u32, y: u32) -> Option<usize> {
    let xi = plan.xs.iter().position(|&o| o == x)?;
    let yi = plan.ys.iter().position(|&o| o == y)?;
    Some(yi * plan.xs.len() + xi)
}

fn run_tile(a: &TileArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let plan = plan_tiles(a.width, a.height, a.tile, a.overlap).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = a.rnms.config()?;

    if let Some(path) = &a.split {
        let anns = read_annotations(&read_file(path)?)?;
        let mut by_scene: BTreeMap<&str, Vec<&Annotation>> = BTreeMap::new();
        for ann in &anns {
            by_scene.entry(ann.image_id.as_str()).or_default().push(ann);
        }
        let mut tiled = Vec::new();
        for (scene, scene_anns) in by_scene {
            let mut per_tile: Vec<Vec<Annotation>> = vec![Vec::new(); plan.len()];
            for ann in scene_anns {
                let Some(k) = plan.owner(ann.bbox.cx, ann.bbox.cy) else {
                    return Err(CliError::Data(format!(
                        "{scene}: annotation centred at ({}, {}) lies outside the {}x{} scene",
                        ann.bbox.cx, ann.bbox.cy, a.width, a.height
                    )));
                };
                let (ox, oy) = plan.origin(k).unwrap_or((0, 0));
                per_tile[k].push(ann.translated(&tile_image_id(scene, ox, oy), -(ox as f64), -(oy as f64)));
            }
            tiled.extend(per_tile.into_iter().flatten());
        }
        return emit(&write_annotations(&tiled)?, a.output.as_deref(), out);
    }

    if let Some(path) = &a.merge {
        let (dets, classes) = load_detections(path)?;
        let mut scenes: BTreeMap<String, Vec<Vec<Detection>>> = BTreeMap::new();
        for d in dets {
            let (scene, x, y) = parse_tile_image_id(&d.image_id)
                .ok_or_else(|| CliError::Data(format!("`{}` is not a <scene>_<x>_<y> tile id", d.image_id)))?;
            let k = tile_index(&plan, x, y)
                .ok_or_else(|| CliError::Data(format!("tile origin ({x}, {y}) is not in the plan")))?;
            let slots = scenes.entry(scene.to_string()).or_insert_with(|| vec![Vec::new(); plan.len()]);
            slots[k].push(d);
        }
        let mut merged = Vec::new();
        for (scene, per_tile) in &scenes {
            merged.extend(merge_tiles(&plan, per_tile, &cfg, scene)?);
        }
        return emit(&detections_text(&merged, &classes)?, a.output.as_deref(), out);
    }

    let mut text = tile_plan_json(&plan)?;
    text.push('\n');
    emit(&text, a.output.as_deref(), out)
}

fn run_convert(a: &ConvertArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read_file(&a.input)?;
    let anns = match a.format {
        Format::Dota => {
            let id = match &a.image_id {
                Some(id) => id.clone(),
                None => a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            };
            parse_dota(&text, &id)
        }
        Format::Srss => parse_srss(&text),
    }
    .map_err(|e| CliError::Data(format!("{}: {e}", a.input.display())))?;
    emit(&write_annotations(&anns)?, a.output.as_deref(), out)
}

fn run_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.iou) {
        return Err(CliError::Usage("--iou must lie in [0, 1]".into()));
    }
    let cfg = EvalConfig {
        iou_thresh: a.iou,
        ap_mode: match a.ap_mode {
            ApModeArg::AllPoint => ApMode::AllPoint,
            ApModeArg::ElevenPoint => ApMode::ElevenPoint,
        },
    };
    let dets = read_detections(&read_file(&a.dets)?).map_err(|e| CliError::Data(format!("{}: {e}", a.dets.display())))?;
    let gts = read_annotations(&read_file(&a.gts)?).map_err(|e| CliError::Data(format!("{}: {e}", a.gts.display())))?;
    let (report, classes) = evaluate_records(&dets, &gts, &cfg)?;
    let mut text = EvalReportJson::new(&report, &classes, &cfg).to_json()?;
    text.push('\n');
    if let Some(p) = &a.pr_csv {
        std::fs::write(p, pr_curve_csv(&report, &classes)).map_err(|e| io_err(p, e))?;
    }
    emit(&text, a.output.as_deref(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("skewdet").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn iou_subcommand() {
        let (code, out, _) = run(&["iou", "--a", "0,0,7,1,-45", "--b", "0,0,7,1,-60"]);
        assert_eq!(code, 0);
        let v: f64 = out.lines().next().unwrap().strip_prefix("skew_iou ").unwrap().parse().unwrap();
        assert!((v - 0.3812).abs() <= 0.005);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["frobnicate"]).0, 1);
        assert_eq!(run(&["iou", "--a", "0,0,7,1"]).0, 1);
        assert_eq!(run(&["tile", "--width", "10", "--height", "10", "--overlap", "1.5"]).0, 1);
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("Usage"));
    }
}
