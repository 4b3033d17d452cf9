//! Detection JSON-lines:
//! `{image_id, class, score, cx, cy, w, h, theta_deg, prow_side?}`.
//! Numbers are written in decimal with 9 fractional digits.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Deserialize;
use skewdet_core::geometry::RotatedBox;
use skewdet_core::nms::Detection;
use skewdet_core::ProwSide;

use crate::error::{IoError, Result};
use crate::lines;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub image_id: String,
    pub class: String,
    pub score: f64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta_deg: f64,
    #[serde(default)]
    pub prow_side: Option<u8>,
}

/// Class names to dense ids, assigned in sorted name order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassMap {
    names: Vec<String>,
}

impl ClassMap {
    pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<&str> = names.into_iter().collect();
        ClassMap { names: set.into_iter().map(String::from).collect() }
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok().map(|i| i as u32)
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

fn num(out: &mut String, key: &str, v: f64) {
    let _ = write!(out, ",\"{key}\":{v:.9}");
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_else(|_| String::from("\"\""))
}

impl DetectionRecord {
    pub fn bbox(&self) -> RotatedBox {
        RotatedBox::new(self.cx, self.cy, self.w, self.h, self.theta_deg)
    }

    pub fn validate(&self) -> Result<()> {
        self.bbox().validate()?;
        if !self.score.is_finite() {
            return Err(IoError::Data("score must be finite".into()));
        }
        if let Some(s) = self.prow_side {
            ProwSide::new(s)?;
        }
        Ok(())
    }

    pub fn to_detection(&self, classes: &ClassMap) -> Result<Detection> {
        let class_id = classes.id(&self.class).ok_or_else(|| IoError::Data(format!("unknown class `{}`", self.class)))?;
        Ok(Detection {
            bbox: self.bbox(),
            score: self.score,
            class_id,
            prow: self.prow_side.map(ProwSide::new).transpose()?,
            image_id: self.image_id.clone(),
        })
    }

    pub fn from_detection(d: &Detection, classes: &ClassMap) -> Result<Self> {
        let class = classes.name(d.class_id).ok_or_else(|| IoError::Data(format!("no name for class id {}", d.class_id)))?;
        Ok(DetectionRecord {
            image_id: d.image_id.clone(),
            class: class.into(),
            score: d.score,
            cx: d.bbox.cx,
            cy: d.bbox.cy,
            w: d.bbox.w,
            h: d.bbox.h,
            theta_deg: d.bbox.theta,
            prow_side: d.prow.map(|s| s.index() as u8),
        })
    }

    pub fn to_json_line(&self) -> String {
        let mut out = String::with_capacity(160);
        let _ = write!(out, "{{\"image_id\":{},\"class\":{}", json_str(&self.image_id), json_str(&self.class));
        num(&mut out, "score", self.score);
        num(&mut out, "cx", self.cx);
        num(&mut out, "cy", self.cy);
        num(&mut out, "w", self.w);
        num(&mut out, "h", self.h);
        num(&mut out, "theta_deg", self.theta_deg);
        if let Some(s) = self.prow_side {
            let _ = write!(out, ",\"prow_side\":{s}");
        }
        out.push('}');
        out
    }
}

/// Reads and validates detection lines; an empty file gives an empty list.
pub fn read_detections(text: &str) -> Result<Vec<DetectionRecord>> {
    let recs: Vec<DetectionRecord> = lines::parse_json_lines(text)?;
    let mut line_nos = lines::numbered(text).map(|(n, _)| n);
    for r in &recs {
        let line = line_nos.next().unwrap_or(0);
        r.validate().map_err(|e| IoError::parse(line, e.to_string()))?;
    }
    Ok(recs)
}

pub fn write_detections(recs: &[DetectionRecord]) -> String {
    let mut out = String::new();
    for r in recs {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}
