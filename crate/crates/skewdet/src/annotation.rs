//! Ground-truth annotations: DOTA quadrilateral text, prow-first contour
//! JSON-lines and the normalized annotation JSON-lines written by `convert`.

use serde::{Deserialize, Serialize};
use skewdet_core::encoding::{canonicalize_with_side, prow_side_from_contour};
use skewdet_core::evaluation::GroundTruth;
use skewdet_core::geometry::{min_area_rect, Point, RotatedBox};
use skewdet_core::ProwSide;

use crate::error::{IoError, Result};
use crate::lines;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Four corners in file order.
    Quad([Point; 4]),
    /// Outline whose first point is the prow.
    Contour(Vec<Point>),
    /// Given directly as box parameters.
    Box,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_id: String,
    pub class: String,
    pub difficult: bool,
    pub geometry: Geometry,
    /// Canonical enclosing box.
    pub bbox: RotatedBox,
    /// Present for contour geometry.
    pub prow: Option<ProwSide>,
}

impl Annotation {
    pub fn from_quad(image_id: &str, class: &str, quad: [Point; 4], difficult: bool) -> Result<Self> {
        let bbox = min_area_rect(&quad)?;
        Ok(Annotation {
            image_id: image_id.into(),
            class: class.into(),
            difficult,
            geometry: Geometry::Quad(quad),
            bbox,
            prow: None,
        })
    }

    pub fn from_contour(image_id: &str, class: &str, points: Vec<Point>, difficult: bool) -> Result<Self> {
        if points.len() < 3 {
            return Err(IoError::Data(format!("contour has {} points, need at least 3", points.len())));
        }
        let (bbox, side) = prow_side_from_contour(&points)?;
        Ok(Annotation {
            image_id: image_id.into(),
            class: class.into(),
            difficult,
            geometry: Geometry::Contour(points),
            bbox,
            prow: Some(side),
        })
    }

    pub fn to_ground_truth(&self, class_id: u32) -> GroundTruth {
        GroundTruth {
            bbox: self.bbox,
            class_id,
            difficult: self.difficult,
            prow: self.prow,
            image_id: self.image_id.clone(),
        }
    }

    pub fn points(&self) -> Vec<Point> {
        match &self.geometry {
            Geometry::Quad(q) => q.to_vec(),
            Geometry::Contour(c) => c.clone(),
            Geometry::Box => Vec::new(),
        }
    }

    /// Same annotation moved by `(dx, dy)`, under a new image id.
    pub fn translated(&self, image_id: &str, dx: f64, dy: f64) -> Annotation {
        let shift = |p: &Point| Point::new(p.x + dx, p.y + dy);
        let geometry = match &self.geometry {
            Geometry::Quad(q) => Geometry::Quad(q.map(|p| shift(&p))),
            Geometry::Contour(c) => Geometry::Contour(c.iter().map(shift).collect()),
            Geometry::Box => Geometry::Box,
        };
        Annotation { image_id: image_id.into(), geometry, bbox: self.bbox.translated(dx, dy), ..self.clone() }
    }
}

fn is_dota_header(line: &str) -> bool {
    line.starts_with("imagesource:") || line.starts_with("gsd:")
}

/// Parses DOTA text: optional `imagesource:` / `gsd:` header lines, then
/// `x1 y1 x2 y2 x3 y3 x4 y4 class difficult` per object.
pub fn parse_dota(text: &str, image_id: &str) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || is_dota_header(line) {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 10 {
            return Err(IoError::parse(line_no, format!("expected 10 tokens, found {}", tokens.len())));
        }
        let mut coords = [0.0f64; 8];
        for (k, tok) in tokens[..8].iter().enumerate() {
            coords[k] = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::parse(line_no, format!("coordinate {} is not a number: `{tok}`", k + 1)))?;
        }
        let difficult: i64 = tokens[9]
            .parse()
            .map_err(|_| IoError::parse(line_no, format!("difficulty is not an integer: `{}`", tokens[9])))?;
        let quad = [0, 1, 2, 3].map(|i| Point::new(coords[2 * i], coords[2 * i + 1]));
        let ann = Annotation::from_quad(image_id, tokens[8], quad, difficult != 0)
            .map_err(|e| IoError::parse(line_no, e.to_string()))?;
        out.push(ann);
    }
    Ok(out)
}

/// One prow-first contour record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourRecord {
    pub image: String,
    pub class: String,
    pub points: Vec<[f64; 2]>,
}

pub fn parse_srss_contour(rec: &ContourRecord) -> Result<Annotation> {
    let pts = rec.points.iter().map(|p| Point::new(p[0], p[1])).collect();
    Annotation::from_contour(&rec.image, &rec.class, pts, false)
}

pub fn read_contours(text: &str) -> Result<Vec<ContourRecord>> {
    lines::parse_json_lines(text)
}

pub fn write_contours(records: &[ContourRecord]) -> Result<String> {
    lines::write_json_lines(records)
}

/// Parses contour JSON-lines straight into annotations.
pub fn parse_srss(text: &str) -> Result<Vec<Annotation>> {
    lines::numbered(text)
        .map(|(line, s)| {
            let rec: ContourRecord = serde_json::from_str(s).map_err(|e| IoError::json(line, e))?;
            parse_srss_contour(&rec).map_err(|e| IoError::parse(line, e.to_string()))
        })
        .collect()
}

/// Normalized annotation line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub class: String,
    #[serde(default)]
    pub difficult: bool,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prow_side: Option<u8>,
    /// Source outline; empty for boxes given directly.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 2]>,
}

impl From<&Annotation> for AnnotationRecord {
    fn from(a: &Annotation) -> Self {
        AnnotationRecord {
            image_id: a.image_id.clone(),
            class: a.class.clone(),
            difficult: a.difficult,
            cx: a.bbox.cx,
            cy: a.bbox.cy,
            w: a.bbox.w,
            h: a.bbox.h,
            theta_deg: a.bbox.theta,
            prow_side: a.prow.map(|s| s.index() as u8),
            points: a.points().iter().map(|p| [p.x, p.y]).collect(),
        }
    }
}

impl AnnotationRecord {
    /// Validates the record; the box is canonicalized, carrying the prow
    /// label along.
    pub fn to_annotation(&self) -> Result<Annotation> {
        let raw = RotatedBox::new(self.cx, self.cy, self.w, self.h, self.theta_deg);
        let side = self.prow_side.map(ProwSide::new).transpose()?;
        let (bbox, prow) = match side {
            Some(s) => {
                let (b, s) = canonicalize_with_side(&raw, s)?;
                (b, Some(s))
            }
            None => (raw.canonicalize()?, None),
        };
        let pts: Vec<Point> = self.points.iter().map(|p| Point::new(p[0], p[1])).collect();
        let geometry = match (pts.len(), prow) {
            (0, _) => Geometry::Box,
            (_, Some(_)) => Geometry::Contour(pts),
            (4, None) => Geometry::Quad([pts[0], pts[1], pts[2], pts[3]]),
            (n, None) => return Err(IoError::Data(format!("a quadrilateral needs 4 points, found {n}"))),
        };
        Ok(Annotation {
            image_id: self.image_id.clone(),
            class: self.class.clone(),
            difficult: self.difficult,
            geometry,
            bbox,
            prow,
        })
    }
}

pub fn read_annotations(text: &str) -> Result<Vec<Annotation>> {
    lines::numbered(text)
        .map(|(line, s)| {
            let rec: AnnotationRecord = serde_json::from_str(s).map_err(|e| IoError::json(line, e))?;
            rec.to_annotation().map_err(|e| IoError::parse(line, e.to_string()))
        })
        .collect()
}

pub fn write_annotations(anns: &[Annotation]) -> Result<String> {
    let recs: Vec<AnnotationRecord> = anns.iter().map(AnnotationRecord::from).collect();
    lines::write_json_lines(&recs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dota_axis_aligned_quad() {
        let anns = parse_dota("imagesource:GoogleEarth\ngsd:0.5\n0 0 10 0 10 4 0 4 ship 0\n", "P0001").unwrap();
        assert_eq!(anns.len(), 1);
        let a = &anns[0];
        // theta = -90 puts the w edge along y.
        assert_eq!(a.bbox, RotatedBox::new(5.0, 2.0, 4.0, 10.0, -90.0));
        assert_eq!((a.class.as_str(), a.difficult, a.image_id.as_str()), ("ship", false, "P0001"));
        let hard = parse_dota("0 0 10 0 10 4 0 4 ship 1", "x").unwrap();
        assert!(hard[0].difficult);
    }

    #[test]
    fn dota_errors_name_the_line() {
        let err = parse_dota("gsd:1\n0 0 10 0 10 4 0 4 ship 0\n0 0 10 0 10 4 0 4 ship\n", "x").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 3, .. }), "{err}");
        let err = parse_dota("0 0 ten 0 10 4 0 4 ship 0", "x").unwrap_err();
        assert!(err.to_string().starts_with("line 1:"), "{err}");
        let err = parse_dota("0 0 0 0 0 0 0 0 ship 0", "x").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 1, .. }));
    }

    #[test]
    fn contour_from_edge_midpoint() {
        let b = RotatedBox::new(0.0, 0.0, 8.0, 2.0, -30.0);
        for side in 0..4 {
            let c = b.corners();
            let mid = b.edge_midpoint(side);
            let rec = ContourRecord {
                image: "i".into(),
                class: "ship".into(),
                points: [mid, c[(side + 1) % 4], c[(side + 2) % 4], c[(side + 3) % 4], c[side]]
                    .iter()
                    .map(|p| [p.x, p.y])
                    .collect(),
            };
            let a = parse_srss_contour(&rec).unwrap();
            let side_now = a.prow.unwrap();
            assert!(a.bbox.edge_midpoint(side_now.index()).distance(mid) < 1e-9);
        }
    }

    #[test]
    fn short_contour_rejected() {
        let rec = ContourRecord { image: "i".into(), class: "ship".into(), points: vec![[0.0, 0.0], [1.0, 0.0]] };
        assert!(parse_srss_contour(&rec).is_err());
        let text = serde_json::to_string(&rec).unwrap();
        assert!(matches!(parse_srss(&text), Err(IoError::Parse { line: 1, .. })));
    }

    #[test]
    fn contour_records_round_trip() {
        let recs = vec![
            ContourRecord { image: "a".into(), class: "ship".into(), points: vec![[0.1, 0.2], [3.0, 0.0], [1.0, 5.0 / 3.0]] },
            ContourRecord { image: "b\"q".into(), class: "cargo ship".into(), points: vec![[1e-7, -2.5], [9.0, 1.0], [4.0, 4.0]] },
        ];
        let text = write_contours(&recs).unwrap();
        assert_eq!(read_contours(&text).unwrap(), recs);
    }

    #[test]
    fn annotation_lines_round_trip() {
        let mut anns = parse_dota("0 0 10 0 10 4 0 4 ship 0\n1 1 9 3 8 6 0 4 boat 1", "img").unwrap();
        let b = RotatedBox::new(0.0, 0.0, 8.0, 2.0, -30.0);
        let c = b.corners();
        anns.push(Annotation::from_contour("img", "ship", vec![b.edge_midpoint(2), c[3], c[0], c[1], c[2]], false).unwrap());
        let text = write_annotations(&anns).unwrap();
        assert_eq!(read_annotations(&text).unwrap(), anns);
    }

    #[test]
    fn annotation_unknown_field() {
        let err = read_annotations(r#"{"image_id":"a","class":"s","cx":0,"cy":0,"w":1,"h":1,"theta_deg":-90,"colour":1}"#)
            .unwrap_err();
        match err {
            IoError::UnknownField { line, field } => assert_eq!((line, field.as_str()), (1, "colour")),
            other => panic!("{other}"),
        }
    }
}
