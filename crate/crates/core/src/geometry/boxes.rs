use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use super::{Point, Polygon};
use crate::math;
use crate::{Error, Result};

/// Five-parameter oriented rectangle.
///
/// `w` is the edge reached first when the x-axis is rotated by `theta`,
/// `h` is the other edge. Constructing a box does not canonicalize it; use
/// [`RotatedBox::canonicalize`] to bring `theta` into `[-90, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    /// Degrees.
    pub theta: f64,
}

impl RotatedBox {
    #[inline]
    pub const fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Self {
        RotatedBox { cx, cy, w, h, theta }
    }

    /// Checks the field invariants that hold for every box, canonical or not.
    pub fn validate(&self) -> Result<()> {
        let finite = self.cx.is_finite()
            && self.cy.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.theta.is_finite();
        if finite && self.w > 0.0 && self.h > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidBox)
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.validate().is_ok() && self.theta >= -90.0 && self.theta < 0.0
    }

    pub fn canonicalize(&self) -> Result<RotatedBox> {
        self.canonicalize_with_turns().map(|(b, _)| b)
    }

    /// Canonicalizes and also reports the number of quarter turns `k`
    /// (mod 4) that were removed, i.e. `theta_out = theta_in - 90 k`.
    /// Odd `k` swaps `w` and `h`.
    pub fn canonicalize_with_turns(&self) -> Result<(RotatedBox, u8)> {
        self.validate()?;
        if self.theta >= -90.0 && self.theta < 0.0 {
            return Ok((*self, 0));
        }
        let shifted = self.theta + 90.0;
        let mut r = math::fmod(shifted, 360.0);
        if r < 0.0 {
            r += 360.0;
        }
        let mut turns = (math::floor(r / 90.0) as i32).clamp(0, 3);
        let mut theta = r - 90.0 * turns as f64 - 90.0;
        if theta >= 0.0 {
            theta -= 90.0;
            turns += 1;
        }
        if theta < -90.0 {
            theta += 90.0;
            turns -= 1;
        }
        let turns = turns.rem_euclid(4) as u8;
        let (w, h) = if turns % 2 == 1 { (self.h, self.w) } else { (self.w, self.h) };
        Ok((RotatedBox::new(self.cx, self.cy, w, h, theta), turns))
    }

    #[inline]
    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Unit vectors along the `w` and `h` edges.
    #[inline]
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = math::sin_cos_deg(self.theta);
        (Point::new(c, s), Point::new(-s, c))
    }

    /// Corners starting from the `(-w/2, -h/2)` offset, counterclockwise in
    /// the mathematical sense of image coordinates (positive shoelace area).
    pub fn corners(&self) -> [Point; 4] {
        let (u, v) = self.axes();
        let c = self.center();
        let hw = self.w / 2.0;
        let hh = self.h / 2.0;
        [
            c - u * hw - v * hh,
            c + u * hw - v * hh,
            c + u * hw + v * hh,
            c - u * hw + v * hh,
        ]
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon::new(self.corners().to_vec())
    }

    /// Closed point-in-rectangle test.
    pub fn contains(&self, p: Point) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center();
        d.dot(u).abs() <= self.w / 2.0 && d.dot(v).abs() <= self.h / 2.0
    }

    /// Endpoints of side `side` (0..4).
    pub fn edge(&self, side: usize) -> (Point, Point) {
        let c = self.corners();
        (c[side % 4], c[(side + 1) % 4])
    }

    pub fn edge_midpoint(&self, side: usize) -> Point {
        let (a, b) = self.edge(side);
        (a + b) * 0.5
    }

    /// Unit outward normal of side `side`.
    pub fn outward_normal(&self, side: usize) -> Point {
        let (u, v) = self.axes();
        match side % 4 {
            0 => -v,
            1 => u,
            2 => v,
            _ => -u,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> RotatedBox {
        RotatedBox::new(self.cx + dx, self.cy + dy, self.w, self.h, self.theta)
    }

    /// Orders boxes by `(cx, cy, w, h, theta)` using IEEE total ordering.
    pub fn lexicographic_cmp(&self, other: &RotatedBox) -> Ordering {
        self.cx
            .total_cmp(&other.cx)
            .then(self.cy.total_cmp(&other.cy))
            .then(self.w.total_cmp(&other.w))
            .then(self.h.total_cmp(&other.h))
            .then(self.theta.total_cmp(&other.theta))
    }
}

impl fmt::Display for RotatedBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{}", self.cx, self.cy, self.w, self.h, self.theta)
    }
}

/// Parses the `"cx,cy,w,h,theta"` literal (theta in degrees). The result is
/// validated but not canonicalized.
impl FromStr for RotatedBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut fields = [0.0f64; 5];
        let mut parts = s.split(',');
        for slot in fields.iter_mut() {
            let part = parts.next().ok_or(Error::InvalidBox)?;
            *slot = part.trim().parse::<f64>().map_err(|_| Error::InvalidBox)?;
        }
        if parts.next().is_some() {
            return Err(Error::InvalidBox);
        }
        let b = RotatedBox::new(fields[0], fields[1], fields[2], fields[3], fields[4]);
        b.validate()?;
        Ok(b)
    }
}

pub fn canonicalize(b: &RotatedBox) -> Result<RotatedBox> {
    b.canonicalize()
}

pub fn to_corners(b: &RotatedBox) -> Result<Polygon> {
    b.validate()?;
    Ok(b.to_polygon())
}

/// Axis-aligned box given by its upper-left and lower-right corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizontalBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl HorizontalBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let b = HorizontalBox { xmin, ymin, xmax, ymax };
        b.validate()?;
        Ok(b)
    }

    pub fn from_center_size(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        HorizontalBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.xmin.is_finite()
            && self.ymin.is_finite()
            && self.xmax.is_finite()
            && self.ymax.is_finite();
        if finite && self.xmin < self.xmax && self.ymin < self.ymax {
            Ok(())
        } else {
            Err(Error::InvalidBox)
        }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    #[inline]
    pub fn center(&self) -> Point {
        Point::new((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// The same region as a `theta = -90` rotated box (`w` runs along y).
    pub fn to_rotated(&self) -> RotatedBox {
        let c = self.center();
        RotatedBox::new(c.x, c.y, self.height(), self.width(), -90.0)
    }
}

/// Tight axis-aligned hull of the box's corners.
pub fn bounding_hbox(b: &RotatedBox) -> Result<HorizontalBox> {
    b.validate()?;
    let corners = b.corners();
    let mut hb = HorizontalBox {
        xmin: f64::INFINITY,
        ymin: f64::INFINITY,
        xmax: f64::NEG_INFINITY,
        ymax: f64::NEG_INFINITY,
    };
    for p in corners {
        hb.xmin = hb.xmin.min(p.x);
        hb.ymin = hb.ymin.min(p.y);
        hb.xmax = hb.xmax.max(p.x);
        hb.ymax = hb.ymax.max(p.y);
    }
    Ok(hb)
}
