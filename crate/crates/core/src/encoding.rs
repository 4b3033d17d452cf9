//! Box/regression-target transforms and prow-side labelling.
//!
//! Both boxes are canonicalized before differencing, so the angle wrap term
//! of the rotated parameterization is always zero here; every quarter-turn
//! swap of `w`/`h` is handled by [`RotatedBox::canonicalize`].

use crate::geometry::{min_area_rect, point_segment_distance, HorizontalBox, Point, RotatedBox};
use crate::math;
use crate::{Error, Result};

/// Decoded sides larger than this are rejected.
pub const MAX_DECODED_SIDE: f64 = 1e6;
/// Distances within this of each other count as a tie when labelling sides.
const SIDE_TIE_EPS: f64 = 1e-9;

/// Offsets of a rotated box relative to an anchor. `ttheta` is in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegressionTarget {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
    pub ttheta: f64,
}

impl RegressionTarget {
    pub const fn new(tx: f64, ty: f64, tw: f64, th: f64, ttheta: f64) -> Self {
        RegressionTarget { tx, ty, tw, th, ttheta }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.tx, self.ty, self.tw, self.th, self.ttheta]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        RegressionTarget::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Offsets of a horizontal box relative to a horizontal anchor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HorizontalTarget {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
}

impl HorizontalTarget {
    pub const fn new(tx: f64, ty: f64, tw: f64, th: f64) -> Self {
        HorizontalTarget { tx, ty, tw, th }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.tx, self.ty, self.tw, self.th]
    }
}

/// Which edge of a box the prow lies on; side `i` runs from corner `i` to
/// corner `i + 1 mod 4` of [`RotatedBox::corners`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProwSide(u8);

impl ProwSide {
    pub fn new(side: u8) -> Result<Self> {
        if side < 4 {
            Ok(ProwSide(side))
        } else {
            Err(Error::InvalidLabel(side as usize))
        }
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    /// The side across the box (stern for a prow and vice versa).
    #[inline]
    pub const fn opposite(self) -> ProwSide {
        ProwSide((self.0 + 2) % 4)
    }

    pub const ALL: [ProwSide; 4] = [ProwSide(0), ProwSide(1), ProwSide(2), ProwSide(3)];
}

impl TryFrom<usize> for ProwSide {
    type Error = Error;
    fn try_from(v: usize) -> Result<Self> {
        if v < 4 {
            Ok(ProwSide(v as u8))
        } else {
            Err(Error::InvalidLabel(v))
        }
    }
}

pub fn encode(gt: &RotatedBox, anchor: &RotatedBox) -> Result<RegressionTarget> {
    let gt = gt.canonicalize()?;
    let a = anchor.canonicalize()?;
    Ok(RegressionTarget {
        tx: (gt.cx - a.cx) / a.w,
        ty: (gt.cy - a.cy) / a.h,
        tw: math::ln(gt.w / a.w),
        th: math::ln(gt.h / a.h),
        ttheta: (gt.theta - a.theta).to_radians(),
    })
}

pub fn decode(anchor: &RotatedBox, t: &RegressionTarget) -> Result<RotatedBox> {
    if !t.is_finite() {
        return Err(Error::OutOfRange("non-finite regression target"));
    }
    let a = anchor.canonicalize()?;
    let w = a.w * math::exp(t.tw);
    let h = a.h * math::exp(t.th);
    if !(w <= MAX_DECODED_SIDE && h <= MAX_DECODED_SIDE) {
        return Err(Error::OutOfRange("decoded side exceeds 1e6 px"));
    }
    let b = RotatedBox::new(
        a.cx + t.tx * a.w,
        a.cy + t.ty * a.h,
        w,
        h,
        a.theta + t.ttheta.to_degrees(),
    );
    b.canonicalize()
        .map_err(|_| Error::OutOfRange("decoded side underflowed to zero"))
}

pub fn encode_h(gt: &HorizontalBox, anchor: &HorizontalBox) -> Result<HorizontalTarget> {
    gt.validate()?;
    anchor.validate()?;
    let (g, a) = (gt.center(), anchor.center());
    let (aw, ah) = (anchor.width(), anchor.height());
    Ok(HorizontalTarget {
        tx: (g.x - a.x) / aw,
        ty: (g.y - a.y) / ah,
        tw: math::ln(gt.width() / aw),
        th: math::ln(gt.height() / ah),
    })
}

pub fn decode_h(anchor: &HorizontalBox, t: &HorizontalTarget) -> Result<HorizontalBox> {
    anchor.validate()?;
    if !t.to_array().iter().all(|v| v.is_finite()) {
        return Err(Error::OutOfRange("non-finite regression target"));
    }
    let a = anchor.center();
    let w = anchor.width() * math::exp(t.tw);
    let h = anchor.height() * math::exp(t.th);
    if !(w <= MAX_DECODED_SIDE && h <= MAX_DECODED_SIDE) {
        return Err(Error::OutOfRange("decoded side exceeds 1e6 px"));
    }
    HorizontalBox::from_center_size(a.x + t.tx * anchor.width(), a.y + t.ty * anchor.height(), w, h)
        .map_err(|_| Error::OutOfRange("decoded side underflowed to zero"))
}

/// Side of `b` closest to `p`, ties going to the smaller index.
pub fn nearest_side(b: &RotatedBox, p: Point) -> ProwSide {
    let corners = b.corners();
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for side in 0..4 {
        let d = point_segment_distance(p, corners[side], corners[(side + 1) % 4]);
        if d < best_d - SIDE_TIE_EPS {
            best = side;
            best_d = d;
        }
    }
    ProwSide(best as u8)
}

/// Encloses a prow-first contour and labels the side nearest the prow.
pub fn prow_side_from_contour(contour: &[Point]) -> Result<(RotatedBox, ProwSide)> {
    let b = min_area_rect(contour)?;
    Ok((b, nearest_side(&b, contour[0])))
}

/// Relabels `side` after `turns` quarter turns were removed from a box's
/// angle (the `turns` reported by [`RotatedBox::canonicalize_with_turns`]),
/// so the label keeps pointing at the same physical edge.
pub fn remap_prow_side(side: ProwSide, turns: i64) -> ProwSide {
    ProwSide(((side.0 as i64 + turns).rem_euclid(4)) as u8)
}

/// Canonicalizes a box together with a side label attached to it.
pub fn canonicalize_with_side(b: &RotatedBox, side: ProwSide) -> Result<(RotatedBox, ProwSide)> {
    let (c, turns) = b.canonicalize_with_turns()?;
    Ok((c, remap_prow_side(side, turns as i64)))
}

/// Unit outward normal of the labelled edge.
pub fn prow_vector(b: &RotatedBox, side: ProwSide) -> Result<Point> {
    b.validate()?;
    Ok(b.outward_normal(side.index()))
}

/// Side of `b` whose outward normal best matches `direction`; ties go to
/// the smaller index.
pub fn side_facing(b: &RotatedBox, direction: Point) -> ProwSide {
    let mut best = 0usize;
    let mut best_dot = f64::NEG_INFINITY;
    for side in 0..4 {
        let d = b.outward_normal(side).dot(direction);
        if d > best_dot + SIDE_TIE_EPS {
            best = side;
            best_dot = d;
        }
    }
    ProwSide(best as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::{FRAC_PI_3, FRAC_PI_4, LN_2};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn encode_identity_is_zero() {
        let a = RotatedBox::new(3.0, 4.0, 10.0, 5.0, -30.0);
        assert_eq!(encode(&a, &a).unwrap(), RegressionTarget::default());
        assert_eq!(decode(&a, &RegressionTarget::default()).unwrap(), a);
    }

    #[test]
    fn encode_examples() {
        let anchor = RotatedBox::new(0.0, 0.0, 10.0, 20.0, -90.0);
        let t = encode(&RotatedBox::new(5.0, 0.0, 10.0, 20.0, -90.0), &anchor).unwrap();
        assert_eq!(t, RegressionTarget::new(0.5, 0.0, 0.0, 0.0, 0.0));

        let anchor = RotatedBox::new(0.0, 0.0, 10.0, 10.0, -90.0);
        let t = encode(&RotatedBox::new(0.0, 0.0, 20.0, 10.0, -45.0), &anchor).unwrap();
        assert!(close(t.tx, 0.0) && close(t.ty, 0.0) && close(t.th, 0.0));
        assert!(close(t.tw, LN_2));
        assert!(close(t.ttheta, FRAC_PI_4));
    }

    #[test]
    fn decode_positive_angle_offset() {
        let anchor = RotatedBox::new(0.0, 0.0, 10.0, 10.0, -90.0);
        let b = decode(&anchor, &RegressionTarget::new(0.0, 0.0, 0.0, 0.0, FRAC_PI_3)).unwrap();
        assert!(close(b.theta, -30.0) && close(b.w, 10.0) && close(b.h, 10.0));
    }

    #[test]
    fn decode_rejects_huge_sides() {
        let anchor = RotatedBox::new(0.0, 0.0, 10.0, 10.0, -90.0);
        let t = RegressionTarget::new(0.0, 0.0, 20.0, 0.0, 0.0);
        assert!(matches!(decode(&anchor, &t), Err(Error::OutOfRange(_))));
        let t = RegressionTarget::new(f64::NAN, 0.0, 0.0, 0.0, 0.0);
        assert!(decode(&anchor, &t).is_err());
    }

    #[test]
    fn horizontal_examples() {
        let a = HorizontalBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert_eq!(encode_h(&a, &a).unwrap(), HorizontalTarget::default());
        let g = HorizontalBox::new(1.0, 1.0, 11.0, 11.0).unwrap();
        let t = encode_h(&g, &a).unwrap();
        assert!(close(t.tx, 0.1) && close(t.ty, 0.1) && close(t.tw, 0.0) && close(t.th, 0.0));
        let back = decode_h(&a, &t).unwrap();
        assert!(close(back.xmin, 1.0) && close(back.ymax, 11.0));
    }

    #[test]
    fn prow_from_edge_midpoint() {
        let b = RotatedBox::new(10.0, 5.0, 8.0, 3.0, -35.0);
        let mut contour: Vec<Point> = Vec::new();
        contour.push(b.edge_midpoint(2));
        contour.extend_from_slice(&b.corners());
        let (got, side) = prow_side_from_contour(&contour).unwrap();
        assert!((got.area() - b.area()).abs() < 1e-6);
        let phys = got.edge_midpoint(side.index());
        assert!(phys.distance(b.edge_midpoint(2)) < 1e-6);
    }

    #[test]
    fn corner_prow_takes_smaller_index() {
        let b = RotatedBox::new(0.0, 0.0, 4.0, 2.0, -60.0);
        // corner 1 touches sides 0 and 1
        assert_eq!(nearest_side(&b, b.corners()[1]), ProwSide(0));
        // corner 0 touches sides 3 and 0
        assert_eq!(nearest_side(&b, b.corners()[0]), ProwSide(0));
        assert_eq!(nearest_side(&b, b.corners()[3]), ProwSide(2));
    }

    #[test]
    fn remap_full_turn_is_identity() {
        for s in ProwSide::ALL {
            assert_eq!(remap_prow_side(s, 0), s);
            assert_eq!(remap_prow_side(s, 4), s);
            assert_eq!(remap_prow_side(s, -4), s);
        }
    }

    #[test]
    fn remap_keeps_physical_edge() {
        let raw = RotatedBox::new(2.0, -3.0, 5.0, 2.0, 47.0);
        let (canon, turns) = raw.canonicalize_with_turns().unwrap();
        assert_eq!((turns, canon.theta), (1, -43.0));
        for s in ProwSide::ALL {
            let r = remap_prow_side(s, turns as i64);
            assert!(raw.edge_midpoint(s.index()).distance(canon.edge_midpoint(r.index())) < 1e-9);
        }
    }

    #[test]
    fn prow_vector_of_vertical_box() {
        let b = RotatedBox::new(0.0, 0.0, 4.0, 2.0, -90.0);
        // with theta = -90 the w axis points to -y, the h axis to +x
        let v = prow_vector(&b, ProwSide(3)).unwrap();
        assert!(close(v.x, 0.0) && close(v.y, 1.0));
        let o = prow_vector(&b, ProwSide(3).opposite()).unwrap();
        assert_eq!(o, -v);
        assert_eq!(side_facing(&b, Point::new(0.0, 1.0)), ProwSide(3));
    }

    #[test]
    fn prow_side_bounds() {
        assert!(ProwSide::new(4).is_err());
        assert!(ProwSide::try_from(3usize).is_ok());
    }
}
