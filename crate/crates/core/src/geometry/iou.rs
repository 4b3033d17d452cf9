use core::cmp::Ordering;

use super::{bounding_hbox, convex_intersection, HorizontalBox, RotatedBox};
use crate::math;
use crate::Result;

/// Exact IoU of two rotated rectangles.
///
/// The arguments are put in a fixed order before clipping so the result is
/// bitwise symmetric.
pub fn skew_iou(a: &RotatedBox, b: &RotatedBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let (a, b) = match a.lexicographic_cmp(b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };

    // Circumscribed circles disjoint: no overlap.
    let reach = (math::hypot(a.w, a.h) + math::hypot(b.w, b.h)) / 2.0;
    if a.center().distance(b.center()) > reach {
        return Ok(0.0);
    }

    let inter = convex_intersection(&a.to_polygon(), &b.to_polygon()).area();
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

pub fn horizontal_iou(a: &HorizontalBox, b: &HorizontalBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let iw = (a.xmax.min(b.xmax) - a.xmin.max(b.xmin)).max(0.0);
    let ih = (a.ymax.min(b.ymax) - a.ymin.max(b.ymin)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Brute-force IoU estimate on a `cells_per_axis`² grid of cell centres
/// spanning the joint bounding box.
///
/// Each grid row is scanned analytically: the set of cell centres on the
/// row that pass the point-in-rectangle test is an index interval, so the
/// count is exact for the grid without visiting every cell. No polygon
/// clipping is involved, which keeps this independent of [`skew_iou`].
///
/// # Panics
///
/// If `cells_per_axis < 64`.
pub fn iou_rasterized(a: &RotatedBox, b: &RotatedBox, cells_per_axis: usize) -> Result<f64> {
    assert!(cells_per_axis >= 64, "rasterization needs at least 64 cells per axis");
    let ha = bounding_hbox(a)?;
    let hb = bounding_hbox(b)?;
    let x0 = ha.xmin.min(hb.xmin);
    let y0 = ha.ymin.min(hb.ymin);
    let dx = (ha.xmax.max(hb.xmax) - x0) / cells_per_axis as f64;
    let dy = (ha.ymax.max(hb.ymax) - y0) / cells_per_axis as f64;

    let mut count_a = 0u64;
    let mut count_b = 0u64;
    let mut count_both = 0u64;
    for row in 0..cells_per_axis {
        let y = y0 + (row as f64 + 0.5) * dy;
        let sa = row_span(a, y);
        let sb = row_span(b, y);
        count_a += cells_in(sa, x0, dx, cells_per_axis);
        count_b += cells_in(sb, x0, dx, cells_per_axis);
        if let (Some(sa), Some(sb)) = (sa, sb) {
            let both = (sa.0.max(sb.0), sa.1.min(sb.1));
            if both.0 <= both.1 {
                count_both += cells_in(Some(both), x0, dx, cells_per_axis);
            }
        }
    }
    let union = count_a + count_b - count_both;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(count_both as f64 / union as f64)
}

/// Closed x-interval of the horizontal line at `y` lying inside `b`.
fn row_span(b: &RotatedBox, y: f64) -> Option<(f64, f64)> {
    let (u, v) = b.axes();
    let dy = y - b.cy;
    // |u.x (x - cx) + u.y dy| <= w/2 and |v.x (x - cx) + v.y dy| <= h/2
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (k, m, half) in [(u.x, u.y * dy, b.w / 2.0), (v.x, v.y * dy, b.h / 2.0)] {
        if k.abs() < 1e-15 {
            if m.abs() > half {
                return None;
            }
            continue;
        }
        let t0 = (-half - m) / k;
        let t1 = (half - m) / k;
        lo = lo.max(t0.min(t1));
        hi = hi.min(t0.max(t1));
    }
    if lo > hi {
        return None;
    }
    Some((b.cx + lo, b.cx + hi))
}

/// Number of cell centres `x0 + (j + 0.5) dx`, `j < n`, inside `span`.
fn cells_in(span: Option<(f64, f64)>, x0: f64, dx: f64, n: usize) -> u64 {
    let Some((lo, hi)) = span else { return 0 };
    let first = math::ceil((lo - x0) / dx - 0.5).max(0.0);
    let last = math::floor((hi - x0) / dx - 0.5).min(n as f64 - 1.0);
    if last < first {
        0
    } else {
        (last - first) as u64 + 1
    }
}
