use alloc::vec::Vec;

use super::{Point, Polygon, RotatedBox};
use crate::math;
use crate::{Error, Result};

/// Andrew's monotone chain. Returns a counterclockwise hull with collinear
/// points removed; fewer than three vertices means the input is degenerate.
pub fn convex_hull(points: &[Point]) -> Polygon {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Polygon::new(pts);
    }

    let turn = |o: Point, a: Point, b: Point| (a - o).cross(b - o);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    Polygon::new(hull)
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex
/// hull, returned canonicalized.
pub fn min_area_rect(points: &[Point]) -> Result<RotatedBox> {
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry("need at least three points"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::DegenerateGeometry("non-finite point"));
    }
    let hull = convex_hull(points);
    let scale = hull
        .vertices
        .iter()
        .map(|p| p.distance(hull.vertices[0]))
        .fold(0.0, f64::max);
    if hull.len() < 3 || hull.area() <= 1e-12 * scale * scale {
        return Err(Error::DegenerateGeometry("points are collinear"));
    }

    let h = &hull.vertices;
    let n = h.len();
    let next = |i: usize| (i + 1) % n;

    // Caliper pointers: farthest along the edge, farthest from the edge
    // (inward normal), and farthest against the edge direction.
    let mut i_max_u = 0usize;
    let mut i_max_v = 0usize;
    let mut i_min_u = 0usize;
    let mut best: Option<(f64, RotatedBox)> = None;

    for e in 0..n {
        let p0 = h[e];
        let p1 = h[next(e)];
        let d = p1 - p0;
        let u = d * (1.0 / d.norm());
        let v = Point::new(-u.y, u.x);

        if e == 0 {
            for k in 0..n {
                if h[k].dot(u) > h[i_max_u].dot(u) {
                    i_max_u = k;
                }
                if h[k].dot(v) > h[i_max_v].dot(v) {
                    i_max_v = k;
                }
                if h[k].dot(u) < h[i_min_u].dot(u) {
                    i_min_u = k;
                }
            }
        } else {
            for _ in 0..n {
                if h[next(i_max_u)].dot(u) > h[i_max_u].dot(u) {
                    i_max_u = next(i_max_u);
                } else {
                    break;
                }
            }
            for _ in 0..n {
                if h[next(i_max_v)].dot(v) > h[i_max_v].dot(v) {
                    i_max_v = next(i_max_v);
                } else {
                    break;
                }
            }
            for _ in 0..n {
                if h[next(i_min_u)].dot(u) < h[i_min_u].dot(u) {
                    i_min_u = next(i_min_u);
                } else {
                    break;
                }
            }
        }

        let max_u = h[i_max_u].dot(u);
        let min_u = h[i_min_u].dot(u);
        let min_v = p0.dot(v);
        let max_v = h[i_max_v].dot(v);
        let width = max_u - min_u;
        let height = max_v - min_v;
        let area = width * height;
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let c = u * ((min_u + max_u) / 2.0) + v * ((min_v + max_v) / 2.0);
            let theta = math::atan2(u.y, u.x).to_degrees();
            best = Some((area, RotatedBox::new(c.x, c.y, width, height, theta)));
        }
    }

    let (_, rect) = best.ok_or(Error::DegenerateGeometry("empty hull"))?;
    rect.canonicalize()
        .map_err(|_| Error::DegenerateGeometry("zero-width enclosing rectangle"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 2.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(h.signed_area() > 0.0);
    }

    #[test]
    fn rect_of_a_rect_is_itself() {
        let b = RotatedBox::new(0.0, 0.0, 6.0, 2.0, -30.0);
        let r = min_area_rect(&b.corners()).unwrap();
        for (got, want) in [(r.cx, 0.0), (r.cy, 0.0), (r.w, 6.0), (r.h, 2.0), (r.theta, -30.0)] {
            assert!((got - want).abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn axis_aligned_square() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert_eq!(min_area_rect(&pts).unwrap(), RotatedBox::new(1.0, 1.0, 2.0, 2.0, -90.0));
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(3.0, 3.0)];
        assert!(matches!(min_area_rect(&pts), Err(Error::DegenerateGeometry(_))));
        let pts = [Point::new(1.0, 1.0), Point::new(1.0, 1.0), Point::new(1.0, 1.0)];
        assert!(min_area_rect(&pts).is_err());
        assert!(min_area_rect(&pts[..2]).is_err());
    }

    #[test]
    fn triangle_rect_contains_all_points() {
        let pts = [Point::new(0.0, 0.0), Point::new(5.0, 1.0), Point::new(2.0, 4.0)];
        let r = min_area_rect(&pts).unwrap();
        let grown = RotatedBox::new(r.cx, r.cy, r.w + 2e-6, r.h + 2e-6, r.theta);
        assert!(pts.iter().all(|p| grown.contains(*p)));
    }
}
