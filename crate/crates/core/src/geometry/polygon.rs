use alloc::vec::Vec;

use super::Point;

/// Vertices closer than this are merged after clipping.
const MERGE_EPS: f64 = 1e-9;
/// Intersections with less area than this are reported as empty.
const AREA_EPS: f64 = 1e-12;

/// Ordered vertex list. Outputs of this module are convex and
/// counterclockwise (positive shoelace area).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn empty() -> Self {
        Polygon { vertices: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Shoelace sum; positive for counterclockwise vertex order.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a.cross(b);
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Copy with counterclockwise orientation.
    pub fn to_ccw(&self) -> Polygon {
        let mut p = self.clone();
        if p.signed_area() < 0.0 {
            p.vertices.reverse();
        }
        p
    }
}

pub fn polygon_area(p: &Polygon) -> f64 {
    p.area()
}

/// Intersection of two convex counterclockwise polygons by successive
/// half-plane clipping of `a` against every edge of `b`.
pub fn convex_intersection(a: &Polygon, b: &Polygon) -> Polygon {
    if a.len() < 3 || b.len() < 3 {
        return Polygon::empty();
    }
    let mut current = a.vertices.clone();
    let mut next = Vec::with_capacity(current.len() + b.len());
    let m = b.len();
    for i in 0..m {
        let e0 = b.vertices[i];
        let e1 = b.vertices[(i + 1) % m];
        let edge = e1 - e0;
        let len = edge.norm();
        if len == 0.0 {
            continue;
        }
        // Signed distance to the clip line, positive on the inner (left) side.
        let dist = |p: Point| edge.cross(p - e0) / len;

        next.clear();
        let n = current.len();
        for j in 0..n {
            let p = current[j];
            let q = current[(j + 1) % n];
            let dp = dist(p);
            let dq = dist(q);
            if dp >= 0.0 {
                next.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                next.push(p + (q - p) * t);
            }
        }
        core::mem::swap(&mut current, &mut next);
        if current.len() < 3 {
            return Polygon::empty();
        }
    }

    let merged = merge_close(current);
    let out = Polygon::new(merged);
    if out.len() < 3 || out.signed_area() < AREA_EPS {
        Polygon::empty()
    } else {
        out
    }
}

fn merge_close(pts: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(last) if last.distance(p) < MERGE_EPS => {}
            _ => out.push(p),
        }
    }
    while out.len() > 1 && out[0].distance(out[out.len() - 1]) < MERGE_EPS {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RotatedBox;
    use alloc::vec;

    fn square(x0: f64, y0: f64, s: f64) -> Polygon {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x0 + s, y0),
            Point::new(x0 + s, y0 + s),
            Point::new(x0, y0 + s),
        ])
    }

    #[test]
    fn shoelace_examples() {
        assert_eq!(polygon_area(&square(0.0, 0.0, 1.0)), 1.0);
        assert_eq!(polygon_area(&Polygon::empty()), 0.0);
        let tri = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(0.0, 3.0)]);
        assert_eq!(polygon_area(&tri), 6.0);
        let mut cw = tri.clone();
        cw.vertices.reverse();
        assert_eq!(polygon_area(&cw), 6.0);
        assert!(cw.signed_area() < 0.0);
        assert!(cw.to_ccw().signed_area() > 0.0);
    }

    #[test]
    fn identical_squares_intersect_to_themselves() {
        let s = square(0.0, 0.0, 2.0);
        let i = convex_intersection(&s, &s);
        assert!((i.area() - 4.0).abs() < 1e-12);
        assert_eq!(i.len(), 4);
    }

    #[test]
    fn disjoint_squares_are_empty() {
        let i = convex_intersection(&square(0.0, 0.0, 1.0), &square(3.0, 0.0, 1.0));
        assert!(i.is_empty());
    }

    #[test]
    fn touching_squares_are_empty() {
        let i = convex_intersection(&square(0.0, 0.0, 1.0), &square(1.0, 0.0, 1.0));
        assert!(i.is_empty());
    }

    #[test]
    fn square_and_rotated_copy_form_octagon() {
        let a = RotatedBox::new(0.0, 0.0, 1.0, 1.0, -90.0).to_polygon();
        let b = RotatedBox::new(0.0, 0.0, 1.0, 1.0, -45.0).to_polygon();
        let i = convex_intersection(&a, &b);
        assert_eq!(i.len(), 8);
        let want = 2.0 * (core::f64::consts::SQRT_2 - 1.0);
        assert!((i.area() - want).abs() < 1e-12, "{}", i.area());
    }

    #[test]
    fn contained_polygon_is_returned() {
        let outer = square(0.0, 0.0, 10.0);
        let inner = square(2.0, 3.0, 1.5);
        let i = convex_intersection(&outer, &inner);
        assert!((i.area() - 2.25).abs() < 1e-12);
        let j = convex_intersection(&inner, &outer);
        assert!((j.area() - 2.25).abs() < 1e-12);
    }
}
