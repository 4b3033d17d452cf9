use proptest::prelude::*;

use skewdet_core::encoding::{canonicalize_with_side, decode, encode, nearest_side, ProwSide};
use skewdet_core::evaluation::{evaluate, EvalConfig, GroundTruth};
use skewdet_core::geometry::{iou_rasterized, min_area_rect, skew_iou, Point, RotatedBox};
use skewdet_core::nms::{angle_difference, rnms, soft_nms, Detection, RnmsConfig};
use skewdet_core::tiling::{merge_tiles, partition, plan_tiles};

fn any_box() -> impl Strategy<Value = RotatedBox> {
    (-100.0..100.0f64, -100.0..100.0f64, 1.0..100.0f64, 1.0..100.0f64, -720.0..720.0f64)
        .prop_map(|(cx, cy, w, h, t)| RotatedBox::new(cx, cy, w, h, t))
}

fn canonical_box() -> impl Strategy<Value = RotatedBox> {
    (-60.0..60.0f64, -60.0..60.0f64, 1.0..100.0f64, 1.0..100.0f64, -90.0..0.0f64)
        .prop_map(|(cx, cy, w, h, t)| RotatedBox::new(cx, cy, w, h, t))
}

fn corner_set_error(a: &RotatedBox, b: &RotatedBox) -> f64 {
    let (ca, cb) = (a.corners(), b.corners());
    ca.iter()
        .map(|p| cb.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn detections(max: usize) -> impl Strategy<Value = Vec<Detection>> {
    prop::collection::vec((canonical_box(), 0.0..1.0f64), 0..max)
        .prop_map(|v| v.into_iter().map(|(b, s)| Detection::new(b, s, 0)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn canonicalize_is_idempotent_and_same_rectangle(b in any_box()) {
        let c = b.canonicalize().unwrap();
        prop_assert!(c.is_canonical());
        prop_assert_eq!(c.canonicalize().unwrap(), c);
        prop_assert!(corner_set_error(&b, &c) < 1e-9);
    }

    #[test]
    fn skew_iou_is_symmetric_and_bounded(a in canonical_box(), b in canonical_box()) {
        let ab = skew_iou(&a, &b).unwrap();
        prop_assert_eq!(ab.to_bits(), skew_iou(&b, &a).unwrap().to_bits());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((skew_iou(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn skew_iou_rigid_motion_invariant(
        a in canonical_box(), b in canonical_box(),
        dx in -500.0..500.0f64, dy in -500.0..500.0f64, rot in -180.0..180.0f64,
    ) {
        let (s, c) = rot.to_radians().sin_cos();
        let moved = |r: &RotatedBox| {
            let x = c * r.cx - s * r.cy + dx;
            let y = s * r.cx + c * r.cy + dy;
            RotatedBox::new(x, y, r.w, r.h, r.theta + rot)
        };
        let before = skew_iou(&a, &b).unwrap();
        let after = skew_iou(&moved(&a), &moved(&b)).unwrap();
        prop_assert!((before - after).abs() < 1e-9, "{} vs {}", before, after);
    }

    #[test]
    fn skew_iou_close_to_raster(a in canonical_box(), b in canonical_box()) {
        let exact = skew_iou(&a, &b).unwrap();
        let raster = iou_rasterized(&a, &b, 1000).unwrap();
        prop_assert!((exact - raster).abs() < 5e-3);
    }

    #[test]
    fn min_area_rect_beats_every_direction(
        pts in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 3..30)
    ) {
        let pts: Vec<Point> = pts.into_iter().map(Point::from).collect();
        let Ok(r) = min_area_rect(&pts) else { return Ok(()); };
        // Brute force over one-tenth-degree directions.
        let mut best = f64::INFINITY;
        for k in 0..900 {
            let (s, c) = (k as f64 / 10.0).to_radians().sin_cos();
            let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in &pts {
                let u = c * p.x + s * p.y;
                let v = -s * p.x + c * p.y;
                u0 = u0.min(u); u1 = u1.max(u); v0 = v0.min(v); v1 = v1.max(v);
            }
            best = best.min((u1 - u0) * (v1 - v0));
        }
        prop_assert!(r.area() <= best + 1e-6);
        prop_assert!(r.is_canonical());
        let grown = RotatedBox { w: r.w + 1e-6, h: r.h + 1e-6, ..r };
        prop_assert!(pts.iter().all(|p| grown.contains(*p)));
    }

    #[test]
    fn encode_decode_round_trip(gt in any_box(), anchor in canonical_box()) {
        let t = encode(&gt, &anchor).unwrap();
        let back = decode(&anchor, &t).unwrap();
        prop_assert!(corner_set_error(&back, &gt) < 1e-6);
        prop_assert!(back.is_canonical());
    }

    #[test]
    fn side_survives_canonicalization(b in any_box(), side in 0u8..4) {
        let side = ProwSide::new(side).unwrap();
        let (c, mapped) = canonicalize_with_side(&b, side).unwrap();
        prop_assert!(b.edge_midpoint(side.index()).distance(c.edge_midpoint(mapped.index())) < 1e-9);
        prop_assert!((b.outward_normal(side.index()) - c.outward_normal(mapped.index())).norm() < 1e-9);
    }

    #[test]
    fn nearest_side_of_edge_points(b in canonical_box(), side in 0usize..4, t in 0.3..0.7f64) {
        let (p0, p1) = b.edge(side);
        let p = p0 + (p1 - p0) * t + b.outward_normal(side) * 0.01;
        prop_assert_eq!(nearest_side(&b, p).index(), side);
    }

    #[test]
    fn rnms_is_idempotent_and_ordered(dets in detections(25)) {
        let cfg = RnmsConfig::default();
        let once = rnms(&dets, &cfg).unwrap();
        prop_assert_eq!(&rnms(&once, &cfg).unwrap(), &once);
        prop_assert!(once.windows(2).all(|w| w[0].score >= w[1].score));
        // Survivors never suppress one another.
        for (i, a) in once.iter().enumerate() {
            for b in &once[i + 1..] {
                let iou = skew_iou(&a.bbox, &b.bbox).unwrap();
                prop_assert!(!cfg.suppresses(iou, angle_difference(a.bbox.theta, b.bbox.theta)));
            }
        }
    }

    #[test]
    fn soft_nms_keeps_at_least_hard(dets in detections(20)) {
        let hard = rnms(&dets, &RnmsConfig::default()).unwrap();
        let soft = soft_nms(&dets, 0.5, 0.0).unwrap();
        prop_assert!(soft.len() >= hard.len());
    }

    #[test]
    fn evaluate_ignores_input_order(
        gts in prop::collection::vec((canonical_box(), 0u32..2), 0..8),
        dets in prop::collection::vec((canonical_box(), 0.0..1.0f64, 0u32..2), 0..10),
        seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let gts: Vec<GroundTruth> = gts.into_iter().map(|(b, c)| GroundTruth::new(b, c)).collect();
        let dets: Vec<Detection> = dets.into_iter().map(|(b, s, c)| Detection::new(b, s, c)).collect();
        let report = evaluate(&dets, &gts, &EvalConfig::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (mut d2, mut g2) = (dets.clone(), gts.clone());
        d2.shuffle(&mut rng);
        g2.shuffle(&mut rng);
        prop_assert_eq!(evaluate(&d2, &g2, &EvalConfig::default()).unwrap(), report);
    }

    #[test]
    fn tiles_cover_and_partition(
        w in 1u32..5000, h in 1u32..5000, tile in 100u32..1500, overlap in 0.0..0.8f64,
        centers in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 0..40),
    ) {
        let plan = plan_tiles(w, h, tile, overlap).unwrap();
        for axis in [(&plan.xs, w), (&plan.ys, h)] {
            let (origins, dim) = axis;
            prop_assert_eq!(origins[0], 0);
            prop_assert!(origins.windows(2).all(|p| p[0] < p[1] && p[1] - p[0] <= plan.stride));
            prop_assert!(origins.last().unwrap() + tile >= dim);
        }
        let boxes: Vec<RotatedBox> = centers
            .iter()
            .map(|&(fx, fy)| RotatedBox::new(fx * w as f64, fy * h as f64, 20.0, 5.0, -10.0))
            .collect();
        let parts = partition(&plan, &boxes);
        let mut seen = vec![0; boxes.len()];
        for (k, part) in parts.iter().enumerate() {
            let (ox, _) = plan.origin(k).unwrap();
            for (i, local) in part {
                seen[*i] += 1;
                prop_assert_eq!(local.cx + ox as f64, boxes[*i].cx);
                prop_assert!(local.cx >= 0.0 && local.cx <= tile as f64);
                prop_assert!(local.cy >= 0.0 && local.cy <= tile as f64);
            }
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
    }

    #[test]
    fn single_tile_merge_is_rnms(dets in detections(20)) {
        let plan = plan_tiles(200, 200, 200, 0.4).unwrap();
        let dets: Vec<Detection> = dets.into_iter().map(|d| d.with_image("s")).collect();
        let merged = merge_tiles(&plan, std::slice::from_ref(&dets), &RnmsConfig::default(), "s").unwrap();
        prop_assert_eq!(merged, rnms(&dets, &RnmsConfig::default()).unwrap());
    }
}
