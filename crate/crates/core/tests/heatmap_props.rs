mod common;

use common::{build_stroke, stroke_strategy};
use proptest::prelude::*;
use uht_core::geometry::{Point2D, TextPolygon};
use uht_core::heatmap::*;

fn render(polys: &[TextPolygon], w: usize, h: usize) -> Heatmap {
    render_groundtruth(polys, w, h, &EncodeConfig::default()).heatmap
}

fn dyadic(p: Point2D) -> Point2D {
    Point2D::new((p.x * 8.0).round() / 8.0, (p.y * 8.0).round() / 8.0)
}

fn heatmap_strategy(w: usize, h: usize) -> impl Strategy<Value = Heatmap> {
    prop::collection::vec(0.0f32..=1.0, w * h).prop_map(move |v| Heatmap::from_values(w, h, v).unwrap())
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn support_grows_linearly_with_skeleton_length() {
    let radius = 8.0;
    let mut lengths = Vec::new();
    let mut counts = Vec::new();
    for len in (40..=240).step_by(20) {
        let len = len as f64;
        let poly = TextPolygon::from_coords(&[
            (20.0, 50.0 - radius),
            (20.0 + len / 2.0, 50.0 - radius),
            (20.0 + len, 50.0 - radius),
            (20.0 + len, 50.0 + radius),
            (20.0 + len / 2.0, 50.0 + radius),
            (20.0, 50.0 + radius),
        ]);
        let h = render(&[poly], 300, 100);
        let support = h.values().iter().filter(|&&v| v > REGION_THRESHOLD as f32).count();
        lengths.push(len);
        counts.push(support as f64);
    }
    let r = pearson(&lengths, &counts);
    assert!(r > 0.99, "pearson r = {r}");
}

#[test]
fn value_at_radius_is_region_threshold() {
    let mut h = Heatmap::zeros(41, 41);
    let r = 12.0;
    stamp_gaussian(&mut h, 20, 20, r / default_sigma_divisor());
    assert!((h.get(32, 20) as f64 - 0.05).abs() < 1e-6);
    assert_eq!(h.get(20, 20), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rendered_values_stay_in_unit_range(stroke in stroke_strategy(2..=8, Point2D::new(30.0, 80.0))) {
        let h = render(&[stroke.polygon], 160, 160);
        prop_assert!(h.values().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(h.max_value(), 1.0);
    }

    #[test]
    fn larger_radius_never_lowers_values(r1 in 0.5f64..20.0, grow in 0.0f64..10.0, cx in 0i32..40, cy in 0i32..40) {
        let div = default_sigma_divisor();
        let mut small = Heatmap::zeros(40, 40);
        let mut large = Heatmap::zeros(40, 40);
        stamp_gaussian(&mut small, cx, cy, r1 / div);
        stamp_gaussian(&mut large, cx, cy, (r1 + grow) / div);
        for (a, b) in small.values().iter().zip(large.values()) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn thicker_words_dominate_pointwise(len in 30.0f64..120.0, r in 3.0f64..10.0, grow in 0.0f64..5.0) {
        let word = |r: f64| TextPolygon::from_coords(&[
            (10.0, 40.0 - r), (10.0 + len / 2.0, 40.0 - r), (10.0 + len, 40.0 - r),
            (10.0 + len, 40.0 + r), (10.0 + len / 2.0, 40.0 + r), (10.0, 40.0 + r),
        ]);
        let thin = render(&[word(r)], 150, 80);
        let thick = render(&[word(r + grow)], 150, 80);
        for (a, b) in thin.values().iter().zip(thick.values()) {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn integer_translation_shifts_heatmap(
        stroke in stroke_strategy(2..=6, Point2D::new(60.0, 70.0)),
        dx in -15i32..15,
        dy in -15i32..15,
    ) {
        let base = TextPolygon::new(stroke.polygon.vertices.iter().map(|&p| dyadic(p)).collect());
        let moved = TextPolygon::new(
            base.vertices.iter().map(|p| Point2D::new(p.x + dx as f64, p.y + dy as f64)).collect(),
        );
        let (w, h) = (260usize, 260usize);
        let a = render(&[base], w, h);
        let b = render(&[moved], w, h);
        for y in 20..(h as i32 - 20) {
            for x in 20..(w as i32 - 20) {
                prop_assert_eq!(a.get(x, y), b.get(x + dx, y + dy));
            }
        }
    }

    #[test]
    fn far_apart_words_render_independently(
        left in stroke_strategy(2..=5, Point2D::new(30.0, 60.0)),
        right in stroke_strategy(2..=5, Point2D::new(330.0, 60.0)),
    ) {
        let (w, h) = (480usize, 140usize);
        let both = render(&[left.polygon.clone(), right.polygon.clone()], w, h);
        let mut expected = render(&[left.polygon], w, h);
        expected.max_with(&render(&[right.polygon], w, h)).unwrap();
        prop_assert_eq!(both, expected);
    }

    #[test]
    fn dice_is_bounded(pred in heatmap_strategy(12, 9), gt in heatmap_strategy(12, 9), t in 0.0f64..1.0) {
        let d = loss_dice(&pred, &gt, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn regression_loss_is_zero_only_on_equality(gt in heatmap_strategy(10, 10), idx in 0usize..100, delta in 0.01f32..0.5) {
        for reduction in [Reduction::Mean, Reduction::Sum] {
            prop_assert_eq!(loss_reg(&gt, &gt, REGION_THRESHOLD, reduction).unwrap(), 0.0);
            let mut values = gt.values().to_vec();
            values[idx] = if values[idx] > 0.5 { values[idx] - delta } else { values[idx] + delta };
            let pred = Heatmap::from_values(10, 10, values).unwrap();
            prop_assert!(loss_reg(&pred, &gt, REGION_THRESHOLD, reduction).unwrap() > 0.0);
        }
    }

    #[test]
    fn total_is_weighted_sum(pred in heatmap_strategy(8, 8), gt in heatmap_strategy(8, 8), l1 in 0.0f64..3.0, l2 in 0.0f64..3.0) {
        let cfg = LossConfig { lambda_center: l1, lambda_region: l2, ..LossConfig::default() };
        let b = loss_total(&pred, &gt, &cfg).unwrap();
        prop_assert!((b.total - (b.l_reg + l1 * b.l_center + l2 * b.l_region)).abs() < 1e-12);
        let same = loss_total(&gt, &gt, &cfg).unwrap();
        prop_assert_eq!(same.total, 0.0);
    }

    #[test]
    fn uhth_round_trip_is_bit_exact(h in heatmap_strategy(17, 5)) {
        let mut buf = Vec::new();
        h.write_uhth(&mut buf).unwrap();
        let back = Heatmap::read_uhth(&buf[..]).unwrap();
        prop_assert!(h.values().iter().zip(back.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!((back.width(), back.height()), (17, 5));
    }

    #[test]
    fn pgm_round_trip_is_within_quantization(h in heatmap_strategy(9, 7)) {
        let mut buf = Vec::new();
        h.write_pgm16(&mut buf).unwrap();
        let back = Heatmap::read_pgm16(&buf[..]).unwrap();
        for (a, b) in h.values().iter().zip(back.values()) {
            prop_assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-7);
        }
    }
}

#[test]
fn straight_word_peaks_on_its_skeleton_row() {
    let s = build_stroke(Point2D::new(20.0, 30.0), 0.0, &[0.0; 5], &[15.0; 5], &[6.0; 6]);
    let h = render(&[s.polygon], 140, 60);
    for x in 40..80 {
        assert_eq!(h.get(x, 30), 1.0);
        assert!(h.get(x, 29) < 1.0 && h.get(x, 31) < 1.0);
    }
}
