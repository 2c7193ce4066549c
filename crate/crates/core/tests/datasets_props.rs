mod common;

use common::stroke_strategy;
use proptest::prelude::*;
use uht_core::datasets::*;
use uht_core::eval::polygon_iou;
use uht_core::geometry::{pair_vertices, pairing_is_valid, Point2D};

fn sorted(points: &[Point2D]) -> Vec<Point2D> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    v
}

fn matrix_corners(x: f64, y: f64, w: f64, h: f64, angle: f64) -> Vec<Point2D> {
    let (cx, cy) = (x + w / 2.0, y + h / 2.0);
    let m = [[angle.cos(), -angle.sin()], [angle.sin(), angle.cos()]];
    [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
        .iter()
        .map(|&(px, py)| {
            let (dx, dy) = (px - cx, py - cy);
            Point2D::new(cx + m[0][0] * dx + m[0][1] * dy, cy + m[1][0] * dx + m[1][1] * dy)
        })
        .collect()
}

#[test]
fn thousand_image_corpus_rewrites_byte_identically() {
    let (corpus, _) = synth_corpus(&SynthConfig {
        images: 1000,
        seed: 11,
        ..SynthConfig::default()
    });
    let mut first = Vec::new();
    write_canonical(&corpus, &mut first).unwrap();
    let back = read_canonical("again", &first[..]).unwrap();
    assert_eq!(back.images, corpus.images);
    let mut second = Vec::new();
    write_canonical(&back, &mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn ctw_rectangle_offsets_cover_the_rectangle() {
    let (w, h) = (240i64, 50i64);
    let mut fields = vec![100, 80, 100 + w, 80 + h];
    for i in 0..7 {
        fields.extend([i * w / 6, 0]);
    }
    for i in (0..7).rev() {
        fields.extend([i * w / 6, h]);
    }
    let line = fields.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    let parsed = parse_ctw1500("r", &line, None);
    let poly = &parsed.image.polygons[0];
    assert_eq!(poly.vertices.len(), 14);
    let rect = vec![
        Point2D::new(100.0, 80.0),
        Point2D::new(340.0, 80.0),
        Point2D::new(340.0, 130.0),
        Point2D::new(100.0, 130.0),
    ];
    assert!(polygon_iou(&poly.vertices, &rect, 1.0) > 0.999);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn msra_corners_match_rotation_matrix(x in 0.0f64..400.0, y in 0.0f64..400.0, w in 5.0f64..200.0, h in 5.0f64..80.0, angle in -1.5f64..1.5) {
        let line = format!("3 0 {x} {y} {w} {h} {angle}");
        let parsed = parse_msra_td500("m", &line, None);
        prop_assert!(parsed.diagnostics.is_empty());
        let got = sorted(&parsed.image.polygons[0].vertices);
        let want = sorted(&matrix_corners(x, y, w, h, angle));
        for (a, b) in got.iter().zip(&want) {
            prop_assert!(a.distance(*b) < 1e-6);
        }
    }

    #[test]
    fn parsers_never_emit_invalid_polygons(lines in prop::collection::vec(
        prop_oneof![
            (0i32..300, 0i32..300, 1i32..100, 1i32..100, -1.5f64..1.5).prop_map(|(x, y, w, h, a)| format!("0 0 {x} {y} {w} {h} {a}")),
            (0i32..300, 0i32..300).prop_map(|(x, y)| format!("0 1 {x} {y} 0 0 0")),
            "[0-9 ,.a-z-]{0,40}",
        ],
        1..12,
    )) {
        let text = lines.join("\n");
        let nonblank = lines.iter().filter(|l| !l.trim().is_empty()).count();
        for parsed in [parse_msra_td500("g", &text, None), parse_ctw1500("g", &text, None), parse_totaltext("g", &text, None)] {
            for p in &parsed.image.polygons {
                prop_assert!(p.validate().is_ok());
                prop_assert!(pairing_is_valid(&pair_vertices(p).unwrap()));
            }
            for d in &parsed.diagnostics {
                prop_assert!(d.line.is_some());
            }
        }
        let msra = parse_msra_td500("g", &text, None);
        prop_assert_eq!(msra.image.polygons.len() + msra.diagnostics.len(), nonblank);
        let ctw = parse_ctw1500("g", &text, None);
        prop_assert_eq!(ctw.image.polygons.len() + ctw.diagnostics.len(), nonblank);
    }

    #[test]
    fn totaltext_records_keep_their_vertices(stroke in stroke_strategy(2..=9, Point2D::new(60.0, 120.0)), word in "[A-Za-z]{1,8}") {
        let xs: Vec<String> = stroke.polygon.vertices.iter().map(|p| p.x.to_string()).collect();
        let ys: Vec<String> = stroke.polygon.vertices.iter().map(|p| p.y.to_string()).collect();
        let text = format!("x: [[{}]], y: [[{}]], ornt: [u'c'], transcriptions: [u'{word}']\n", xs.join(" "), ys.join(" "));
        let parsed = parse_totaltext("t", &text, None);
        prop_assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        let poly = &parsed.image.polygons[0];
        prop_assert_eq!(sorted(&poly.vertices), sorted(&stroke.polygon.vertices));
        prop_assert_eq!(poly.transcription.as_deref(), Some(word.as_str()));
        prop_assert!(!poly.ignore);
    }

    #[test]
    fn clamping_keeps_vertices_on_canvas(x in -50.0f64..300.0, y in -50.0f64..300.0, w in 10.0f64..120.0, h in 10.0f64..60.0) {
        let line = format!("0 0 {x} {y} {w} {h} 0");
        let parsed = parse_msra_td500("c", &line, Some((200, 150)));
        for p in &parsed.image.polygons {
            for v in &p.vertices {
                prop_assert!((0.0..=200.0).contains(&v.x) && (0.0..=150.0).contains(&v.y));
            }
        }
        prop_assert_eq!(parsed.image.polygons.len() + parsed.diagnostics.len(), 1);
    }
}
