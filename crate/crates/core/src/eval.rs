//! Detection scoring: rasterized polygon IoU, greedy one-to-one matching,
//! micro-averaged precision/recall/F-measure, polygon NMS and multi-scale
//! merging.
//!
//! The matching protocol is PASCAL-style greedy IoU matching. It is not the
//! official evaluation script of any benchmark, so absolute numbers are not
//! comparable with published tables.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::Corpus;
use crate::geometry::{fill_polygon, signed_area, Point2D, TextPolygon};
use crate::textfill::Detection;

pub const DEFAULT_MATCH_IOU: f64 = 0.5;
pub const DEFAULT_MERGE_IOU: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("duplicate image id {0:?}")]
    DuplicateImage(String),
    #[error("predictions reference unknown image id {0:?}")]
    UnknownImage(String),
    #[error("scale frame {width}x{height} is not positive")]
    BadScale { width: f64, height: f64 },
}

fn bounds(ring: &[Point2D]) -> (Point2D, Point2D) {
    let mut lo = Point2D::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2D::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in ring {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

fn is_degenerate(ring: &[Point2D]) -> bool {
    ring.len() < 3 || !ring.iter().all(|p| p.is_finite()) || signed_area(ring).abs() <= 1e-9
}

/// Intersection over union of two rings rasterized on their joint bounding
/// box with `resolution` samples per pixel along each axis. Samples sit on
/// the integer lattice (pixel centers) scaled by `1 / resolution`.
/// Degenerate rings score 0.
pub fn polygon_iou(a: &[Point2D], b: &[Point2D], resolution: f64) -> f64 {
    if is_degenerate(a) || is_degenerate(b) {
        log::warn!("degenerate polygon in IoU computation; scoring 0");
        return 0.0;
    }
    let (alo, ahi) = bounds(a);
    let (blo, bhi) = bounds(b);
    if ahi.x < blo.x || bhi.x < alo.x || ahi.y < blo.y || bhi.y < alo.y {
        return 0.0;
    }
    let lo = Point2D::new(
        (alo.x.min(blo.x) * resolution).floor() / resolution,
        (alo.y.min(blo.y) * resolution).floor() / resolution,
    );
    let hi = Point2D::new(ahi.x.max(bhi.x), ahi.y.max(bhi.y));
    let w = ((hi.x - lo.x) * resolution).floor() as usize + 1;
    let h = ((hi.y - lo.y) * resolution).floor() as usize + 1;
    let ma = fill_polygon(a, lo, w, h, resolution);
    let mb = fill_polygon(b, lo, w, h, resolution);
    let inter = ma.intersection_count(&mb);
    let union = ma.count() + mb.count() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub prediction: usize,
    pub groundtruth: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_predictions: Vec<usize>,
    pub unmatched_groundtruth: Vec<usize>,
    /// Predictions whose best overlap is a don't-care region; excluded from
    /// the prediction count.
    pub ignored_predictions: Vec<usize>,
    /// Groundtruth entries flagged don't-care.
    pub ignored_groundtruth: Vec<usize>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }

    /// Predictions that count toward precision.
    pub fn counted_predictions(&self) -> usize {
        self.pairs.len() + self.unmatched_predictions.len()
    }

    /// Groundtruth entries that count toward recall.
    pub fn counted_groundtruth(&self) -> usize {
        self.pairs.len() + self.unmatched_groundtruth.len()
    }
}

/// Greedy one-to-one matching in descending IoU order (ties by prediction
/// then groundtruth index). Only pairs with IoU at or above `iou_threshold`
/// match. Ignore-flagged groundtruth is never matched or missed.
pub fn match_detections(preds: &[Vec<Point2D>], gts: &[TextPolygon], iou_threshold: f64) -> MatchResult {
    let ious: Vec<Vec<f64>> = preds
        .iter()
        .map(|p| gts.iter().map(|g| polygon_iou(p, &g.vertices, 1.0)).collect())
        .collect();

    let mut candidates: Vec<MatchedPair> = Vec::new();
    for (pi, row) in ious.iter().enumerate() {
        for (gi, &iou) in row.iter().enumerate() {
            if !gts[gi].ignore && iou >= iou_threshold {
                candidates.push(MatchedPair {
                    prediction: pi,
                    groundtruth: gi,
                    iou,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.prediction.cmp(&b.prediction))
            .then(a.groundtruth.cmp(&b.groundtruth))
    });
    let mut pred_used = vec![false; preds.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !pred_used[c.prediction] && !gt_used[c.groundtruth] {
            pred_used[c.prediction] = true;
            gt_used[c.groundtruth] = true;
            pairs.push(c);
        }
    }

    let mut result = MatchResult {
        pairs,
        ..Default::default()
    };
    for (pi, row) in ious.iter().enumerate() {
        if pred_used[pi] {
            continue;
        }
        let best = |ignore: bool| {
            row.iter()
                .zip(gts)
                .filter(|(_, g)| g.ignore == ignore)
                .map(|(&v, _)| v)
                .fold(0.0, f64::max)
        };
        let (best_ignore, best_valid) = (best(true), best(false));
        if best_ignore > 0.0 && best_ignore >= best_valid {
            result.ignored_predictions.push(pi);
        } else {
            result.unmatched_predictions.push(pi);
        }
    }
    for (gi, g) in gts.iter().enumerate() {
        if g.ignore {
            result.ignored_groundtruth.push(gi);
        } else if !gt_used[gi] {
            result.unmatched_groundtruth.push(gi);
        }
    }
    result
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub true_positives: usize,
    pub predictions: usize,
    pub groundtruth: usize,
}

impl Tally {
    pub fn of(m: &MatchResult) -> Self {
        Self {
            true_positives: m.true_positives(),
            predictions: m.counted_predictions(),
            groundtruth: m.counted_groundtruth(),
        }
    }

    /// `(precision, recall, f-measure)`; each ratio is 0 when its
    /// denominator is 0.
    pub fn scores(&self) -> (f64, f64, f64) {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let p = ratio(self.true_positives, self.predictions);
        let r = ratio(self.true_positives, self.groundtruth);
        (p, r, f_measure(p, r))
    }
}

impl std::ops::Add for Tally {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Self {
            true_positives: self.true_positives + other.true_positives,
            predictions: self.predictions + other.predictions,
            groundtruth: self.groundtruth + other.groundtruth,
        }
    }
}

pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub image_id: String,
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    pub tally: Tally,
    pub matches: MatchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    pub tally: Tally,
    pub per_image: Vec<ImageReport>,
}

/// Scores a corpus of detections against groundtruth. Images without
/// predictions count as zero detections; P/R are micro-averaged over the
/// pooled counts.
pub fn report(
    groundtruth: &Corpus,
    predictions: &HashMap<String, Vec<Detection>>,
    iou_threshold: f64,
) -> Result<EvalReport, EvalError> {
    let mut seen = HashSet::new();
    for img in &groundtruth.images {
        if !seen.insert(img.image_id.as_str()) {
            return Err(EvalError::DuplicateImage(img.image_id.clone()));
        }
    }
    let mut unknown: Vec<&String> = predictions.keys().filter(|k| !seen.contains(k.as_str())).collect();
    unknown.sort();
    if let Some(id) = unknown.first() {
        return Err(EvalError::UnknownImage((*id).clone()));
    }

    let empty = Vec::new();
    let per_image: Vec<ImageReport> = groundtruth
        .images
        .par_iter()
        .map(|img| {
            let dets = predictions.get(&img.image_id).unwrap_or(&empty);
            let polys: Vec<Vec<Point2D>> = dets.iter().map(|d| d.polygon.clone()).collect();
            let matches = match_detections(&polys, &img.polygons, iou_threshold);
            let tally = Tally::of(&matches);
            let (precision, recall, fmeasure) = tally.scores();
            ImageReport {
                image_id: img.image_id.clone(),
                precision,
                recall,
                fmeasure,
                tally,
                matches,
            }
        })
        .collect();
    let tally = per_image.iter().fold(Tally::default(), |acc, r| acc + r.tally);
    let (precision, recall, fmeasure) = tally.scores();
    if tally.predictions + tally.groundtruth == 0 {
        log::warn!("nothing to score: no groundtruth and no predictions");
    }
    Ok(EvalReport {
        iou_threshold,
        precision,
        recall,
        fmeasure,
        tally,
        per_image,
    })
}

/// Greedy polygon NMS. Detections are ranked by score, then region area
/// (both descending), then input order; a detection survives when its IoU
/// with every survivor so far is at most `iou_threshold`. Survivors are
/// returned in rank order.
pub fn polygon_nms(detections: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&detections[a], &detections[b]);
        db.score
            .total_cmp(&da.score)
            .then(db.region_area.cmp(&da.region_area))
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let clear = kept
            .iter()
            .all(|&j| polygon_iou(&detections[i].polygon, &detections[j].polygon, 1.0) <= iou_threshold);
        if clear {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| detections[i].clone()).collect()
}

/// Canvas size a set of detections was produced on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub width: f64,
    pub height: f64,
}

impl Frame {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

/// Maps a point between frames; pixel centers sit at integer coordinates.
pub fn rescale_point(p: Point2D, from: Frame, to: Frame) -> Point2D {
    let (sx, sy) = (to.width / from.width, to.height / from.height);
    Point2D::new((p.x + 0.5) * sx - 0.5, (p.y + 0.5) * sy - 0.5)
}

/// Rescales every scale's detections into the `target` frame, pools them and
/// runs [`polygon_nms`].
pub fn merge_multiscale(
    per_scale: &[(Frame, Vec<Detection>)],
    target: Frame,
    iou_threshold: f64,
) -> Result<Vec<Detection>, EvalError> {
    let positive = |f: Frame| f.width > 0.0 && f.height > 0.0 && f.width.is_finite() && f.height.is_finite();
    if !positive(target) {
        return Err(EvalError::BadScale {
            width: target.width,
            height: target.height,
        });
    }
    let mut pooled = Vec::new();
    for (frame, dets) in per_scale {
        if !positive(*frame) {
            return Err(EvalError::BadScale {
                width: frame.width,
                height: frame.height,
            });
        }
        let area_factor = (target.width / frame.width) * (target.height / frame.height);
        for d in dets {
            pooled.push(Detection {
                polygon: d.polygon.iter().map(|&p| rescale_point(p, *frame, target)).collect(),
                score: d.score,
                region_area: (d.region_area as f64 * area_factor).round() as usize,
            });
        }
    }
    Ok(polygon_nms(&pooled, iou_threshold))
}

fn cross(o: Point2D, a: Point2D, b: Point2D) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull by monotone chain, counter-clockwise in a y-up frame.
pub fn convex_hull(points: &[Point2D]) -> Vec<Point2D> {
    let mut pts: Vec<Point2D> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2D> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2D>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle of a polygon, as four corners. Used to
/// score detections against rectangle-annotated datasets.
pub fn min_area_rect(polygon: &[Point2D]) -> Vec<Point2D> {
    let hull = convex_hull(polygon);
    if hull.len() < 3 {
        return hull;
    }
    let mut best: Option<(f64, [Point2D; 4])> = None;
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        let len = a.distance(b);
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let (dx, dy) = (p.x - a.x, p.y - a.y);
            let u = dx * ux + dy * uy;
            let v = -dx * uy + dy * ux;
            lo_u = lo_u.min(u);
            hi_u = hi_u.max(u);
            lo_v = lo_v.min(v);
            hi_v = hi_v.max(v);
        }
        let area = (hi_u - lo_u) * (hi_v - lo_v);
        if best.as_ref().is_none_or(|(a0, _)| area < *a0) {
            let at = |u: f64, v: f64| Point2D::new(a.x + u * ux - v * uy, a.y + u * uy + v * ux);
            best = Some((area, [at(lo_u, lo_v), at(hi_u, lo_v), at(hi_u, hi_v), at(lo_u, hi_v)]));
        }
    }
    best.map(|(_, r)| r.to_vec()).unwrap_or(hull)
}
