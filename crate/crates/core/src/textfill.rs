//! Textfill: heatmap to word polygons.
//!
//! Peaks above `t_top` seed one flood each. A flood grows over the four
//! axis neighbors while [`judge_flow`] admits them, the flooded region has
//! its holes filled, and the region is dilated by a square kernel whose size
//! grows with the region area before its outer contour is traced.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2D;
use crate::heatmap::Heatmap;
use crate::raster::{
    centroid, connected_components, dilate, fill_holes, trace_contour, BinaryMask, Connectivity,
    Contour, Pixel, RasterError,
};

/// Areas above this use the fixed kernel size.
pub const KERNEL_AREA_LIMIT: usize = 20_000;
pub const MAX_KERNEL: usize = 35;

// Regions overlapping by more than this share of the smaller one are duplicates.
const DUPLICATE_OVERLAP: f64 = 0.9;

#[derive(Debug, Error, PartialEq)]
pub enum TextfillError {
    #[error("invalid thresholds: need 0 < t_end < t_top < 1, got t_top={t_top}, t_end={t_end}")]
    InvalidThresholds { t_top: f64, t_end: f64 },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextfillConfig {
    pub t_top: f64,
    pub t_end: f64,
    /// Floods smaller than this many pixels are discarded.
    pub min_region_area: usize,
    /// Douglas-Peucker tolerance in pixels; 0 keeps the raw contour.
    pub simplify_tolerance: f64,
}

impl TextfillConfig {
    /// Thresholds for curved-text corpora (Total-Text, SCUT-CTW1500).
    pub const fn curved() -> Self {
        Self {
            t_top: 0.7,
            t_end: 0.2,
            min_region_area: 16,
            simplify_tolerance: 1.5,
        }
    }

    /// Thresholds for straight-text corpora (MSRA-TD500, COCO-Text).
    pub const fn straight() -> Self {
        Self {
            t_top: 0.75,
            ..Self::curved()
        }
    }

    pub fn validate(&self) -> Result<(), TextfillError> {
        let ok = self.t_end > 0.0 && self.t_top < 1.0 && self.t_end < self.t_top;
        if !ok {
            return Err(TextfillError::InvalidThresholds {
                t_top: self.t_top,
                t_end: self.t_end,
            });
        }
        Ok(())
    }
}

impl Default for TextfillConfig {
    fn default() -> Self {
        Self::curved()
    }
}

/// Named threshold presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    TotalText,
    Ctw1500,
    MsraTd500,
    CocoText,
}

impl Preset {
    pub fn config(self) -> TextfillConfig {
        match self {
            Preset::TotalText | Preset::Ctw1500 => TextfillConfig::curved(),
            Preset::MsraTd500 | Preset::CocoText => TextfillConfig::straight(),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "total-text" | "totaltext" | "curved" => Ok(Preset::TotalText),
            "ctw1500" | "scut-ctw1500" => Ok(Preset::Ctw1500),
            "msra-td500" | "td500" => Ok(Preset::MsraTd500),
            "coco-text" | "cocotext" | "straight" => Ok(Preset::CocoText),
            other => Err(format!(
                "unknown preset {other:?} (expected total-text, ctw1500, msra-td500, coco-text, curved or straight)"
            )),
        }
    }
}

/// One decoded word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub polygon: Vec<Point2D>,
    pub score: f64,
    #[serde(rename = "area")]
    pub region_area: usize,
}

/// Connected peak region and its seed pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub region: BinaryMask,
    pub center: Pixel,
}

/// Peak regions: 8-connected components of pixels strictly above `t_top`,
/// each with its centroid snapped onto the region.
pub fn extract_peaks(h: &Heatmap, t_top: f64) -> Vec<Peak> {
    connected_components(&h.threshold(t_top), Connectivity::Eight)
        .into_iter()
        .map(|region| {
            let center = centroid(&region).expect("components are nonempty");
            Peak { region, center }
        })
        .collect()
}

/// Flood admission test for moving from `(x2, y2)` to `(x1, y1)`:
/// `(H1 <= H2 && H1 > t_end) || H1 >= t_end / 2`. Out-of-bounds targets are
/// never admitted.
pub fn judge_flow(h: &Heatmap, x1: i32, y1: i32, x2: i32, y2: i32, t_end: f64) -> bool {
    if !h.in_bounds(x1, y1) {
        return false;
    }
    let v1 = h.get(x1, y1) as f64;
    let v2 = h.get(x2, y2) as f64;
    (v1 <= v2 && v1 > t_end) || v1 >= t_end / 2.0
}

/// Stack-based flood from `seed` over the four axis neighbors.
pub fn flood_region(h: &Heatmap, seed: Pixel, t_end: f64) -> BinaryMask {
    let mut visited = BinaryMask::new(h.width(), h.height());
    visited.set(seed.x as usize, seed.y as usize, true);
    let mut stack = vec![seed];
    while let Some(Pixel { x, y }) = stack.pop() {
        for (nx, ny) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
            if !visited.get(nx, ny) && judge_flow(h, nx, ny, x, y, t_end) {
                visited.set(nx as usize, ny as usize, true);
                stack.push(Pixel::new(nx, ny));
            }
        }
    }
    visited
}

/// Dilation kernel side for a region of `area` pixels:
/// `round_half_up(8 + area / 750)` up to 20 000 pixels, 35 beyond.
pub fn kernel_size(area: usize) -> usize {
    if area > KERNEL_AREA_LIMIT {
        MAX_KERNEL
    } else {
        // exact integer form of floor(8 + area/750 + 1/2)
        8 + (area + 375) / 750
    }
}

/// Dilates the region by [`kernel_size`] of its area and traces the outer
/// contour of the result.
pub fn expand_contour(region: &BinaryMask) -> Result<Contour, TextfillError> {
    let area = region.count();
    if area == 0 {
        return Err(RasterError::EmptyMask.into());
    }
    Ok(trace_contour(&dilate(region, kernel_size(area)))?)
}

/// Same result as [`expand_contour`] computed on a window around the region.
fn expand_contour_windowed(region: &BinaryMask, area: usize) -> Contour {
    let k = kernel_size(area);
    let (lo, hi) = region.bounding_box().expect("region is nonempty");
    let margin = (k / 2 + 1) as i32;
    let x0 = (lo.x - margin).max(0) as usize;
    let y0 = (lo.y - margin).max(0) as usize;
    let x1 = ((hi.x + margin) as usize).min(region.width() - 1);
    let y1 = ((hi.y + margin) as usize).min(region.height() - 1);
    let window = region.crop(x0, y0, x1 - x0 + 1, y1 - y0 + 1);
    let mut contour = trace_contour(&dilate(&window, k)).expect("dilated region is connected");
    for p in &mut contour.points {
        p.x += x0 as i32;
        p.y += y0 as i32;
    }
    contour
}

/// Fills holes using a window one pixel larger than the region's bounding box.
fn fill_holes_windowed(region: &BinaryMask) -> BinaryMask {
    let (lo, hi) = region.bounding_box().expect("region is nonempty");
    let x0 = (lo.x - 1).max(0) as usize;
    let y0 = (lo.y - 1).max(0) as usize;
    let x1 = ((hi.x + 1) as usize).min(region.width() - 1);
    let y1 = ((hi.y + 1) as usize).min(region.height() - 1);
    let filled = fill_holes(&region.crop(x0, y0, x1 - x0 + 1, y1 - y0 + 1));
    let mut out = region.clone();
    for p in filled.pixels() {
        out.set(p.x as usize + x0, p.y as usize + y0, true);
    }
    out
}

struct Candidate {
    detection: Detection,
    region: BinaryMask,
}

/// Decodes a heatmap into word polygons.
///
/// Seeds are processed in parallel; when two seeds flood into the same basin
/// (overlap above 90% of the smaller region) only the higher-scoring one is
/// kept. Output follows peak order: top-left-most peak first.
pub fn decode(h: &Heatmap, cfg: &TextfillConfig) -> Result<Vec<Detection>, TextfillError> {
    cfg.validate()?;
    let peaks = extract_peaks(h, cfg.t_top);
    let candidates: Vec<Option<Candidate>> = peaks
        .par_iter()
        .map(|peak| {
            let flooded = flood_region(h, peak.center, cfg.t_end);
            let flooded_area = flooded.count();
            if flooded_area < cfg.min_region_area {
                return None;
            }
            let score = flooded.pixels().map(|p| h.get(p.x, p.y) as f64).sum::<f64>()
                / flooded_area as f64;
            let region = fill_holes_windowed(&flooded);
            let area = region.count();
            let contour = expand_contour_windowed(&region, area);
            let polygon = contour_to_polygon(&contour, cfg.simplify_tolerance);
            Some(Candidate {
                detection: Detection {
                    polygon,
                    score,
                    region_area: area,
                },
                region,
            })
        })
        .collect();
    let candidates: Vec<Candidate> = candidates.into_iter().flatten().collect();

    // Sequential duplicate suppression by score, ties by peak order.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .detection
            .score
            .total_cmp(&candidates[a].detection.score)
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; candidates.len()];
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let ri = &candidates[i].region;
        let duplicate = kept.iter().any(|&j| {
            let rj = &candidates[j].region;
            let smaller = candidates[i].detection.region_area.min(candidates[j].detection.region_area);
            ri.intersection_count(rj) as f64 > DUPLICATE_OVERLAP * smaller as f64
        });
        if !duplicate {
            keep[i] = true;
            kept.push(i);
        }
    }
    Ok(candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c.detection))
        .collect())
}

/// Converts a pixel contour into a polygon ring, simplified when
/// `tolerance > 0`. Simplification never leaves fewer than three vertices.
pub fn contour_to_polygon(contour: &Contour, tolerance: f64) -> Vec<Point2D> {
    let ring: Vec<Point2D> = contour.points.iter().map(|&p| p.into()).collect();
    if tolerance <= 0.0 || ring.len() <= 3 {
        return ring;
    }
    let simplified = simplify_ring(&ring, tolerance);
    if simplified.len() >= 3 {
        simplified
    } else {
        ring
    }
}

/// Douglas-Peucker on a closed ring: split at the first vertex and the vertex
/// farthest from it, simplify both chains.
pub fn simplify_ring(ring: &[Point2D], tolerance: f64) -> Vec<Point2D> {
    let n = ring.len();
    if n <= 3 {
        return ring.to_vec();
    }
    let far = (1..n)
        .max_by(|&a, &b| {
            ring[0]
                .distance(ring[a])
                .total_cmp(&ring[0].distance(ring[b]))
                .then(b.cmp(&a))
        })
        .expect("ring has more than one vertex");
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let first: Vec<Point2D> = ring[..=far].to_vec();
    let mut second: Vec<Point2D> = ring[far..].to_vec();
    second.push(ring[0]);
    douglas_peucker(&first, tolerance, 0, &mut keep);
    let mut keep_second = vec![false; second.len()];
    douglas_peucker(&second, tolerance, 0, &mut keep_second);
    for (i, &k) in keep_second.iter().enumerate().take(second.len() - 1) {
        if k {
            keep[far + i] = true;
        }
    }
    ring.iter()
        .zip(keep)
        .filter_map(|(&p, k)| k.then_some(p))
        .collect()
}

fn douglas_peucker(chain: &[Point2D], tolerance: f64, offset: usize, keep: &mut [bool]) {
    let n = chain.len();
    if n < 3 {
        return;
    }
    let (a, b) = (chain[0], chain[n - 1]);
    let (mut worst, mut worst_d) = (0, -1.0);
    for (i, &p) in chain.iter().enumerate().take(n - 1).skip(1) {
        let d = segment_distance(p, a, b);
        if d > worst_d {
            worst_d = d;
            worst = i;
        }
    }
    if worst_d > tolerance {
        keep[offset + worst] = true;
        douglas_peucker(&chain[..=worst], tolerance, offset, keep);
        douglas_peucker(&chain[worst..], tolerance, offset + worst, keep);
    }
}

fn segment_distance(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point2D::new(a.x + t * dx, a.y + t * dy))
}
