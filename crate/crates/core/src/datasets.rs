//! Annotation ingestion and the canonical JSON-lines corpus format.
//!
//! Native grammars handled here (one file per image):
//!
//! * Total-Text legacy text groundtruth, one record per word:
//!   `x: [[x1 x2 ...]], y: [[y1 y2 ...]], ornt: [u'c'], transcriptions: [u'word']`.
//!   A record may wrap across lines; continuation lines do not start with `x:`.
//!   A `#` transcription marks a don't-care region.
//! * SCUT-CTW1500: `xmin,ymin,xmax,ymax,dx1,dy1,...,dx14,dy14`, 32 integers,
//!   offsets relative to `(xmin, ymin)`; seven points along the top, seven
//!   back along the bottom.
//! * MSRA-TD500: `index difficulty x y w h angle`, a rectangle with top-left
//!   `(x, y)` rotated by `angle` radians about its center. Difficulty 1 marks
//!   a don't-care region.
//!
//! COCO-Text is expected pre-converted to the canonical format.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::geometry::{pair_vertices, pairing_is_valid, signed_area, GeometryError, Point2D, TextPolygon};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("record {record}: {message}")]
    Schema { record: usize, message: String },
    #[error("record {record}: duplicate image id {image_id:?}")]
    DuplicateImage { record: usize, image_id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub polygons: Vec<TextPolygon>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub name: String,
    pub images: Vec<AnnotatedImage>,
}

/// Parser result: the image plus one diagnostic per rejected line or word.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub image: AnnotatedImage,
    pub diagnostics: Vec<Diagnostic>,
}

/// Puts a ring into canonical order.
///
/// Rings are oriented clockwise on screen; quadrilaterals are rotated by one
/// vertex when that makes the paired sides the long ones. A ring whose pair
/// segments cross is retried reversed and rotated by half its length before
/// being rejected.
pub fn normalize_ring(vertices: &[Point2D]) -> Result<Vec<Point2D>, GeometryError> {
    TextPolygon::new(vertices.to_vec()).validate()?;
    let mut ring = vertices.to_vec();
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    if ring.len() == 4 {
        let d = |a: usize, b: usize| ring[a].distance(ring[b]);
        let long_sides = d(0, 1) + d(2, 3);
        let short_sides = d(1, 2) + d(3, 0);
        if long_sides < short_sides {
            ring.rotate_left(1);
        }
    }
    let half = ring.len() / 2;
    let mut rotated = ring.clone();
    rotated.rotate_left(half);
    let candidates = [ring.clone(), ring.iter().rev().copied().collect(), rotated.clone(), rotated.into_iter().rev().collect()];
    for candidate in candidates {
        if pairing_is_valid(&pair_vertices(&TextPolygon::new(candidate.clone()))?) {
            return Ok(candidate);
        }
    }
    Err(GeometryError::CrossingPairs)
}

fn clamp_ring(ring: &mut [Point2D], width: u32, height: u32) {
    for p in ring {
        p.x = p.x.clamp(0.0, width as f64);
        p.y = p.y.clamp(0.0, height as f64);
    }
}

fn extent(polys: &[TextPolygon]) -> (u32, u32) {
    let mut w = 1.0f64;
    let mut h = 1.0f64;
    for p in polys.iter().flat_map(|p| &p.vertices) {
        w = w.max(p.x.ceil() + 1.0);
        h = h.max(p.y.ceil() + 1.0);
    }
    (w as u32, h as u32)
}

struct Builder {
    image_id: String,
    size: Option<(u32, u32)>,
    polygons: Vec<TextPolygon>,
    diagnostics: Vec<Diagnostic>,
}

impl Builder {
    fn new(image_id: &str, size: Option<(u32, u32)>) -> Self {
        Self {
            image_id: image_id.to_string(),
            size,
            polygons: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn reject(&mut self, line: usize, message: impl Into<String>) {
        self.diagnostics
            .push(Diagnostic::new(message).at_line(line).for_image(&self.image_id));
    }

    fn word(&mut self, line: usize, vertices: Vec<Point2D>, transcription: Option<String>, ignore: bool) {
        let mut vertices = vertices;
        if let Some((w, h)) = self.size {
            clamp_ring(&mut vertices, w, h);
        }
        match normalize_ring(&vertices) {
            Ok(ring) => self.polygons.push(TextPolygon {
                vertices: ring,
                transcription,
                ignore,
            }),
            Err(e) => self.reject(line, format!("rejected polygon: {e}")),
        }
    }

    fn finish(self) -> Parsed {
        let (width, height) = self.size.unwrap_or_else(|| extent(&self.polygons));
        Parsed {
            image: AnnotatedImage {
                image_id: self.image_id,
                width,
                height,
                polygons: self.polygons,
            },
            diagnostics: self.diagnostics,
        }
    }
}

fn bracket_after<'a>(record: &'a str, key: &str) -> Option<&'a str> {
    let start = record.find(key)? + key.len();
    let rest = &record[start..];
    let open = rest.find('[')?;
    let body = rest[open..].trim_start_matches('[');
    let close = body.find(']')?;
    Some(&body[..close])
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect()
}

fn transcription(record: &str) -> Option<String> {
    let body = record.split("transcriptions:").nth(1)?;
    let open = body.find(['\'', '"'])?;
    let quote = body[open..].chars().next()?;
    let rest = &body[open + 1..];
    let close = rest.rfind(quote)?;
    Some(rest[..close].to_string())
}

/// Parses one Total-Text legacy annotation file.
pub fn parse_totaltext(image_id: &str, text: &str, size: Option<(u32, u32)>) -> Parsed {
    let mut b = Builder::new(image_id, size);
    let mut records: Vec<(usize, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with("x:") || records.is_empty() {
            records.push((i + 1, trimmed.to_string()));
        } else if let Some(last) = records.last_mut() {
            last.1.push(' ');
            last.1.push_str(trimmed);
        }
    }
    for (line, record) in records {
        let (Some(xs), Some(ys)) = (bracket_after(&record, "x:"), bracket_after(&record, "y:")) else {
            b.reject(line, "missing x or y coordinate array");
            continue;
        };
        let (xs, ys) = match (numbers(xs), numbers(ys)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(e), _) | (_, Err(e)) => {
                b.reject(line, e);
                continue;
            }
        };
        if xs.len() != ys.len() {
            b.reject(line, format!("{} x values but {} y values", xs.len(), ys.len()));
            continue;
        }
        let text = transcription(&record);
        let ignore = text.as_deref() == Some("#");
        let vertices = xs.iter().zip(&ys).map(|(&x, &y)| Point2D::new(x, y)).collect();
        b.word(line, vertices, text, ignore);
    }
    b.finish()
}

/// Parses one SCUT-CTW1500 annotation file.
pub fn parse_ctw1500(image_id: &str, text: &str, size: Option<(u32, u32)>) -> Parsed {
    let mut b = Builder::new(image_id, size);
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let ints: Result<Vec<i64>, _> = fields.iter().map(|t| t.parse::<i64>()).collect();
        let ints = match ints {
            Ok(v) if v.len() == 32 => v,
            Ok(v) => {
                b.reject(line_no, format!("expected 32 integers, found {}", v.len()));
                continue;
            }
            Err(_) => {
                b.reject(line_no, "expected 32 integers, found a non-integer field");
                continue;
            }
        };
        let (x0, y0) = (ints[0] as f64, ints[1] as f64);
        let vertices = ints[4..]
            .chunks_exact(2)
            .map(|c| Point2D::new(x0 + c[0] as f64, y0 + c[1] as f64))
            .collect();
        b.word(line_no, vertices, None, false);
    }
    b.finish()
}

/// Corners of a `w x h` rectangle with top-left `(x, y)` rotated by `angle`
/// radians about its center, in top-left, top-right, bottom-right,
/// bottom-left order of the unrotated rectangle.
pub fn rotated_rect_corners(x: f64, y: f64, w: f64, h: f64, angle: f64) -> [Point2D; 4] {
    let (cx, cy) = (x + w / 2.0, y + h / 2.0);
    let (s, c) = angle.sin_cos();
    [(-w / 2.0, -h / 2.0), (w / 2.0, -h / 2.0), (w / 2.0, h / 2.0), (-w / 2.0, h / 2.0)]
        .map(|(dx, dy)| Point2D::new(cx + dx * c - dy * s, cy + dx * s + dy * c))
}

/// Parses one MSRA-TD500 annotation file.
pub fn parse_msra_td500(image_id: &str, text: &str, size: Option<(u32, u32)>) -> Parsed {
    let mut b = Builder::new(image_id, size);
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let v = match numbers(line) {
            Ok(v) if v.len() == 7 => v,
            Ok(v) => {
                b.reject(line_no, format!("expected 7 fields, found {}", v.len()));
                continue;
            }
            Err(e) => {
                b.reject(line_no, e);
                continue;
            }
        };
        let corners = rotated_rect_corners(v[2], v[3], v[4], v[5], v[6]);
        b.word(line_no, corners.to_vec(), None, v[1] == 1.0);
    }
    b.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NativeFormat {
    TotalText,
    Ctw1500,
    MsraTd500,
}

impl NativeFormat {
    pub fn parse(self, image_id: &str, text: &str, size: Option<(u32, u32)>) -> Parsed {
        match self {
            NativeFormat::TotalText => parse_totaltext(image_id, text, size),
            NativeFormat::Ctw1500 => parse_ctw1500(image_id, text, size),
            NativeFormat::MsraTd500 => parse_msra_td500(image_id, text, size),
        }
    }
}

impl std::str::FromStr for NativeFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "total-text" | "totaltext" => Ok(Self::TotalText),
            "ctw1500" | "scut-ctw1500" => Ok(Self::Ctw1500),
            "msra-td500" | "td500" => Ok(Self::MsraTd500),
            other => Err(format!("unknown annotation format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WordRecord {
    vertices: Vec<Point2D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default)]
    ignore: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ImageRecord {
    image_id: String,
    width: u32,
    height: u32,
    words: Vec<WordRecord>,
}

impl From<&AnnotatedImage> for ImageRecord {
    fn from(img: &AnnotatedImage) -> Self {
        Self {
            image_id: img.image_id.clone(),
            width: img.width,
            height: img.height,
            words: img
                .polygons
                .iter()
                .map(|p| WordRecord {
                    vertices: p.vertices.clone(),
                    text: p.transcription.clone(),
                    ignore: p.ignore,
                })
                .collect(),
        }
    }
}

impl From<ImageRecord> for AnnotatedImage {
    fn from(r: ImageRecord) -> Self {
        Self {
            image_id: r.image_id,
            width: r.width,
            height: r.height,
            polygons: r
                .words
                .into_iter()
                .map(|w| TextPolygon {
                    vertices: w.vertices,
                    transcription: w.text,
                    ignore: w.ignore,
                })
                .collect(),
        }
    }
}

/// Writes one JSON object per image, newline terminated.
pub fn write_canonical<W: Write>(corpus: &Corpus, mut w: W) -> Result<(), DatasetError> {
    for img in &corpus.images {
        let line = serde_json::to_string(&ImageRecord::from(img)).expect("records serialize");
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a canonical JSON-lines corpus. Blank lines are skipped; records are
/// numbered from 1 in error messages.
pub fn read_canonical<R: BufRead>(name: &str, r: R) -> Result<Corpus, DatasetError> {
    let mut images = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ImageRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Schema {
            record: i + 1,
            message: e.to_string(),
        })?;
        if !ids.insert(record.image_id.clone()) {
            return Err(DatasetError::DuplicateImage {
                record: i + 1,
                image_id: record.image_id,
            });
        }
        images.push(record.into());
    }
    Ok(Corpus {
        name: name.to_string(),
        images,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordKind {
    /// Horizontal straight words.
    Straight,
    /// Straight words rotated up to 60 degrees either way.
    Rotated,
    /// Sine-curved words.
    Curved,
}

impl WordKind {
    pub fn name(self) -> &'static str {
        match self {
            WordKind::Straight => "straight",
            WordKind::Rotated => "rotated",
            WordKind::Curved => "curved",
        }
    }
}

impl std::str::FromStr for WordKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "straight" => Ok(Self::Straight),
            "rotated" => Ok(Self::Rotated),
            "curved" => Ok(Self::Curved),
            other => Err(format!("unknown word kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub images: usize,
    pub kinds: Vec<WordKind>,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// Every `close_pair_every`-th image holds two parallel words separated
    /// by 1.5 stroke radii; 0 disables close pairs.
    pub close_pair_every: usize,
    pub max_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            images: 10,
            kinds: vec![WordKind::Straight, WordKind::Rotated, WordKind::Curved],
            seed: 0,
            width: 512,
            height: 512,
            close_pair_every: 5,
            max_words: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImageInfo {
    pub image_id: String,
    pub kind: WordKind,
    pub close_pair: bool,
}

/// Gap between close-pair words in units of the stroke radius.
pub const CLOSE_PAIR_GAP: f64 = 1.5;

// Clear space kept around every generated word, in pixels.
const WORD_MARGIN: f64 = 24.0;

/// Centerline of a word in its local frame with unit normals.
struct Stroke {
    centers: Vec<Point2D>,
    normals: Vec<Point2D>,
    radius: f64,
}

impl Stroke {
    fn sample(rng: &mut ChaCha8Rng, kind: WordKind, radius: f64, len: f64, reserve: f64) -> Self {
        let (pairs, amp, wavelength, phase) = match kind {
            WordKind::Straight | WordKind::Rotated => (rng.gen_range(5..=8usize), 0.0, 1.0, 0.0),
            WordKind::Curved => {
                let wavelength = len * rng.gen_range(1.2..2.0);
                let k = 2.0 * PI / wavelength;
                // keep the radius of curvature well above the stroke half-width
                let amp_max = (1.0 / ((3.0 * radius + reserve) * k * k)).min(0.2 * len);
                (rng.gen_range(7..=10usize), amp_max * rng.gen_range(0.6..1.0), wavelength, rng.gen_range(0.0..2.0 * PI))
            }
        };
        let k = 2.0 * PI / wavelength;
        let mut centers = Vec::with_capacity(pairs);
        let mut normals = Vec::with_capacity(pairs);
        for i in 0..pairs {
            let s = len * i as f64 / (pairs - 1) as f64;
            centers.push(Point2D::new(s, amp * (k * s + phase).sin()));
            let (tx, ty) = (1.0f64, amp * k * (k * s + phase).cos());
            let n = tx.hypot(ty);
            // points toward +y (down on screen)
            normals.push(Point2D::new(-ty / n, tx / n));
        }
        Self {
            centers,
            normals,
            radius,
        }
    }

    /// Word whose centerline is offset by `shift` along the normals.
    fn polygon(&self, shift: f64) -> Vec<Point2D> {
        let at = |i: usize, d: f64| {
            let (c, n) = (self.centers[i], self.normals[i]);
            Point2D::new(c.x + n.x * d, c.y + n.y * d)
        };
        let n = self.centers.len();
        let mut ring: Vec<Point2D> = (0..n).map(|i| at(i, shift - self.radius)).collect();
        ring.extend((0..n).rev().map(|i| at(i, shift + self.radius)));
        ring
    }
}

fn place(ring: &[Point2D], angle: f64, dx: f64, dy: f64) -> Vec<Point2D> {
    let (s, c) = angle.sin_cos();
    ring.iter()
        .map(|p| Point2D::new(p.x * c - p.y * s + dx, p.x * s + p.y * c + dy))
        .collect()
}

fn bbox(ring: &[Point2D]) -> (f64, f64, f64, f64) {
    ring.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
    )
}

/// Generates a seeded corpus of swept-stroke words with known groundtruth.
///
/// Image `i` uses `kinds[i % kinds.len()]`. Words keep a clear margin from
/// each other and from the canvas border, except close-pair words, which are
/// exactly [`CLOSE_PAIR_GAP`] radii apart.
pub fn synth_corpus(cfg: &SynthConfig) -> (Corpus, Vec<SynthImageInfo>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let mut images = Vec::with_capacity(cfg.images);
    let mut infos = Vec::with_capacity(cfg.images);
    let kinds = if cfg.kinds.is_empty() {
        vec![WordKind::Straight]
    } else {
        cfg.kinds.clone()
    };
    for i in 0..cfg.images {
        let kind = kinds[i % kinds.len()];
        let close_pair = cfg.close_pair_every > 0 && i % cfg.close_pair_every == cfg.close_pair_every - 1;
        let target = rng.gen_range(1..=cfg.max_words.max(1));
        let mut boxes: Vec<(f64, f64, f64, f64)> = Vec::new();
        let mut polygons = Vec::new();
        let mut attempts = 0;
        while polygons.len() < target.max(if close_pair { 2 } else { 1 }) && attempts < 200 {
            attempts += 1;
            let want_pair = close_pair && polygons.is_empty();
            let radius = rng.gen_range(7.0..13.0);
            let gap_shift = (2.0 + CLOSE_PAIR_GAP) * radius;
            let reserve = if want_pair { gap_shift } else { 0.0 };
            let max_len = (0.6 * w.min(h)).min(18.0 * radius);
            let len = rng.gen_range((6.0 * radius).min(max_len)..=max_len);
            let stroke = Stroke::sample(&mut rng, kind, radius, len, reserve);
            let angle = match kind {
                WordKind::Straight => 0.0,
                WordKind::Rotated => rng.gen_range(-60.0f64..=60.0).to_radians(),
                WordKind::Curved => rng.gen_range(-30.0f64..=30.0).to_radians(),
            };
            let mut rings = vec![stroke.polygon(0.0)];
            if want_pair {
                rings.push(stroke.polygon(gap_shift));
            }
            let local: Vec<Vec<Point2D>> = rings.iter().map(|r| place(r, angle, 0.0, 0.0)).collect();
            let all: Vec<Point2D> = local.iter().flatten().copied().collect();
            let (x0, y0, x1, y1) = bbox(&all);
            let m = WORD_MARGIN;
            if x1 - x0 + 2.0 * m >= w || y1 - y0 + 2.0 * m >= h {
                continue;
            }
            let dx = rng.gen_range(m - x0..w - m - x1);
            let dy = rng.gen_range(m - y0..h - m - y1);
            let placed = (x0 + dx, y0 + dy, x1 + dx, y1 + dy);
            let overlaps = boxes.iter().any(|b| {
                placed.0 < b.2 + m && b.0 < placed.2 + m && placed.1 < b.3 + m && b.1 < placed.3 + m
            });
            if overlaps {
                continue;
            }
            if close_pair && polygons.is_empty() && !want_pair {
                continue;
            }
            boxes.push(placed);
            for ring in local {
                let ring: Vec<Point2D> = ring.iter().map(|p| Point2D::new(p.x + dx, p.y + dy)).collect();
                polygons.push(TextPolygon::new(ring));
            }
        }
        let image_id = format!("{}-{:05}{}", kind.name(), i, if close_pair { "-pair" } else { "" });
        infos.push(SynthImageInfo {
            image_id: image_id.clone(),
            kind,
            close_pair,
        });
        images.push(AnnotatedImage {
            image_id,
            width: cfg.width,
            height: cfg.height,
            polygons,
        });
    }
    (
        Corpus {
            name: format!("synth-{}", cfg.seed),
            images,
        },
        infos,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totaltext_record() {
        let text = "x: [[10 30 50 70 90 90 70 50 30 10]], y: [[10 12 14 12 10 30 32 34 32 30]], \
                    ornt: [u'c'], transcriptions: [u'HELLO']\n";
        let parsed = parse_totaltext("img1", text, None);
        assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        let p = &parsed.image.polygons[0];
        assert_eq!(p.vertices.len(), 10);
        assert_eq!(p.transcription.as_deref(), Some("HELLO"));
        assert!(!p.ignore);
        assert_eq!((parsed.image.width, parsed.image.height), (91, 35));
    }

    #[test]
    fn totaltext_wrapped_and_dont_care() {
        let text = "x: [[10 50 50\n 10]], y: [[10 10 30 30]], ornt: [u'#'],\n transcriptions: [u'#']\n";
        let parsed = parse_totaltext("a", text, Some((100, 100)));
        assert_eq!(parsed.image.polygons.len(), 1);
        assert!(parsed.image.polygons[0].ignore);
    }

    #[test]
    fn totaltext_rejections_carry_line_numbers() {
        assert!(parse_totaltext("e", "", None).image.polygons.is_empty());
        let text = "x: [[1 5 9 9 5]], y: [[1 1 1 5 5]], ornt: [u'h'], transcriptions: [u'odd']\n\
                    x: [[1 2]], y: [[1]], ornt: [u'h'], transcriptions: [u'bad']\n";
        let parsed = parse_totaltext("e", text, None);
        assert!(parsed.image.polygons.is_empty());
        assert_eq!(parsed.diagnostics.len(), 2);
        assert_eq!(parsed.diagnostics[0].line, Some(1));
        assert_eq!(parsed.diagnostics[1].line, Some(2));
        assert!(parsed.diagnostics[0].message.contains("5 vertices"));
    }

    #[test]
    fn ctw_lines() {
        let mut fields = vec![100, 50, 400, 90];
        for i in 0..7 {
            fields.extend([i * 50, 0]);
        }
        for i in (0..7).rev() {
            fields.extend([i * 50, 40]);
        }
        let line = fields.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let zero = format!("100,50,400,90,{}", vec!["0"; 28].join(","));
        let text = format!("{line}\n{zero}\n1,2,3\n");
        let parsed = parse_ctw1500("c", &text, None);
        assert_eq!(parsed.image.polygons.len(), 1);
        assert_eq!(parsed.image.polygons[0].vertices.len(), 14);
        assert_eq!(parsed.image.polygons[0].vertices[0], Point2D::new(100.0, 50.0));
        assert_eq!(parsed.diagnostics.len(), 2);
        assert_eq!(parsed.diagnostics[0].line, Some(2));
        assert_eq!(parsed.diagnostics[1].line, Some(3));
    }

    #[test]
    fn msra_axis_aligned_and_difficult() {
        let parsed = parse_msra_td500("m", "0 0 10 20 100 30 0\n1 1 200 200 50 20 0.3\n", None);
        let p = &parsed.image.polygons;
        assert_eq!(p.len(), 2);
        let mut corners: Vec<(i64, i64)> = p[0]
            .vertices
            .iter()
            .map(|v| (v.x.round() as i64, v.y.round() as i64))
            .collect();
        corners.sort();
        assert_eq!(corners, vec![(10, 20), (10, 50), (110, 20), (110, 50)]);
        assert!(!p[0].ignore && p[1].ignore);
        assert_eq!(parse_msra_td500("m", "0 0 1 2\n", None).diagnostics.len(), 1);
    }

    #[test]
    fn quadrilateral_pairs_span_short_side() {
        // start at the top-right corner: the first side is a short one
        let ring = [(110.0, 20.0), (110.0, 50.0), (10.0, 50.0), (10.0, 20.0)].map(|(x, y)| Point2D::new(x, y));
        let n = normalize_ring(&ring).unwrap();
        let pairs = pair_vertices(&TextPolygon::new(n)).unwrap();
        for p in &pairs.pairs {
            assert!((p.radius() - 15.0).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_round_trip_and_schema_errors() {
        let (corpus, _) = synth_corpus(&SynthConfig {
            images: 4,
            ..Default::default()
        });
        let mut buf = Vec::new();
        write_canonical(&corpus, &mut buf).unwrap();
        let back = read_canonical(&corpus.name, &buf[..]).unwrap();
        assert_eq!(back, corpus);

        let missing = "{\"image_id\":\"a\",\"width\":1,\"height\":1,\"words\":[{\"text\":\"x\"}]}\n";
        let err = read_canonical("x", missing.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("record 1") && err.contains("vertices"), "{err}");

        let dup = "{\"image_id\":\"a\",\"width\":1,\"height\":1,\"words\":[]}\n".repeat(2);
        assert!(matches!(
            read_canonical("x", dup.as_bytes()),
            Err(DatasetError::DuplicateImage { record: 2, .. })
        ));
    }

    #[test]
    fn synth_is_seed_deterministic_and_valid() {
        let cfg = SynthConfig {
            images: 12,
            seed: 7,
            ..Default::default()
        };
        let (a, infos) = synth_corpus(&cfg);
        let (b, _) = synth_corpus(&cfg);
        assert_eq!(a, b);
        for (img, info) in a.images.iter().zip(&infos) {
            assert!(!img.polygons.is_empty());
            if info.close_pair {
                assert!(img.polygons.len() >= 2);
            }
            for p in &img.polygons {
                p.validate().unwrap();
                assert!(pairing_is_valid(&pair_vertices(p).unwrap()));
                assert!(p.vertices.iter().all(|v| v.x > 0.0 && v.y > 0.0 && v.x < 512.0 && v.y < 512.0));
            }
        }
    }
}
