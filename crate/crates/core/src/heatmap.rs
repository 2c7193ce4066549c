//! Gaussian text-region heatmaps: groundtruth rendering, loss terms and the
//! UHTH / 16-bit PGM file formats.

use std::io::{self, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::geometry::{
    build_skeleton, fill_polygon, rasterize_skeleton, Point2D, TextPolygon, DEFAULT_SUBDIVISIONS,
};
use crate::raster::BinaryMask;

/// `sqrt(2 ln 20)`: with `sigma = R / this`, the Gaussian drops to exactly
/// 0.05 at distance `R` from its center.
pub fn default_sigma_divisor() -> f64 {
    (2.0 * 20f64.ln()).sqrt()
}

pub const CENTER_THRESHOLD: f64 = 0.9;
pub const REGION_THRESHOLD: f64 = 0.05;

// Stamps are cut off at this many standard deviations (value ~3.4e-4).
const STAMP_EXTENT_SIGMAS: f64 = 4.0;

const UHTH_MAGIC: &[u8; 4] = b"UHTH";

#[derive(Debug, Error)]
pub enum HeatmapError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("value buffer length {len} does not match {width}x{height}")]
    SizeMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f32 },
    #[error("bad magic bytes, not a UHTH heatmap")]
    BadMagic,
    #[error("malformed PGM: {0}")]
    BadPgm(String),
    #[error("truncated or unreadable heatmap data: {0}")]
    Io(#[from] io::Error),
}

/// Row-major grid of text-region probabilities in `[0, 1]`, origin top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl Heatmap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<Self, HeatmapError> {
        if values.len() != width * height {
            return Err(HeatmapError::SizeMismatch {
                width,
                height,
                len: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(HeatmapError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Value at column `x`, row `y`. Panics when out of bounds.
    pub fn get(&self, x: i32, y: i32) -> f32 {
        assert!(self.in_bounds(x, y), "({x}, {y}) outside {}x{}", self.width, self.height);
        self.values[y as usize * self.width + x as usize]
    }

    pub fn max_value(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    /// Pixels strictly above `threshold`.
    pub fn threshold(&self, threshold: f64) -> BinaryMask {
        let bits = self.values.iter().map(|&v| v as f64 > threshold).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("same dimensions")
    }

    /// Per-pixel maximum with another map of the same size.
    pub fn max_with(&mut self, other: &Heatmap) -> Result<(), HeatmapError> {
        self.check_same(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = a.max(b);
        }
        Ok(())
    }

    fn check_same(&self, other: &Heatmap) -> Result<(), HeatmapError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(HeatmapError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub fn write_uhth<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(UHTH_MAGIC)?;
        w.write_all(&(self.width as u32).to_le_bytes())?;
        w.write_all(&(self.height as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_uhth<R: Read>(mut r: R) -> Result<Self, HeatmapError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != UHTH_MAGIC {
            return Err(HeatmapError::BadMagic);
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let width = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let height = u32::from_le_bytes(word) as usize;
        let n = width
            .checked_mul(height)
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "dimensions overflow"))?;
        let mut raw = Vec::new();
        r.take(n as u64 * 4).read_to_end(&mut raw)?;
        if raw.len() != n * 4 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                format!("expected {} value bytes, found {}", n * 4, raw.len()),
            )
            .into());
        }
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::from_values(width, height, values)
    }

    /// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples); values are
    /// scaled by 65535 and rounded half-up.
    pub fn write_pgm16<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.values.len() * 2);
        for &v in &self.values {
            let q = (v as f64 * 65535.0 + 0.5).floor().clamp(0.0, 65535.0) as u16;
            buf.extend_from_slice(&q.to_be_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_pgm16<R: Read>(mut r: R) -> Result<Self, HeatmapError> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        let mut pos = 0usize;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < data.len() && (data[pos].is_ascii_whitespace() || data[pos] == b'#') {
                if data[pos] == b'#' {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(HeatmapError::BadPgm("truncated header".into()));
            }
            fields.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
        }
        // exactly one whitespace byte separates the header from the samples
        pos += 1;
        if fields[0] != "P5" {
            return Err(HeatmapError::BadPgm(format!("magic {:?}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| HeatmapError::BadPgm(format!("bad number {s:?}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 65535 {
            return Err(HeatmapError::BadPgm(format!("maxval {maxval}, expected 65535")));
        }
        let n = width * height;
        let samples = data.get(pos..pos + 2 * n).ok_or_else(|| {
            HeatmapError::BadPgm(format!("expected {} sample bytes", 2 * n))
        })?;
        let values = samples
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32 / 65535.0)
            .collect();
        Self::from_values(width, height, values)
    }
}

/// Groundtruth rendering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodeConfig {
    /// Subdivisions per quadrilateral.
    pub m: u32,
    /// Gaussian standard deviation is `radius / sigma_divisor`.
    pub sigma_divisor: f64,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_SUBDIVISIONS,
            sigma_divisor: default_sigma_divisor(),
        }
    }
}

/// Output of [`render_groundtruth`].
#[derive(Debug, Clone)]
pub struct RenderedGroundtruth {
    pub heatmap: Heatmap,
    /// Union of the ignore-flagged polygons.
    pub dont_care: BinaryMask,
    pub diagnostics: Vec<Diagnostic>,
}

/// Renders the groundtruth heatmap for one image.
///
/// Every skeleton pixel stamps a peak-1 isotropic Gaussian whose width comes
/// from its radius; stamps and words combine by per-pixel maximum. Each word
/// is drawn into its own canvas and the canvases are merged afterwards, so
/// the result does not depend on how the work is scheduled. Polygons that
/// fail validation are skipped with a diagnostic.
pub fn render_groundtruth(
    polygons: &[TextPolygon],
    width: usize,
    height: usize,
    cfg: &EncodeConfig,
) -> RenderedGroundtruth {
    let mut dont_care = BinaryMask::new(width, height);
    let mut diagnostics = Vec::new();
    let mut skeletons = Vec::new();
    for (i, poly) in polygons.iter().enumerate() {
        if poly.ignore {
            let mask = fill_polygon(&poly.vertices, Point2D::new(0.0, 0.0), width, height, 1.0);
            for p in mask.pixels() {
                dont_care.set(p.x as usize, p.y as usize, true);
            }
            continue;
        }
        match build_skeleton(poly, cfg.m, i) {
            Ok((sk, diag)) => {
                diagnostics.extend(diag);
                skeletons.push(sk);
            }
            Err(e) => diagnostics.push(Diagnostic::new(format!("skipped: {e}")).for_polygon(i)),
        }
    }

    let layers: Vec<Heatmap> = skeletons
        .par_iter()
        .map(|sk| {
            let mut layer = Heatmap::zeros(width, height);
            for p in rasterize_skeleton(sk).points {
                stamp_gaussian(&mut layer, p.pixel.x, p.pixel.y, p.radius / cfg.sigma_divisor);
            }
            layer
        })
        .collect();
    let mut heatmap = Heatmap::zeros(width, height);
    for layer in &layers {
        heatmap.max_with(layer).expect("same canvas");
    }
    RenderedGroundtruth {
        heatmap,
        dont_care,
        diagnostics,
    }
}

/// Max-combines `exp(-d^2 / (2 sigma^2))` centered at `(cx, cy)` into `map`.
pub fn stamp_gaussian(map: &mut Heatmap, cx: i32, cy: i32, sigma: f64) {
    let extent = (STAMP_EXTENT_SIGMAS * sigma).ceil() as i32;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let (w, h) = (map.width as i32, map.height as i32);
    let (x0, x1) = ((cx - extent).max(0), (cx + extent).min(w - 1));
    let (y0, y1) = ((cy - extent).max(0), (cy + extent).min(h - 1));
    for y in y0..=y1 {
        let dy = (y - cy) as f64;
        let row = y as usize * map.width;
        for x in x0..=x1 {
            let dx = (x - cx) as f64;
            let v = (-(dx * dx + dy * dy) * inv).exp() as f32;
            let slot = &mut map.values[row + x as usize];
            if v > *slot {
                *slot = v;
            }
        }
    }
}

/// How the squared errors of each class are reduced in the regression loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Per-class mean squared error.
    #[default]
    Mean,
    /// Per-class sum of squared errors.
    Sum,
}

/// Loss weights and thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda_center: f64,
    pub lambda_region: f64,
    pub positive_threshold: f64,
    pub reduction: Reduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_center: 1.0,
            lambda_region: 1.0,
            positive_threshold: REGION_THRESHOLD,
            reduction: Reduction::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_reg: f64,
    pub l_center: f64,
    pub l_region: f64,
    pub total: f64,
}

fn included<'a>(
    pred: &'a Heatmap,
    gt: &'a Heatmap,
    dont_care: Option<&'a BinaryMask>,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a, HeatmapError> {
    pred.check_same(gt)?;
    if let Some(m) = dont_care {
        if (m.width(), m.height()) != (gt.width, gt.height) {
            return Err(HeatmapError::DimensionMismatch(
                gt.width,
                gt.height,
                m.width(),
                m.height(),
            ));
        }
    }
    Ok(pred
        .values
        .iter()
        .zip(&gt.values)
        .enumerate()
        .filter(move |(i, _)| dont_care.is_none_or(|m| !m.bits()[*i]))
        .map(|(_, (&p, &g))| (p as f64, g as f64)))
}

/// Class-balanced squared error.
///
/// Positives are groundtruth pixels above `positive_threshold`. The
/// background error is weighted by the positive share of pixels and the
/// positive error by the background share. When one class is absent the
/// loss is the plain error of the class that is present.
pub fn loss_reg(
    pred: &Heatmap,
    gt: &Heatmap,
    positive_threshold: f64,
    reduction: Reduction,
) -> Result<f64, HeatmapError> {
    loss_reg_masked(pred, gt, positive_threshold, reduction, None)
}

pub fn loss_reg_masked(
    pred: &Heatmap,
    gt: &Heatmap,
    positive_threshold: f64,
    reduction: Reduction,
    dont_care: Option<&BinaryMask>,
) -> Result<f64, HeatmapError> {
    let (mut n_text, mut n_bg) = (0usize, 0usize);
    let (mut se_text, mut se_bg) = (0.0f64, 0.0f64);
    for (p, g) in included(pred, gt, dont_care)? {
        let e = (g - p) * (g - p);
        if g > positive_threshold {
            n_text += 1;
            se_text += e;
        } else {
            n_bg += 1;
            se_bg += e;
        }
    }
    let reduce = |se: f64, n: usize| match reduction {
        Reduction::Mean if n > 0 => se / n as f64,
        Reduction::Mean => 0.0,
        Reduction::Sum => se,
    };
    let (term_text, term_bg) = (reduce(se_text, n_text), reduce(se_bg, n_bg));
    if n_text == 0 || n_bg == 0 {
        return Ok(term_text + term_bg);
    }
    let total = (n_text + n_bg) as f64;
    Ok(n_text as f64 / total * term_bg + n_bg as f64 / total * term_text)
}

/// Dice loss on maps binarized strictly above `threshold`; 0 when both sets
/// are empty.
pub fn loss_dice(pred: &Heatmap, gt: &Heatmap, threshold: f64) -> Result<f64, HeatmapError> {
    loss_dice_masked(pred, gt, threshold, None)
}

pub fn loss_dice_masked(
    pred: &Heatmap,
    gt: &Heatmap,
    threshold: f64,
    dont_care: Option<&BinaryMask>,
) -> Result<f64, HeatmapError> {
    let (mut np, mut ng, mut both) = (0usize, 0usize, 0usize);
    for (p, g) in included(pred, gt, dont_care)? {
        let (ip, ig) = (p > threshold, g > threshold);
        np += ip as usize;
        ng += ig as usize;
        both += (ip && ig) as usize;
    }
    if np + ng == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - 2.0 * both as f64 / (np + ng) as f64)
}

/// Regression loss plus weighted center (> 0.9) and region (> 0.05) dice.
pub fn loss_total(pred: &Heatmap, gt: &Heatmap, cfg: &LossConfig) -> Result<LossBreakdown, HeatmapError> {
    loss_total_masked(pred, gt, cfg, None)
}

pub fn loss_total_masked(
    pred: &Heatmap,
    gt: &Heatmap,
    cfg: &LossConfig,
    dont_care: Option<&BinaryMask>,
) -> Result<LossBreakdown, HeatmapError> {
    let l_reg = loss_reg_masked(pred, gt, cfg.positive_threshold, cfg.reduction, dont_care)?;
    let l_center = loss_dice_masked(pred, gt, CENTER_THRESHOLD, dont_care)?;
    let l_region = loss_dice_masked(pred, gt, REGION_THRESHOLD, dont_care)?;
    Ok(LossBreakdown {
        l_reg,
        l_center,
        l_region,
        total: l_reg + cfg.lambda_center * l_center + cfg.lambda_region * l_region,
    })
}
