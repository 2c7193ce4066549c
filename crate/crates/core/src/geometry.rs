//! Text polygon to skeleton conversion.
//!
//! A word annotation is an even-length vertex ring whose first half runs
//! along one long side and whose second half runs back along the other. The
//! ring is paired across the stroke, each quadrilateral between adjacent
//! pairs is subdivided `m` times, and the midpoints of the pairs form the
//! text center points. The two outermost groups of center points at each end
//! are dropped, and each remaining point carries the local half stroke width.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::raster::{bresenham_line, BinaryMask, Pixel};

/// Radius floor applied to degenerate pairs.
pub const MIN_RADIUS: f64 = 0.5;

/// Subdivision factor used when none is configured.
pub const DEFAULT_SUBDIVISIONS: u32 = 5;

const AREA_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon has {0} vertices; an even count of at least 4 is required")]
    BadVertexCount(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("pairing produces crossing pair segments")]
    CrossingPairs,
    #[error("skeleton has {0} center points; at least 5 are needed to trim")]
    TooShortToTrim(usize),
    #[error("center and radius lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("subdivision factor must be at least 1")]
    ZeroSubdivision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Self) -> Self {
        Self::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Nearest integer pixel.
    pub fn to_pixel(self) -> Pixel {
        Pixel::new(self.x.round() as i32, self.y.round() as i32)
    }
}

impl From<[f64; 2]> for Point2D {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2D> for [f64; 2] {
    fn from(p: Point2D) -> Self {
        [p.x, p.y]
    }
}

impl From<Pixel> for Point2D {
    fn from(p: Pixel) -> Self {
        Self::new(p.x as f64, p.y as f64)
    }
}

/// One annotated word region.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextPolygon {
    pub vertices: Vec<Point2D>,
    pub transcription: Option<String>,
    /// Don't-care region: excluded from losses and matching.
    pub ignore: bool,
}

impl TextPolygon {
    pub fn new(vertices: Vec<Point2D>) -> Self {
        Self {
            vertices,
            transcription: None,
            ignore: false,
        }
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Self {
        Self::new(coords.iter().map(|&(x, y)| Point2D::new(x, y)).collect())
    }

    pub fn with_ignore(mut self, ignore: bool) -> Self {
        self.ignore = ignore;
        self
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    /// Checks vertex count, finiteness and area.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let k = self.vertices.len();
        if k < 4 || !k.is_multiple_of(2) {
            return Err(GeometryError::BadVertexCount(k));
        }
        if !self.vertices.iter().all(|p| p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if self.area() <= AREA_EPS {
            return Err(GeometryError::ZeroArea);
        }
        Ok(())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point2D::new(p.x + dx, p.y + dy))
                .collect(),
            ..self.clone()
        }
    }
}

/// Shoelace signed area. Positive for rings that run clockwise on screen
/// (y pointing down).
pub fn signed_area(ring: &[Point2D]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

/// Upper/lower vertex pair spanning the text stroke.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexPair {
    pub up: Point2D,
    pub down: Point2D,
}

impl VertexPair {
    pub fn new(up: Point2D, down: Point2D) -> Self {
        Self { up, down }
    }

    pub fn center(&self) -> Point2D {
        self.up.midpoint(self.down)
    }

    /// Mean distance from the center to the two paired vertices.
    pub fn radius(&self) -> f64 {
        let c = self.center();
        (c.distance(self.up) + c.distance(self.down)) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexPairs {
    pub pairs: Vec<VertexPair>,
}

impl VertexPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairs vertex `i` with vertex `K - 1 - i`.
pub fn pair_vertices(poly: &TextPolygon) -> Result<VertexPairs, GeometryError> {
    poly.validate()?;
    let v = &poly.vertices;
    let k = v.len();
    let pairs = (0..k / 2)
        .map(|i| VertexPair::new(v[i], v[k - 1 - i]))
        .collect();
    Ok(VertexPairs { pairs })
}

/// Splits every quadrilateral between adjacent pairs into `m` equal parts by
/// interpolating both chains. `K/2` pairs become `(K + (m-1)(K-2)) / 2`.
pub fn subdivide(pairs: &VertexPairs, m: u32) -> Result<VertexPairs, GeometryError> {
    if m == 0 {
        return Err(GeometryError::ZeroSubdivision);
    }
    let src = &pairs.pairs;
    if src.len() < 2 || m == 1 {
        return Ok(pairs.clone());
    }
    let mut out = Vec::with_capacity((src.len() - 1) * m as usize + 1);
    for w in src.windows(2) {
        out.push(w[0]);
        for j in 1..m {
            let t = j as f64 / m as f64;
            out.push(VertexPair::new(w[0].up.lerp(w[1].up, t), w[0].down.lerp(w[1].down, t)));
        }
    }
    out.push(*src.last().expect("at least two pairs"));
    Ok(VertexPairs { pairs: out })
}

/// Number of subdivided points for a `k`-vertex polygon.
pub fn expanded_point_count(k: usize, m: u32) -> usize {
    k + (m as usize - 1) * (k - 2)
}

pub fn center_points(pairs: &VertexPairs) -> Vec<Point2D> {
    pairs.pairs.iter().map(VertexPair::center).collect()
}

pub fn radii(pairs: &VertexPairs) -> Vec<f64> {
    pairs.pairs.iter().map(VertexPair::radius).collect()
}

/// Trimmed spine of one word: center points with their radii.
#[derive(Debug, Clone, PartialEq)]
pub struct TextSkeleton {
    pub centers: Vec<Point2D>,
    pub radii: Vec<f64>,
    pub source_polygon_index: usize,
}

/// Drops the first two and last two center points.
pub fn trim_skeleton(
    centers: &[Point2D],
    radii: &[f64],
    source_polygon_index: usize,
) -> Result<TextSkeleton, GeometryError> {
    if centers.len() != radii.len() {
        return Err(GeometryError::LengthMismatch(centers.len(), radii.len()));
    }
    let n = centers.len();
    if n < 5 {
        return Err(GeometryError::TooShortToTrim(n));
    }
    Ok(TextSkeleton {
        centers: centers[2..n - 2].to_vec(),
        radii: radii[2..n - 2].to_vec(),
        source_polygon_index,
    })
}

/// Full polygon to skeleton conversion.
///
/// Radii below [`MIN_RADIUS`] are clamped. Skeletons with fewer than five
/// center points cannot be trimmed; they keep their middle point (odd
/// count) or middle two points (even count) and a diagnostic is returned
/// alongside.
pub fn build_skeleton(
    poly: &TextPolygon,
    m: u32,
    source_polygon_index: usize,
) -> Result<(TextSkeleton, Option<Diagnostic>), GeometryError> {
    let pairs = subdivide(&pair_vertices(poly)?, m)?;
    let centers = center_points(&pairs);
    let rs: Vec<f64> = radii(&pairs).into_iter().map(|r| r.max(MIN_RADIUS)).collect();
    match trim_skeleton(&centers, &rs, source_polygon_index) {
        Ok(sk) => Ok((sk, None)),
        Err(GeometryError::TooShortToTrim(n)) => {
            let keep = if n % 2 == 1 { n / 2..n / 2 + 1 } else { n / 2 - 1..n / 2 + 1 };
            let sk = TextSkeleton {
                centers: centers[keep.clone()].to_vec(),
                radii: rs[keep].to_vec(),
                source_polygon_index,
            };
            let diag = Diagnostic::new(format!(
                "only {n} center points; kept the middle {} untrimmed",
                sk.centers.len()
            ))
            .for_polygon(source_polygon_index);
            Ok((sk, Some(diag)))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterPoint {
    pub pixel: Pixel,
    pub radius: f64,
}

/// Every pixel of the skeleton polyline with an interpolated radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonRaster {
    pub points: Vec<RasterPoint>,
}

/// Bresenham-rasterizes the skeleton between consecutive centers (rounded to
/// the nearest pixel). Radii are interpolated linearly by the step fraction
/// along each segment; pixels shared by adjacent segments appear once.
pub fn rasterize_skeleton(sk: &TextSkeleton) -> SkeletonRaster {
    let mut points: Vec<RasterPoint> = Vec::new();
    let push = |points: &mut Vec<RasterPoint>, p: RasterPoint| {
        if points.last().map(|q| q.pixel) != Some(p.pixel) {
            points.push(p);
        }
    };
    match sk.centers.len() {
        0 => {}
        1 => push(
            &mut points,
            RasterPoint {
                pixel: sk.centers[0].to_pixel(),
                radius: sk.radii[0],
            },
        ),
        _ => {
            for i in 0..sk.centers.len() - 1 {
                let (a, b) = (sk.centers[i].to_pixel(), sk.centers[i + 1].to_pixel());
                let (ra, rb) = (sk.radii[i], sk.radii[i + 1]);
                let line = bresenham_line(a, b);
                let steps = (line.len() - 1).max(1) as f64;
                for (j, &pixel) in line.iter().enumerate() {
                    let t = j as f64 / steps;
                    push(
                        &mut points,
                        RasterPoint {
                            pixel,
                            radius: ra + (rb - ra) * t,
                        },
                    );
                }
            }
        }
    }
    SkeletonRaster { points }
}

/// True when no two pair segments cross each other.
pub fn pairing_is_valid(pairs: &VertexPairs) -> bool {
    let p = &pairs.pairs;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if segments_cross(p[i].up, p[i].down, p[j].up, p[j].down) {
                return false;
            }
        }
    }
    true
}

fn orient(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Proper crossing: the segments intersect at a single interior point.
fn segments_cross(a: Point2D, b: Point2D, c: Point2D, d: Point2D) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Even-odd point-in-polygon test.
pub fn contains_point(ring: &[Point2D], p: Point2D) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Rasterizes a ring on a sample grid: sample `(i, j)` sits at
/// `(origin.x + i / scale, origin.y + j / scale)` and is set when it lies
/// inside the ring under the even-odd rule. With `scale = 1` and an integer
/// origin, samples are the pixel centers.
pub fn fill_polygon(
    ring: &[Point2D],
    origin: Point2D,
    width: usize,
    height: usize,
    scale: f64,
) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    let n = ring.len();
    if n < 3 {
        return mask;
    }
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    for row in 0..height {
        let py = origin.y + row as f64 / scale;
        xs.clear();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (ring[i], ring[j]);
            if (a.y > py) != (b.y > py) {
                xs.push(a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            j = i;
        }
        xs.sort_by(f64::total_cmp);
        for span in xs.chunks_exact(2) {
            // samples with x0 <= px < x1, matching `contains_point`
            let lo = ((span[0] - origin.x) * scale).ceil().max(0.0);
            let hi = ((span[1] - origin.x) * scale).ceil().min(width as f64);
            let (lo, hi) = (lo as usize, hi.max(0.0) as usize);
            for col in lo..hi {
                mask.set(col, row, true);
            }
        }
    }
    mask
}
