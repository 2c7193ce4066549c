//! Binary-grid primitives: connected components, centroids, hole filling,
//! Moore-neighbor contour tracing, square-kernel dilation and Bresenham lines.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("mask has no set pixels")]
    EmptyMask,
    #[error("mask has {0} 8-connected components, expected exactly one")]
    NotSingleComponent(usize),
    #[error("bit buffer length {len} does not match {width}x{height}")]
    SizeMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
}

/// Integer pixel coordinate. `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// N, S, E and W neighbors.
    Four,
    /// All eight neighbors.
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

/// Dense row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if bits.len() != width * height {
            return Err(RasterError::SizeMismatch {
                width,
                height,
                len: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Builds a mask from set-pixel coordinates; out-of-range pixels are ignored.
    pub fn from_pixels(width: usize, height: usize, pixels: impl IntoIterator<Item = Pixel>) -> Self {
        let mut mask = Self::new(width, height);
        for p in pixels {
            mask.set_checked(p.x, p.y, true);
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Out-of-bounds reads are background.
    pub fn get(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && self.bits[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn set_checked(&mut self, x: i32, y: i32, value: bool) -> bool {
        if self.in_bounds(x, y) {
            self.bits[y as usize * self.width + x as usize] = value;
            true
        } else {
            false
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Pixel::new((i % w) as i32, (i / w) as i32))
    }

    /// Inclusive bounding box `(min, max)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(Pixel, Pixel)> {
        let mut iter = self.pixels();
        let first = iter.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in iter {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        Some((lo, hi))
    }

    /// Copies the `width x height` window whose top-left corner is `(x0, y0)`.
    /// The window must lie inside the mask.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Self {
        assert!(x0 + width <= self.width && y0 + height <= self.height);
        let mut out = Self::new(width, height);
        for y in 0..height {
            let src = (y0 + y) * self.width + x0;
            out.bits[y * width..(y + 1) * width].copy_from_slice(&self.bits[src..src + width]);
        }
        out
    }

    /// Number of pixels set in both masks. Masks must share dimensions.
    pub fn intersection_count(&self, other: &Self) -> usize {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count()
    }
}

/// Labels every set pixel with its component id (1-based, 0 = background).
///
/// Components are numbered in the order their top-left-most pixel appears in
/// a row-major scan. Returns the label buffer and the component count.
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> (Vec<u32>, usize) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; w * h];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as i32, (i / w) as i32);
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if !mask.in_bounds(nx, ny) {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.bits[j] && labels[j] == 0 {
                    labels[j] = count;
                    queue.push_back(j);
                }
            }
        }
    }
    (labels, count as usize)
}

/// Partitions the set pixels into maximal connected components, ordered by
/// their top-left-most pixel.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<BinaryMask> {
    let (labels, count) = label_components(mask, connectivity);
    let mut out = vec![BinaryMask::new(mask.width, mask.height); count];
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            out[l as usize - 1].bits[i] = true;
        }
    }
    out
}

/// Mean of the set-pixel coordinates, snapped to the nearest set pixel so the
/// result always lies on the mask. Ties go to the first pixel in row-major order.
pub fn centroid(mask: &BinaryMask) -> Result<Pixel, RasterError> {
    let (mut sx, mut sy, mut n) = (0.0f64, 0.0f64, 0usize);
    for p in mask.pixels() {
        sx += p.x as f64;
        sy += p.y as f64;
        n += 1;
    }
    if n == 0 {
        return Err(RasterError::EmptyMask);
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for p in mask.pixels() {
        let d = (p.x as f64 - mx).powi(2) + (p.y as f64 - my).powi(2);
        if d < best_d {
            best_d = d;
            best = Some(p);
        }
    }
    Ok(best.expect("mask is nonempty"))
}

/// Sets every background pixel that is not 4-connected to the grid border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        let i = y * w + x;
        if !mask.bits[i] && !outside[i] {
            outside[i] = true;
            queue.push_back(i);
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        if h > 0 {
            seed(x, h - 1, &mut outside, &mut queue);
        }
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        if w > 0 {
            seed(w - 1, y, &mut outside, &mut queue);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as i32, (i / w) as i32);
        for &(dx, dy) in Connectivity::Four.offsets() {
            let (nx, ny) = (x + dx, y + dy);
            if !mask.in_bounds(nx, ny) {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if !mask.bits[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        }
    }
    BinaryMask {
        width: w,
        height: h,
        bits: outside.into_iter().map(|o| !o).collect(),
    }
}

/// Closed ring of boundary pixels. The last point is 8-adjacent to the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub points: Vec<Pixel>,
}

// Moore neighborhood, clockwise on screen (y grows downward), starting west.
const MOORE: [(i32, i32); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn moore_index(dx: i32, dy: i32) -> usize {
    MOORE
        .iter()
        .position(|&d| d == (dx, dy))
        .expect("offset is a Moore neighbor")
}

/// Traces the outer boundary of a single 8-connected component with
/// Moore-neighbor tracing.
///
/// Tracing starts at the top-left-most set pixel and proceeds clockwise.
/// Pixels outside the grid count as background.
pub fn trace_contour(mask: &BinaryMask) -> Result<Contour, RasterError> {
    let start = mask.pixels().next().ok_or(RasterError::EmptyMask)?;
    let (_, n) = label_components(mask, Connectivity::Eight);
    if n != 1 {
        return Err(RasterError::NotSingleComponent(n));
    }

    let mut points = vec![start];
    let mut cur = start;
    // The start pixel is entered from the west: nothing to its left is set.
    let mut backtrack = 0usize;
    let mut second = None;
    // The tracer state after a move depends only on the (from, to) edge, so
    // leaving the start pixel along the first edge again closes the ring.
    let limit = 8 * mask.count() + 8;
    for _ in 0..limit {
        let mut found = None;
        for i in 1..=8 {
            let d = (backtrack + i) % 8;
            let (dx, dy) = MOORE[d];
            if mask.get(cur.x + dx, cur.y + dy) {
                found = Some(d);
                break;
            }
        }
        let Some(d) = found else {
            // isolated pixel
            break;
        };
        let next = Pixel::new(cur.x + MOORE[d].0, cur.y + MOORE[d].1);
        if cur == start {
            match second {
                Some(s) if s == next => {
                    points.pop();
                    break;
                }
                None => second = Some(next),
                _ => {}
            }
        }
        let (bx, by) = MOORE[(d + 7) % 8];
        let last_background = Pixel::new(cur.x + bx, cur.y + by);
        backtrack = moore_index(last_background.x - next.x, last_background.y - next.y);
        points.push(next);
        cur = next;
    }
    Ok(Contour { points })
}

/// Morphological dilation with a `k x k` square structuring element.
///
/// The element spans offsets `-(k/2) ..= k - 1 - k/2` on each axis, so odd
/// kernels are centered and even kernels extend one pixel further toward
/// negative coordinates. Output is clipped to the grid.
pub fn dilate(mask: &BinaryMask, k: usize) -> BinaryMask {
    assert!(k >= 1, "kernel size must be positive");
    if k == 1 {
        return mask.clone();
    }
    let (w, h) = (mask.width, mask.height);
    let neg = k / 2;
    let pos = k - 1 - neg;
    // out[q] is set iff some input lies in [q - pos, q + neg].
    let pass = |src: &[bool], len: usize, stride: usize, lines: usize, line_stride: usize| {
        let mut dst = vec![false; src.len()];
        let mut prefix = vec![0u32; len + 1];
        for line in 0..lines {
            let base = line * line_stride;
            for i in 0..len {
                prefix[i + 1] = prefix[i] + src[base + i * stride] as u32;
            }
            for q in 0..len {
                let lo = q.saturating_sub(pos);
                let hi = (q + neg).min(len - 1);
                dst[base + q * stride] = prefix[hi + 1] > prefix[lo];
            }
        }
        dst
    };
    if w == 0 || h == 0 {
        return mask.clone();
    }
    let rows = pass(&mask.bits, w, 1, h, w);
    let bits = pass(&rows, h, w, w, 1);
    BinaryMask {
        width: w,
        height: h,
        bits,
    }
}

/// All pixels of the Bresenham line from `a` to `b`, both endpoints included.
/// The result has `max(|dx|, |dy|) + 1` points and consecutive points are
/// 8-adjacent.
pub fn bresenham_line(a: Pixel, b: Pixel) -> Vec<Pixel> {
    let dx = (b.x - a.x).abs();
    let dy = -(b.y - a.y).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (a.x, a.y);
    let mut out = Vec::with_capacity(dx.max(-dy) as usize + 1);
    loop {
        out.push(Pixel::new(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}
