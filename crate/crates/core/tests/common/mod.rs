#![allow(dead_code)]

use proptest::prelude::*;
use uht_core::geometry::{Point2D, TextPolygon};
use uht_core::raster::{BinaryMask, Pixel};

/// Swept stroke: a gently turning centerline with a perpendicular segment of
/// half-length `radii[i]` at each center. Every cross-section quadrilateral
/// is convex.
#[derive(Debug, Clone)]
pub struct Stroke {
    pub centers: Vec<Point2D>,
    pub radii: Vec<f64>,
    pub polygon: TextPolygon,
}

pub fn build_stroke(origin: Point2D, heading: f64, turns: &[f64], steps: &[f64], radii: &[f64]) -> Stroke {
    let n = radii.len();
    let mut centers = vec![origin];
    let mut angles = vec![heading];
    for i in 1..n {
        let a = angles[i - 1] + turns[i - 1];
        let prev = centers[i - 1];
        centers.push(Point2D::new(prev.x + steps[i - 1] * a.cos(), prev.y + steps[i - 1] * a.sin()));
        angles.push(a);
    }
    let normal = |i: usize| {
        let a = if i == 0 {
            angles[1]
        } else if i == n - 1 {
            angles[n - 1]
        } else {
            (angles[i] + angles[i + 1]) / 2.0
        };
        Point2D::new(-a.sin(), a.cos())
    };
    let side = |i: usize, s: f64| {
        let nv = normal(i);
        Point2D::new(centers[i].x + s * radii[i] * nv.x, centers[i].y + s * radii[i] * nv.y)
    };
    let mut ring: Vec<Point2D> = (0..n).map(|i| side(i, -1.0)).collect();
    ring.extend((0..n).rev().map(|i| side(i, 1.0)));
    Stroke {
        centers,
        radii: radii.to_vec(),
        polygon: TextPolygon::new(ring),
    }
}

/// Random swept stroke with `pairs` vertex pairs, starting near `origin`.
pub fn stroke_strategy(pairs: std::ops::RangeInclusive<usize>, origin: Point2D) -> impl Strategy<Value = Stroke> {
    pairs
        .prop_flat_map(|n| {
            (
                -0.8f64..0.8,
                prop::collection::vec(-0.25f64..0.25, n - 1),
                prop::collection::vec(0.0f64..1.0, n - 1),
                prop::collection::vec(3.0f64..10.0, n),
            )
        })
        .prop_map(move |(heading, turns, steps, radii)| {
            let rmax = radii.iter().cloned().fold(0.0, f64::max);
            let steps: Vec<f64> = steps.iter().map(|s| rmax * (1.5 + 1.5 * s)).collect();
            build_stroke(origin, heading, &turns, &steps, &radii)
        })
}

/// Winding-number point-in-polygon test.
pub fn winding_inside(ring: &[Point2D], p: Point2D) -> bool {
    let mut wn = 0i32;
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        let side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && side > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && side < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

/// Distance from `p` to the closest edge of `ring`.
pub fn boundary_distance(ring: &[Point2D], p: Point2D) -> f64 {
    (0..ring.len())
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            let (vx, vy) = (b.x - a.x, b.y - a.y);
            let len2 = vx * vx + vy * vy;
            let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0) };
            p.distance(Point2D::new(a.x + t * vx, a.y + t * vy))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Geometric characterization of a digital line from `a` to `b`: one pixel
/// per step along the major axis, each within half a pixel of the ideal line
/// along the minor axis.
pub fn is_digital_line(a: Pixel, b: Pixel, pts: &[Pixel]) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let steps = dx.abs().max(dy.abs());
    if pts.len() != steps as usize + 1 || pts[0] != a || *pts.last().unwrap() != b {
        return false;
    }
    pts.iter().enumerate().all(|(i, p)| {
        let t = if steps == 0 { 0.0 } else { i as f64 / steps as f64 };
        let (ix, iy) = (a.x as f64 + dx as f64 * t, a.y as f64 + dy as f64 * t);
        let i = i as i32;
        if dx.abs() >= dy.abs() {
            p.x == a.x + dx.signum() * i && (p.y as f64 - iy).abs() <= 0.5 + 1e-9
        } else {
            p.y == a.y + dy.signum() * i && (p.x as f64 - ix).abs() <= 0.5 + 1e-9
        }
    })
}

/// Random mask of the given size with a per-mask density.
pub fn mask_strategy(width: usize, height: usize) -> impl Strategy<Value = BinaryMask> {
    (0.02f64..0.6).prop_flat_map(move |density| {
        prop::collection::vec(prop::bool::weighted(density), width * height)
            .prop_map(move |bits| BinaryMask::from_bits(width, height, bits).unwrap())
    })
}

pub fn neighbors4(x: i32, y: i32) -> [(i32, i32); 4] {
    [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
}

pub fn neighbors8(x: i32, y: i32) -> [(i32, i32); 8] {
    [
        (x - 1, y - 1),
        (x, y - 1),
        (x + 1, y - 1),
        (x - 1, y),
        (x + 1, y),
        (x - 1, y + 1),
        (x, y + 1),
        (x + 1, y + 1),
    ]
}
