//! PNG overlays: heatmap blended over the image, groundtruth rings in green
//! (ignored words gray), detections in red.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use uht_core::geometry::Point2D;
use uht_core::heatmap::Heatmap;
use uht_core::raster::{bresenham_line, Pixel};

use crate::io;
use crate::{CliError, RenderOpts};

const GREEN: Rgb<u8> = Rgb([40, 220, 60]);
const GRAY: Rgb<u8> = Rgb([150, 150, 150]);
const RED: Rgb<u8> = Rgb([235, 40, 40]);
const HEAT: [f32; 3] = [255.0, 200.0, 0.0];
const HEAT_ALPHA: f32 = 0.6;

#[derive(Default)]
struct Layers {
    size: Option<(u32, u32)>,
    heatmap: Option<PathBuf>,
    rings: Vec<(Vec<Point2D>, Rgb<u8>)>,
}

fn blend(img: &mut RgbImage, h: &Heatmap) {
    for (x, y, px) in img.enumerate_pixels_mut() {
        if x as usize >= h.width() || y as usize >= h.height() {
            continue;
        }
        let a = h.get(x as i32, y as i32).clamp(0.0, 1.0) * HEAT_ALPHA;
        for (channel, heat) in px.0.iter_mut().zip(HEAT) {
            *channel = (*channel as f32 * (1.0 - a) + heat * a).round() as u8;
        }
    }
}

fn draw_ring(img: &mut RgbImage, ring: &[Point2D], color: Rgb<u8>) {
    let (w, h) = (img.width() as i32, img.height() as i32);
    for (i, a) in ring.iter().enumerate() {
        let b = ring[(i + 1) % ring.len()];
        for p in bresenham_line(a.to_pixel(), b.to_pixel()) {
            if p.x >= 0 && p.y >= 0 && p.x < w && p.y < h {
                img.put_pixel(p.x as u32, p.y as u32, color);
            }
        }
    }
}

fn extent(rings: &[(Vec<Point2D>, Rgb<u8>)]) -> (u32, u32) {
    let mut hi = Pixel::new(0, 0);
    for p in rings.iter().flat_map(|(r, _)| r) {
        let q = p.to_pixel();
        hi = Pixel::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    ((hi.x + 2).max(1) as u32, (hi.y + 2).max(1) as u32)
}

/// Writes one `<image_id>.png` per image named by any input; returns the count.
pub fn cmd_render(opts: &RenderOpts) -> Result<usize, CliError> {
    let mut layers: BTreeMap<String, Layers> = BTreeMap::new();
    if let Some(gt) = &opts.gt {
        for img in io::read_corpus(gt)?.images {
            let entry = layers.entry(img.image_id.clone()).or_default();
            entry.size = Some((img.width, img.height));
            for p in img.polygons {
                let color = if p.ignore { GRAY } else { GREEN };
                entry.rings.push((p.vertices, color));
            }
        }
    }
    if let Some(det) = &opts.det {
        let dets: HashMap<_, _> = io::read_detections(det)?;
        for (id, ds) in dets {
            let entry = layers.entry(id).or_default();
            entry.rings.extend(ds.into_iter().map(|d| (d.polygon, RED)));
        }
    }
    if let Some(dir) = &opts.heatmaps {
        for (id, path) in io::list_heatmaps(dir)? {
            layers.entry(id).or_default().heatmap = Some(path);
        }
    }
    io::ensure_dir(&opts.out)?;
    layers
        .par_iter()
        .map(|(id, layer)| {
            let heatmap = layer.heatmap.as_deref().map(io::read_heatmap).transpose()?;
            let background = opts.images.as_ref().map(|d| d.join(format!("{id}.png"))).filter(|p| p.exists());
            let mut img = match background {
                Some(path) => image::open(&path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
                    .to_rgb8(),
                None => {
                    let (w, h) = layer
                        .size
                        .or(heatmap.as_ref().map(|h| (h.width() as u32, h.height() as u32)))
                        .unwrap_or_else(|| extent(&layer.rings));
                    RgbImage::new(w, h)
                }
            };
            if let Some(h) = &heatmap {
                blend(&mut img, h);
            }
            for (ring, color) in &layer.rings {
                draw_ring(&mut img, ring, *color);
            }
            let path = opts.out.join(format!("{id}.png"));
            img.save(&path)
                .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
        })
        .collect::<Result<Vec<()>, _>>()?;
    Ok(layers.len())
}
