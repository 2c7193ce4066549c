//! Subcommand bodies. Each takes fully resolved options.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uht_core::datasets::{synth_corpus, AnnotatedImage, Corpus, NativeFormat, SynthConfig, WordKind};
use uht_core::diag::Diagnostic;
use uht_core::eval::{
    merge_multiscale, min_area_rect, report, rescale_point, EvalError, EvalReport, Frame, DEFAULT_MERGE_IOU,
};
use uht_core::geometry::TextPolygon;
use uht_core::heatmap::{loss_total_masked, render_groundtruth, EncodeConfig, Heatmap, LossBreakdown, LossConfig};
use uht_core::raster::BinaryMask;
use uht_core::textfill::{decode, Detection, TextfillConfig};

use crate::io::{self, MANIFEST};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct EncodeOpts {
    pub gt: PathBuf,
    pub out: PathBuf,
    pub encode: EncodeConfig,
    pub width: Option<u32>,
    pub height: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct DecodeOpts {
    pub heatmaps: PathBuf,
    pub out: PathBuf,
    pub textfill: TextfillConfig,
}

#[derive(Debug, Clone)]
pub struct RoundtripOpts {
    pub gt: PathBuf,
    pub out: Option<PathBuf>,
    pub encode: EncodeConfig,
    pub textfill: TextfillConfig,
    pub iou: f64,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EvalOpts {
    pub gt: PathBuf,
    pub det: PathBuf,
    pub iou: f64,
    pub out: Option<PathBuf>,
    pub rect: bool,
}

#[derive(Debug, Clone)]
pub struct LossOpts {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub loss: LossConfig,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RenderOpts {
    pub gt: Option<PathBuf>,
    pub det: Option<PathBuf>,
    pub heatmaps: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SynthOpts {
    pub n: usize,
    pub kinds: Vec<WordKind>,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ImportOpts {
    pub format: NativeFormat,
    pub annotations: PathBuf,
    pub images: Option<PathBuf>,
    pub out: PathBuf,
}

/// Counts printed after a batch command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Summary {
    pub images: usize,
    pub detections: usize,
    pub diagnostics: usize,
}

/// Written next to encoded heatmaps so decoding can map back to the
/// annotation frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub m: u32,
    pub sigma_divisor: f64,
    pub images: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ignore_file: Option<String>,
    pub width: u32,
    pub height: u32,
    pub source_width: u32,
    pub source_height: u32,
    pub diagnostics: Vec<Diagnostic>,
}

/// Ids become file names, so they may not contain separators or start with a dot.
fn check_image_id(id: &str) -> Result<(), CliError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!("image id {id:?} is not usable as a file name")))
    }
}

fn frame(w: u32, h: u32) -> Frame {
    Frame::new(w as f64, h as f64)
}

fn rescale_polygons(polys: &[TextPolygon], from: Frame, to: Frame) -> Vec<TextPolygon> {
    if from == to {
        return polys.to_vec();
    }
    polys
        .iter()
        .map(|p| TextPolygon {
            vertices: p.vertices.iter().map(|&v| rescale_point(v, from, to)).collect(),
            ..p.clone()
        })
        .collect()
}

fn rescale_detections(dets: Vec<Detection>, from: Frame, to: Frame) -> Vec<Detection> {
    if from == to {
        return dets;
    }
    let area_factor = (to.width / from.width) * (to.height / from.height);
    dets.into_iter()
        .map(|d| Detection {
            polygon: d.polygon.iter().map(|&p| rescale_point(p, from, to)).collect(),
            score: d.score,
            region_area: (d.region_area as f64 * area_factor).round() as usize,
        })
        .collect()
}

fn dont_care_heatmap(mask: &BinaryMask) -> Heatmap {
    let values = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Heatmap::from_values(mask.width(), mask.height(), values).expect("mask dimensions")
}

fn log_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        log::warn!("{d}");
    }
}

pub fn cmd_encode(opts: &EncodeOpts) -> Result<Summary, CliError> {
    let corpus = io::read_corpus(&opts.gt)?;
    for img in &corpus.images {
        check_image_id(&img.image_id)?;
    }
    io::ensure_dir(&opts.out)?;
    let entries: Vec<ManifestEntry> = corpus
        .images
        .par_iter()
        .map(|img| -> Result<ManifestEntry, CliError> {
            let width = opts.width.unwrap_or(img.width);
            let height = opts.height.unwrap_or(img.height);
            if width == 0 || height == 0 {
                return Err(CliError::Validation(format!("image {} has an empty canvas", img.image_id)));
            }
            let polys = rescale_polygons(&img.polygons, frame(img.width, img.height), frame(width, height));
            let rendered = render_groundtruth(&polys, width as usize, height as usize, &opts.encode);
            let diagnostics: Vec<Diagnostic> = rendered
                .diagnostics
                .into_iter()
                .map(|d| d.for_image(img.image_id.clone()))
                .collect();
            log_diagnostics(&diagnostics);
            let file = io::heatmap_path(&opts.out, &img.image_id);
            io::write_heatmap(&file, &rendered.heatmap)?;
            let ignore_file = if rendered.dont_care.is_empty() {
                None
            } else {
                let path = io::ignore_path(&opts.out, &img.image_id);
                io::write_heatmap(&path, &dont_care_heatmap(&rendered.dont_care))?;
                Some(file_name(&path))
            };
            Ok(ManifestEntry {
                image_id: img.image_id.clone(),
                file: file_name(&file),
                ignore_file,
                width,
                height,
                source_width: img.width,
                source_height: img.height,
                diagnostics,
            })
        })
        .collect::<Result<_, _>>()?;
    let diagnostics = entries.iter().map(|e| e.diagnostics.len()).sum();
    let manifest = Manifest {
        m: opts.encode.m,
        sigma_divisor: opts.encode.sigma_divisor,
        images: entries,
    };
    io::write_json(&opts.out.join(MANIFEST), &manifest)?;
    Ok(Summary {
        images: corpus.images.len(),
        detections: 0,
        diagnostics,
    })
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads the manifest in `dir` when there is one.
pub fn read_manifest(dir: &Path) -> Result<Option<Manifest>, CliError> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    serde_json::from_reader(io::open(&path)?)
        .map(Some)
        .map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))
}

/// Decodes every heatmap in `dir`, sorted by image id. Polygons are mapped
/// back to the annotation frame recorded in the manifest.
pub fn decode_dir(dir: &Path, cfg: &TextfillConfig) -> Result<Vec<(String, Vec<Detection>)>, CliError> {
    let files = io::list_heatmaps(dir)?;
    let frames: HashMap<String, (Frame, Frame)> = read_manifest(dir)?
        .map(|m| {
            m.images
                .into_iter()
                .map(|e| (e.image_id, (frame(e.width, e.height), frame(e.source_width, e.source_height))))
                .collect()
        })
        .unwrap_or_default();
    files
        .par_iter()
        .map(|(id, path)| {
            let h = io::read_heatmap(path)?;
            let dets = decode(&h, cfg).map_err(|e| CliError::Validation(e.to_string()))?;
            let dets = match frames.get(id) {
                Some(&(canvas, source)) => rescale_detections(dets, canvas, source),
                None => dets,
            };
            Ok((id.clone(), dets))
        })
        .collect()
}

pub fn cmd_decode(opts: &DecodeOpts) -> Result<Summary, CliError> {
    let per_image = decode_dir(&opts.heatmaps, &opts.textfill)?;
    io::write_detections(&opts.out, &per_image)?;
    Ok(Summary {
        images: per_image.len(),
        detections: per_image.iter().map(|(_, d)| d.len()).sum(),
        diagnostics: 0,
    })
}

fn scaled_size(n: u32, s: f64) -> u32 {
    ((n as f64 * s).round() as u32).max(1)
}

/// Encodes and decodes one image at every scale; detections come back in
/// the image frame.
pub fn roundtrip_image(
    img: &AnnotatedImage,
    encode: &EncodeConfig,
    textfill: &TextfillConfig,
    scales: &[f64],
) -> Result<Vec<Detection>, CliError> {
    let source = frame(img.width, img.height);
    let mut per_scale = Vec::with_capacity(scales.len());
    for &s in scales {
        let (w, h) = (scaled_size(img.width, s), scaled_size(img.height, s));
        let canvas = frame(w, h);
        let polys = rescale_polygons(&img.polygons, source, canvas);
        let rendered = render_groundtruth(&polys, w as usize, h as usize, encode);
        let dets = decode(&rendered.heatmap, textfill).map_err(|e| CliError::Validation(e.to_string()))?;
        per_scale.push((canvas, dets));
    }
    if let [(canvas, _)] = per_scale.as_slice() {
        let canvas = *canvas;
        let (_, dets) = per_scale.pop().unwrap();
        return Ok(rescale_detections(dets, canvas, source));
    }
    merge_multiscale(&per_scale, source, DEFAULT_MERGE_IOU).map_err(eval_error)
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::BadScale { .. } => CliError::Validation(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

pub fn cmd_roundtrip(opts: &RoundtripOpts) -> Result<EvalReport, CliError> {
    let corpus = io::read_corpus(&opts.gt)?;
    if corpus.images.is_empty() {
        log::warn!("{}: corpus is empty; scores are reported as 0", opts.gt.display());
    }
    let preds: HashMap<String, Vec<Detection>> = corpus
        .images
        .par_iter()
        .map(|img| Ok((img.image_id.clone(), roundtrip_image(img, &opts.encode, &opts.textfill, &opts.scales)?)))
        .collect::<Result<_, CliError>>()?;
    let r = report(&corpus, &preds, opts.iou).map_err(eval_error)?;
    if let Some(out) = &opts.out {
        io::write_json(out, &r)?;
    }
    Ok(r)
}

pub fn cmd_eval(opts: &EvalOpts) -> Result<EvalReport, CliError> {
    let corpus = io::read_corpus(&opts.gt)?;
    let mut preds = io::read_detections(&opts.det)?;
    if opts.rect {
        for d in preds.values_mut().flatten() {
            d.polygon = min_area_rect(&d.polygon);
        }
    }
    let r = report(&corpus, &preds, opts.iou).map_err(eval_error)?;
    if let Some(out) = &opts.out {
        io::write_json(out, &r)?;
    }
    Ok(r)
}

/// One-line score summary.
pub fn format_scores(r: &EvalReport) -> String {
    format!(
        "P={:.1}% R={:.1}% F={:.1}% (tp={} det={} gt={} iou={})",
        r.precision * 100.0,
        r.recall * 100.0,
        r.fmeasure * 100.0,
        r.tally.true_positives,
        r.tally.predictions,
        r.tally.groundtruth,
        r.iou_threshold
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRow {
    pub image_id: String,
    #[serde(flatten)]
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossTable {
    pub rows: Vec<LossRow>,
    pub mean: LossBreakdown,
}

impl LossTable {
    pub fn to_text(&self) -> String {
        let mut s = format!("{:<24} {:>12} {:>12} {:>12} {:>12}\n", "image", "l_reg", "l_center", "l_region", "total");
        let line = |s: &mut String, id: &str, l: &LossBreakdown| {
            s.push_str(&format!(
                "{:<24} {:>12.6} {:>12.6} {:>12.6} {:>12.6}\n",
                id, l.l_reg, l.l_center, l.l_region, l.total
            ));
        };
        for r in &self.rows {
            line(&mut s, &r.image_id, &r.loss);
        }
        line(&mut s, "mean", &self.mean);
        s
    }
}

fn read_mask(path: &Path) -> Result<Option<BinaryMask>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let h = io::read_heatmap(path)?;
    let bits = h.values().iter().map(|&v| v > 0.5).collect();
    Ok(Some(BinaryMask::from_bits(h.width(), h.height(), bits).expect("heatmap dimensions")))
}

pub fn cmd_loss(opts: &LossOpts) -> Result<LossTable, CliError> {
    let preds = io::list_heatmaps(&opts.pred)?;
    let rows: Vec<LossRow> = preds
        .par_iter()
        .map(|(id, path)| {
            let pred = io::read_heatmap(path)?;
            let gt_path = io::heatmap_path(&opts.gt, id);
            if !gt_path.exists() {
                return Err(CliError::Input(format!("no groundtruth heatmap for {id} in {}", opts.gt.display())));
            }
            let gt = io::read_heatmap(&gt_path)?;
            let mask = read_mask(&io::ignore_path(&opts.gt, id))?;
            let loss = loss_total_masked(&pred, &gt, &opts.loss, mask.as_ref())
                .map_err(|e| CliError::Validation(format!("{id}: {e}")))?;
            Ok(LossRow { image_id: id.clone(), loss })
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len().max(1) as f64;
    let sum = |f: fn(&LossBreakdown) -> f64| rows.iter().map(|r| f(&r.loss)).sum::<f64>() / n;
    let mean = LossBreakdown {
        l_reg: sum(|l| l.l_reg),
        l_center: sum(|l| l.l_center),
        l_region: sum(|l| l.l_region),
        total: sum(|l| l.total),
    };
    let table = LossTable { rows, mean };
    if let Some(out) = &opts.out {
        io::write_json(out, &table)?;
    }
    Ok(table)
}

pub fn cmd_synth(opts: &SynthOpts) -> Result<Corpus, CliError> {
    let (mut corpus, _) = synth_corpus(&SynthConfig {
        images: opts.n,
        kinds: opts.kinds.clone(),
        seed: opts.seed,
        width: opts.width,
        height: opts.height,
        ..SynthConfig::default()
    });
    corpus.name = file_name(&opts.out);
    io::write_corpus(&opts.out, &corpus)?;
    Ok(corpus)
}

/// Image id for an annotation file: its stem without the usual `gt_` or
/// `poly_gt_` prefix.
pub fn annotation_image_id(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for prefix in ["poly_gt_", "gt_"] {
        if let Some(rest) = stem.strip_prefix(prefix) {
            return rest.to_string();
        }
    }
    stem
}

pub fn cmd_import(opts: &ImportOpts) -> Result<Summary, CliError> {
    let dir = &opts.annotations;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let parsed: Vec<(AnnotatedImage, Vec<Diagnostic>)> = files
        .par_iter()
        .map(|path| {
            let id = annotation_image_id(path);
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let mut diags = Vec::new();
            let size = match &opts.images {
                Some(images) => {
                    let png = images.join(format!("{id}.png"));
                    match image::image_dimensions(&png) {
                        Ok(size) => Some(size),
                        Err(e) => {
                            diags.push(Diagnostic::new(format!("no canvas size from {}: {e}", png.display())).for_image(&id));
                            None
                        }
                    }
                }
                None => None,
            };
            let p = opts.format.parse(&id, &text, size);
            diags.extend(p.diagnostics);
            Ok((p.image, diags))
        })
        .collect::<Result<_, CliError>>()?;
    let mut seen = HashSet::new();
    let mut images = Vec::with_capacity(parsed.len());
    let mut diagnostics = 0;
    for (img, diags) in parsed {
        check_image_id(&img.image_id)?;
        if !seen.insert(img.image_id.clone()) {
            return Err(CliError::Input(format!("two annotation files map to image {:?}", img.image_id)));
        }
        log_diagnostics(&diags);
        diagnostics += diags.len();
        images.push(img);
    }
    let corpus = Corpus {
        name: file_name(&opts.out),
        images,
    };
    io::write_corpus(&opts.out, &corpus)?;
    Ok(Summary {
        images: corpus.images.len(),
        detections: 0,
        diagnostics,
    })
}
