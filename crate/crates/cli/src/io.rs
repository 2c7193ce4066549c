//! File helpers shared by the subcommands.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uht_core::datasets::{read_canonical, write_canonical, Corpus, DatasetError};
use uht_core::geometry::Point2D;
use uht_core::heatmap::{Heatmap, HeatmapError};
use uht_core::textfill::Detection;

use crate::CliError;

pub const HEATMAP_EXT: &str = "uhth";
pub const IGNORE_SUFFIX: &str = ".ignore.uhth";
pub const MANIFEST: &str = "manifest.json";

fn input(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn output(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn corrupt(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Corrupt(format!("{}: {e}", path.display()))
}

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| input(path, e))
}

pub fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_canonical(&name, open(path)?).map_err(|e| match e {
        DatasetError::Io(e) => input(path, e),
        other => corrupt(path, other),
    })
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), CliError> {
    write_with(path, |w| write_canonical(corpus, w).map_err(|e| std::io::Error::other(e.to_string())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| output(dir, e))
}

pub fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let file = File::create(path).map_err(|e| output(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| output(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

pub fn read_heatmap(path: &Path) -> Result<Heatmap, CliError> {
    let reader = open(path)?;
    let is_pgm = path.extension().is_some_and(|e| e == "pgm");
    let result = if is_pgm {
        Heatmap::read_pgm16(reader)
    } else {
        Heatmap::read_uhth(reader)
    };
    result.map_err(|e| match e {
        HeatmapError::Io(io) if io.kind() != std::io::ErrorKind::UnexpectedEof => input(path, io),
        other => corrupt(path, other),
    })
}

pub fn write_heatmap(path: &Path, h: &Heatmap) -> Result<(), CliError> {
    write_with(path, |w| h.write_uhth(w))
}

/// Heatmap files in `dir` as `(image_id, path)`, sorted by id. Don't-care
/// sidecars are skipped.
pub fn list_heatmaps(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| input(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| input(dir, e))?.path();
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        if name.ends_with(IGNORE_SUFFIX) {
            continue;
        }
        let ext = path.extension().map(|e| e.to_string_lossy().into_owned());
        if matches!(ext.as_deref(), Some(HEATMAP_EXT) | Some("pgm")) {
            let id = path.file_stem().unwrap().to_string_lossy().into_owned();
            out.push((id, path));
        }
    }
    out.sort();
    if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(CliError::Input(format!("two heatmaps for image {:?} in {}", w[0].0, dir.display())));
    }
    Ok(out)
}

pub fn heatmap_path(dir: &Path, image_id: &str) -> PathBuf {
    dir.join(format!("{image_id}.{HEATMAP_EXT}"))
}

pub fn ignore_path(dir: &Path, image_id: &str) -> PathBuf {
    dir.join(format!("{image_id}{IGNORE_SUFFIX}"))
}

/// One line of a detections file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    pub polygon: Vec<Point2D>,
    pub score: f64,
    pub area: usize,
}

pub fn write_detections(path: &Path, per_image: &[(String, Vec<Detection>)]) -> Result<(), CliError> {
    write_with(path, |w| {
        for (id, dets) in per_image {
            for d in dets {
                let rec = DetectionRecord {
                    image_id: id.clone(),
                    polygon: d.polygon.clone(),
                    score: d.score,
                    area: d.region_area,
                };
                serde_json::to_writer(&mut *w, &rec)?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    })
}

pub fn read_detections(path: &Path) -> Result<HashMap<String, Vec<Detection>>, CliError> {
    let mut out: HashMap<String, Vec<Detection>> = HashMap::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| input(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DetectionRecord =
            serde_json::from_str(&line).map_err(|e| corrupt(path, format!("record {}: {e}", i + 1)))?;
        out.entry(rec.image_id).or_default().push(Detection {
            polygon: rec.polygon,
            score: rec.score,
            region_area: rec.area,
        });
    }
    Ok(out)
}
