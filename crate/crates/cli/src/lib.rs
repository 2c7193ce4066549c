//! `uht` command-line front end.
//!
//! Every subcommand resolves its options (flag, then config file, then
//! default), validates them and runs without touching global state, so the
//! caller decides the worker pool via [`rayon::ThreadPool::install`].

pub mod commands;
pub mod config;
pub mod io;
pub mod render;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use uht_core::datasets::{NativeFormat, WordKind};
use uht_core::heatmap::{EncodeConfig, LossConfig, Reduction};
use uht_core::textfill::{Preset, TextfillConfig};

use crate::config::{parse_scales, FileConfig};

pub use commands::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("output error: {0}")]
    Output(String),
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Output(_) => 3,
            CliError::Corrupt(_) => 4,
            CliError::Validation(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "uht", version, about = "Gaussian heatmap codec and evaluation for arbitrary-shape text")]
pub struct Cli {
    /// TOML file whose keys mirror the long flags; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (synthetic corpora).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render groundtruth heatmaps for a canonical corpus.
    Encode(EncodeArgs),
    /// Decode a directory of heatmaps into polygons.
    Decode(DecodeArgs),
    /// Encode, decode and evaluate a corpus against itself.
    Roundtrip(RoundtripArgs),
    /// Score detections against groundtruth.
    Eval(EvalArgs),
    /// Per-image loss terms between predicted and groundtruth heatmaps.
    Loss(LossArgs),
    /// Draw polygons and heatmaps over images as PNG.
    Render(RenderArgs),
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Convert native dataset annotations into a canonical corpus.
    Import(ImportArgs),
}

#[derive(Debug, Args, Default)]
pub struct TextfillArgs {
    /// Peak threshold.
    #[arg(long)]
    pub t_top: Option<f64>,
    /// Flood threshold.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Threshold preset: total-text, ctw1500 (0.7, 0.2) or msra-td500, coco-text (0.75, 0.2).
    #[arg(long)]
    pub preset: Option<String>,
    /// Keep one vertex per contour pixel instead of simplifying.
    #[arg(long)]
    pub raw_contour: bool,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Subdivisions per quadrilateral.
    #[arg(long)]
    pub m: Option<u32>,
    /// Canvas width; polygons are rescaled from the image frame.
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub heatmaps: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub textfill: TextfillArgs,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Report destination (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub iou: Option<f64>,
    /// Comma-separated canvas scale factors; more than one merges detections.
    #[arg(long)]
    pub scales: Option<String>,
    #[command(flatten)]
    pub textfill: TextfillArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Detections (JSON lines).
    #[arg(long)]
    pub det: Option<PathBuf>,
    #[arg(long)]
    pub iou: Option<f64>,
    /// Report destination (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Score minimum-area rectangles of the detections.
    #[arg(long)]
    pub rect: bool,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Predicted heatmaps directory.
    #[arg(long)]
    pub heatmaps: Option<PathBuf>,
    /// Groundtruth heatmaps directory (as written by `encode`).
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Use plain sums of squared errors instead of per-class means.
    #[arg(long)]
    pub loss_reg_sum: bool,
    /// Table destination (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Groundtruth corpus to draw.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Detections to draw.
    #[arg(long)]
    pub det: Option<PathBuf>,
    /// Heatmaps to blend underneath.
    #[arg(long)]
    pub heatmaps: Option<PathBuf>,
    /// Directory of `<image_id>.png` backgrounds.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of images.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated word kinds: straight, rotated, curved.
    #[arg(long)]
    pub kinds: Option<String>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// total-text, ctw1500 or msra-td500.
    #[arg(long)]
    pub format: String,
    /// Directory of per-image annotation files.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Directory of `<image_id>.png` files used for canvas sizes.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn required(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Validation(format!("--{name} is required")))
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(message()))
    }
}

fn resolve_m(flag: Option<u32>, cfg: &FileConfig) -> Result<EncodeConfig, CliError> {
    let m = flag.or(cfg.m).unwrap_or(uht_core::geometry::DEFAULT_SUBDIVISIONS);
    check(m >= 1, || format!("--m must be at least 1, got {m}"))?;
    Ok(EncodeConfig {
        m,
        ..EncodeConfig::default()
    })
}

fn resolve_iou(flag: Option<f64>, cfg: &FileConfig) -> Result<f64, CliError> {
    let iou = flag.or(cfg.iou).unwrap_or(uht_core::eval::DEFAULT_MATCH_IOU);
    check(iou > 0.0 && iou < 1.0, || format!("--iou must lie in (0, 1), got {iou}"))?;
    Ok(iou)
}

fn resolve_textfill(args: &TextfillArgs, cfg: &FileConfig) -> Result<TextfillConfig, CliError> {
    let mut tf = match args.preset.as_ref().or(cfg.preset.as_ref()) {
        Some(name) => name.parse::<Preset>().map_err(CliError::Validation)?.config(),
        None => TextfillConfig::default(),
    };
    if let Some(t) = args.t_top.or(cfg.t_top) {
        tf.t_top = t;
    }
    if let Some(t) = args.t_end.or(cfg.t_end) {
        tf.t_end = t;
    }
    if args.raw_contour || cfg.raw_contour.unwrap_or(false) {
        tf.simplify_tolerance = 0.0;
    }
    tf.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(tf)
}

fn resolve_scales(flag: Option<&str>, cfg: &FileConfig) -> Result<Vec<f64>, CliError> {
    let scales = match (flag, &cfg.scales) {
        (Some(s), _) => parse_scales(s)?,
        (None, Some(s)) => s.values()?,
        (None, None) => vec![1.0],
    };
    check(!scales.is_empty(), || "--scales is empty".into())?;
    for &s in &scales {
        check(s.is_finite() && s > 0.0, || format!("scale {s} is not positive"))?;
    }
    Ok(scales)
}

fn resolve_size(width: Option<u32>, height: Option<u32>) -> Result<(Option<u32>, Option<u32>), CliError> {
    check(width != Some(0) && height != Some(0), || "canvas sizes must be positive".into())?;
    Ok((width, height))
}

impl EncodeArgs {
    pub fn resolve(self, cfg: &FileConfig) -> Result<EncodeOpts, CliError> {
        let (width, height) = resolve_size(self.width.or(cfg.width), self.height.or(cfg.height))?;
        Ok(EncodeOpts {
            gt: required(self.gt, cfg.gt.clone(), "gt")?,
            out: required(self.out, cfg.out.clone(), "out")?,
            encode: resolve_m(self.m, cfg)?,
            width,
            height,
        })
    }
}

impl DecodeArgs {
    pub fn resolve(self, cfg: &FileConfig) -> Result<DecodeOpts, CliError> {
        Ok(DecodeOpts {
            heatmaps: required(self.heatmaps, cfg.heatmaps.clone(), "heatmaps")?,
            out: required(self.out, cfg.out.clone(), "out")?,
            textfill: resolve_textfill(&self.textfill, cfg)?,
        })
    }
}

impl RoundtripArgs {
    pub fn resolve(self, cfg: &FileConfig) -> Result<RoundtripOpts, CliError> {
        Ok(RoundtripOpts {
            gt: required(self.gt, cfg.gt.clone(), "gt")?,
            out: self.out.or(cfg.out.clone()),
            encode: resolve_m(self.m, cfg)?,
            textfill: resolve_textfill(&self.textfill, cfg)?,
            iou: resolve_iou(self.iou, cfg)?,
            scales: resolve_scales(self.scales.as_deref(), cfg)?,
        })
    }
}

impl EvalArgs {
    pub fn resolve(self, cfg: &FileConfig) -> Result<EvalOpts, CliError> {
        Ok(EvalOpts {
            gt: required(self.gt, cfg.gt.clone(), "gt")?,
            det: required(self.det, cfg.det.clone(), "det")?,
            iou: resolve_iou(self.iou, cfg)?,
            out: self.out.or(cfg.out.clone()),
            rect: self.rect || cfg.rect.unwrap_or(false),
        })
    }
}

impl LossArgs {
    pub fn resolve(self, cfg: &FileConfig) -> Result<LossOpts, CliError> {
        let lambda_center = self.lambda1.or(cfg.lambda1).unwrap_or(1.0);
        let lambda_region = self.lambda2.or(cfg.lambda2).unwrap_or(1.0);
        for l in [lambda_center, lambda_region] {
            check(l.is_finite() && l >= 0.0, || format!("loss weights must be non-negative, got {l}"))?;
        }
        let reduction = if self.loss_reg_sum || cfg.loss_reg_sum.unwrap_or(false) {
            Reduction::Sum
        } else {
            Reduction::Mean
        };
        Ok(LossOpts {
            pred: required(self.heatmaps, cfg.heatmaps.clone(), "heatmaps")?,
            gt: required(self.gt, cfg.gt.clone(), "gt")?,
            loss: LossConfig {
                lambda_center,
                lambda_region,
                reduction,
                ..LossConfig::default()
            },
            out: self.out.or(cfg.out.clone()),
        })
    }
}

impl RenderArgs {
    pub fn resolve(self, cfg: &FileConfig) -> Result<RenderOpts, CliError> {
        let opts = RenderOpts {
            gt: self.gt.or(cfg.gt.clone()),
            det: self.det.or(cfg.det.clone()),
            heatmaps: self.heatmaps.or(cfg.heatmaps.clone()),
            images: self.images.or(cfg.images.clone()),
            out: required(self.out, cfg.out.clone(), "out")?,
        };
        check(opts.gt.is_some() || opts.det.is_some() || opts.heatmaps.is_some(), || {
            "render needs at least one of --gt, --det or --heatmaps".into()
        })?;
        Ok(opts)
    }
}

impl SynthArgs {
    pub fn resolve(self, cfg: &FileConfig, seed: Option<u64>) -> Result<SynthOpts, CliError> {
        let kinds = match self.kinds.as_ref().or(cfg.kinds.as_ref()) {
            Some(list) => list
                .split(',')
                .map(|k| k.parse::<WordKind>().map_err(CliError::Validation))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![WordKind::Straight, WordKind::Rotated, WordKind::Curved],
        };
        check(!kinds.is_empty(), || "--kinds is empty".into())?;
        let (width, height) = resolve_size(self.width.or(cfg.width), self.height.or(cfg.height))?;
        let (width, height) = (width.unwrap_or(512), height.unwrap_or(512));
        check(width >= 128 && height >= 128, || "synthetic canvases must be at least 128x128".into())?;
        Ok(SynthOpts {
            n: self.n.or(cfg.n).unwrap_or(10),
            kinds,
            seed: seed.or(cfg.seed).unwrap_or(0),
            width,
            height,
            out: required(self.out, cfg.out.clone(), "out")?,
        })
    }
}

impl ImportArgs {
    pub fn resolve(self, cfg: &FileConfig) -> Result<ImportOpts, CliError> {
        Ok(ImportOpts {
            format: self.format.parse::<NativeFormat>().map_err(CliError::Validation)?,
            annotations: self.annotations,
            images: self.images.or(cfg.images.clone()),
            out: required(self.out, cfg.out.clone(), "out")?,
        })
    }
}

/// Runs a parsed command line on the current rayon pool.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Encode(a) => {
            let s = cmd_encode(&a.resolve(&cfg)?)?;
            println!("encoded {} images ({} diagnostics)", s.images, s.diagnostics);
        }
        Command::Decode(a) => {
            let s = cmd_decode(&a.resolve(&cfg)?)?;
            println!("decoded {} images into {} detections", s.images, s.detections);
        }
        Command::Roundtrip(a) => {
            let r = cmd_roundtrip(&a.resolve(&cfg)?)?;
            println!("{}", format_scores(&r));
        }
        Command::Eval(a) => {
            let r = cmd_eval(&a.resolve(&cfg)?)?;
            println!("{}", format_scores(&r));
        }
        Command::Loss(a) => {
            let table = cmd_loss(&a.resolve(&cfg)?)?;
            print!("{}", table.to_text());
        }
        Command::Render(a) => {
            let n = render::cmd_render(&a.resolve(&cfg)?)?;
            println!("rendered {n} overlays");
        }
        Command::Synth(a) => {
            let opts = a.resolve(&cfg, cli.seed)?;
            let corpus = cmd_synth(&opts)?;
            println!("wrote {} synthetic images to {}", corpus.images.len(), opts.out.display());
        }
        Command::Import(a) => {
            let s = cmd_import(&a.resolve(&cfg)?)?;
            println!("imported {} images ({} diagnostics)", s.images, s.diagnostics);
        }
    }
    Ok(())
}

/// Parses `args` and runs them; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("uht: {e}");
            e.exit_code()
        }
    }
}
