//! Optional TOML config file. Keys mirror the long flag names (dashes or
//! underscores); a flag given on the command line always wins.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gt: Option<PathBuf>,
    pub heatmaps: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub det: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub m: Option<u32>,
    pub t_top: Option<f64>,
    pub t_end: Option<f64>,
    pub preset: Option<String>,
    pub iou: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub scales: Option<Scales>,
    pub seed: Option<u64>,
    pub loss_reg_sum: Option<bool>,
    pub raw_contour: Option<bool>,
    pub rect: Option<bool>,
    pub n: Option<usize>,
    pub kinds: Option<String>,
    pub width: Option<u32>,
    pub height: Option<u32>,
}

/// Scales as either a TOML array or a comma-separated string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scales {
    List(Vec<f64>),
    Text(String),
}

impl Scales {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Scales::List(v) => Ok(v.clone()),
            Scales::Text(s) => parse_scales(s),
        }
    }
}

pub fn parse_scales(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("bad scale {t:?}")))
        })
        .collect()
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let normalized: toml::Table = table
            .into_iter()
            .map(|(k, v)| (k.replace('-', "_"), v))
            .collect();
        normalized.try_into().map_err(|e: toml::de::Error| e.to_string())
    }
}
