//! Detector boundary: prediction records, the external adapter runner and a
//! rule-based baseline.

mod adapter;
mod baseline;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::labels::{read_jsonl, write_jsonl, LabelClass, RecordError};
use crate::synth::CorpusManifest;

pub use adapter::{run_adapter, AdapterConfig};
pub use baseline::{baseline_detect, baseline_detect_file, baseline_detect_pages, BaselineConfig, BASELINE_ID};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("schema violation on page {page_id}, field {field}: {message}")]
    Schema {
        page_id: String,
        field: String,
        message: String,
    },
    #[error("adapter failed on page {page_id} ({status}): {diagnostics}")]
    AdapterFailed {
        page_id: String,
        status: String,
        diagnostics: String,
    },
    #[error("command template must contain {{page}} and {{out}} placeholders: {0:?}")]
    BadTemplate(String),
    #[error("cannot read raster {path}: {source}")]
    Raster {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
}

impl DetectError {
    pub fn is_io(&self) -> bool {
        match self {
            DetectError::Io { .. } => true,
            DetectError::Record(e) => e.is_io(),
            _ => false,
        }
    }
}

/// A single detected region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(flatten)]
    pub bbox: BBox,
    pub class: LabelClass,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

/// One line of a predictions file.
///
/// A ground-truth labels line also reads as a prediction set (detector
/// `"unknown"`, every confidence 1), which gives the identity detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub page_id: String,
    #[serde(default = "unknown_detector")]
    pub detector_id: String,
    #[serde(alias = "labels")]
    pub predictions: Vec<Prediction>,
}

fn unknown_detector() -> String {
    "unknown".to_string()
}

impl PredictionSet {
    /// Checks confidence range and page containment of every prediction.
    pub fn validate(&self, page_width: f64, page_height: f64) -> Result<(), DetectError> {
        for (i, p) in self.predictions.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.confidence) {
                return Err(DetectError::Schema {
                    page_id: self.page_id.clone(),
                    field: format!("predictions[{i}].confidence"),
                    message: format!("{} outside [0, 1]", p.confidence),
                });
            }
            if !p.bbox.within_page(page_width, page_height) {
                return Err(DetectError::Schema {
                    page_id: self.page_id.clone(),
                    field: format!("predictions[{i}].bbox"),
                    message: format!("box extends beyond the {page_width}x{page_height} page"),
                });
            }
        }
        Ok(())
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionSet>, DetectError> {
    let sets: Vec<PredictionSet> = read_jsonl(path)?;
    for s in &sets {
        if let Some((i, p)) = s
            .predictions
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(&p.confidence))
        {
            return Err(DetectError::Schema {
                page_id: s.page_id.clone(),
                field: format!("predictions[{i}].confidence"),
                message: format!("{} outside [0, 1]", p.confidence),
            });
        }
    }
    Ok(sets)
}

pub fn write_predictions(path: &Path, sets: &[PredictionSet]) -> Result<(), DetectError> {
    Ok(write_jsonl(path, sets)?)
}

/// A page raster to run a detector on.
#[derive(Debug, Clone, PartialEq)]
pub struct PageRef {
    pub page_id: String,
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

/// Lists the pages of a directory: from its corpus manifest when present,
/// otherwise every `*.png` file sorted by name.
pub fn list_pages(dir: &Path) -> Result<Vec<PageRef>, DetectError> {
    if dir.join("manifest.json").is_file() {
        if let Ok(manifest) = CorpusManifest::load(dir) {
            return Ok(manifest
                .pages
                .iter()
                .map(|p| PageRef {
                    page_id: p.page_id.clone(),
                    path: dir.join(&p.raster),
                    width: p.width,
                    height: p.height,
                })
                .collect());
        }
    }
    let io_err = |source| DetectError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let (width, height) = image::image_dimensions(&path).map_err(|source| DetectError::Raster {
                path: path.display().to_string(),
                source,
            })?;
            let page_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok(PageRef {
                page_id,
                path,
                width,
                height,
            })
        })
        .collect()
}
