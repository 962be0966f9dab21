use std::fs;
use std::path::Path;
use std::process::Command;

use rayon::prelude::*;
use serde::Deserialize;

use super::{DetectError, PageRef, Prediction, PredictionSet};
use crate::geometry::BBox;
use crate::labels::{parse_jsonl, LabelClass};

/// How to invoke an external detector.
///
/// `command_template` is run through `sh -c` once per page after `{page}` is
/// replaced by the page raster path and `{out}` by the path the detector must
/// write its predictions to.
#[derive(Debug, Clone)]
pub struct AdapterConfig {
    pub command_template: String,
    pub detector_id: String,
    pub workers: usize,
}

impl AdapterConfig {
    pub fn new(command_template: impl Into<String>) -> Self {
        AdapterConfig {
            command_template: command_template.into(),
            detector_id: "adapter".to_string(),
            workers: 1,
        }
    }
}

// Lenient reading of detector output: ids default to the page being run,
// confidence defaults to 1, and `labels` is accepted for `predictions` so a
// ground-truth line is valid detector output.
#[derive(Deserialize)]
struct AdapterRecord {
    page_id: Option<String>,
    detector_id: Option<String>,
    #[serde(alias = "labels")]
    predictions: Vec<RawPrediction>,
}

#[derive(Deserialize)]
struct RawPrediction {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    class: LabelClass,
    confidence: Option<f64>,
}

/// Runs the external detector on every page and validates what it writes.
pub fn run_adapter(cfg: &AdapterConfig, pages: &[PageRef]) -> Result<Vec<PredictionSet>, DetectError> {
    if !cfg.command_template.contains("{page}") || !cfg.command_template.contains("{out}") {
        return Err(DetectError::BadTemplate(cfg.command_template.clone()));
    }
    let scratch = tempfile::tempdir().map_err(|source| DetectError::Io {
        path: std::env::temp_dir().display().to_string(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        pages
            .par_iter()
            .enumerate()
            .map(|(i, page)| run_one(cfg, page, &scratch.path().join(format!("{i}.jsonl"))))
            .collect()
    })
}

fn quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn run_one(cfg: &AdapterConfig, page: &PageRef, out: &Path) -> Result<PredictionSet, DetectError> {
    let command = cfg
        .command_template
        .replace("{page}", &quote(&page.path))
        .replace("{out}", &quote(out));
    let output = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .output()
        .map_err(|source| DetectError::Io {
            path: "sh".to_string(),
            source,
        })?;
    if !output.status.success() {
        let mut diagnostics = String::from_utf8_lossy(&output.stderr).trim().to_string();
        diagnostics.truncate(2000);
        return Err(DetectError::AdapterFailed {
            page_id: page.page_id.clone(),
            status: output.status.to_string(),
            diagnostics,
        });
    }
    let text = fs::read_to_string(out).map_err(|source| DetectError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let records: Vec<AdapterRecord> =
        parse_jsonl(text.as_bytes(), &page.page_id).map_err(|e| DetectError::Schema {
            page_id: page.page_id.clone(),
            field: "record".to_string(),
            message: e.to_string(),
        })?;

    let mut set = PredictionSet {
        page_id: page.page_id.clone(),
        detector_id: cfg.detector_id.clone(),
        predictions: Vec::new(),
    };
    for record in records {
        if let Some(id) = &record.page_id {
            if id != &page.page_id {
                return Err(DetectError::Schema {
                    page_id: page.page_id.clone(),
                    field: "page_id".to_string(),
                    message: format!("detector answered for page {id:?}"),
                });
            }
        }
        if let Some(d) = record.detector_id {
            set.detector_id = d;
        }
        for raw in record.predictions {
            let index = set.predictions.len();
            let bbox = BBox::new(raw.x_min, raw.y_min, raw.x_max, raw.y_max).map_err(|e| DetectError::Schema {
                page_id: page.page_id.clone(),
                field: format!("predictions[{index}].bbox"),
                message: e.to_string(),
            })?;
            set.predictions.push(Prediction {
                bbox,
                class: raw.class,
                confidence: raw.confidence.unwrap_or(1.0),
            });
        }
    }
    set.validate(page.width as f64, page.height as f64)?;
    Ok(set)
}
