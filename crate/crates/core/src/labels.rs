//! Region labels and the line-delimited interchange records shared by every
//! stage of the pipeline.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::synth::AssetCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelClass {
    Figure,
    Table,
}

impl LabelClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelClass::Figure => "figure",
            LabelClass::Table => "table",
        }
    }
}

impl fmt::Display for LabelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Who produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Machine,
    Human,
}

/// A figure or table region on one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub label_id: String,
    pub bbox: BBox,
    pub class: LabelClass,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<AssetCategory>,
}

impl RegionLabel {
    pub fn new(label_id: impl Into<String>, bbox: BBox, class: LabelClass, source: Source) -> Self {
        RegionLabel {
            label_id: label_id.into(),
            bbox,
            class,
            source,
            category: None,
        }
    }
}

/// One box in the ground-truth labels file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireLabel {
    #[serde(flatten)]
    pub bbox: BBox,
    pub class: LabelClass,
}

/// One line of the ground-truth labels file:
/// `{page_id, labels: [{x_min, y_min, x_max, y_max, class}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLabels {
    pub page_id: String,
    pub labels: Vec<WireLabel>,
}

impl PageLabels {
    /// Materialises region labels with ids `{page_id}/{index}`.
    pub fn to_region_labels(&self, source: Source) -> Vec<RegionLabel> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, w)| RegionLabel::new(format!("{}/{}", self.page_id, i), w.bbox, w.class, source))
            .collect()
    }

    pub fn from_region_labels(page_id: impl Into<String>, labels: &[RegionLabel]) -> Self {
        PageLabels {
            page_id: page_id.into(),
            labels: labels
                .iter()
                .map(|l| WireLabel {
                    bbox: l.bbox,
                    class: l.class,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

impl RecordError {
    pub fn is_io(&self) -> bool {
        matches!(self, RecordError::Io { .. })
    }
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RecordError> {
    let file = File::open(path).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_jsonl(BufReader::new(file), &path.display().to_string())
}

pub fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead, origin: &str) -> Result<Vec<T>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| RecordError::Io {
            path: origin.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| RecordError::Malformed {
            path: origin.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), RecordError> {
    let io_err = |source| RecordError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        w.write_all(line.as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_schema_is_flat() {
        let rec = PageLabels {
            page_id: "p0".into(),
            labels: vec![WireLabel {
                bbox: BBox::new(1.0, 2.0, 3.0, 4.0).unwrap(),
                class: LabelClass::Table,
            }],
        };
        let s = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            s,
            r#"{"page_id":"p0","labels":[{"x_min":1.0,"y_min":2.0,"x_max":3.0,"y_max":4.0,"class":"table"}]}"#
        );
        let back: PageLabels = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"page_id\":\"a\",\"labels\":[]}\n\n{\"page_id\":\"b\",\"labels\":[{\"x_min\":5,\"y_min\":0,\"x_max\":1,\"y_max\":1,\"class\":\"figure\"}]}\n";
        let err = parse_jsonl::<PageLabels>(text.as_bytes(), "gt.jsonl").unwrap_err();
        match err {
            RecordError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn region_label_ids_are_positional() {
        let rec = PageLabels {
            page_id: "p7".into(),
            labels: vec![
                WireLabel {
                    bbox: BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
                    class: LabelClass::Figure,
                };
                2
            ],
        };
        let ids: Vec<_> = rec.to_region_labels(Source::Machine).into_iter().map(|l| l.label_id).collect();
        assert_eq!(ids, ["p7/0", "p7/1"]);
    }
}
