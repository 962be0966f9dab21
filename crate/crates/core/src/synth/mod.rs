//! Pseudo-paper page synthesis.
//!
//! Pages are composed by pasting figure, table and equation assets onto a
//! white page and filling the remaining column space with placeholder text.
//! Every pasted figure or table yields an exact ground-truth label.

mod compose;
mod corpus;
mod pool;
pub mod procedural;
mod spec;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{LabelClass, RecordError};

pub use compose::{compose_page, GroundTruthPage, Placement};
pub use corpus::{compose_corpus, page_id, CorpusManifest, CorpusPage};
pub use pool::{load_asset_pool, Asset, AssetPool, ManifestEntry};
pub use spec::{AssetCountRange, Margins, PageSpec, Template};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unknown category {name:?} in asset entry {entry:?}")]
    UnknownCategory { entry: String, name: String },
    #[error("missing asset file {path}")]
    MissingFile { path: String },
    #[error("empty asset pool")]
    EmptyPool,
    #[error("no assets available for any positively weighted category")]
    NoEligibleAssets,
    #[error("invalid page spec: {0}")]
    InvalidSpec(String),
    #[error("n_pages must be at least 1")]
    NoPages,
    #[error("image {path}: {source}")]
    Image {
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

impl SynthError {
    pub fn is_io(&self) -> bool {
        match self {
            SynthError::MissingFile { .. } | SynthError::Io { .. } => true,
            SynthError::Record(e) => e.is_io(),
            _ => false,
        }
    }
}

/// What a pasted asset counts as on the page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetClass {
    Figure,
    Table,
    Text,
}

impl AssetClass {
    /// The ground-truth class, or `None` for text-like assets that are not labelled.
    pub fn label_class(self) -> Option<LabelClass> {
        match self {
            AssetClass::Figure => Some(LabelClass::Figure),
            AssetClass::Table => Some(LabelClass::Table),
            AssetClass::Text => None,
        }
    }
}

/// The twelve asset categories of the training pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssetCategory {
    Table,
    AreaAndCircles,
    Bars,
    BulletsAndEquations,
    LineChart,
    Maps,
    MatrixAndParallelCoordinates,
    MultipleTypes,
    Photos,
    PointBased,
    ScientificDataVisualization,
    TreeAndNetworks,
}

impl AssetCategory {
    pub const ALL: [AssetCategory; 12] = [
        AssetCategory::Table,
        AssetCategory::AreaAndCircles,
        AssetCategory::Bars,
        AssetCategory::BulletsAndEquations,
        AssetCategory::LineChart,
        AssetCategory::Maps,
        AssetCategory::MatrixAndParallelCoordinates,
        AssetCategory::MultipleTypes,
        AssetCategory::Photos,
        AssetCategory::PointBased,
        AssetCategory::ScientificDataVisualization,
        AssetCategory::TreeAndNetworks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AssetCategory::Table => "Table",
            AssetCategory::AreaAndCircles => "Area and circles",
            AssetCategory::Bars => "Bars",
            AssetCategory::BulletsAndEquations => "Bullets and equations",
            AssetCategory::LineChart => "Line chart",
            AssetCategory::Maps => "Maps",
            AssetCategory::MatrixAndParallelCoordinates => "Matrix and parallel coordinates",
            AssetCategory::MultipleTypes => "Multiple types",
            AssetCategory::Photos => "Photos",
            AssetCategory::PointBased => "Point-based",
            AssetCategory::ScientificDataVisualization => "Scientific data visualization",
            AssetCategory::TreeAndNetworks => "Tree and Networks",
        }
    }

    pub fn class(self) -> AssetClass {
        match self {
            AssetCategory::Table => AssetClass::Table,
            AssetCategory::BulletsAndEquations => AssetClass::Text,
            _ => AssetClass::Figure,
        }
    }

    /// Image counts per category in the reference training pool.
    pub fn default_weight(self) -> f64 {
        match self {
            AssetCategory::Table => 232.0,
            AssetCategory::AreaAndCircles => 148.0,
            AssetCategory::Bars => 362.0,
            AssetCategory::BulletsAndEquations => 380.0,
            AssetCategory::LineChart => 330.0,
            AssetCategory::Maps => 268.0,
            AssetCategory::MatrixAndParallelCoordinates => 62.0,
            AssetCategory::MultipleTypes => 460.0,
            AssetCategory::Photos => 120.0,
            AssetCategory::PointBased => 120.0,
            AssetCategory::ScientificDataVisualization => 262.0,
            AssetCategory::TreeAndNetworks => 134.0,
        }
    }
}

impl fmt::Display for AssetCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown category {0:?}")]
pub struct UnknownCategory(pub String);

impl FromStr for AssetCategory {
    type Err = UnknownCategory;

    /// Accepts the display name, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AssetCategory::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl Serialize for AssetCategory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AssetCategory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
