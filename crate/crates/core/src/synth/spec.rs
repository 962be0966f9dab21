use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AssetCategory, SynthError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    SingleColumn,
    DoubleColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Margins {
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
    pub left: u32,
}

/// Inclusive range of assets to attempt per page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetCountRange {
    pub min: u32,
    pub max: u32,
}

/// Recipe for one synthetic page (or, with a base seed, a whole corpus).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageSpec {
    pub template: Template,
    /// When set, each page draws its template: double column with this probability.
    pub double_column_share: Option<f64>,
    pub page_width: u32,
    pub page_height: u32,
    pub margins: Margins,
    pub column_gap: u32,
    pub seed: u64,
    pub target_asset_count: AssetCountRange,
    pub caption_probability: f64,
    pub category_weights: BTreeMap<AssetCategory, f64>,
}

impl Default for PageSpec {
    /// US letter at 150 dpi, a 60/40 double/single column mix and 1 to 4 assets.
    fn default() -> Self {
        PageSpec {
            template: Template::DoubleColumn,
            double_column_share: Some(0.6),
            page_width: 1275,
            page_height: 1650,
            margins: Margins {
                top: 110,
                right: 110,
                bottom: 110,
                left: 110,
            },
            column_gap: 36,
            seed: 0,
            target_asset_count: AssetCountRange { min: 1, max: 4 },
            caption_probability: 0.5,
            category_weights: AssetCategory::ALL.iter().map(|&c| (c, c.default_weight())).collect(),
        }
    }
}

impl PageSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let spec: PageSpec = toml::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn content_width(&self) -> i64 {
        self.page_width as i64 - self.margins.left as i64 - self.margins.right as i64
    }

    pub fn content_height(&self) -> i64 {
        self.page_height as i64 - self.margins.top as i64 - self.margins.bottom as i64
    }

    pub fn weight(&self, category: AssetCategory) -> f64 {
        self.category_weights.get(&category).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.content_width() <= 0 || self.content_height() <= 0 {
            return invalid("margins leave no content area");
        }
        let double_possible =
            self.template == Template::DoubleColumn || self.double_column_share.is_some_and(|s| s > 0.0);
        if double_possible && self.column_gap as i64 >= self.content_width() {
            return invalid("column_gap must be smaller than the content width");
        }
        if let Some(share) = self.double_column_share {
            if !(0.0..=1.0).contains(&share) {
                return invalid("double_column_share must lie in [0, 1]");
            }
        }
        if self.target_asset_count.min > self.target_asset_count.max {
            return invalid("target_asset_count.min exceeds max");
        }
        if !(0.0..=1.0).contains(&self.caption_probability) {
            return invalid("caption_probability must lie in [0, 1]");
        }
        if self.category_weights.values().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("category weights must be finite and non-negative");
        }
        Ok(())
    }
}
