use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageDecoder, ImageReader};
use serde::{Deserialize, Serialize};

use super::{AssetCategory, SynthError};
use crate::labels::read_jsonl;

/// One line of the asset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub category: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Asset {
    pub id: String,
    pub category: AssetCategory,
    pub pixel_width: u32,
    pub pixel_height: u32,
    pub path: PathBuf,
    pub color: bool,
}

impl Asset {
    pub fn load(&self) -> Result<DynamicImage, SynthError> {
        image::open(&self.path).map_err(|source| SynthError::Image {
            path: self.path.display().to_string(),
            source,
        })
    }
}

/// Assets indexed by category, in manifest order.
#[derive(Debug, Clone, Default)]
pub struct AssetPool {
    assets: Vec<Asset>,
    by_category: BTreeMap<AssetCategory, Vec<usize>>,
}

impl AssetPool {
    pub fn from_assets(assets: Vec<Asset>) -> Result<Self, SynthError> {
        if assets.is_empty() {
            return Err(SynthError::EmptyPool);
        }
        let mut by_category: BTreeMap<AssetCategory, Vec<usize>> = BTreeMap::new();
        for (i, a) in assets.iter().enumerate() {
            by_category.entry(a.category).or_default().push(i);
        }
        Ok(AssetPool { assets, by_category })
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    pub fn in_category(&self, category: AssetCategory) -> impl Iterator<Item = &Asset> {
        self.by_category
            .get(&category)
            .into_iter()
            .flatten()
            .map(|&i| &self.assets[i])
    }

    pub fn count(&self, category: AssetCategory) -> usize {
        self.by_category.get(&category).map_or(0, Vec::len)
    }

    pub fn counts(&self) -> BTreeMap<AssetCategory, usize> {
        self.by_category.iter().map(|(c, v)| (*c, v.len())).collect()
    }

    /// Pages are rendered in colour when any asset carries colour.
    pub fn is_color(&self) -> bool {
        self.assets.iter().any(|a| a.color)
    }
}

/// Loads a line-delimited `{id, category, path}` manifest. Relative paths are
/// resolved against the manifest's directory.
pub fn load_asset_pool(manifest: &Path) -> Result<AssetPool, SynthError> {
    let entries: Vec<ManifestEntry> = read_jsonl(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut assets = Vec::with_capacity(entries.len());
    for entry in entries {
        let category = entry.category.parse::<AssetCategory>().map_err(|_| SynthError::UnknownCategory {
            entry: entry.id.clone(),
            name: entry.category.clone(),
        })?;
        let path = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            base.join(&entry.path)
        };
        if !path.is_file() {
            return Err(SynthError::MissingFile {
                path: path.display().to_string(),
            });
        }
        let image_err = |source| SynthError::Image {
            path: path.display().to_string(),
            source,
        };
        let decoder = ImageReader::open(&path)
            .map_err(|source| SynthError::Io {
                path: path.display().to_string(),
                source,
            })?
            .with_guessed_format()
            .map_err(|source| SynthError::Io {
                path: path.display().to_string(),
                source,
            })?
            .into_decoder()
            .map_err(image_err)?;
        let (pixel_width, pixel_height) = decoder.dimensions();
        let color = decoder.color_type().has_color();
        assets.push(Asset {
            id: entry.id,
            category,
            pixel_width,
            pixel_height,
            path,
            color,
        });
    }
    AssetPool::from_assets(assets)
}
