use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::ImageFormat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{compose_page, AssetCategory, AssetPool, PageSpec, SynthError, Template};
use crate::labels::{write_jsonl, LabelClass, PageLabels};

pub const LABELS_FILE: &str = "labels.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPage {
    pub page_id: String,
    pub raster: String,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub template: Template,
    /// SHA-256 of the encoded PNG.
    pub digest: String,
    pub warnings: usize,
}

/// Summary written next to a generated corpus as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub base_seed: u64,
    pub n_pages: usize,
    pub labels_file: String,
    pub pages: Vec<CorpusPage>,
    /// Pasted assets per category, labelled or not.
    pub category_totals: BTreeMap<AssetCategory, usize>,
    pub class_totals: BTreeMap<LabelClass, usize>,
    pub warnings: usize,
}

impl CorpusManifest {
    pub fn load(dir: &Path) -> Result<Self, SynthError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| SynthError::InvalidSpec(format!("{}: {e}", path.display())))
    }

    pub fn page(&self, page_id: &str) -> Option<&CorpusPage> {
        self.pages.iter().find(|p| p.page_id == page_id)
    }
}

pub fn page_id(index: usize) -> String {
    format!("page_{index:05}")
}

/// Writes `n_pages` rasters, one labels file and a manifest into `out_dir`.
///
/// Page `i` is composed with seed `spec.seed + i`. Pages are composed in
/// parallel on the current rayon pool; output is identical regardless of the
/// worker count.
pub fn compose_corpus(
    n_pages: usize,
    spec: &PageSpec,
    pool: &AssetPool,
    out_dir: &Path,
) -> Result<CorpusManifest, SynthError> {
    if n_pages == 0 {
        return Err(SynthError::NoPages);
    }
    spec.validate()?;
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| SynthError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let pages: Vec<(CorpusPage, PageLabels, Vec<AssetCategory>)> = (0..n_pages)
        .into_par_iter()
        .map(|i| {
            let seed = spec.seed.wrapping_add(i as u64);
            let page_spec = PageSpec { seed, ..spec.clone() };
            let id = page_id(i);
            let page = compose_page(&page_spec, pool, &id)?;
            let mut png = Vec::new();
            page.raster
                .write_to(&mut Cursor::new(&mut png), ImageFormat::Png)
                .map_err(|source| SynthError::Image {
                    path: id.clone(),
                    source,
                })?;
            let raster = format!("{id}.png");
            let path = out_dir.join(&raster);
            fs::write(&path, &png).map_err(io_err(&path))?;
            let entry = CorpusPage {
                page_id: id,
                raster,
                width: page.width(),
                height: page.height(),
                seed,
                template: page.template,
                digest: hex::encode(Sha256::digest(&png)),
                warnings: page.warnings,
            };
            let categories = page.placements.iter().map(|p| p.category).collect();
            Ok((entry, page.wire_labels(), categories))
        })
        .collect::<Result<_, SynthError>>()?;

    let mut category_totals: BTreeMap<AssetCategory, usize> = BTreeMap::new();
    let mut class_totals: BTreeMap<LabelClass, usize> = BTreeMap::new();
    for (_, labels, categories) in &pages {
        for c in categories {
            *category_totals.entry(*c).or_default() += 1;
        }
        for l in &labels.labels {
            *class_totals.entry(l.class).or_default() += 1;
        }
    }
    let labels_path = out_dir.join(LABELS_FILE);
    write_jsonl(&labels_path, pages.iter().map(|(_, l, _)| l))?;

    let manifest = CorpusManifest {
        base_seed: spec.seed,
        n_pages,
        labels_file: LABELS_FILE.to_string(),
        warnings: pages.iter().map(|(p, _, _)| p.warnings).sum(),
        pages: pages.into_iter().map(|(p, _, _)| p).collect(),
        category_totals,
        class_totals,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::read_jsonl;
    use crate::synth::procedural::generate_pool;

    #[test]
    fn writes_pages_labels_and_manifest() {
        let assets = tempfile::tempdir().unwrap();
        let pool = crate::synth::load_asset_pool(&generate_pool(assets.path(), 1, 3).unwrap()).unwrap();
        let out = tempfile::tempdir().unwrap();
        let manifest = compose_corpus(5, &PageSpec::default(), &pool, out.path()).unwrap();
        assert_eq!(manifest.pages.len(), 5);
        for p in &manifest.pages {
            assert!(out.path().join(&p.raster).is_file());
        }
        let labels: Vec<PageLabels> = read_jsonl(&out.path().join(LABELS_FILE)).unwrap();
        assert_eq!(labels.len(), 5);
        assert_eq!(labels[3].page_id, "page_00003");
        assert_eq!(manifest.pages[3].seed, 3);
        let reloaded = CorpusManifest::load(out.path()).unwrap();
        assert_eq!(reloaded, manifest);
    }

    #[test]
    fn zero_pages_rejected() {
        let assets = tempfile::tempdir().unwrap();
        let pool = crate::synth::load_asset_pool(&generate_pool(assets.path(), 1, 3).unwrap()).unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(matches!(
            compose_corpus(0, &PageSpec::default(), &pool, out.path()),
            Err(SynthError::NoPages)
        ));
    }

    #[test]
    fn unwritable_out_dir_is_io_error() {
        let assets = tempfile::tempdir().unwrap();
        let pool = crate::synth::load_asset_pool(&generate_pool(assets.path(), 1, 3).unwrap()).unwrap();
        let blocker = assets.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = compose_corpus(1, &PageSpec::default(), &pool, &blocker.join("sub")).unwrap_err();
        assert!(err.is_io(), "{err}");
    }
}
