//! Connected-component baseline: binarize, label ink, merge nearby
//! components, keep the big ones. It cannot tell tables from figures and
//! treats dense text as figures; it exists so the pipeline runs without a model.

use std::path::Path;

use image::{DynamicImage, GrayImage, Luma};
use imageproc::region_labelling::{connected_components, Connectivity};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DetectError, PageRef, Prediction, PredictionSet};
use crate::geometry::BBox;
use crate::labels::LabelClass;

pub const BASELINE_ID: &str = "baseline-cc";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Pixels darker than this luma value are ink.
    pub ink_threshold: u8,
    /// Components whose gap on both axes is at most this many pixels merge.
    pub merge_distance: f64,
    /// Merged regions smaller than this area (px²) are dropped.
    pub min_area: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            ink_threshold: 250,
            merge_distance: 8.0,
            min_area: 1024.0,
        }
    }
}

#[derive(Clone, Copy)]
struct Region {
    bbox: BBox,
    ink: u64,
}

pub fn baseline_detect(raster: &DynamicImage, cfg: &BaselineConfig) -> Vec<Prediction> {
    let gray = raster.to_luma8();
    let binary = GrayImage::from_fn(gray.width(), gray.height(), |x, y| {
        if gray.get_pixel(x, y).0[0] < cfg.ink_threshold {
            Luma([255])
        } else {
            Luma([0])
        }
    });
    let labelled = connected_components(&binary, Connectivity::Eight, Luma([0]));

    // per label: min_x, min_y, max_x, max_y, pixel count
    let mut extents: Vec<(u32, u32, u32, u32, u64)> = Vec::new();
    for (x, y, px) in labelled.enumerate_pixels() {
        let id = px.0[0] as usize;
        if id == 0 {
            continue;
        }
        if extents.len() < id {
            extents.resize(id, (u32::MAX, u32::MAX, 0, 0, 0));
        }
        let e = &mut extents[id - 1];
        e.0 = e.0.min(x);
        e.1 = e.1.min(y);
        e.2 = e.2.max(x);
        e.3 = e.3.max(y);
        e.4 += 1;
    }
    let regions: Vec<Region> = extents
        .into_iter()
        .filter(|e| e.4 > 0)
        .map(|(x0, y0, x1, y1, ink)| Region {
            bbox: BBox::new(x0 as f64, y0 as f64, x1 as f64 + 1.0, y1 as f64 + 1.0).expect("pixel box"),
            ink,
        })
        .collect();

    let mut merged = merge_regions(regions, cfg.merge_distance);
    merged.retain(|r| r.bbox.area() >= cfg.min_area);
    merged.sort_by(|a, b| {
        (a.bbox.y_min(), a.bbox.x_min())
            .partial_cmp(&(b.bbox.y_min(), b.bbox.x_min()))
            .expect("finite")
    });
    merged
        .into_iter()
        .map(|r| Prediction {
            bbox: r.bbox,
            class: LabelClass::Figure,
            confidence: (r.ink as f64 / r.bbox.area()).min(1.0),
        })
        .collect()
}

/// Repeatedly unions regions within `distance` of each other until stable.
fn merge_regions(mut regions: Vec<Region>, distance: f64) -> Vec<Region> {
    loop {
        regions.sort_by(|a, b| a.bbox.x_min().total_cmp(&b.bbox.x_min()));
        let mut parent: Vec<usize> = (0..regions.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut changed = false;
        for i in 0..regions.len() {
            let reach = regions[i].bbox.x_max() + distance;
            for j in i + 1..regions.len() {
                if regions[j].bbox.x_min() > reach {
                    break;
                }
                let (gx, gy) = regions[i].bbox.gap(&regions[j].bbox);
                if gx <= distance && gy <= distance {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[b] = a;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return regions;
        }
        let mut groups: Vec<Option<Region>> = vec![None; regions.len()];
        for (i, &r) in regions.iter().enumerate() {
            let root = find(&mut parent, i);
            groups[root] = Some(match groups[root] {
                Some(g) => Region {
                    bbox: g.bbox.hull(&r.bbox),
                    ink: g.ink + r.ink,
                },
                None => r,
            });
        }
        regions = groups.into_iter().flatten().collect();
    }
}

pub fn baseline_detect_file(path: &Path, cfg: &BaselineConfig) -> Result<Vec<Prediction>, DetectError> {
    let raster = image::open(path).map_err(|source| DetectError::Raster {
        path: path.display().to_string(),
        source,
    })?;
    Ok(baseline_detect(&raster, cfg))
}

/// Runs the baseline over pages in parallel on the current rayon pool.
pub fn baseline_detect_pages(pages: &[PageRef], cfg: &BaselineConfig) -> Result<Vec<PredictionSet>, DetectError> {
    pages
        .par_iter()
        .map(|p| {
            Ok(PredictionSet {
                page_id: p.page_id.clone(),
                detector_id: BASELINE_ID.to_string(),
                predictions: baseline_detect_file(&p.path, cfg)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::iou;

    fn page_with(rects: &[(u32, u32, u32, u32)]) -> DynamicImage {
        let mut img = GrayImage::from_pixel(600, 500, Luma([255]));
        for &(x0, y0, x1, y1) in rects {
            for y in y0..y1 {
                for x in x0..x1 {
                    img.put_pixel(x, y, Luma([0]));
                }
            }
        }
        DynamicImage::ImageLuma8(img)
    }

    #[test]
    fn blank_page_has_no_predictions() {
        assert!(baseline_detect(&page_with(&[]), &BaselineConfig::default()).is_empty());
    }

    #[test]
    fn solid_rectangle_is_found() {
        let preds = baseline_detect(&page_with(&[(100, 100, 300, 300)]), &BaselineConfig::default());
        assert_eq!(preds.len(), 1);
        let target = BBox::new(100.0, 100.0, 300.0, 300.0).unwrap();
        assert!(iou(&preds[0].bbox, &target) >= 0.95);
        assert_eq!(preds[0].class, LabelClass::Figure);
        assert_eq!(preds[0].confidence, 1.0);
    }

    #[test]
    fn separated_rectangles_stay_apart() {
        let preds = baseline_detect(
            &page_with(&[(20, 20, 120, 120), (300, 250, 500, 450)]),
            &BaselineConfig::default(),
        );
        assert_eq!(preds.len(), 2);
    }

    #[test]
    fn nearby_fragments_merge() {
        // two bars 5px apart, well under the merge distance
        let preds = baseline_detect(
            &page_with(&[(100, 100, 200, 140), (100, 145, 200, 185)]),
            &BaselineConfig::default(),
        );
        assert_eq!(preds.len(), 1);
        assert_eq!(preds[0].bbox, BBox::new(100.0, 100.0, 200.0, 185.0).unwrap());
        assert!((preds[0].confidence - 8000.0 / 8500.0).abs() < 1e-12);
    }

    #[test]
    fn small_specks_are_dropped() {
        let preds = baseline_detect(&page_with(&[(10, 10, 14, 14)]), &BaselineConfig::default());
        assert!(preds.is_empty());
    }

    #[test]
    fn deterministic() {
        let img = page_with(&[(20, 20, 120, 120), (125, 20, 140, 60), (300, 250, 500, 450)]);
        let cfg = BaselineConfig::default();
        assert_eq!(baseline_detect(&img, &cfg), baseline_detect(&img, &cfg));
    }

    #[test]
    fn unreadable_raster_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        std::fs::write(&path, b"not a png").unwrap();
        assert!(matches!(
            baseline_detect_file(&path, &BaselineConfig::default()),
            Err(DetectError::Raster { .. })
        ));
    }
}
