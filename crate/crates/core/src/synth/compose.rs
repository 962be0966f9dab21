use image::imageops::{self, FilterType};
use image::{DynamicImage, Rgb, RgbImage};
use imageproc::drawing::draw_filled_rect_mut;
use imageproc::rect::Rect;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AssetCategory, AssetPool, PageSpec, SynthError, Template};
use crate::geometry::BBox;
use crate::labels::{PageLabels, RegionLabel, Source};

const MAX_RETRIES: usize = 50;
const MIN_SHORT_SIDE: u32 = 64;
const LINE_PITCH: i64 = 14;
const LINE_HEIGHT: u32 = 7;
const WORD_GAP: i64 = 6;
const BLOCK_PAD: i64 = 8;
const INK: Rgb<u8> = Rgb([70, 70, 70]);
// An asset never takes more than this share of the column height.
const MAX_HEIGHT_SHARE: f64 = 0.6;

/// A pasted asset, labelled or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub asset_id: String,
    pub category: AssetCategory,
    pub bbox: BBox,
    pub captioned: bool,
}

/// A composed page: raster plus exact labels for every pasted figure and table.
#[derive(Debug, Clone)]
pub struct GroundTruthPage {
    pub page_id: String,
    pub template: Template,
    pub raster: DynamicImage,
    pub labels: Vec<RegionLabel>,
    pub placements: Vec<Placement>,
    /// Assets that could not be placed without overlap.
    pub warnings: usize,
}

impl GroundTruthPage {
    pub fn width(&self) -> u32 {
        self.raster.width()
    }

    pub fn height(&self) -> u32 {
        self.raster.height()
    }

    pub fn wire_labels(&self) -> PageLabels {
        PageLabels::from_region_labels(self.page_id.clone(), &self.labels)
    }
}

#[derive(Clone, Copy)]
struct Column {
    x: i64,
    width: i64,
}

struct Block {
    column: usize,
    y0: i64,
    y1: i64,
    bbox: BBox,
}

/// Composes one page from `spec` using assets from `pool`.
///
/// The result is a pure function of `(spec, pool, page_id)`. Assets that find no
/// free slot after bounded retries are dropped and counted in `warnings`.
pub fn compose_page(spec: &PageSpec, pool: &AssetPool, page_id: &str) -> Result<GroundTruthPage, SynthError> {
    spec.validate()?;
    let eligible: Vec<(AssetCategory, f64)> = AssetCategory::ALL
        .into_iter()
        .map(|c| (c, spec.weight(c)))
        .filter(|&(c, w)| w > 0.0 && pool.count(c) > 0)
        .collect();
    if eligible.is_empty() {
        return Err(SynthError::NoEligibleAssets);
    }
    let sampler = WeightedIndex::new(eligible.iter().map(|(_, w)| *w)).expect("positive weights");

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let template = match spec.double_column_share {
        Some(share) => {
            if rng.gen_bool(share) {
                Template::DoubleColumn
            } else {
                Template::SingleColumn
            }
        }
        None => spec.template,
    };
    let columns = columns(spec, template);
    let top = spec.margins.top as i64;
    let bottom = spec.page_height as i64 - spec.margins.bottom as i64;

    let mut page = RgbImage::from_pixel(spec.page_width, spec.page_height, Rgb([255, 255, 255]));
    let mut cursors = vec![top; columns.len()];
    let mut blocks: Vec<Block> = Vec::new();
    let mut placements = Vec::new();
    let mut labels = Vec::new();
    let mut warnings = 0;

    let count = rng.gen_range(spec.target_asset_count.min..=spec.target_asset_count.max);
    for _ in 0..count {
        let category = eligible[sampler.sample(&mut rng)].0;
        let candidates: Vec<_> = pool.in_category(category).collect();
        let asset = candidates[rng.gen_range(0..candidates.len())];

        let mut placed = false;
        for _ in 0..MAX_RETRIES {
            let ci = rng.gen_range(0..columns.len());
            let col = columns[ci];
            let fill = rng.gen_range(0.55..=1.0);
            let Some((w, h)) = fit_size(
                asset.pixel_width,
                asset.pixel_height,
                col.width as f64 * fill,
                (bottom - top) as f64 * MAX_HEIGHT_SHARE,
            ) else {
                continue;
            };
            let caption_lines = if rng.gen_bool(spec.caption_probability) {
                rng.gen_range(1..=2)
            } else {
                0
            };
            let caption_height = if caption_lines > 0 {
                BLOCK_PAD + caption_lines * LINE_PITCH
            } else {
                0
            };
            let lead = rng.gen_range(0..=6) * LINE_PITCH + BLOCK_PAD;
            let y0 = cursors[ci] + lead;
            let y1 = y0 + h as i64;
            let block_end = y1 + caption_height;
            if block_end > bottom {
                continue;
            }
            let x0 = col.x + rng.gen_range(0..=(col.width - w as i64));
            let bbox = BBox::new(x0 as f64, y0 as f64, (x0 + w as i64) as f64, y1 as f64)
                .expect("fitted size is positive");
            if blocks.iter().any(|b| b.bbox.overlaps(&bbox)) {
                continue;
            }

            let image = asset.load()?.to_rgb8();
            let resized = imageops::resize(&image, w, h, FilterType::Triangle);
            imageops::replace(&mut page, &resized, x0, y0);
            if caption_lines > 0 {
                let mut line_y = y1 + BLOCK_PAD;
                for _ in 0..caption_lines {
                    draw_words(&mut page, &mut rng, col.x, col.width, line_y, true);
                    line_y += LINE_PITCH;
                }
            }

            let full = BBox::new(col.x as f64, y0 as f64, (col.x + col.width) as f64, block_end as f64)
                .expect("block has positive size");
            blocks.push(Block {
                column: ci,
                y0,
                y1: block_end,
                bbox: full,
            });
            cursors[ci] = block_end;
            if let Some(class) = asset.category.class().label_class() {
                let mut label = RegionLabel::new(format!("{page_id}/{}", labels.len()), bbox, class, Source::Human);
                label.category = Some(asset.category);
                labels.push(label);
            }
            placements.push(Placement {
                asset_id: asset.id.clone(),
                category: asset.category,
                bbox,
                captioned: caption_lines > 0,
            });
            placed = true;
            break;
        }
        if !placed {
            warnings += 1;
        }
    }

    fill_text(&mut page, &mut rng, &columns, &blocks, top, bottom);

    let raster = if pool.is_color() {
        DynamicImage::ImageRgb8(page)
    } else {
        DynamicImage::ImageLuma8(DynamicImage::ImageRgb8(page).into_luma8())
    };
    Ok(GroundTruthPage {
        page_id: page_id.to_string(),
        template,
        raster,
        labels,
        placements,
        warnings,
    })
}

fn columns(spec: &PageSpec, template: Template) -> Vec<Column> {
    let left = spec.margins.left as i64;
    let width = spec.content_width();
    match template {
        Template::SingleColumn => vec![Column { x: left, width }],
        Template::DoubleColumn => {
            let gap = spec.column_gap as i64;
            let col = (width - gap) / 2;
            vec![
                Column { x: left, width: col },
                Column {
                    x: left + col + gap,
                    width: col,
                },
            ]
        }
    }
}

/// Uniform scale of a `w` x `h` asset to `target_width`, shrunk further to fit
/// `max_height`. `None` when the short side would drop below the minimum.
fn fit_size(w: u32, h: u32, target_width: f64, max_height: f64) -> Option<(u32, u32)> {
    let mut scale = target_width / w as f64;
    if h as f64 * scale > max_height {
        scale = max_height / h as f64;
    }
    let sw = (w as f64 * scale).floor() as u32;
    let sh = (h as f64 * scale).floor() as u32;
    (sw.min(sh) >= MIN_SHORT_SIDE).then_some((sw, sh))
}

/// Draws one line of placeholder words starting at `y`.
fn draw_words(page: &mut RgbImage, rng: &mut ChaCha8Rng, x: i64, width: i64, y: i64, short: bool) {
    let end = if short {
        x + (width as f64 * rng.gen_range(0.3..=1.0)) as i64
    } else {
        x + width
    };
    let mut cx = x;
    loop {
        let word = rng.gen_range(2..=11) * 5;
        if cx + word > end {
            break;
        }
        draw_filled_rect_mut(page, Rect::at(cx as i32, y as i32).of_size(word as u32, LINE_HEIGHT), INK);
        cx += word + WORD_GAP;
    }
}

fn fill_text(page: &mut RgbImage, rng: &mut ChaCha8Rng, columns: &[Column], blocks: &[Block], top: i64, bottom: i64) {
    for (ci, col) in columns.iter().enumerate() {
        let mut y = top;
        while y + LINE_HEIGHT as i64 <= bottom {
            let line_end = y + LINE_HEIGHT as i64;
            let blocked = blocks
                .iter()
                .filter(|b| b.column == ci)
                .find(|b| y < b.y1 + BLOCK_PAD && line_end > b.y0 - BLOCK_PAD);
            if let Some(b) = blocked {
                y = b.y1 + BLOCK_PAD;
                continue;
            }
            // occasional short line ends a paragraph
            let short = rng.gen_bool(0.12);
            draw_words(page, rng, col.x, col.width, y, short);
            y += LINE_PITCH;
        }
    }
}
