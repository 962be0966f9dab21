//! Procedurally drawn stand-in assets, one small family per category.
//!
//! Useful when no real asset pool is at hand: demos, tests and the
//! `pipeline` command all run on these.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use imageproc::drawing::{
    draw_filled_circle_mut, draw_filled_rect_mut, draw_hollow_circle_mut, draw_hollow_rect_mut, draw_line_segment_mut,
};
use imageproc::rect::Rect;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{AssetCategory, ManifestEntry, SynthError};
use crate::labels::write_jsonl;

const BLACK: Rgb<u8> = Rgb([20, 20, 20]);
const GRAY: Rgb<u8> = Rgb([150, 150, 150]);

/// Draws `per_category` assets for each of the twelve categories into `dir`
/// and returns the path of the written `assets.jsonl` manifest.
pub fn generate_pool(dir: &Path, per_category: usize, seed: u64) -> Result<PathBuf, SynthError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| SynthError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for category in AssetCategory::ALL {
        for i in 0..per_category {
            let img = draw_asset(category, &mut rng);
            let slug: String = category
                .name()
                .to_ascii_lowercase()
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            let name = format!("{slug}_{i:03}.png");
            let path = dir.join(&name);
            img.save(&path).map_err(|source| SynthError::Image {
                path: path.display().to_string(),
                source,
            })?;
            entries.push(ManifestEntry {
                id: format!("{slug}_{i:03}"),
                category: category.name().to_string(),
                path: PathBuf::from(name),
            });
        }
    }
    let manifest = dir.join("assets.jsonl");
    write_jsonl(&manifest, &entries)?;
    Ok(manifest)
}

fn color(rng: &mut ChaCha8Rng) -> Rgb<u8> {
    Rgb([rng.gen_range(30..220), rng.gen_range(30..220), rng.gen_range(30..220)])
}

fn draw_asset(category: AssetCategory, rng: &mut ChaCha8Rng) -> RgbImage {
    let w: u32 = rng.gen_range(240..=480);
    let aspect: f64 = match category {
        AssetCategory::BulletsAndEquations => rng.gen_range(0.2..0.45),
        AssetCategory::Table => rng.gen_range(0.35..0.8),
        _ => rng.gen_range(0.55..1.1),
    };
    let h = ((w as f64 * aspect) as u32).max(80);
    let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
    let (wf, hf) = (w as f32, h as f32);
    match category {
        AssetCategory::Table => {
            let rows = rng.gen_range(3..8);
            let cols = rng.gen_range(2..6);
            for r in 0..=rows {
                let y = r as f32 * (hf - 1.0) / rows as f32;
                draw_line_segment_mut(&mut img, (0.0, y), (wf - 1.0, y), BLACK);
            }
            for r in 0..rows {
                for c in 0..cols {
                    let x = 6 + c * (w as i32 - 12) / cols;
                    let y = 4 + r * (h as i32 - 8) / rows;
                    let len = rng.gen_range(12..(w / cols as u32).max(14));
                    draw_filled_rect_mut(&mut img, Rect::at(x, y + 3).of_size(len, 6), GRAY);
                }
            }
        }
        AssetCategory::BulletsAndEquations => {
            let lines = (h / 22).max(2);
            for l in 0..lines {
                let y = 8 + l as i32 * 22;
                draw_filled_circle_mut(&mut img, (10, y + 4), 3, BLACK);
                let len = rng.gen_range(w / 3..w - 30);
                draw_filled_rect_mut(&mut img, Rect::at(22, y).of_size(len, 8), BLACK);
            }
        }
        AssetCategory::Bars => {
            frame(&mut img);
            let n = rng.gen_range(3..12);
            let bw = (w - 20) / n;
            let c = color(rng);
            for i in 0..n {
                let bh = rng.gen_range(h / 8..h - 12);
                draw_filled_rect_mut(
                    &mut img,
                    Rect::at(10 + (i * bw) as i32, (h - 6 - bh) as i32).of_size((bw * 3 / 4).max(2), bh),
                    c,
                );
            }
        }
        AssetCategory::LineChart | AssetCategory::MatrixAndParallelCoordinates => {
            frame(&mut img);
            for _ in 0..rng.gen_range(1..5) {
                let c = color(rng);
                let mut prev = (4.0, rng.gen_range(4.0..hf - 4.0));
                let steps = rng.gen_range(4..14);
                for s in 1..=steps {
                    let next = (4.0 + s as f32 * (wf - 8.0) / steps as f32, rng.gen_range(4.0..hf - 4.0));
                    draw_line_segment_mut(&mut img, prev, next, c);
                    prev = next;
                }
            }
        }
        AssetCategory::PointBased => {
            frame(&mut img);
            let c = color(rng);
            for _ in 0..rng.gen_range(20..120) {
                let p = (rng.gen_range(6..w as i32 - 6), rng.gen_range(6..h as i32 - 6));
                draw_filled_circle_mut(&mut img, p, 2, c);
            }
        }
        AssetCategory::AreaAndCircles => {
            for _ in 0..rng.gen_range(2..9) {
                let r = rng.gen_range(8..(h as i32 / 3).max(9));
                let p = (rng.gen_range(r..w as i32 - r), rng.gen_range(r..h as i32 - r));
                draw_filled_circle_mut(&mut img, p, r, color(rng));
            }
        }
        AssetCategory::TreeAndNetworks => {
            let nodes: Vec<(f32, f32)> = (0..rng.gen_range(5..16))
                .map(|_| (rng.gen_range(8.0..wf - 8.0), rng.gen_range(8.0..hf - 8.0)))
                .collect();
            for i in 1..nodes.len() {
                let j = rng.gen_range(0..i);
                draw_line_segment_mut(&mut img, nodes[i], nodes[j], GRAY);
            }
            for n in &nodes {
                draw_hollow_circle_mut(&mut img, (n.0 as i32, n.1 as i32), 5, BLACK);
            }
        }
        AssetCategory::Maps | AssetCategory::Photos | AssetCategory::ScientificDataVisualization => {
            let base = color(rng);
            let (gx, gy) = (rng.gen_range(-1.0..1.0f32), rng.gen_range(-1.0..1.0f32));
            for (x, y, px) in img.enumerate_pixels_mut() {
                let t = (gx * x as f32 / wf + gy * y as f32 / hf + 2.0) / 4.0;
                let n = rng.gen_range(0..24) as f32;
                *px = Rgb(base.0.map(|c| (c as f32 * (0.5 + t) + n).clamp(0.0, 255.0) as u8));
            }
            if category == AssetCategory::Maps {
                for _ in 0..rng.gen_range(2..6) {
                    let r = rng.gen_range(10..(h as i32 / 4).max(11));
                    let p = (rng.gen_range(0..w as i32), rng.gen_range(0..h as i32));
                    draw_hollow_circle_mut(&mut img, p, r, BLACK);
                }
            }
        }
        AssetCategory::MultipleTypes => {
            let mid = w / 2;
            draw_hollow_rect_mut(&mut img, Rect::at(2, 2).of_size(mid - 6, h - 4), BLACK);
            draw_hollow_rect_mut(&mut img, Rect::at(mid as i32 + 2, 2).of_size(mid - 6, h - 4), BLACK);
            let c = color(rng);
            for i in 0..5 {
                let bh = rng.gen_range(10..h - 12);
                draw_filled_rect_mut(&mut img, Rect::at(10 + i * 18, (h - 4 - bh) as i32).of_size(12, bh), c);
            }
            for _ in 0..30 {
                let p = (rng.gen_range(mid as i32 + 8..w as i32 - 8), rng.gen_range(8..h as i32 - 8));
                draw_filled_circle_mut(&mut img, p, 2, color(rng));
            }
        }
    }
    img
}

fn frame(img: &mut RgbImage) {
    let (w, h) = img.dimensions();
    draw_line_segment_mut(img, (2.0, 2.0), (2.0, h as f32 - 3.0), BLACK);
    draw_line_segment_mut(img, (2.0, h as f32 - 3.0), (w as f32 - 3.0, h as f32 - 3.0), BLACK);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::load_asset_pool;

    #[test]
    fn generates_every_category() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_pool(dir.path(), 2, 5).unwrap();
        let pool = load_asset_pool(&manifest).unwrap();
        assert_eq!(pool.len(), 24);
        for c in AssetCategory::ALL {
            assert_eq!(pool.count(c), 2, "{c}");
        }
    }

    #[test]
    fn deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_pool(a.path(), 1, 9).unwrap();
        generate_pool(b.path(), 1, 9).unwrap();
        for entry in fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        }
    }
}
