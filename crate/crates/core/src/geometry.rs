//! Axis-aligned box arithmetic.
//!
//! Coordinates are page pixels with the origin at the top-left corner and `y`
//! growing downward. Boxes are half-open in spirit: a box `(0,0,1,1)` covers
//! exactly one pixel cell.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate in box ({0}, {1}, {2}, {3})")]
    NonFinite(f64, f64, f64, f64),
    #[error("negative coordinate in box ({0}, {1}, {2}, {3})")]
    Negative(f64, f64, f64, f64),
    #[error("degenerate box ({0}, {1}, {2}, {3}): width and height must be positive")]
    Degenerate(f64, f64, f64, f64),
    #[error("empty region set")]
    EmptyRegionSet,
}

/// A validated axis-aligned rectangle with strictly positive extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl TryFrom<RawBox> for BBox {
    type Error = GeometryError;

    fn try_from(r: RawBox) -> Result<Self, Self::Error> {
        BBox::new(r.x_min, r.y_min, r.x_max, r.y_max)
    }
}

impl From<BBox> for RawBox {
    fn from(b: BBox) -> Self {
        RawBox {
            x_min: b.x_min,
            y_min: b.y_min,
            x_max: b.x_max,
            y_max: b.y_max,
        }
    }
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite(x_min, y_min, x_max, y_max));
        }
        if x_min < 0.0 || y_min < 0.0 {
            return Err(GeometryError::Negative(x_min, y_min, x_max, y_max));
        }
        if x_max <= x_min || y_max <= y_min {
            return Err(GeometryError::Degenerate(x_min, y_min, x_max, y_max));
        }
        Ok(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Box from an origin and a size.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        BBox::new(x, y, x + w, y + h)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// The overlapping rectangle, if the two boxes share positive area.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_max > x_min && y_max > y_min).then_some(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        self.intersection(other).map_or(0.0, |b| b.area())
    }

    pub fn overlaps(&self, other: &BBox) -> bool {
        self.intersection(other).is_some()
    }

    /// Smallest box enclosing both.
    pub fn hull(&self, other: &BBox) -> BBox {
        BBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    /// True when `self` lies inside a `width` x `height` page.
    pub fn within_page(&self, width: f64, height: f64) -> bool {
        self.x_max <= width && self.y_max <= height
    }

    /// `self` shifted by `(dx, dy)`; fails if the result leaves the positive quadrant.
    pub fn translated(&self, dx: f64, dy: f64) -> Result<BBox, GeometryError> {
        BBox::new(
            self.x_min + dx,
            self.y_min + dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }

    /// Gap between the boxes along each axis (0 when the projections overlap).
    pub fn gap(&self, other: &BBox) -> (f64, f64) {
        let gx = (other.x_min - self.x_max).max(self.x_min - other.x_max).max(0.0);
        let gy = (other.y_min - self.y_max).max(self.y_min - other.y_max).max(0.0);
        (gx, gy)
    }
}

/// Intersection over union of two boxes. Identical boxes give exactly `1.0`.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).min(1.0)
}

/// Exact area covered by the union of `boxes`, by coordinate compression.
pub fn union_area(boxes: &[BBox]) -> f64 {
    if boxes.is_empty() {
        return 0.0;
    }
    let xs = sorted_unique(boxes.iter().flat_map(|b| [b.x_min, b.x_max]));
    let ys = sorted_unique(boxes.iter().flat_map(|b| [b.y_min, b.y_max]));
    let mut covered = vec![false; (xs.len() - 1) * (ys.len() - 1)];
    let cols = xs.len() - 1;
    for b in boxes {
        let x0 = index_of(&xs, b.x_min);
        let x1 = index_of(&xs, b.x_max);
        let y0 = index_of(&ys, b.y_min);
        let y1 = index_of(&ys, b.y_max);
        for yi in y0..y1 {
            covered[yi * cols + x0..yi * cols + x1].fill(true);
        }
    }
    let mut area = 0.0;
    for yi in 0..ys.len() - 1 {
        let h = ys[yi + 1] - ys[yi];
        let mut w = 0.0;
        for xi in 0..cols {
            if covered[yi * cols + xi] {
                w += xs[xi + 1] - xs[xi];
            }
        }
        area += w * h;
    }
    area
}

/// IoU between the union of `parts` and `target`, computed exactly.
///
/// Used to credit a single ground-truth region that was detected as several
/// adjacent boxes.
pub fn union_iou(parts: &[BBox], target: &BBox) -> Result<f64, GeometryError> {
    if parts.is_empty() {
        return Err(GeometryError::EmptyRegionSet);
    }
    if parts.len() == 1 {
        return Ok(iou(&parts[0], target));
    }
    let clipped: Vec<BBox> = parts.iter().filter_map(|p| p.intersection(target)).collect();
    let overlap = union_area(&clipped);
    if overlap == 0.0 {
        return Ok(0.0);
    }
    let mut all = parts.to_vec();
    all.push(*target);
    let union = union_area(&all);
    Ok((overlap / union).min(1.0))
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn index_of(sorted: &[f64], value: f64) -> usize {
    sorted
        .binary_search_by(|probe| probe.total_cmp(&value))
        .expect("coordinate present in compressed axis")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    /// Counts unit cells covered by any of `parts` (and by `target` for the
    /// union/intersection split). Coordinates must be integers.
    fn grid_union_iou(parts: &[BBox], target: &BBox) -> f64 {
        let max_x = parts.iter().chain([target]).map(|b| b.x_max() as i64).max().unwrap();
        let max_y = parts.iter().chain([target]).map(|b| b.y_max() as i64).max().unwrap();
        let inside = |bx: &BBox, x: i64, y: i64| {
            (x as f64) >= bx.x_min()
                && (x as f64) < bx.x_max()
                && (y as f64) >= bx.y_min()
                && (y as f64) < bx.y_max()
        };
        let (mut inter, mut uni) = (0u64, 0u64);
        for y in 0..max_y {
            for x in 0..max_x {
                let p = parts.iter().any(|bx| inside(bx, x, y));
                let t = inside(target, x, y);
                if p && t {
                    inter += 1;
                }
                if p || t {
                    uni += 1;
                }
            }
        }
        inter as f64 / uni as f64
    }

    #[test]
    fn area_examples() {
        assert_eq!(b(0.0, 0.0, 10.0, 10.0).area(), 100.0);
        assert_eq!(b(2.0, 3.0, 2.5, 4.0).area(), 0.5);
        assert_eq!(b(0.0, 0.0, 1.0, 1.0).area(), 1.0);
    }

    #[test]
    fn rejects_invalid_boxes() {
        assert!(matches!(BBox::new(0.0, 0.0, 0.0, 5.0), Err(GeometryError::Degenerate(..))));
        assert!(matches!(BBox::new(5.0, 0.0, 1.0, 5.0), Err(GeometryError::Degenerate(..))));
        assert!(matches!(BBox::new(-1.0, 0.0, 1.0, 5.0), Err(GeometryError::Negative(..))));
        assert!(matches!(
            BBox::new(0.0, 0.0, f64::NAN, 5.0),
            Err(GeometryError::NonFinite(..))
        ));
        assert!(matches!(
            BBox::new(0.0, 0.0, f64::INFINITY, 5.0),
            Err(GeometryError::NonFinite(..))
        ));
    }

    #[test]
    fn deserialization_validates() {
        let ok: BBox = serde_json::from_str(r#"{"x_min":1,"y_min":2,"x_max":3,"y_max":4}"#).unwrap();
        assert_eq!(ok, b(1.0, 2.0, 3.0, 4.0));
        assert!(serde_json::from_str::<BBox>(r#"{"x_min":3,"y_min":2,"x_max":3,"y_max":4}"#).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(20.0, 20.0, 30.0, 30.0)), 0.0);
        let half = b(5.0, 0.0, 15.0, 10.0);
        // grid oracle: 50 shared cells over 150 covered
        assert_eq!(grid_union_iou(&[half], &a), 50.0 / 150.0);
        assert!((iou(&a, &half) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn touching_boxes_do_not_overlap() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        let c = b(10.0, 0.0, 20.0, 10.0);
        assert!(!a.overlaps(&c));
        assert_eq!(iou(&a, &c), 0.0);
    }

    #[test]
    fn union_iou_examples() {
        let t = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(union_iou(&[t], &t).unwrap(), 1.0);
        let tiles = [b(0.0, 0.0, 5.0, 10.0), b(5.0, 0.0, 10.0, 10.0)];
        assert_eq!(union_iou(&tiles, &t).unwrap(), 1.0);
        let overlapping = [b(0.0, 0.0, 5.0, 10.0), b(4.0, 0.0, 10.0, 10.0)];
        assert_eq!(grid_union_iou(&overlapping, &t), 1.0);
        assert_eq!(union_iou(&overlapping, &t).unwrap(), 1.0);
    }

    #[test]
    fn union_iou_empty_is_error() {
        let t = b(0.0, 0.0, 10.0, 10.0);
        let err = union_iou(&[], &t).unwrap_err();
        assert_eq!(err.to_string(), "empty region set");
    }

    #[test]
    fn union_area_counts_overlap_once() {
        let boxes = [b(0.0, 0.0, 10.0, 10.0), b(5.0, 5.0, 15.0, 15.0)];
        assert_eq!(union_area(&boxes), 175.0);
    }

    fn int_box() -> impl Strategy<Value = BBox> {
        (0u32..20, 0u32..20, 1u32..12, 1u32..12)
            .prop_map(|(x, y, w, h)| b(x as f64, y as f64, (x + w) as f64, (y + h) as f64))
    }

    fn real_box() -> impl Strategy<Value = BBox> {
        (0.0..500.0f64, 0.0..500.0f64, 0.01..300.0f64, 0.01..300.0f64)
            .prop_map(|(x, y, w, h)| b(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in real_box(), c in real_box()) {
            let v = iou(&a, &c);
            prop_assert_eq!(v, iou(&c, &a));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn single_part_union_iou_equals_iou(a in real_box(), t in real_box()) {
            prop_assert_eq!(union_iou(&[a], &t).unwrap(), iou(&a, &t));
        }

        #[test]
        fn duplicate_part_does_not_change_union_iou(
            parts in prop::collection::vec(int_box(), 1..5),
            t in int_box(),
        ) {
            let base = union_iou(&parts, &t).unwrap();
            let mut dup = parts.clone();
            dup.push(parts[0]);
            prop_assert!((union_iou(&dup, &t).unwrap() - base).abs() < 1e-12);
        }

        #[test]
        fn agrees_with_grid_oracle(
            parts in prop::collection::vec(int_box(), 1..5),
            t in int_box(),
        ) {
            let expected = grid_union_iou(&parts, &t);
            prop_assert!((union_iou(&parts, &t).unwrap() - expected).abs() < 1e-9);
            prop_assert!((iou(&parts[0], &t) - grid_union_iou(&parts[..1], &t)).abs() < 1e-9);
        }
    }
}
