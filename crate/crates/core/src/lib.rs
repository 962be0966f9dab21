//! Figure and table harvesting from scholarly page images.
//!
//! The crate covers the whole semi-automatic collection loop:
//!
//! * [`synth`] composes labelled pseudo-paper pages from a categorised asset pool,
//! * [`detect`] wraps external detectors behind a file contract and ships a
//!   connected-component baseline,
//! * [`eval`] matches predictions against ground truth at an IoU threshold,
//! * [`curate`] records human corrections as an append-only edit log,
//! * [`catalog`] indexes the curated corpus for faceted search.
//!
//! [`geometry`] holds the box arithmetic shared by all of them and
//! [`labels`] the line-delimited interchange records.

pub mod catalog;
pub mod curate;
pub mod detect;
pub mod eval;
pub mod geometry;
pub mod labels;
pub mod synth;

pub use geometry::{BBox, GeometryError};
pub use labels::{LabelClass, RegionLabel, Source};
