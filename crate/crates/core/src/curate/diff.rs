//! Machine-vs-curated comparison.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Action, CurationSession};
use crate::eval::{effort_estimate, metrics, Counts, EvalConfig, Metrics};
use crate::geometry::iou;
use crate::labels::RegionLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffBucket {
    Exact,
    FineTuned,
    RegionError,
    ClassError,
    FalsePositive,
    FalseNegative,
}

impl DiffBucket {
    pub const ALL: [DiffBucket; 6] = [
        DiffBucket::Exact,
        DiffBucket::FineTuned,
        DiffBucket::RegionError,
        DiffBucket::ClassError,
        DiffBucket::FalsePositive,
        DiffBucket::FalseNegative,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub bucket: DiffBucket,
    pub machine_id: Option<String>,
    pub curated_id: Option<String>,
    pub iou: f64,
}

/// Classification of every machine and curated label of one or more pages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub entries: Vec<DiffEntry>,
}

impl ErrorBreakdown {
    pub fn count(&self, bucket: DiffBucket) -> usize {
        self.entries.iter().filter(|e| e.bucket == bucket).count()
    }

    pub fn histogram(&self) -> BTreeMap<DiffBucket, usize> {
        DiffBucket::ALL.iter().map(|&b| (b, self.count(b))).collect()
    }

    pub fn extend(&mut self, other: ErrorBreakdown) {
        self.entries.extend(other.entries);
    }

    /// The breakdown read as detection counts, curated labels being the truth.
    ///
    /// Exact and fine-tuned pairs are hits; a region error is both a miss and
    /// a spurious box.
    pub fn counts(&self) -> Counts {
        let h = self.histogram();
        Counts {
            tp: h[&DiffBucket::Exact] + h[&DiffBucket::FineTuned],
            fp: h[&DiffBucket::FalsePositive] + h[&DiffBucket::RegionError],
            fn_: h[&DiffBucket::FalseNegative] + h[&DiffBucket::RegionError] + h[&DiffBucket::ClassError],
            class_errors: h[&DiffBucket::ClassError],
        }
    }
}

/// Pairs machine and curated labels greedily by descending IoU and buckets
/// every label.
pub fn diff_page(machine: &[RegionLabel], curated: &[RegionLabel], cfg: &EvalConfig) -> ErrorBreakdown {
    let mut pairs: Vec<(f64, bool, usize, usize)> = Vec::new();
    for (m, ml) in machine.iter().enumerate() {
        for (c, cl) in curated.iter().enumerate() {
            let v = iou(&ml.bbox, &cl.bbox);
            if v > 0.0 {
                pairs.push((v, ml.class == cl.class, m, c));
            }
        }
    }
    // equal IoU: same-class pairs first, then by position
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    let mut m_used = vec![false; machine.len()];
    let mut c_used = vec![false; curated.len()];
    let mut entries = Vec::new();
    for (v, same, m, c) in pairs {
        if m_used[m] || c_used[c] {
            continue;
        }
        m_used[m] = true;
        c_used[c] = true;
        let bucket = if v >= cfg.iou_threshold {
            match (same, v >= cfg.exact_tolerance) {
                (false, _) => DiffBucket::ClassError,
                (true, true) => DiffBucket::Exact,
                (true, false) => DiffBucket::FineTuned,
            }
        } else {
            DiffBucket::RegionError
        };
        entries.push(DiffEntry {
            bucket,
            machine_id: Some(machine[m].label_id.clone()),
            curated_id: Some(curated[c].label_id.clone()),
            iou: v,
        });
    }
    for (m, _) in m_used.iter().enumerate().filter(|(_, used)| !**used) {
        entries.push(DiffEntry {
            bucket: DiffBucket::FalsePositive,
            machine_id: Some(machine[m].label_id.clone()),
            curated_id: None,
            iou: 0.0,
        });
    }
    for (c, _) in c_used.iter().enumerate().filter(|(_, used)| !**used) {
        entries.push(DiffEntry {
            bucket: DiffBucket::FalseNegative,
            machine_id: None,
            curated_id: Some(curated[c].label_id.clone()),
            iou: 0.0,
        });
    }
    ErrorBreakdown { entries }
}

/// Diffs every page present on either side; a page missing on one side is empty there.
pub fn diff_pages(
    machine: &BTreeMap<String, Vec<RegionLabel>>,
    curated: &BTreeMap<String, Vec<RegionLabel>>,
    cfg: &EvalConfig,
) -> BTreeMap<String, ErrorBreakdown> {
    let pages: BTreeSet<&String> = machine.keys().chain(curated.keys()).collect();
    pages
        .into_iter()
        .map(|p| {
            let m = machine.get(p).map_or(&[][..], Vec::as_slice);
            let c = curated.get(p).map_or(&[][..], Vec::as_slice);
            (p.clone(), diff_page(m, c, cfg))
        })
        .collect()
}

/// Corpus-wide curation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub sessions: usize,
    pub pages: usize,
    pub histogram: BTreeMap<DiffBucket, usize>,
    pub counts: Counts,
    pub metrics: Metrics,
    /// Per-box effort in percentage points.
    pub effort_percent: f64,
    /// Share of pages with at least one addition, removal or relabel, in percent.
    pub effort_pages_percent: f64,
    /// Fine-tuned share of machine hits.
    pub fine_tune_rate: f64,
    /// Share of pages with a hit where at least one hit was fine-tuned.
    pub fine_tune_rate_pages: f64,
    /// Edit counts per actor and op kind.
    pub per_actor: BTreeMap<String, BTreeMap<String, usize>>,
}

pub fn session_stats(sessions: &[CurationSession], cfg: &EvalConfig) -> SessionStats {
    let mut total = ErrorBreakdown::default();
    let mut pages = 0usize;
    let mut pages_needing = 0usize;
    let mut pages_with_hits = 0usize;
    let mut pages_tuned = 0usize;
    let mut per_actor: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for s in sessions {
        for (_, breakdown) in diff_pages(&s.base_labels(), &s.state().labels, cfg) {
            pages += 1;
            let h = breakdown.histogram();
            let hits = h[&DiffBucket::Exact] + h[&DiffBucket::FineTuned];
            if hits > 0 {
                pages_with_hits += 1;
                if h[&DiffBucket::FineTuned] > 0 {
                    pages_tuned += 1;
                }
            }
            if breakdown.entries.len() > hits {
                pages_needing += 1;
            }
            total.extend(breakdown);
        }
        for e in s.log() {
            if let Action::Edit { op, .. } = &e.action {
                *per_actor
                    .entry(e.actor.clone())
                    .or_default()
                    .entry(op.kind().to_string())
                    .or_default() += 1;
            }
        }
    }
    let histogram = total.histogram();
    let counts = total.counts();
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    SessionStats {
        sessions: sessions.len(),
        pages,
        fine_tune_rate: ratio(histogram[&DiffBucket::FineTuned], counts.tp),
        fine_tune_rate_pages: ratio(pages_tuned, pages_with_hits),
        effort_percent: effort_estimate(&counts, cfg.relabel_only),
        effort_pages_percent: 100.0 * ratio(pages_needing, pages),
        metrics: metrics(&counts),
        histogram,
        counts,
        per_actor,
    }
}
