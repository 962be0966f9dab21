//! IoU-thresholded detection evaluation.
//!
//! Matching is greedy in descending IoU order, the way PDFFigures 2.0 scores
//! extractions. A ground-truth region left unmatched may still be credited when
//! several predictions jointly cover it (multi-box credit). Class mismatches at
//! a passing IoU form their own bucket.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{Prediction, PredictionSet};
use crate::geometry::{iou, union_iou};
use crate::labels::{LabelClass, PageLabels, RegionLabel, Source};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("predictions reference page {0:?} which is not in the ground truth")]
    UnknownPage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub allow_multibox: bool,
    /// When false, classes are ignored during matching.
    pub class_strict: bool,
    /// Matches at or above this IoU need no human fine-tuning.
    pub exact_tolerance: f64,
    /// Count a class error as a single relabel instead of one removal plus one addition.
    pub relabel_only: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_threshold: 0.8,
            allow_multibox: true,
            class_strict: true,
            exact_tolerance: 0.995,
            relabel_only: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(EvalError::InvalidConfig(format!(
                "iou_threshold {} outside (0, 1]",
                self.iou_threshold
            )));
        }
        if !(self.exact_tolerance > 0.0 && self.exact_tolerance <= 1.0) {
            return Err(EvalError::InvalidConfig(format!(
                "exact_tolerance {} outside (0, 1]",
                self.exact_tolerance
            )));
        }
        Ok(())
    }

    fn classes_compatible(&self, a: LabelClass, b: LabelClass) -> bool {
        !self.class_strict || a == b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Single,
    Multibox,
}

/// A ground-truth region credited as detected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub gt: usize,
    pub gt_id: String,
    pub preds: Vec<usize>,
    pub iou: f64,
    pub kind: MatchKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassError {
    pub gt: usize,
    pub gt_id: String,
    pub pred: usize,
    pub iou: f64,
    pub gt_class: LabelClass,
    pub pred_class: LabelClass,
}

/// Matching outcome for one page. Predictions are referred to by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageMatch {
    pub page_id: String,
    pub n_gts: usize,
    pub n_preds: usize,
    pub matches: Vec<Match>,
    pub class_errors: Vec<ClassError>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<String>,
}

impl PageMatch {
    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.matches.len(),
            fp: self.false_positives.len(),
            fn_: self.false_negatives.len(),
            class_errors: self.class_errors.len(),
        }
    }
}

/// Aggregate counts. `fn_` includes the ground-truth side of class errors;
/// `fp` excludes their prediction side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub class_errors: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            class_errors: self.class_errors + o.class_errors,
        }
    }
}

impl Counts {
    /// Predictions not credited to a ground-truth region.
    pub fn wrong_predictions(&self) -> usize {
        self.fp + self.class_errors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a denominator was zero and the value defaulted to 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

impl Metrics {
    pub fn is_empty(&self) -> bool {
        self.precision_undefined && self.recall_undefined
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Precision, recall and F1. Class-error predictions count against precision.
pub fn metrics(counts: &Counts) -> Metrics {
    let pred_den = counts.tp + counts.wrong_predictions();
    let gt_den = counts.tp + counts.fn_;
    let precision = if pred_den > 0 {
        counts.tp as f64 / pred_den as f64
    } else {
        0.0
    };
    let recall = if gt_den > 0 {
        counts.tp as f64 / gt_den as f64
    } else {
        0.0
    };
    Metrics {
        precision,
        recall,
        f1: f1_score(precision, recall),
        precision_undefined: pred_den == 0,
        recall_undefined: gt_den == 0,
        f1_undefined: precision + recall == 0.0,
    }
}

/// Manual effort in percentage points: the share of ground truth that must be
/// added plus the share of predictions that must be removed.
///
/// Evaluated as a single rational so operating points such as 16 + 6 come out
/// as exact integers.
pub fn effort_estimate(counts: &Counts, relabel_only: bool) -> f64 {
    let additions = counts.fn_ as u128;
    let removals = if relabel_only {
        counts.fp
    } else {
        counts.wrong_predictions()
    } as u128;
    let gt_den = (counts.tp + counts.fn_) as u128;
    let pred_den = (counts.tp + counts.wrong_predictions()) as u128;
    match (gt_den, pred_den) {
        (0, 0) => 0.0,
        (g, 0) => (100 * additions) as f64 / g as f64,
        (0, p) => (100 * removals) as f64 / p as f64,
        (g, p) => (100 * (additions * p + removals * g)) as f64 / (g * p) as f64,
    }
}

/// Share of credited matches whose IoU falls short of `exact_tolerance`:
/// correct by the machine threshold, yet still needing a human touch-up.
/// Returns `(per_box, per_page)`, the latter over pages with at least one match.
pub fn fine_tune_rate(pages: &[PageMatch], exact_tolerance: f64) -> (f64, f64) {
    let mut boxes = 0usize;
    let mut tuned = 0usize;
    let mut pages_with_matches = 0usize;
    let mut pages_tuned = 0usize;
    for p in pages {
        if p.matches.is_empty() {
            continue;
        }
        pages_with_matches += 1;
        let t = p.matches.iter().filter(|m| m.iou < exact_tolerance).count();
        boxes += p.matches.len();
        tuned += t;
        if t > 0 {
            pages_tuned += 1;
        }
    }
    let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    (ratio(tuned, boxes), ratio(pages_tuned, pages_with_matches))
}

fn greedy_pairs(mut candidates: Vec<(f64, usize, usize)>, gt_used: &mut [bool], pred_used: &mut [bool]) -> Vec<(f64, usize, usize)> {
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut chosen = Vec::new();
    for (v, g, p) in candidates {
        if !gt_used[g] && !pred_used[p] {
            gt_used[g] = true;
            pred_used[p] = true;
            chosen.push((v, g, p));
        }
    }
    chosen
}

/// Matches one page's predictions against its ground truth.
pub fn match_page(page_id: &str, gts: &[RegionLabel], preds: &[Prediction], cfg: &EvalConfig) -> PageMatch {
    let thr = cfg.iou_threshold;
    let mut gt_used = vec![false; gts.len()];
    let mut pred_used = vec![false; preds.len()];
    let ious: Vec<Vec<f64>> = gts
        .iter()
        .map(|g| preds.iter().map(|p| iou(&g.bbox, &p.bbox)).collect())
        .collect();

    let passing: Vec<(f64, usize, usize)> = (0..gts.len())
        .flat_map(|g| (0..preds.len()).map(move |p| (g, p)))
        .filter(|&(g, p)| ious[g][p] >= thr && cfg.classes_compatible(gts[g].class, preds[p].class))
        .map(|(g, p)| (ious[g][p], g, p))
        .collect();
    let mut matches: Vec<Match> = greedy_pairs(passing, &mut gt_used, &mut pred_used)
        .into_iter()
        .map(|(v, g, p)| Match {
            gt: g,
            gt_id: gts[g].label_id.clone(),
            preds: vec![p],
            iou: v,
            kind: MatchKind::Single,
        })
        .collect();

    if cfg.allow_multibox {
        for g in 0..gts.len() {
            if gt_used[g] {
                continue;
            }
            let parts: Vec<usize> = (0..preds.len())
                .filter(|&p| {
                    !pred_used[p]
                        && cfg.classes_compatible(gts[g].class, preds[p].class)
                        && preds[p].bbox.overlaps(&gts[g].bbox)
                })
                .collect();
            if parts.len() < 2 {
                continue;
            }
            let boxes: Vec<_> = parts.iter().map(|&p| preds[p].bbox).collect();
            let v = union_iou(&boxes, &gts[g].bbox).expect("non-empty parts");
            if v >= thr {
                gt_used[g] = true;
                for &p in &parts {
                    pred_used[p] = true;
                }
                matches.push(Match {
                    gt: g,
                    gt_id: gts[g].label_id.clone(),
                    preds: parts,
                    iou: v,
                    kind: MatchKind::Multibox,
                });
            }
        }
    }
    matches.sort_by_key(|m| m.gt);

    let mut class_errors = Vec::new();
    if cfg.class_strict {
        let mismatched: Vec<(f64, usize, usize)> = (0..gts.len())
            .flat_map(|g| (0..preds.len()).map(move |p| (g, p)))
            .filter(|&(g, p)| !gt_used[g] && !pred_used[p] && ious[g][p] >= thr && gts[g].class != preds[p].class)
            .map(|(g, p)| (ious[g][p], g, p))
            .collect();
        // class-error gts stay unmatched, so they are false negatives as well
        let mut gt_flag = gt_used.clone();
        class_errors = greedy_pairs(mismatched, &mut gt_flag, &mut pred_used)
            .into_iter()
            .map(|(v, g, p)| ClassError {
                gt: g,
                gt_id: gts[g].label_id.clone(),
                pred: p,
                iou: v,
                gt_class: gts[g].class,
                pred_class: preds[p].class,
            })
            .collect();
        class_errors.sort_by_key(|c| c.gt);
    }

    PageMatch {
        page_id: page_id.to_string(),
        n_gts: gts.len(),
        n_preds: preds.len(),
        matches,
        class_errors,
        false_positives: (0..preds.len()).filter(|&p| !pred_used[p]).collect(),
        false_negatives: (0..gts.len())
            .filter(|&g| !gt_used[g])
            .map(|g| gts[g].label_id.clone())
            .collect(),
    }
}

/// Largest number of one-to-one pairs among threshold-passing, class-compatible
/// (gt, pred) pairs, by augmenting paths.
pub fn optimal_single_matches(gts: &[RegionLabel], preds: &[Prediction], cfg: &EvalConfig) -> usize {
    let adjacency: Vec<Vec<usize>> = gts
        .iter()
        .map(|g| {
            (0..preds.len())
                .filter(|&p| {
                    cfg.classes_compatible(g.class, preds[p].class) && iou(&g.bbox, &preds[p].bbox) >= cfg.iou_threshold
                })
                .collect()
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; preds.len()];
    fn augment(g: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &p in &adj[g] {
            if seen[p] {
                continue;
            }
            seen[p] = true;
            if owner[p].is_none_or(|other| augment(other, adj, seen, owner)) {
                owner[p] = Some(g);
                return true;
            }
        }
        false
    }
    (0..gts.len())
        .filter(|&g| augment(g, &adjacency, &mut vec![false; preds.len()], &mut owner))
        .count()
}

/// A page where greedy matching credited fewer single-box matches than the
/// best one-to-one assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub page_id: String,
    pub greedy_tp: usize,
    pub optimal_tp: usize,
    pub gts: Vec<RegionLabel>,
    pub preds: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub config: EvalConfig,
    pub counts: Counts,
    pub metrics: Metrics,
    /// Per-box effort in percentage points.
    pub effort_percent: f64,
    /// Share of pages needing at least one addition or removal, in percent.
    pub effort_pages_percent: f64,
    pub fine_tune_rate: f64,
    pub fine_tune_rate_pages: f64,
    pub divergences: Vec<Divergence>,
    pub pages: Vec<PageMatch>,
}

impl MatchReport {
    pub fn from_pages(pages: Vec<PageMatch>, divergences: Vec<Divergence>, cfg: &EvalConfig) -> Self {
        let counts = pages.iter().map(PageMatch::counts).fold(Counts::default(), |a, b| a + b);
        let (fine_tune_rate, fine_tune_rate_pages) = fine_tune_rate(&pages, cfg.exact_tolerance);
        let needing = pages
            .iter()
            .filter(|p| {
                let c = p.counts();
                c.fn_ + c.wrong_predictions() > 0
            })
            .count();
        MatchReport {
            config: *cfg,
            counts,
            metrics: metrics(&counts),
            effort_percent: effort_estimate(&counts, cfg.relabel_only),
            effort_pages_percent: if pages.is_empty() {
                0.0
            } else {
                100.0 * needing as f64 / pages.len() as f64
            },
            fine_tune_rate,
            fine_tune_rate_pages,
            divergences,
            pages,
        }
    }

    /// One-line `P=… R=… F1=… effort=…%` summary.
    pub fn summary(&self) -> String {
        format!(
            "P={:.2} R={:.2} F1={:.2} effort={}%",
            self.metrics.precision,
            self.metrics.recall,
            self.metrics.f1,
            format_percent(self.effort_percent)
        )
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())
    }
}

fn format_percent(v: f64) -> String {
    let rounded = (v * 100.0).round() / 100.0;
    if rounded.fract() == 0.0 {
        format!("{rounded:.0}")
    } else {
        let s = format!("{rounded:.2}");
        s.trim_end_matches('0').to_string()
    }
}

/// Evaluates a predictions file against a ground-truth file.
///
/// Prediction sets for the same page (for example from several detectors) are
/// merged. Ground-truth pages without predictions count every region as missed.
pub fn evaluate(gt: &[PageLabels], predictions: &[PredictionSet], cfg: &EvalConfig) -> Result<MatchReport, EvalError> {
    cfg.validate()?;
    let known: BTreeSet<&str> = gt.iter().map(|p| p.page_id.as_str()).collect();
    let mut by_page: BTreeMap<&str, Vec<Prediction>> = BTreeMap::new();
    for set in predictions {
        if !known.contains(set.page_id.as_str()) {
            return Err(EvalError::UnknownPage(set.page_id.clone()));
        }
        by_page.entry(&set.page_id).or_default().extend(set.predictions.iter().copied());
    }
    let results: Vec<(PageMatch, Option<Divergence>)> = gt
        .par_iter()
        .map(|page| {
            let gts = page.to_region_labels(Source::Human);
            let preds = by_page.get(page.page_id.as_str()).map_or(&[][..], Vec::as_slice);
            let pm = match_page(&page.page_id, &gts, preds, cfg);
            let greedy = pm.matches.iter().filter(|m| m.kind == MatchKind::Single).count();
            let optimal = optimal_single_matches(&gts, preds, cfg);
            let divergence = (greedy < optimal).then(|| Divergence {
                page_id: page.page_id.clone(),
                greedy_tp: greedy,
                optimal_tp: optimal,
                gts: gts.clone(),
                preds: preds.to_vec(),
            });
            (pm, divergence)
        })
        .collect();
    let (pages, divergences): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let divergences: Vec<Divergence> = divergences.into_iter().flatten().collect();
    for d in &divergences {
        log::warn!(
            "greedy matching on page {} credited {} of {} assignable regions",
            d.page_id,
            d.greedy_tp,
            d.optimal_tp
        );
    }
    Ok(MatchReport::from_pages(pages, divergences, cfg))
}
