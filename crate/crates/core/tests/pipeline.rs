use std::collections::BTreeMap;

use figharvest_core::detect::{baseline_detect_pages, list_pages, BaselineConfig};
use figharvest_core::eval::{evaluate, EvalConfig};
use figharvest_core::labels::{read_jsonl, PageLabels};
use figharvest_core::synth::{compose_corpus, load_asset_pool, procedural::generate_pool, AssetCategory, PageSpec};

#[test]
fn category_frequencies_follow_weights() {
    let dir = tempfile::tempdir().unwrap();
    let pool = load_asset_pool(&generate_pool(&dir.path().join("pool"), 2, 11).unwrap()).unwrap();
    let spec = PageSpec::default();
    let manifest = compose_corpus(100, &spec, &pool, &dir.path().join("corpus")).unwrap();

    let total_weight: f64 = AssetCategory::ALL.iter().map(|&c| spec.weight(c)).sum();
    let pasted: usize = manifest.category_totals.values().sum();
    assert!(pasted >= 100, "only {pasted} assets placed");
    for c in AssetCategory::ALL {
        let expected = spec.weight(c) / total_weight;
        let observed = *manifest.category_totals.get(&c).unwrap_or(&0) as f64 / pasted as f64;
        assert!(
            (observed - expected).abs() <= 0.10,
            "{}: observed {observed:.3}, expected {expected:.3}",
            c.name()
        );
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let pool = load_asset_pool(&generate_pool(&dir.path().join("pool"), 1, 3).unwrap()).unwrap();
    let spec = PageSpec::default();
    let run = |threads: usize, name: &str| {
        let out = dir.path().join(name);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| compose_corpus(8, &spec, &pool, &out).unwrap());
        (
            std::fs::read(out.join("labels.jsonl")).unwrap(),
            std::fs::read(out.join("manifest.json")).unwrap(),
        )
    };
    assert_eq!(run(1, "one"), run(4, "four"));
}

#[test]
fn baseline_over_synthetic_corpus_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let pool = load_asset_pool(&generate_pool(&dir.path().join("pool"), 1, 9).unwrap()).unwrap();
    let corpus = dir.path().join("corpus");
    compose_corpus(6, &PageSpec::default(), &pool, &corpus).unwrap();
    let pages = list_pages(&corpus).unwrap();
    assert_eq!(pages.len(), 6);

    let a = baseline_detect_pages(&pages, &BaselineConfig::default()).unwrap();
    let b = baseline_detect_pages(&pages, &BaselineConfig::default()).unwrap();
    assert_eq!(a, b);
    for set in &a {
        let page = pages.iter().find(|p| p.page_id == set.page_id).unwrap();
        set.validate(page.width as f64, page.height as f64).unwrap();
    }

    let gt: Vec<PageLabels> = read_jsonl(&corpus.join("labels.jsonl")).unwrap();
    let report = evaluate(&gt, &a, &EvalConfig::default()).unwrap();
    let regions: usize = gt.iter().map(|p| p.labels.len()).sum();
    assert_eq!(report.counts.tp + report.counts.fn_, regions);
    let predicted: usize = a.iter().map(|s| s.predictions.len()).sum();
    // multibox matches consume several predictions each
    let consumed: usize = report.pages.iter().flat_map(|p| &p.matches).map(|m| m.preds.len()).sum();
    assert_eq!(consumed + report.counts.fp + report.counts.class_errors, predicted);
}

#[test]
fn per_class_totals_match_labels_file() {
    let dir = tempfile::tempdir().unwrap();
    let pool = load_asset_pool(&generate_pool(&dir.path().join("pool"), 1, 1).unwrap()).unwrap();
    let corpus = dir.path().join("corpus");
    let manifest = compose_corpus(10, &PageSpec::default(), &pool, &corpus).unwrap();
    let gt: Vec<PageLabels> = read_jsonl(&corpus.join("labels.jsonl")).unwrap();
    let mut counted = BTreeMap::new();
    for l in gt.iter().flat_map(|p| &p.labels) {
        *counted.entry(l.class).or_insert(0usize) += 1;
    }
    assert_eq!(counted, manifest.class_totals);
}
