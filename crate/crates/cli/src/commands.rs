use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use figharvest_core::catalog::Catalog;
use figharvest_core::curate::{
    diff_pages, session_stats, CurationSession, ErrorBreakdown, PageBase, SessionHeader, SessionStore,
};
use figharvest_core::detect::{
    baseline_detect_pages, list_pages, read_predictions, run_adapter, write_predictions, AdapterConfig, PredictionSet,
};
use figharvest_core::eval::{effort_estimate, evaluate, metrics, Counts, EvalConfig, MatchReport, Metrics};
use figharvest_core::labels::{read_jsonl, write_jsonl, LabelClass, PageLabels, RecordError, WireLabel};
use figharvest_core::synth::{compose_corpus, load_asset_pool, procedural::generate_pool, CorpusManifest, PageSpec};
use figharvest_core::{RegionLabel, Source};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::server::catalog::{hit, parse_group, CatalogHandle, SearchParams};
use crate::server::curate::CurateState;
use crate::server::{self};
use crate::{
    CatalogCommand, CatalogIngestArgs, CatalogQueryArgs, CatalogStatsArgs, Command, CurateCommand, CurateDiffArgs,
    CurateInitArgs, DetectArgs, EvalArgs, PipelineArgs, StoreArgs, SynthArgs,
};

/// What a subcommand prints, in both formats.
pub struct Report {
    pub json: Value,
    pub text: String,
}

fn need(flag: Option<&PathBuf>, fallback: Option<&PathBuf>, what: &str) -> CliResult<PathBuf> {
    flag.or(fallback)
        .cloned()
        .ok_or_else(|| CliError::Validation(format!("missing {what}")))
}

pub fn dispatch(command: &Command, cfg: &PipelineConfig, workers: usize) -> CliResult<Report> {
    match command {
        Command::Synth(a) => synth(a, cfg),
        Command::Detect(a) => detect(a, cfg, workers),
        Command::Eval(a) => eval(a, cfg),
        Command::Curate(c) => match c {
            CurateCommand::Init(a) => curate_init(a, cfg),
            CurateCommand::Serve(a) => {
                let store = open_store(&a.store, cfg)?;
                let corpus = a.corpus.clone().or_else(|| cfg.paths.corpus.clone());
                let state = Arc::new(CurateState::new(store, corpus, cfg.eval));
                let port = a.port.unwrap_or(cfg.ports.curate);
                serve(server::curate::router(state), port)
            }
            CurateCommand::Diff(a) => curate_diff(a, cfg),
            CurateCommand::Stats(a) => curate_stats(a, cfg),
            CurateCommand::Export(a) => curate_export(&a.store, &a.out, cfg),
        },
        Command::Catalog(c) => match c {
            CatalogCommand::Ingest(a) => catalog_ingest(a, cfg),
            CatalogCommand::Query(a) => catalog_query(a, cfg),
            CatalogCommand::Stats(a) => catalog_stats(a, cfg),
            CatalogCommand::Serve(a) => {
                let path = need(a.catalog.catalog.as_ref(), cfg.paths.catalog.as_ref(), "--catalog")?;
                let catalog = Catalog::load(&path)?;
                let handle = Arc::new(CatalogHandle::new(catalog, Some(path)));
                serve(server::catalog::router(handle), a.port.unwrap_or(cfg.ports.catalog))
            }
        },
        Command::Pipeline(a) => pipeline(a, cfg),
    }
}

fn serve(router: axum::Router, port: u16) -> CliResult<Report> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::io("runtime", e))?;
    rt.block_on(server::serve(router, port))
        .map_err(|e| CliError::io(format!("127.0.0.1:{port}"), e))?;
    Ok(Report {
        json: json!({ "stopped": true }),
        text: "server stopped\n".into(),
    })
}

#[derive(Debug, Serialize)]
struct SynthSummary {
    out: PathBuf,
    n_pages: usize,
    base_seed: u64,
    labels_file: String,
    category_totals: BTreeMap<String, usize>,
    class_totals: BTreeMap<LabelClass, usize>,
    warnings: usize,
}

fn run_synth(
    n_pages: usize,
    seed: Option<u64>,
    assets: Option<&Path>,
    procedural: usize,
    spec: &PageSpec,
    out: &Path,
) -> CliResult<CorpusManifest> {
    let spec = PageSpec {
        seed: seed.unwrap_or(spec.seed),
        ..spec.clone()
    };
    let manifest_path = match assets {
        Some(a) => a.to_path_buf(),
        None => generate_pool(&out.join("assets"), procedural.max(1), spec.seed)?,
    };
    let pool = load_asset_pool(&manifest_path)?;
    Ok(compose_corpus(n_pages, &spec, &pool, out)?)
}

fn synth(a: &SynthArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let out = need(a.out.as_ref(), cfg.paths.corpus.as_ref(), "--out (or paths.corpus)")?;
    let spec = match &a.spec {
        Some(p) => PageSpec::from_toml_file(p)?,
        None => cfg.synth.clone(),
    };
    let assets = a.assets.as_ref().or(cfg.paths.assets.as_ref());
    let m = run_synth(a.pages, a.seed, assets.map(PathBuf::as_path), a.procedural, &spec, &out)?;
    let summary = SynthSummary {
        out: out.clone(),
        n_pages: m.n_pages,
        base_seed: m.base_seed,
        labels_file: m.labels_file.clone(),
        category_totals: m.category_totals.iter().map(|(c, n)| (c.name().to_string(), *n)).collect(),
        class_totals: m.class_totals.clone(),
        warnings: m.warnings,
    };
    let class = |c| m.class_totals.get(&c).copied().unwrap_or(0);
    let text = format!(
        "wrote {} pages to {} ({} figures, {} tables, {} placement warnings)\n",
        m.n_pages,
        out.display(),
        class(LabelClass::Figure),
        class(LabelClass::Table),
        m.warnings
    );
    Ok(Report {
        json: serde_json::to_value(summary).expect("serializes"),
        text,
    })
}

fn run_detect(
    pages_dir: &Path,
    adapter: Option<&str>,
    detector_id: Option<&str>,
    cfg: &PipelineConfig,
    workers: usize,
) -> CliResult<Vec<PredictionSet>> {
    let pages = list_pages(pages_dir)?;
    if pages.is_empty() {
        return Err(CliError::Validation(format!("no page rasters in {}", pages_dir.display())));
    }
    let mut sets = match adapter {
        Some(template) => {
            let mut ac = AdapterConfig::new(template);
            ac.workers = if workers == 0 { rayon::current_num_threads() } else { workers };
            if let Some(id) = detector_id {
                ac.detector_id = id.to_string();
            }
            run_adapter(&ac, &pages)?
        }
        None => baseline_detect_pages(&pages, &cfg.baseline)?,
    };
    if let (Some(id), None) = (detector_id, adapter) {
        sets.iter_mut().for_each(|s| s.detector_id = id.to_string());
    }
    Ok(sets)
}

fn detect(a: &DetectArgs, cfg: &PipelineConfig, workers: usize) -> CliResult<Report> {
    let pages = need(a.pages.as_ref(), cfg.paths.corpus.as_ref(), "--pages (or paths.corpus)")?;
    let out = need(a.out.as_ref(), cfg.paths.predictions.as_ref(), "--out (or paths.predictions)")?;
    let sets = run_detect(&pages, a.adapter.as_deref(), a.detector_id.as_deref(), cfg, workers)?;
    write_predictions(&out, &sets)?;
    let n: usize = sets.iter().map(|s| s.predictions.len()).sum();
    let detector = sets.first().map(|s| s.detector_id.clone()).unwrap_or_default();
    Ok(Report {
        json: json!({ "out": out, "pages": sets.len(), "predictions": n, "detector_id": detector }),
        text: format!("{n} predictions on {} pages by {detector} -> {}\n", sets.len(), out.display()),
    })
}

/// The stable, machine-readable part of an evaluation.
#[derive(Debug, Serialize)]
pub struct EvalSummary {
    pub config: EvalConfig,
    pub pages: usize,
    pub regions: usize,
    pub predictions: usize,
    pub counts: Counts,
    pub metrics: Metrics,
    pub effort_percent: f64,
    pub effort_pages_percent: f64,
    pub fine_tune_rate: f64,
    pub fine_tune_rate_pages: f64,
    pub divergences: usize,
    pub summary: String,
}

impl EvalSummary {
    fn new(r: &MatchReport) -> Self {
        EvalSummary {
            config: r.config,
            pages: r.pages.len(),
            regions: r.pages.iter().map(|p| p.n_gts).sum(),
            predictions: r.pages.iter().map(|p| p.n_preds).sum(),
            counts: r.counts,
            metrics: r.metrics,
            effort_percent: r.effort_percent,
            effort_pages_percent: r.effort_pages_percent,
            fine_tune_rate: r.fine_tune_rate,
            fine_tune_rate_pages: r.fine_tune_rate_pages,
            divergences: r.divergences.len(),
            summary: r.summary(),
        }
    }
}

fn eval(a: &EvalArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let labels = match a.labels.as_ref().or(cfg.paths.labels.as_ref()) {
        Some(p) => p.clone(),
        None => need(None, cfg.paths.corpus.as_ref(), "--labels (or paths.labels)")?.join("labels.jsonl"),
    };
    let preds = need(a.predictions.as_ref(), cfg.paths.predictions.as_ref(), "--predictions (or paths.predictions)")?;
    let mut ec = cfg.eval;
    if let Some(t) = a.iou {
        ec.iou_threshold = t;
    }
    if let Some(t) = a.exact_tolerance {
        ec.exact_tolerance = t;
    }
    ec.allow_multibox &= !a.no_multibox;
    ec.class_strict &= !a.ignore_class;
    ec.relabel_only |= a.relabel_only;

    let gt: Vec<PageLabels> = read_jsonl(&labels)?;
    let sets = read_predictions(&preds)?;
    let report = evaluate(&gt, &sets, &ec)?;
    if let Some(path) = &a.report {
        std::fs::write(path, serde_json::to_string_pretty(&report).expect("serializes"))
            .map_err(|e| CliError::io(path.display(), e))?;
    }
    Ok(eval_report(&report))
}

fn eval_report(report: &MatchReport) -> Report {
    let summary = EvalSummary::new(report);
    let mut text = report.summary();
    text.push('\n');
    if !report.divergences.is_empty() {
        let _ = writeln!(text, "greedy matching below optimum on {} pages", report.divergences.len());
    }
    Report {
        json: serde_json::to_value(summary).expect("serializes"),
        text,
    }
}

fn open_store(a: &StoreArgs, cfg: &PipelineConfig) -> CliResult<SessionStore> {
    let dir = need(a.store.as_ref(), cfg.paths.store.as_ref(), "--store (or paths.store)")?;
    Ok(SessionStore::open(dir)?)
}

fn curate_init(a: &CurateInitArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let store = open_store(&a.store, cfg)?;
    let preds = need(a.predictions.as_ref(), cfg.paths.predictions.as_ref(), "--predictions (or paths.predictions)")?;
    let corpus = need(a.corpus.as_ref(), cfg.paths.corpus.as_ref(), "--corpus (or paths.corpus)")?;
    let pages = list_pages(&corpus)?;
    let mut by_page: BTreeMap<String, Vec<RegionLabel>> = BTreeMap::new();
    for set in read_predictions(&preds)? {
        let labels = by_page.entry(set.page_id.clone()).or_default();
        for p in set.predictions {
            let id = format!("{}/m{}", set.page_id, labels.len());
            labels.push(RegionLabel::new(id, p.bbox, p.class, Source::Machine));
        }
    }
    if let Some(unknown) = by_page.keys().find(|id| !pages.iter().any(|p| &&p.page_id == id)) {
        return Err(CliError::Validation(format!("predictions for page {unknown:?} not in {}", corpus.display())));
    }
    let header = SessionHeader {
        doc_id: a.doc_id.clone(),
        year: a.year,
        pages: pages
            .iter()
            .map(|p| PageBase {
                page_id: p.page_id.clone(),
                width: p.width as f64,
                height: p.height as f64,
                labels: by_page.remove(&p.page_id).unwrap_or_default(),
            })
            .collect(),
    };
    let session = store.create(header)?;
    let labels: usize = session.header().pages.iter().map(|p| p.labels.len()).sum();
    Ok(Report {
        json: json!({ "doc_id": session.doc_id(), "pages": session.header().pages.len(), "labels": labels }),
        text: format!(
            "session {} with {} pages and {labels} machine labels\n",
            session.doc_id(),
            session.header().pages.len()
        ),
    })
}

// Machine files may be predictions or labels records.
#[derive(Deserialize)]
struct AnyLabels {
    page_id: String,
    #[serde(alias = "predictions")]
    labels: Vec<WireLabel>,
}

fn read_label_map(path: &Path, source: Source) -> Result<BTreeMap<String, Vec<RegionLabel>>, RecordError> {
    let mut out: BTreeMap<String, Vec<RegionLabel>> = BTreeMap::new();
    for rec in read_jsonl::<AnyLabels>(path)? {
        let page = PageLabels {
            page_id: rec.page_id,
            labels: rec.labels,
        };
        out.entry(page.page_id.clone()).or_default().extend(page.to_region_labels(source));
    }
    Ok(out)
}

fn breakdown_report(pages: &BTreeMap<String, ErrorBreakdown>, ec: &EvalConfig) -> Report {
    let mut all = ErrorBreakdown::default();
    for b in pages.values() {
        all.extend(b.clone());
    }
    let counts = all.counts();
    let m = metrics(&counts);
    let effort = effort_estimate(&counts, ec.relabel_only);
    let histogram = all.histogram();
    let mut text = String::new();
    for (bucket, n) in &histogram {
        let _ = writeln!(text, "{:<15} {n}", serde_json::to_value(bucket).unwrap().as_str().unwrap());
    }
    let _ = writeln!(text, "P={:.2} R={:.2} F1={:.2} effort={effort:.2}%", m.precision, m.recall, m.f1);
    Report {
        json: json!({ "histogram": histogram, "counts": counts, "metrics": m, "effort_percent": effort, "pages": pages }),
        text,
    }
}

fn curate_diff(a: &CurateDiffArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let machine = read_label_map(&a.machine, Source::Machine)?;
    let curated = read_label_map(&a.curated, Source::Human)?;
    Ok(breakdown_report(&diff_pages(&machine, &curated, &cfg.eval), &cfg.eval))
}

fn curate_stats(a: &StoreArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let sessions: Vec<CurationSession> = open_store(a, cfg)?.load_all()?;
    let stats = session_stats(&sessions, &cfg.eval);
    let text = format!(
        "{} sessions, {} pages: effort {:.2}% per box, {:.2}% of pages; fine-tune {:.3} per box, {:.3} per page\n",
        stats.sessions,
        stats.pages,
        stats.effort_percent,
        stats.effort_pages_percent,
        stats.fine_tune_rate,
        stats.fine_tune_rate_pages
    );
    Ok(Report {
        json: serde_json::to_value(stats).expect("serializes"),
        text,
    })
}

fn curate_export(a: &StoreArgs, out: &Path, cfg: &PipelineConfig) -> CliResult<Report> {
    let sessions = open_store(a, cfg)?.load_all()?;
    let pages: Vec<PageLabels> = sessions
        .iter()
        .flat_map(|s| {
            s.state()
                .labels
                .iter()
                .map(|(page, labels)| PageLabels::from_region_labels(page.clone(), labels))
        })
        .collect();
    write_jsonl(out, &pages)?;
    Ok(Report {
        json: json!({ "out": out, "sessions": sessions.len(), "pages": pages.len() }),
        text: format!("{} pages from {} sessions -> {}\n", pages.len(), sessions.len(), out.display()),
    })
}

fn catalog_ingest(a: &CatalogIngestArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let out = need(a.out.as_ref(), cfg.paths.catalog.as_ref(), "--out (or paths.catalog)")?;
    let (catalog, report) = Catalog::ingest(&a.papers, &a.images, cfg.catalog)?;
    catalog.save(&out)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let t = catalog.totals();
    let mut text = format!(
        "{} papers, {} images ({} figures, {} tables) -> {}\n",
        t.papers,
        t.images,
        t.figures,
        t.tables,
        out.display()
    );
    for r in &report.rejected {
        let _ = writeln!(text, "rejected image {} (line {}): {} {}", r.image_id, r.line, r.reason, r.doi);
    }
    for w in &report.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    Ok(Report {
        json: json!({ "out": out, "totals": t, "digest": catalog.digest(), "report": report }),
        text,
    })
}

fn catalog_query(a: &CatalogQueryArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let path = need(a.catalog.catalog.as_ref(), cfg.paths.catalog.as_ref(), "--catalog (or paths.catalog)")?;
    let catalog = Catalog::load(&path)?;
    let params = SearchParams {
        terms: a.terms.clone(),
        mode: a.mode.clone(),
        authors: a.authors.clone(),
        venues: a.venues.clone(),
        year_from: a.year_from,
        year_to: a.year_to,
        image_type: a.image_type.clone(),
        stem: Some(a.stem),
        offset: None,
        limit: a.limit,
    };
    let c = catalog.config();
    let query = params.to_query((c.year_min, c.year_max)).map_err(CliError::Validation)?;
    let found = catalog.search(&query)?;
    let hits: Vec<_> = found
        .iter()
        .take(a.limit.unwrap_or(usize::MAX))
        .map(|i| hit(&catalog, i))
        .collect();
    let mut text = String::new();
    for h in &hits {
        let kind = serde_json::to_value(h.image.image_type).unwrap();
        let _ = writeln!(
            text,
            "{} {:<7} {} #{} {} {}",
            h.year,
            h.venue,
            h.image.doi,
            h.image.in_paper_index,
            kind.as_str().unwrap(),
            h.image.image_id
        );
    }
    let _ = writeln!(text, "{} images", found.len());
    Ok(Report {
        json: json!({ "total": found.len(), "results": hits }),
        text,
    })
}

fn catalog_stats(a: &CatalogStatsArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let path = need(a.catalog.catalog.as_ref(), cfg.paths.catalog.as_ref(), "--catalog (or paths.catalog)")?;
    let catalog = Catalog::load(&path)?;
    let (by_year, by_venue) = parse_group(Some(&a.group)).map_err(CliError::Validation)?;
    let groups = catalog.stats_by(by_year, by_venue);
    let totals = catalog.totals();
    let mut text = String::new();
    for g in &groups {
        let year = g.year.map_or("all".to_string(), |y| y.to_string());
        let venue = g.venue.map_or("all".to_string(), |v| v.to_string());
        let _ = writeln!(
            text,
            "{year:<5} {venue:<7} papers={:<4} images={:<5} figures={:<5} tables={:<4} pages={:<5} per_page={:.3}",
            g.papers, g.images, g.figures, g.tables, g.pages, g.images_per_page
        );
    }
    let _ = writeln!(
        text,
        "total: {} papers, {} images ({} figures, {} tables)",
        totals.papers, totals.images, totals.figures, totals.tables
    );
    Ok(Report {
        json: json!({ "totals": totals, "groups": groups }),
        text,
    })
}

fn pipeline(a: &PipelineArgs, cfg: &PipelineConfig) -> CliResult<Report> {
    let scratch;
    let out = match a.out.as_ref().or(cfg.paths.corpus.as_ref()) {
        Some(p) => p.clone(),
        None => {
            scratch = tempfile::tempdir().map_err(|e| CliError::io(std::env::temp_dir().display(), e))?;
            scratch.path().to_path_buf()
        }
    };
    let corpus = out.join("corpus");
    let assets = a.assets.as_ref().or(cfg.paths.assets.as_ref());
    let manifest = run_synth(a.pages, a.seed, assets.map(PathBuf::as_path), 3, &cfg.synth, &corpus)?;
    let sets = run_detect(&corpus, None, None, cfg, 0)?;
    write_predictions(&out.join("predictions.jsonl"), &sets)?;
    let gt: Vec<PageLabels> = read_jsonl(&corpus.join(&manifest.labels_file))?;
    let report = evaluate(&gt, &sets, &cfg.eval)?;
    let mut r = eval_report(&report);
    r.json = json!({ "pages": manifest.n_pages, "seed": manifest.base_seed, "eval": r.json });
    Ok(r)
}
