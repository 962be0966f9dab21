//! Navigator API: faceted search, image and paper detail, statistics.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query as QueryParams, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use figharvest_core::catalog::{
    Catalog, GroupStats, ImageFilter, ImageRecord, PaperRecord, Query, TermMode, Totals, Venue,
};
use serde::{Deserialize, Serialize};

use super::{ApiError, ApiResult};

/// The live catalog. Queries clone the inner `Arc`; a reload builds a whole
/// new catalog and swaps it in, so a query never sees a half-built index.
pub struct CatalogHandle {
    current: RwLock<Arc<Catalog>>,
    source: Option<PathBuf>,
}

impl CatalogHandle {
    pub fn new(catalog: Catalog, source: Option<PathBuf>) -> Self {
        CatalogHandle {
            current: RwLock::new(Arc::new(catalog)),
            source,
        }
    }

    pub fn get(&self) -> Arc<Catalog> {
        self.current.read().expect("catalog lock").clone()
    }

    pub fn swap(&self, catalog: Catalog) {
        *self.current.write().expect("catalog lock") = Arc::new(catalog);
    }
}

pub fn router(handle: Arc<CatalogHandle>) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/image/{id}", get(image))
        .route("/paper/{*doi}", get(paper))
        .route("/stats", get(stats))
        .route("/reload", post(reload))
        .with_state(handle)
}

pub fn doi_url(doi: &str) -> String {
    format!("https://doi.org/{doi}")
}

/// Query-string form of [`Query`]: `venues` is comma-separated and the year
/// range is split into two bounds.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub terms: Option<String>,
    pub mode: Option<String>,
    pub authors: Option<String>,
    pub venues: Option<String>,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
    #[serde(rename = "type")]
    pub image_type: Option<String>,
    pub stem: Option<bool>,
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

impl SearchParams {
    pub fn to_query(&self, catalog_years: (i32, i32)) -> Result<Query, String> {
        let venues = match &self.venues {
            Some(v) => v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse::<Venue>)
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let year_range = match (self.year_from, self.year_to) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(catalog_years.0), hi.unwrap_or(catalog_years.1))),
        };
        let query = Query {
            terms: self.terms.clone().filter(|t| !t.trim().is_empty()),
            term_mode: self.mode.as_deref().map(str::parse::<TermMode>).transpose()?.unwrap_or_default(),
            authors: self.authors.clone().filter(|a| !a.trim().is_empty()),
            venues,
            year_range,
            image_type: self
                .image_type
                .as_deref()
                .map(str::parse::<ImageFilter>)
                .transpose()?
                .unwrap_or_default(),
            stem: self.stem.unwrap_or(false),
        };
        query.validate().map_err(|e| e.to_string())?;
        Ok(query)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImageHit {
    #[serde(flatten)]
    pub image: ImageRecord,
    pub year: i32,
    pub venue: Venue,
    pub title: String,
    pub doi_url: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResponse {
    pub total: usize,
    pub offset: usize,
    pub results: Vec<ImageHit>,
}

pub fn hit(catalog: &Catalog, image: &ImageRecord) -> ImageHit {
    let p = catalog.paper(&image.doi).expect("images reference known papers");
    ImageHit {
        image: image.clone(),
        year: p.year,
        venue: p.venue,
        title: p.title.clone(),
        doi_url: doi_url(&p.doi),
    }
}

async fn search(
    State(handle): State<Arc<CatalogHandle>>,
    QueryParams(params): QueryParams<SearchParams>,
) -> ApiResult<SearchResponse> {
    let catalog = handle.get();
    let cfg = catalog.config();
    let query = params
        .to_query((cfg.year_min, cfg.year_max))
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))?;
    let found = catalog
        .search(&query)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let offset = params.offset.unwrap_or(0);
    let limit = params.limit.unwrap_or(usize::MAX);
    Ok(Json(SearchResponse {
        total: found.len(),
        offset,
        results: found.iter().skip(offset).take(limit).map(|i| hit(&catalog, i)).collect(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImageDetail {
    pub image: ImageRecord,
    pub paper: PaperRecord,
    pub doi_url: String,
}

async fn image(State(handle): State<Arc<CatalogHandle>>, Path(id): Path<String>) -> ApiResult<ImageDetail> {
    let catalog = handle.get();
    let image = catalog
        .image(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown image {id:?}")))?;
    let paper = catalog.paper(&image.doi).expect("known paper").clone();
    Ok(Json(ImageDetail {
        image: image.clone(),
        doi_url: doi_url(&paper.doi),
        paper,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PaperDetail {
    pub paper: PaperRecord,
    pub doi_url: String,
    pub images: Vec<ImageRecord>,
}

async fn paper(State(handle): State<Arc<CatalogHandle>>, Path(doi): Path<String>) -> ApiResult<PaperDetail> {
    let catalog = handle.get();
    let paper = catalog
        .paper(&doi)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown doi {doi:?}")))?;
    Ok(Json(PaperDetail {
        paper: paper.clone(),
        doi_url: doi_url(&doi),
        images: catalog.images_of(&doi).into_iter().cloned().collect(),
    }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct StatsParams {
    group: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsResponse {
    pub totals: Totals,
    pub groups: Vec<GroupStats>,
}

/// Parses `year`, `venue`, `year,venue` (or empty for one overall group).
pub fn parse_group(spec: Option<&str>) -> Result<(bool, bool), String> {
    let mut by = (false, false);
    for key in spec.unwrap_or("year,venue").split(',').map(str::trim).filter(|k| !k.is_empty()) {
        match key {
            "year" => by.0 = true,
            "venue" => by.1 = true,
            other => return Err(format!("unknown group key {other:?}")),
        }
    }
    Ok(by)
}

async fn stats(
    State(handle): State<Arc<CatalogHandle>>,
    QueryParams(params): QueryParams<StatsParams>,
) -> ApiResult<StatsResponse> {
    let catalog = handle.get();
    let (by_year, by_venue) =
        parse_group(params.group.as_deref()).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))?;
    Ok(Json(StatsResponse {
        totals: catalog.totals(),
        groups: catalog.stats_by(by_year, by_venue),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReloadResponse {
    pub digest: String,
}

async fn reload(State(handle): State<Arc<CatalogHandle>>) -> ApiResult<ReloadResponse> {
    let source = handle
        .source
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "catalog was not loaded from a file"))?;
    let fresh = Catalog::load(source).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let digest = fresh.digest();
    handle.swap(fresh);
    Ok(Json(ReloadResponse { digest }))
}
