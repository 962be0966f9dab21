//! Curation API: page labels, edits, status transitions, overview and diffs.
//!
//! Writes carry the acting user in the `x-actor` header and may carry the
//! sequence number the client last saw; a mismatch answers 409 and the
//! client reloads.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use figharvest_core::curate::{
    diff_pages, session_stats, Action, CurateError, CurationSession, DiffBucket, EditOp, ErrorBreakdown, Event,
    SessionStats, SessionStore, Status, YearOverview,
};
use figharvest_core::eval::EvalConfig;
use figharvest_core::synth::CorpusManifest;
use figharvest_core::RegionLabel;
use serde::{Deserialize, Serialize};

use super::{ApiError, ApiResult};

pub const ACTOR_HEADER: &str = "x-actor";

pub struct CurateState {
    store: SessionStore,
    corpus: Option<PathBuf>,
    eval: EvalConfig,
    // one writer at a time; readers go straight to the log files
    write: Mutex<()>,
}

impl CurateState {
    pub fn new(store: SessionStore, corpus: Option<PathBuf>, eval: EvalConfig) -> Self {
        CurateState {
            store,
            corpus,
            eval,
            write: Mutex::new(()),
        }
    }
}

pub fn router(state: Arc<CurateState>) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions))
        .route("/overview", get(overview))
        .route("/stats", get(stats))
        .route("/sessions/{doc}", get(session_detail))
        .route("/sessions/{doc}/log", get(session_log))
        .route("/sessions/{doc}/diff", get(session_diff))
        .route("/sessions/{doc}/pages/{page}", get(page_view))
        .route("/sessions/{doc}/pages/{page}/raster", get(page_raster))
        .route("/sessions/{doc}/edits", post(post_edit))
        .route("/sessions/{doc}/undo", post(post_undo))
        .route("/sessions/{doc}/status", post(post_status))
        .with_state(state)
}

fn api_error(e: CurateError) -> ApiError {
    let status = match &e {
        CurateError::UnknownSession(_) | CurateError::UnknownPage(_) => StatusCode::NOT_FOUND,
        CurateError::UnknownLabel(_)
        | CurateError::DuplicateLabel(_)
        | CurateError::OutOfBounds
        | CurateError::NothingToUndo(_) => StatusCode::UNPROCESSABLE_ENTITY,
        CurateError::StaleSequence { .. } | CurateError::InvalidTransition { .. } | CurateError::SessionExists(_) => {
            StatusCode::CONFLICT
        }
        CurateError::SessionLocked => StatusCode::LOCKED,
        CurateError::SecondActorRequired(_) => StatusCode::FORBIDDEN,
        CurateError::CorruptLog(_) | CurateError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
    };
    ApiError::new(status, e.to_string())
}

fn actor(headers: &HeaderMap) -> Result<String, ApiError> {
    headers
        .get(ACTOR_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(String::from)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("missing {ACTOR_HEADER} header")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub doc_id: String,
    pub year: Option<i32>,
    pub status: Status,
    pub sequence: u64,
    pub pages: Vec<String>,
}

fn summary(s: &CurationSession) -> SessionSummary {
    SessionSummary {
        doc_id: s.doc_id().to_string(),
        year: s.header().year,
        status: s.status(),
        sequence: s.sequence(),
        pages: s.header().pages.iter().map(|p| p.page_id.clone()).collect(),
    }
}

async fn list_sessions(State(st): State<Arc<CurateState>>) -> ApiResult<Vec<SessionSummary>> {
    let sessions = st.store.load_all().map_err(api_error)?;
    Ok(Json(sessions.iter().map(summary).collect()))
}

async fn overview(State(st): State<Arc<CurateState>>) -> ApiResult<Vec<YearOverview>> {
    Ok(Json(st.store.overview().map_err(api_error)?))
}

async fn stats(State(st): State<Arc<CurateState>>) -> ApiResult<SessionStats> {
    let sessions = st.store.load_all().map_err(api_error)?;
    Ok(Json(session_stats(&sessions, &st.eval)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionDetail {
    #[serde(flatten)]
    pub summary: SessionSummary,
    pub pass1_actor: Option<String>,
}

async fn session_detail(State(st): State<Arc<CurateState>>, Path(doc): Path<String>) -> ApiResult<SessionDetail> {
    let s = st.store.load(&doc).map_err(api_error)?;
    Ok(Json(SessionDetail {
        summary: summary(&s),
        pass1_actor: s.state().pass1_actor.clone(),
    }))
}

async fn session_log(State(st): State<Arc<CurateState>>, Path(doc): Path<String>) -> ApiResult<Vec<Event>> {
    Ok(Json(st.store.load(&doc).map_err(api_error)?.log().to_vec()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiffReport {
    pub histogram: BTreeMap<DiffBucket, usize>,
    pub pages: BTreeMap<String, ErrorBreakdown>,
}

async fn session_diff(State(st): State<Arc<CurateState>>, Path(doc): Path<String>) -> ApiResult<DiffReport> {
    let s = st.store.load(&doc).map_err(api_error)?;
    let pages = diff_pages(&s.base_labels(), &s.state().labels, &st.eval);
    let mut all = ErrorBreakdown::default();
    for b in pages.values() {
        all.extend(b.clone());
    }
    Ok(Json(DiffReport {
        histogram: all.histogram(),
        pages,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PageView {
    pub doc_id: String,
    pub page_id: String,
    pub width: f64,
    pub height: f64,
    pub sequence: u64,
    pub status: Status,
    pub labels: Vec<RegionLabel>,
}

fn page_of(s: &CurationSession, page_id: &str) -> Result<PageView, ApiError> {
    let base = s
        .page(page_id)
        .ok_or_else(|| api_error(CurateError::UnknownPage(page_id.to_string())))?;
    Ok(PageView {
        doc_id: s.doc_id().to_string(),
        page_id: page_id.to_string(),
        width: base.width,
        height: base.height,
        sequence: s.sequence(),
        status: s.status(),
        labels: s.labels(page_id).unwrap_or_default().to_vec(),
    })
}

async fn page_view(
    State(st): State<Arc<CurateState>>,
    Path((doc, page)): Path<(String, String)>,
) -> ApiResult<PageView> {
    let s = st.store.load(&doc).map_err(api_error)?;
    Ok(Json(page_of(&s, &page)?))
}

async fn page_raster(
    State(st): State<Arc<CurateState>>,
    Path((doc, page)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let s = st.store.load(&doc).map_err(api_error)?;
    page_of(&s, &page)?;
    let corpus = st
        .corpus
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "server has no corpus directory"))?;
    let manifest = CorpusManifest::load(corpus).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let entry = manifest
        .page(&page)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no raster for page {page:?}")))?;
    let bytes = std::fs::read(corpus.join(&entry.raster))
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EditRequest {
    pub page_id: String,
    pub op: EditOp,
    #[serde(default)]
    pub expected_sequence: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EditResponse {
    pub sequence: u64,
    pub page: PageView,
}

async fn post_edit(
    State(st): State<Arc<CurateState>>,
    Path(doc): Path<String>,
    headers: HeaderMap,
    Json(req): Json<EditRequest>,
) -> ApiResult<EditResponse> {
    let actor = actor(&headers)?;
    let _guard = st.write.lock().expect("writer lock");
    let action = Action::Edit {
        page_id: req.page_id.clone(),
        op: req.op,
    };
    let (event, session) = st
        .store
        .append(&doc, &actor, action, req.expected_sequence)
        .map_err(api_error)?;
    Ok(Json(EditResponse {
        sequence: event.sequence,
        page: page_of(&session, &req.page_id)?,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UndoRequest {
    pub sequence: u64,
    #[serde(default)]
    pub expected_sequence: Option<u64>,
}

async fn post_undo(
    State(st): State<Arc<CurateState>>,
    Path(doc): Path<String>,
    headers: HeaderMap,
    Json(req): Json<UndoRequest>,
) -> ApiResult<EditResponse> {
    let actor = actor(&headers)?;
    let _guard = st.write.lock().expect("writer lock");
    let (event, session) = st
        .store
        .undo(&doc, &actor, req.sequence, req.expected_sequence)
        .map_err(api_error)?;
    let Action::Edit { page_id, .. } = &event.action else {
        unreachable!("undo appends an edit")
    };
    Ok(Json(EditResponse {
        sequence: event.sequence,
        page: page_of(&session, page_id)?,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatusRequest {
    pub status: Status,
    #[serde(default)]
    pub expected_sequence: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatusResponse {
    pub sequence: u64,
    pub status: Status,
}

async fn post_status(
    State(st): State<Arc<CurateState>>,
    Path(doc): Path<String>,
    headers: HeaderMap,
    Json(req): Json<StatusRequest>,
) -> ApiResult<StatusResponse> {
    let actor = actor(&headers)?;
    let _guard = st.write.lock().expect("writer lock");
    let (event, session) = st
        .store
        .append(&doc, &actor, Action::Transition { status: req.status }, req.expected_sequence)
        .map_err(api_error)?;
    Ok(Json(StatusResponse {
        sequence: event.sequence,
        status: session.status(),
    }))
}
