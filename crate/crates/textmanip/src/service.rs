//! HTTP API for the annotation study.
//!
//! | method | path                   | body / query                               |
//! |--------|------------------------|--------------------------------------------|
//! | GET    | `/api/tasks/next`      | `?annotator=ID&stage=N`                    |
//! | POST   | `/api/labels`          | `{task_id, annotator_id, stage, value}`    |
//! | POST   | `/api/skip`            | `{task_id, annotator_id, stage}`           |
//! | GET    | `/api/progress`        | optional `?annotator=ID`                   |
//! | GET    | `/api/agreement`       | optional `?a=ID&b=ID`                      |
//! | GET    | `/api/veracity_stats`  |                                            |
//!
//! Errors are `{"error": message}` with a 4xx/5xx status. Task payloads
//! carry only what an annotator may see: never the gold origin, and never
//! the manipulated tag.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use textmanip_core::annotation::{
    AnnotationError, AnnotationLabel, AnnotationTask, AnnotatorProgress, Entry, LabelValue, SkipMark, Stage,
};

use crate::store::{LabelStore, StoreError};

pub struct AppState {
    store: RwLock<LabelStore>,
    pair: Option<(String, String)>,
    clock: fn() -> u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl AppState {
    /// `pair` fixes which two annotators the agreement endpoint compares;
    /// without it the two smallest annotator ids are used.
    pub fn new(store: LabelStore, pair: Option<(String, String)>) -> Self {
        Self { store: RwLock::new(store), pair, clock: unix_now }
    }

    pub fn with_clock(mut self, clock: fn() -> u64) -> Self {
        self.clock = clock;
        self
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::Rejected(AnnotationError::UnknownTask(_)) => StatusCode::NOT_FOUND,
            StoreError::Rejected(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn bad_request(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.to_string())
}

fn poisoned<T>(_: T) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, "label store is unavailable".into())
}

#[derive(Serialize)]
struct TaskPayload<'a> {
    task_id: &'a str,
    stage: Stage,
    shown_text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pair_original: Option<&'a str>,
}

impl<'a> From<&'a AnnotationTask> for TaskPayload<'a> {
    fn from(t: &'a AnnotationTask) -> Self {
        Self { task_id: &t.task_id, stage: t.stage, shown_text: &t.shown_text, pair_original: t.pair_original.as_deref() }
    }
}

fn parse_stage(raw: Option<&str>) -> Result<Stage, ApiError> {
    let raw = raw.ok_or_else(|| bad_request("missing `stage`"))?;
    let n: u8 = raw.parse().map_err(|_| bad_request(format!("stage must be 1 or 2, got `{raw}`")))?;
    Stage::try_from(n).map_err(bad_request)
}

fn required<'a>(value: &'a Option<String>, name: &str) -> Result<&'a str, ApiError> {
    match value.as_deref() {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(bad_request(format!("missing `{name}`"))),
    }
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: Option<String>,
    stage: Option<String>,
}

async fn next_task(State(s): State<Arc<AppState>>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    let annotator = required(&q.annotator, "annotator")?;
    let stage = parse_stage(q.stage.as_deref())?;
    let store = s.store.read().map_err(poisoned)?;
    Ok(match store.book().next_task(annotator, stage) {
        Some(t) => Json(TaskPayload::from(t)).into_response(),
        None => Json(json!({ "status": "done" })).into_response(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRequest {
    task_id: String,
    annotator_id: String,
    stage: Stage,
    value: LabelValue,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SkipRequest {
    task_id: String,
    annotator_id: String,
    stage: Stage,
}

fn record(s: &AppState, entry: Entry) -> Result<Response, ApiError> {
    let ack = s.store.write().map_err(poisoned)?.record(entry)?;
    Ok(Json(json!({ "status": "stored", "replaced": ack.replaced })).into_response())
}

async fn post_label(State(s): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let r: LabelRequest = serde_json::from_slice(&body).map_err(bad_request)?;
    let label = AnnotationLabel {
        task_id: r.task_id,
        annotator_id: r.annotator_id,
        stage: r.stage,
        value: r.value,
        timestamp: (s.clock)(),
    };
    record(&s, Entry::Label(label))
}

async fn post_skip(State(s): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let r: SkipRequest = serde_json::from_slice(&body).map_err(bad_request)?;
    let skip = SkipMark { task_id: r.task_id, annotator_id: r.annotator_id, stage: r.stage, timestamp: (s.clock)() };
    record(&s, Entry::Skip(skip))
}

#[derive(Deserialize)]
struct ProgressQuery {
    annotator: Option<String>,
}

#[derive(Serialize)]
struct ProgressReport {
    tasks: BTreeMap<String, usize>,
    annotators: BTreeMap<String, AnnotatorProgress>,
}

async fn progress(State(s): State<Arc<AppState>>, Query(q): Query<ProgressQuery>) -> Result<Response, ApiError> {
    let store = s.store.read().map_err(poisoned)?;
    let book = store.book();
    let mut tasks = BTreeMap::new();
    for t in book.tasks() {
        *tasks.entry(format!("stage{}", t.stage)).or_insert(0) += 1;
    }
    let mut ids: Vec<String> = book.annotators().into_iter().map(String::from).collect();
    if let Some(a) = q.annotator.filter(|a| !a.is_empty()) {
        ids.push(a);
    }
    let annotators = ids.into_iter().map(|id| (id.clone(), book.progress(&id))).collect();
    Ok(Json(ProgressReport { tasks, annotators }).into_response())
}

#[derive(Deserialize)]
struct PairQuery {
    a: Option<String>,
    b: Option<String>,
}

async fn agreement(State(s): State<Arc<AppState>>, Query(q): Query<PairQuery>) -> Result<Response, ApiError> {
    let store = s.store.read().map_err(poisoned)?;
    let book = store.book();
    let pair = match (q.a, q.b) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => s.pair.clone().or_else(|| {
            let mut ids = book.annotators().into_iter();
            Some((ids.next()?.to_string(), ids.next()?.to_string()))
        }),
        _ => return Err(bad_request("give both `a` and `b` or neither")),
    };
    Ok(match pair {
        Some((a, b)) => Json(book.agreement(&a, &b)).into_response(),
        None => Json(json!({
            "status": "insufficient_data",
            "detail": "agreement needs labels from two annotators",
        }))
        .into_response(),
    })
}

async fn veracity_stats(State(s): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let store = s.store.read().map_err(poisoned)?;
    let stats = store.book().veracity_stats().map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(stats).into_response())
}

async fn not_found() -> ApiError {
    ApiError(StatusCode::NOT_FOUND, "no such endpoint".into())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/labels", post(post_label))
        .route("/api/skip", post(post_skip))
        .route("/api/progress", get(progress))
        .route("/api/agreement", get(agreement))
        .route("/api/veracity_stats", get(veracity_stats))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until interrupted with Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
