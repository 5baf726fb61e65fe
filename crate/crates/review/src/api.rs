//! JSON routes over a shared [`ReviewStore`].

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use conceptforge::evaluation::Judgment;
use serde::Serialize;
use tower_http::services::ServeDir;

use crate::store::{ReviewError, ReviewStore};

pub const CONCEPT_SEARCH_LIMIT: usize = 20;

pub type SharedStore = Arc<RwLock<ReviewStore>>;

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    error: &'static str,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status,
            error,
            detail: detail.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let (status, code) = match &e {
            ReviewError::Duplicate { .. } => (StatusCode::CONFLICT, "duplicate_judgment"),
            ReviewError::UnknownConcept(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_concept"),
            ReviewError::UnknownDocument(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_document"),
            ReviewError::NotSuggested { .. } | ReviewError::SuggestedAsMissing { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "unjudgeable_reference")
            }
            ReviewError::Incomplete { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "incomplete_judgments"),
            ReviewError::EmptyBatch | ReviewError::EmptyAnnotator => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_judgments")
            }
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        ApiError::new(status, code, e.to_string())
    }
}

fn lock_poisoned() -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "store lock poisoned")
}

/// API routes; with `static_dir`, everything else is served from it.
pub fn router(store: SharedStore, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/judgments", post(post_judgments))
        .route("/api/concepts", get(concepts))
        .route("/api/metrics", get(metrics))
        .route("/api/progress", get(progress))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") }),
    }
}

async fn next_task(
    State(store): State<SharedStore>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let annotator = q
        .get("annotator")
        .map(|a| a.trim())
        .filter(|a| !a.is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing_annotator", "annotator query parameter required"))?;
    let mut store = store.write().map_err(|_| lock_poisoned())?;
    Ok(match store.claim_next(annotator) {
        Some(task) => Json(task).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Serialize)]
struct Accepted {
    accepted: usize,
}

async fn post_judgments(State(store): State<SharedStore>, body: Bytes) -> Result<Response, ApiError> {
    let batch: Vec<Judgment> = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))?;
    let mut store = store.write().map_err(|_| lock_poisoned())?;
    let accepted = store.submit(batch)?;
    Ok((StatusCode::CREATED, Json(Accepted { accepted })).into_response())
}

async fn concepts(
    State(store): State<SharedStore>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let prefix = q
        .get("q")
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "empty_query", "q must be non-empty"))?;
    let store = store.read().map_err(|_| lock_poisoned())?;
    Ok(Json(store.search_concepts(prefix, CONCEPT_SEARCH_LIMIT)).into_response())
}

async fn metrics(State(store): State<SharedStore>) -> Result<Response, ApiError> {
    let store = store.read().map_err(|_| lock_poisoned())?;
    match store.metrics()? {
        Some(summary) => Ok(Json(summary).into_response()),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, "no_completed_tasks", "no task has been completed yet")),
    }
}

async fn progress(State(store): State<SharedStore>) -> Result<Response, ApiError> {
    let store = store.read().map_err(|_| lock_poisoned())?;
    Ok(Json(store.progress()).into_response())
}
