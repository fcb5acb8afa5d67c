//! JSON over HTTP. Every body, errors included, carries `schema_version`.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::RwLock;
use pronoun_audit::lexicon::GenderCategory;
use pronoun_audit::rewriter::{DecisionAction, ReviewDecision, SuggestionStatus};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::session::{ReviewSession, SuggestionFilter, DEFAULT_PAGE_SIZE};
use crate::{SessionError, SCHEMA_VERSION};

pub type SharedSession = Arc<RwLock<ReviewSession>>;

struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            SessionError::Validation(_) => (StatusCode::BAD_REQUEST, "validation"),
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::LogWrite(_) => (StatusCode::INTERNAL_SERVER_ERROR, "log_failure"),
            SessionError::CorruptLog { .. } | SessionError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "code": code, "message": self.0.to_string() },
        });
        (status, Json(body)).into_response()
    }
}

fn ok(mut body: Value) -> Json<Value> {
    if let Value::Object(map) = &mut body {
        let mut with_version = serde_json::Map::new();
        with_version.insert("schema_version".into(), SCHEMA_VERSION.into());
        with_version.extend(std::mem::take(map));
        *map = with_version;
    }
    Json(body)
}

fn invalid(message: impl Into<String>) -> ApiError {
    ApiError(SessionError::Validation(message.into()))
}

fn parse_number(params: &HashMap<String, String>, key: &str, default: usize) -> Result<usize, ApiError> {
    match params.get(key).filter(|v| !v.is_empty()) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| invalid(format!("{key} must be a positive integer, got `{v}`"))),
    }
}

fn parse_filter(params: &HashMap<String, String>) -> Result<SuggestionFilter, ApiError> {
    let nonempty = |key: &str| params.get(key).filter(|v| !v.is_empty());
    let status = nonempty("status")
        .map(|v| v.parse::<SuggestionStatus>().map_err(invalid))
        .transpose()?;
    let category = nonempty("category")
        .map(|v| GenderCategory::from_letter(v).ok_or_else(|| invalid(format!("unknown category `{v}` (expected M, F or A)"))))
        .transpose()?;
    Ok(SuggestionFilter {
        status,
        category,
        language: nonempty("lang").cloned(),
    })
}

async fn list(
    State(session): State<SharedSession>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let filter = parse_filter(&params)?;
    let page = parse_number(&params, "page", 1)?;
    let page_size = parse_number(&params, "page_size", DEFAULT_PAGE_SIZE)?;
    let page = session.read().list_suggestions(&filter, page, page_size)?;
    Ok(ok(json!({
        "page": page.page,
        "page_size": page.page_size,
        "total": page.total,
        "items": page.items,
    })))
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    action: DecisionAction,
    #[serde(default)]
    replacement: Option<String>,
    #[serde(default)]
    reviewer: Option<String>,
}

async fn decide(
    State(session): State<SharedSession>,
    Path(id): Path<String>,
    body: Result<Json<DecisionBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(body) = body.map_err(|e| invalid(e.body_text()))?;
    let decision = ReviewDecision {
        suggestion_id: id,
        action: body.action,
        replacement: body.replacement,
        reviewer: body.reviewer.unwrap_or_default(),
        timestamp: String::new(),
    };
    let mut guard = session.write();
    let suggestion = guard.record_decision(decision)?;
    Ok(ok(json!({ "suggestion": suggestion, "progress": guard.progress() })))
}

async fn progress(State(session): State<SharedSession>) -> Json<Value> {
    ok(json!({ "progress": session.read().progress() }))
}

async fn pair(State(session): State<SharedSession>, Path(pair_id): Path<String>) -> Result<Json<Value>, ApiError> {
    let guard = session.read();
    let pair = guard
        .pair(&pair_id)
        .ok_or_else(|| ApiError(SessionError::NotFound(pair_id.clone())))?;
    Ok(ok(json!({ "pair": pair, "suggestions": guard.pair_suggestions(&pair_id) })))
}

async fn export(State(session): State<SharedSession>) -> Result<Json<Value>, ApiError> {
    let (files, report) = session.read().export_templated()?;
    Ok(ok(json!({
        "files": files,
        "pairs_exported": report.pairs_exported,
        "substitutions": report.substitutions.len(),
        "errors": report.errors,
    })))
}

async fn health(State(session): State<SharedSession>) -> Json<Value> {
    let guard = session.read();
    ok(json!({
        "status": "ok",
        "corpus_digest": guard.corpus_digest(),
        "suggestions": guard.suggestions().len(),
    }))
}

async fn fallback() -> ApiError {
    ApiError(SessionError::NotFound("no such endpoint".into()))
}

pub fn router(session: SharedSession) -> Router {
    Router::new()
        .route("/api/v1/suggestions", get(list))
        .route("/api/v1/suggestions/{id}/decision", post(decide))
        .route("/api/v1/progress", get(progress))
        .route("/api/v1/pairs/{pair_id}", get(pair))
        .route("/api/v1/export", post(export))
        .route("/api/v1/health", get(health))
        .fallback(fallback)
        .with_state(session)
}

/// Serves until the process is stopped.
pub async fn serve(session: ReviewSession, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(RwLock::new(session)))).await
}
