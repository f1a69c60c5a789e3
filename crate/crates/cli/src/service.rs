//! HTTP API for coders.
//!
//! | method | path | |
//! |---|---|---|
//! | GET  | `/api/sessions` | list sessions |
//! | GET  | `/api/sessions/{sid}/tasks` | per-task coded/skipped/uncoded status |
//! | GET  | `/api/sessions/{sid}/tasks/{index}` | one task (0-based index) |
//! | GET  | `/api/sessions/{sid}/next` | first uncoded task, `task: null` when done |
//! | POST | `/api/sessions/{sid}/responses` | `{"task_id", "choice": n \| "skip"}` |
//! | GET  | `/api/sessions/{sid}/progress` | counters |
//! | POST | `/api/sessions/{sid}/close` | operator only |
//! | GET  | `/api/sessions/{sid}/metrics` | only once closed |
//!
//! Coders authenticate with `X-Coder-Token`, the operator with
//! `X-Operator-Token`. Errors are `{"error": code, "message": text}`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use topiclab::Choice;

use crate::error::Result;
use crate::session::{Session, SessionsFile, SubmitError};

pub const CODER_HEADER: &str = "x-coder-token";
pub const OPERATOR_HEADER: &str = "x-operator-token";

pub struct AppState {
    sessions: BTreeMap<String, Arc<Session>>,
}

impl AppState {
    pub fn new(sessions: Vec<Session>) -> Self {
        AppState { sessions: sessions.into_iter().map(|s| (s.id().to_owned(), Arc::new(s))).collect() }
    }

    /// Opens every session in a sessions file; returns per-session load reports.
    pub fn from_file(file: &SessionsFile) -> Result<(Self, Vec<(String, crate::store::LoadReport)>)> {
        let mut sessions = Vec::new();
        let mut reports = Vec::new();
        for spec in &file.sessions {
            let (s, r) = Session::open(spec.clone())?;
            reports.push((s.id().to_owned(), r));
            sessions.push(s);
        }
        Ok((AppState::new(sessions), reports))
    }
}

type Shared = Arc<AppState>;

struct ApiError(StatusCode, &'static str, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1, "message": self.2}))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn session(state: &AppState, sid: &str) -> ApiResult<Arc<Session>> {
    state
        .sessions
        .get(sid)
        .cloned()
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{sid}`")))
}

fn header<'a>(headers: &'a HeaderMap, name: &str) -> Option<&'a str> {
    headers.get(name).and_then(|v| v.to_str().ok())
}

fn coder(s: &Session, headers: &HeaderMap) -> ApiResult<String> {
    header(headers, CODER_HEADER)
        .and_then(|t| s.coder_for_token(t))
        .map(str::to_owned)
        .ok_or_else(|| ApiError(StatusCode::UNAUTHORIZED, "unauthorized", format!("missing or unknown {CODER_HEADER}")))
}

async fn list_sessions(State(state): State<Shared>) -> impl IntoResponse {
    let list: Vec<_> = state
        .sessions
        .values()
        .map(|s| json!({"id": s.id(), "n_tasks": s.n_tasks(), "closed": s.is_closed()}))
        .collect();
    Json(json!({ "sessions": list }))
}

async fn task_list(State(state): State<Shared>, Path(sid): Path<String>, headers: HeaderMap) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &sid)?;
    let c = coder(&s, &headers)?;
    let tasks: Vec<_> = s
        .statuses(&c)
        .into_iter()
        .map(|(i, id, kind, status)| json!({"index": i, "task_id": id, "kind": kind, "status": status}))
        .collect();
    Ok(Json(json!({"coder_id": c, "progress": s.progress(&c), "tasks": tasks})))
}

async fn task_at(State(state): State<Shared>, Path((sid, index)): Path<(String, usize)>, headers: HeaderMap) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &sid)?;
    let c = coder(&s, &headers)?;
    s.view(&c, index)
        .map(Json)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, "unknown_task", format!("no task at index {index}")))
}

async fn next_task(State(state): State<Shared>, Path(sid): Path<String>, headers: HeaderMap) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &sid)?;
    let c = coder(&s, &headers)?;
    let task = s.next_uncoded(&c);
    let progress = task.as_ref().map_or_else(|| s.progress(&c), |t| t.progress);
    Ok(Json(json!({"progress": progress, "task": task})))
}

async fn progress(State(state): State<Shared>, Path(sid): Path<String>, headers: HeaderMap) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &sid)?;
    let c = coder(&s, &headers)?;
    Ok(Json(s.progress(&c)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    task_id: String,
    choice: Choice,
    /// Optional; must match the token's coder when present.
    coder_id: Option<String>,
}

async fn submit(State(state): State<Shared>, Path(sid): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &sid)?;
    let c = coder(&s, &headers)?;
    let sub: Submission = serde_json::from_slice(&body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, "malformed", e.to_string()))?;
    if sub.coder_id.as_deref().is_some_and(|id| id != c) {
        return Err(ApiError(StatusCode::BAD_REQUEST, "malformed", "coder_id does not match the token".into()));
    }
    let stored = tokio::task::spawn_blocking(move || s.submit(&c, &sub.task_id, sub.choice))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(|e| match e {
            SubmitError::UnknownTask(t) => ApiError(StatusCode::NOT_FOUND, "unknown_task", format!("no task `{t}`")),
            SubmitError::InvalidChoice(m) => ApiError(StatusCode::BAD_REQUEST, "invalid_choice", m),
            SubmitError::Duplicate(m) => ApiError(StatusCode::CONFLICT, "duplicate_response", m),
            SubmitError::Closed => ApiError(StatusCode::CONFLICT, "session_closed", "the session is closed".into()),
            SubmitError::Io(m) => ApiError(StatusCode::INTERNAL_SERVER_ERROR, "io", m),
        })?;
    Ok((StatusCode::CREATED, Json(stored)))
}

async fn close(State(state): State<Shared>, Path(sid): Path<String>, headers: HeaderMap) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &sid)?;
    if !header(&headers, OPERATOR_HEADER).is_some_and(|t| s.is_operator(t)) {
        return Err(ApiError(StatusCode::FORBIDDEN, "forbidden", format!("missing or wrong {OPERATOR_HEADER}")));
    }
    s.close().map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()))?;
    Ok(Json(json!({"id": s.id(), "closed": true})))
}

async fn metrics(State(state): State<Shared>, Path(sid): Path<String>) -> ApiResult<impl IntoResponse> {
    let s = session(&state, &sid)?;
    if !s.is_closed() {
        return Err(ApiError(StatusCode::CONFLICT, "session_open", "metrics are available once the session is closed".into()));
    }
    s.report().map(Json).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.kind(), e.to_string()))
}

const INDEX_HTML: &str = r#"<!doctype html>
<html lang="en"><head><meta charset="utf-8"><title>topiclab coding</title></head>
<body>
<h1>topiclab coding service</h1>
<p>The coder interface talks to the JSON API under <code>/api/sessions</code>.</p>
</body></html>
"#;

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn not_found() -> ApiError {
    ApiError(StatusCode::NOT_FOUND, "not_found", "no such endpoint".into())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/sessions", get(list_sessions))
        .route("/api/sessions/{sid}/tasks", get(task_list))
        .route("/api/sessions/{sid}/tasks/{index}", get(task_at))
        .route("/api/sessions/{sid}/next", get(next_task))
        .route("/api/sessions/{sid}/responses", post(submit))
        .route("/api/sessions/{sid}/progress", get(progress))
        .route("/api/sessions/{sid}/close", post(close))
        .route("/api/sessions/{sid}/metrics", get(metrics))
        .fallback(not_found)
        .with_state(Arc::new(state))
}

/// Serves until the listener fails or ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await
}
