//! Read-mostly HTTP access to a report directory.
//!
//! Reads clone from a shared snapshot under a read lock; label writes take
//! the write lock, append to the audit log and rewrite `report.json`
//! atomically before releasing it.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::Serialize;
use tokio::sync::RwLock;

use super::{LabelRequest, PipelineError, ReportBundle, Result};

#[derive(Clone)]
pub struct AppState {
    report: Arc<RwLock<ReportBundle>>,
    dir: Arc<PathBuf>,
}

impl AppState {
    pub fn new(report: ReportBundle, dir: impl Into<PathBuf>) -> Self {
        Self {
            report: Arc::new(RwLock::new(report)),
            dir: Arc::new(dir.into()),
        }
    }

    /// Loads `report.json` from a report directory.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("report.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PipelineError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self::new(ReportBundle::from_json(&text)?, dir))
    }

    pub async fn snapshot(&self) -> ReportBundle {
        self.report.read().await.clone()
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/report", get(get_report))
        .route("/api/slices", get(list_slices))
        .route("/api/slices/{id}/image", get(slice_image))
        .route("/api/slices/{id}/profile", get(slice_profile))
        .route("/api/voids", get(list_voids))
        .route("/api/voids/{id}", get(get_void))
        .route("/api/voids/{id}/label", post(label_void))
        .route("/api/overlay", get(overlay))
        .with_state(state)
}

async fn get_report(State(s): State<AppState>) -> Response {
    Json(s.snapshot().await).into_response()
}

async fn list_slices(State(s): State<AppState>) -> Response {
    Json(s.report.read().await.slices.clone()).into_response()
}

async fn list_voids(State(s): State<AppState>) -> Response {
    Json(s.report.read().await.voids.clone()).into_response()
}

async fn overlay(State(s): State<AppState>) -> Response {
    Json(s.report.read().await.overlay()).into_response()
}

async fn get_void(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    let report = s.report.read().await;
    match id.parse::<u32>().ok().and_then(|id| report.void(id)) {
        Some(v) => Json(v.clone()).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no void `{id}`")),
    }
}

async fn slice_file(s: &AppState, id: &str, pick: fn(&super::SliceEntry) -> &str, content_type: &'static str) -> Response {
    let rel = {
        let report = s.report.read().await;
        match report.slice(id) {
            Some(entry) => pick(entry).to_string(),
            None => return error(StatusCode::NOT_FOUND, format!("no slice `{id}`")),
        }
    };
    match tokio::fs::read(s.dir.join(&rel)).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type)], bytes).into_response(),
        Err(e) => error(StatusCode::NOT_FOUND, format!("slice `{id}` file {rel}: {e}")),
    }
}

async fn slice_image(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    slice_file(&s, &id, |e| &e.image, "image/x-portable-pixmap").await
}

async fn slice_profile(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    slice_file(&s, &id, |e| &e.profile, "application/json").await
}

async fn label_void(State(s): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> Response {
    let Ok(id) = id.parse::<u32>() else {
        return error(StatusCode::BAD_REQUEST, format!("`{id}` is not a void id"));
    };
    let request: LabelRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed label: {e}")),
    };
    let mut report = s.report.write().await;
    let mut next = report.clone();
    let updated = match next.apply_label(id, request, Utc::now()) {
        Ok(v) => v.clone(),
        Err(PipelineError::UnknownVoid(id)) => return error(StatusCode::CONFLICT, format!("void {id} is not in this report")),
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    if let Err(e) = persist(&s.dir, &next).await {
        return error(StatusCode::INTERNAL_SERVER_ERROR, format!("saving report: {e}"));
    }
    *report = next;
    Json(updated).into_response()
}

async fn persist(dir: &Path, report: &ReportBundle) -> std::io::Result<()> {
    let tmp = dir.join(format!(".report.json.{}", std::process::id()));
    tokio::fs::write(&tmp, report.to_json()).await?;
    tokio::fs::rename(&tmp, dir.join("report.json")).await
}

/// Serves `dir` on `addr` until Ctrl-C.
pub async fn serve(dir: impl AsRef<Path>, addr: SocketAddr) -> Result<()> {
    let state = AppState::load(dir)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| PipelineError::Runtime(format!("cannot bind {addr}: {e}")))?;
    log::info!("serving on http://{}", listener.local_addr().map_err(|e| PipelineError::Runtime(e.to_string()))?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| PipelineError::Runtime(e.to_string()))
}
