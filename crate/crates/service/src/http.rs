//! HTTP API: image upload, job status, mission log and published results.

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;
use tracing::info;

use crate::error::IntakeError;
use crate::job::{valid_capture_time, JobSource, MissionEntry};
use crate::publish::{Publisher, REPORT_FILE};
use crate::store::{JobStore, NewJob};

/// Largest accepted image payload.
pub const MAX_IMAGE_BYTES: usize = 16 * 1024 * 1024;
/// Room for multipart framing and text fields on top of the image.
const FORM_OVERHEAD: usize = 64 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<JobStore>,
    pub publisher: Publisher,
}

pub fn router(state: AppState, console_dir: Option<&Path>) -> Router {
    let mut router = Router::new()
        .route(
            "/api/v1/images",
            axum::routing::post(upload).layer(DefaultBodyLimit::max(MAX_IMAGE_BYTES + FORM_OVERHEAD)),
        )
        .route("/api/v1/jobs/{id}", get(job_status).patch(update_job))
        .route("/api/v1/mission", get(mission))
        .route("/api/v1/health", get(health))
        .route("/results/{id}/{file}", get(result_file));
    if let Some(dir) = console_dir {
        router = router.nest_service("/console", ServeDir::new(dir));
    }
    router.with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn upload(State(state): State<AppState>, mut form: Multipart) -> Response {
    let mut image: Option<(String, Vec<u8>)> = None;
    let mut capture_time = None;
    let mut distance_m = None;
    let mut notes = None;

    loop {
        let field = match form.next_field().await {
            Ok(Some(field)) => field,
            Ok(None) => break,
            Err(e) => return error(e.status(), e.body_text()),
        };
        let name = field.name().unwrap_or_default().to_string();
        if let Some(file_name) = field.file_name().map(str::to_string) {
            if image.is_some() {
                return error(StatusCode::BAD_REQUEST, "more than one image part");
            }
            let data = match field.bytes().await {
                Ok(data) => data,
                Err(e) => return error(e.status(), e.body_text()),
            };
            if data.len() > MAX_IMAGE_BYTES {
                return error(StatusCode::PAYLOAD_TOO_LARGE, "image exceeds 16 MiB");
            }
            // browsers may send a client-side path; only the final component counts
            let base = Path::new(&file_name)
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            image = Some((base, data.to_vec()));
            continue;
        }
        let text = match field.text().await {
            Ok(text) => text.trim().to_string(),
            Err(e) => return error(e.status(), e.body_text()),
        };
        if text.is_empty() {
            continue;
        }
        match name.as_str() {
            "capture_time" => {
                if !valid_capture_time(&text) {
                    return error(StatusCode::BAD_REQUEST, format!("capture_time `{text}` is not ISO-8601"));
                }
                capture_time = Some(text);
            }
            "distance_m" => match text.parse::<f64>() {
                Ok(d) if d.is_finite() && d >= 0.0 => distance_m = Some(d),
                _ => return error(StatusCode::BAD_REQUEST, format!("distance_m `{text}` is not a distance")),
            },
            "notes" => notes = Some(text),
            _ => {}
        }
    }

    let Some((filename, bytes)) = image else {
        return error(StatusCode::BAD_REQUEST, "request has no image file part");
    };
    let new = NewJob {
        source: JobSource::Upload,
        filename,
        capture_time,
        distance_m,
        notes,
        fingerprint: None,
        bytes,
    };
    let store = state.store.clone();
    let result = tokio::task::spawn_blocking(move || store.submit(new))
        .await
        .unwrap_or_else(|e| Err(IntakeError::Spool(e.to_string())));
    match result {
        Ok(job) => {
            info!(job_id = %job.job_id, file = %job.filename, "queued from upload");
            (
                StatusCode::ACCEPTED,
                Json(json!({
                    "job_id": job.job_id,
                    "status": job.status,
                    "received_at": job.received_at,
                })),
            )
                .into_response()
        }
        Err(e @ IntakeError::PrefixMismatch(_)) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        Err(e @ IntakeError::ShuttingDown) => error(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn job_status(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Response {
    match state.store.get(&id) {
        Some(job) => Json(MissionEntry::from_job(&job)).into_response(),
        None => error(StatusCode::NOT_FOUND, "no such job"),
    }
}

#[derive(Debug, Deserialize)]
struct MetadataUpdate {
    notes: Option<String>,
    distance_m: Option<f64>,
}

/// Operator annotations; absent fields keep their current value.
async fn update_job(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(update): Json<MetadataUpdate>,
) -> Response {
    let Some(current) = state.store.get(&id) else {
        return error(StatusCode::NOT_FOUND, "no such job");
    };
    if matches!(update.distance_m, Some(d) if !d.is_finite() || d < 0.0) {
        return error(StatusCode::BAD_REQUEST, "distance_m must be a non-negative number");
    }
    let notes = update.notes.or(current.notes);
    let distance_m = update.distance_m.or(current.distance_m);
    match state.store.update_metadata(&id, notes, distance_m) {
        Some(job) => Json(MissionEntry::from_job(&job)).into_response(),
        None => error(StatusCode::NOT_FOUND, "no such job"),
    }
}

async fn mission(State(state): State<AppState>) -> Response {
    Json(state.store.mission_log()).into_response()
}

async fn health(State(state): State<AppState>) -> Response {
    Json(json!({
        "status": "ok",
        "queued": state.store.queued(),
        "processing": state.store.processing(),
    }))
    .into_response()
}

async fn result_file(State(state): State<AppState>, UrlPath((id, file)): UrlPath<(String, String)>) -> Response {
    let Some(path) = state.publisher.artifact(&id, &file) else {
        return error(StatusCode::NOT_FOUND, "result not published");
    };
    let content_type = if file == REPORT_FILE { "application/json" } else { "image/png" };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type)], Body::from(bytes)).into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, "result not published"),
    }
}
