//! JSON over HTTP for the annotation dashboard. Reads go straight to the
//! views; every POST becomes an event.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;

use super::{BaseCandidate, Event, HubError, HubStore, NewAnnotation};
use crate::leanrun::Validator;

pub const EDITOR_HEADER: &str = "x-editor";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<HubStore>,
    pub validator: Arc<dyn Validator>,
}

struct ApiError(HubError);

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            HubError::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            HubError::NotFound(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn not_found(what: String) -> ApiError {
    ApiError(HubError::NotFound(what))
}

async fn list_problems(State(s): State<AppState>) -> impl IntoResponse {
    Json(s.store.problems())
}

async fn get_problem(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    s.store.problem_detail(&id).map(Json).ok_or_else(|| not_found(format!("problem {id}")))
}

async fn get_candidates(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    if s.store.problem(&id).is_none() {
        return Err(not_found(format!("problem {id}")));
    }
    Ok(Json(s.store.candidates(&id)))
}

async fn get_summary(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    s.store.summary(&id).map(Json).ok_or_else(|| not_found(format!("summary for {id}")))
}

#[derive(Deserialize)]
struct CompileBody {
    code: String,
}

async fn request_compile(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<CompileBody>,
) -> ApiResult<impl IntoResponse> {
    if s.store.problem(&id).is_none() {
        return Err(not_found(format!("problem {id}")));
    }
    let request_id = uuid::Uuid::new_v4().to_string();
    s.store.append(Event::CompileRequested {
        request_id: request_id.clone(),
        problem_id: id,
        code: body.code.clone(),
    })?;
    let rid = request_id.clone();
    // the runner's own pool bounds how many of these compile at once
    tokio::task::spawn_blocking(move || {
        let result = s.validator.validate(&body.code);
        if let Err(e) = s.store.append(Event::CompileCompleted { request_id: rid, result }) {
            tracing::error!(error = %e, "recording a compile result failed");
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "request_id": request_id }))))
}

async fn get_compile(State(s): State<AppState>, Path(rid): Path<String>) -> ApiResult<Response> {
    let job = s.store.compile(&rid).ok_or_else(|| not_found(format!("compile request {rid}")))?;
    Ok(match job.result {
        Some(result) => (StatusCode::OK, Json(result)).into_response(),
        None => (StatusCode::ACCEPTED, Json(json!({ "request_id": rid, "status": "pending" }))).into_response(),
    })
}

#[derive(Deserialize)]
struct AnnotationBody {
    final_code: String,
    #[serde(default)]
    base_candidate: Option<BaseCandidate>,
    #[serde(default)]
    editor: Option<String>,
}

#[derive(Deserialize, Default)]
struct VerifyBody {
    #[serde(default)]
    editor: Option<String>,
}

/// The body's editor wins over the header.
fn editor_of(body: Option<String>, headers: &HeaderMap) -> String {
    body.filter(|e| !e.trim().is_empty())
        .or_else(|| headers.get(EDITOR_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string))
        .unwrap_or_default()
}

async fn save_annotation(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<AnnotationBody>,
) -> ApiResult<impl IntoResponse> {
    if s.store.problem(&id).is_none() {
        return Err(not_found(format!("problem {id}")));
    }
    let a = s.store.save_annotation(NewAnnotation {
        problem_id: id,
        final_code: body.final_code,
        base_candidate: body.base_candidate,
        editor: editor_of(body.editor, &headers),
    })?;
    Ok((StatusCode::CREATED, Json(a)))
}

async fn list_annotations(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    if s.store.problem(&id).is_none() {
        return Err(not_found(format!("problem {id}")));
    }
    Ok(Json(s.store.annotations_for(&id)))
}

async fn get_annotation(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<impl IntoResponse> {
    s.store.annotation(id).map(Json).ok_or_else(|| not_found(format!("annotation {id}")))
}

async fn verify_annotation(
    State(s): State<AppState>,
    Path(id): Path<u64>,
    headers: HeaderMap,
    body: Option<Json<VerifyBody>>,
) -> ApiResult<impl IntoResponse> {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    Ok(Json(s.store.verify_annotation(id, &editor_of(body.editor, &headers))?))
}

async fn export_annotations(State(s): State<AppState>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], s.store.export_verified())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/problems", get(list_problems))
        .route("/problems/{id}", get(get_problem))
        .route("/problems/{id}/candidates", get(get_candidates))
        .route("/problems/{id}/summary", get(get_summary))
        .route("/problems/{id}/compile", post(request_compile))
        .route("/problems/{id}/annotations", post(save_annotation).get(list_annotations))
        .route("/compile/{rid}", get(get_compile))
        .route("/annotations/{id}", get(get_annotation))
        .route("/annotations/{id}/verify", post(verify_annotation))
        .route("/export/annotations", get(export_annotations))
        .with_state(state)
}

/// Binds the listening socket; a port already in use is an error here, not
/// later.
pub async fn bind(addr: SocketAddr) -> Result<TcpListener, HubError> {
    TcpListener::bind(addr).await.map_err(|source| HubError::Bind {
        addr: addr.to_string(),
        source,
    })
}

pub async fn serve(listener: TcpListener, state: AppState) -> Result<(), HubError> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}
