//! Workbench HTTP API.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/api/acts` | | dialogue act catalog |
//! | GET | `/api/annotations` | | `{"annotations": [id, ...]}` |
//! | GET | `/api/annotations/{id}` | | annotation file, as stored |
//! | PUT | `/api/annotations/{id}` | annotation | validation report (warnings only) |
//! | POST | `/api/evaluate` | `{annotation_id, config?}` | evaluation report |
//! | POST | `/api/whatif` | `{annotation_id, nugget_id, kind, candidate?, config?}` | `{s_original, s_perturbed, delta, projected_ns}` |
//!
//! Errors are `{"error": {"code", "message"}, ...}` with 400 for invalid
//! input, 404 for unknown annotations, 422 for config violations and 502 for
//! scorer failures.

use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nugget_core::engine::{evaluate_turn, what_if, EngineError, WhatIf, WhatIfKind};
use nugget_core::io::{parse_annotation, report_timestamp, write_atomic, ConfigOverrides, EvaluationReport, IoError};
use nugget_core::model::{act_catalog, validate_annotation, AnnotatedTurn, CandidateSet, ScoringConfig, ValidationReport};
use nugget_core::scorer::Scorer;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

pub struct AppState {
    pub data_dir: PathBuf,
    /// Shared by all requests, cache included.
    pub scorer: Arc<dyn Scorer>,
    /// Config that request bodies override.
    pub base: ConfigOverrides,
}

type Shared = Arc<AppState>;

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/acts", get(acts))
        .route("/api/annotations", get(list_annotations))
        .route("/api/annotations/{id}", get(get_annotation).put(put_annotation))
        .route("/api/evaluate", post(evaluate))
        .route("/api/whatif", post(whatif))
        .with_state(Arc::new(state));
    match static_dir {
        Some(dir) => {
            let root = Arc::new(dir.to_path_buf());
            api.fallback(get(move |uri: Uri| static_asset(root.clone(), uri)))
        }
        None => api.route("/", get(|| async { "nugget-eval workbench API; no static assets configured\n" })),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// Serves a file under `root`; directories resolve to their `index.html`.
async fn static_asset(root: Arc<PathBuf>, uri: Uri) -> Response {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("no asset {}", uri.path())).into_response();
    let mut path = root.as_ref().clone();
    for part in uri.path().split('/').filter(|p| !p.is_empty()) {
        if part == ".." || part == "." || part.contains('\\') {
            return not_found();
        }
        path.push(part);
    }
    if tokio::fs::metadata(&path).await.map(|m| m.is_dir()).unwrap_or(false) {
        path.push("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => not_found(),
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    extra: Option<(&'static str, Value)>,
}

impl ApiError {
    fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), message: message.into(), extra: None }
    }

    fn with(mut self, key: &'static str, value: Value) -> Self {
        self.extra = Some((key, value));
        self
    }

    fn issues(status: StatusCode, report: ValidationReport) -> Self {
        let message = report.errors().map(|i| i.message.clone()).collect::<Vec<_>>().join("; ");
        ApiError::new(status, "VALIDATION_ERROR", message).with("issues", json!(report.issues))
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": { "code": self.code, "message": self.message } });
        if let Some((key, value)) = self.extra {
            body[key] = value;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Validation(report) => ApiError::issues(StatusCode::BAD_REQUEST, report),
            IoError::Parse { .. } => ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let code = e.code();
        match e {
            EngineError::InvalidAnnotation(report) => ApiError::issues(StatusCode::BAD_REQUEST, report),
            EngineError::InvalidConfig(report) => ApiError::issues(StatusCode::UNPROCESSABLE_ENTITY, report),
            EngineError::EmptyTurnPerturbation { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string()),
            EngineError::UnknownNugget(_) | EngineError::EmptyDraft(_) => ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string()),
            EngineError::ScorerFailure { perturbation, text, source } => {
                ApiError::new(StatusCode::BAD_GATEWAY, source.code(), source.to_string())
                    .with("perturbation", json!({ "label": perturbation, "text": text }))
            }
            EngineError::NonFiniteScore(_) => ApiError::new(StatusCode::BAD_GATEWAY, code, e.to_string()),
            EngineError::EmptyCandidates => ApiError::internal(e.to_string()),
        }
    }
}

fn annotation_path(state: &AppState, id: &str) -> Result<PathBuf, ApiError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if !ok {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "INVALID_ID", format!("annotation id {id:?} is not a plain file name")));
    }
    Ok(state.data_dir.join(format!("{id}.json")))
}

async fn read_annotation(state: &AppState, id: &str) -> Result<Vec<u8>, ApiError> {
    let path = annotation_path(state, id)?;
    tokio::fs::read(&path).await.map_err(|e| match e.kind() {
        ErrorKind::NotFound => ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("no annotation {id:?}")),
        _ => ApiError::internal(format!("{}: {e}", path.display())),
    })
}

async fn load(state: &AppState, id: &str) -> Result<(AnnotatedTurn, Vec<CandidateSet>), ApiError> {
    let bytes = read_annotation(state, id).await?;
    let text = std::str::from_utf8(&bytes).map_err(|e| ApiError::internal(format!("stored annotation {id:?}: {e}")))?;
    Ok(parse_annotation(text)?)
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "PARSE_ERROR", e.to_string()))
}

fn resolve_config(state: &AppState, overrides: ConfigOverrides) -> Result<ScoringConfig, ApiError> {
    state.base.clone().merge(overrides).resolve().map_err(|e| match e {
        IoError::Validation(report) => ApiError::issues(StatusCode::UNPROCESSABLE_ENTITY, report),
        other => ApiError::from(other),
    })
}

async fn acts() -> impl IntoResponse {
    Json(act_catalog())
}

async fn list_annotations(State(state): State<Shared>) -> Result<Json<Value>, ApiError> {
    let mut entries = tokio::fs::read_dir(&state.data_dir).await.map_err(|e| ApiError::internal(e.to_string()))?;
    let mut ids = Vec::new();
    while let Some(entry) = entries.next_entry().await.map_err(|e| ApiError::internal(e.to_string()))? {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix(".json") {
            if annotation_path(&state, id).is_ok() {
                ids.push(id.to_string());
            }
        }
    }
    ids.sort();
    Ok(Json(json!({ "annotations": ids })))
}

async fn get_annotation(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let bytes = read_annotation(&state, &id).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

/// Validates the body and stores it byte for byte.
async fn put_annotation(State(state): State<Shared>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Json<ValidationReport>, ApiError> {
    let path = annotation_path(&state, &id)?;
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "PARSE_ERROR", e.to_string()))?;
    let (turn, sets) = parse_annotation(text)?;
    let report = validate_annotation(&turn, &sets);
    tokio::task::spawn_blocking(move || write_atomic(&path, &body))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    annotation_id: String,
    #[serde(default)]
    config: ConfigOverrides,
}

async fn evaluate(State(state): State<Shared>, body: Bytes) -> Result<Json<EvaluationReport>, ApiError> {
    let req: EvaluateRequest = parse_body(&body)?;
    let cfg = resolve_config(&state, req.config)?;
    let (turn, sets) = load(&state, &req.annotation_id).await?;
    let scorer = state.scorer.clone();
    let report = tokio::task::spawn_blocking(move || {
        evaluate_turn(&turn, &sets, &cfg, scorer.as_ref()).map(|ev| EvaluationReport::new(&ev, &turn, report_timestamp()))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfRequest {
    annotation_id: String,
    nugget_id: String,
    kind: WhatIfKind,
    #[serde(default)]
    candidate: String,
    #[serde(default)]
    config: ConfigOverrides,
}

async fn whatif(State(state): State<Shared>, body: Bytes) -> Result<Json<WhatIf>, ApiError> {
    let req: WhatIfRequest = parse_body(&body)?;
    let cfg = resolve_config(&state, req.config)?;
    let (turn, sets) = load(&state, &req.annotation_id).await?;
    let scorer = state.scorer.clone();
    let result = tokio::task::spawn_blocking(move || {
        what_if(&turn, &sets, &req.nugget_id, req.kind, &req.candidate, &cfg, scorer.as_ref())
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(result))
}
