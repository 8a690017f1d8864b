//! HTTP+JSON surface over a workspace store.
//!
//! Workspace responses carry the version as an `ETag`; `PUT` takes the
//! version it was based on in `If-Match` and answers 409 when the stored
//! file has moved on. Errors are `{code, message, element?}`.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use omnigraph_core::codegen::{load_genplan, run_genplan};
use omnigraph_core::graph::{deserialize, serialize};
use omnigraph_core::metamodel::{load_metamodel, palette, validate};
use omnigraph_core::query::{query_str, QueryError};
use omnigraph_core::store::{Store, StoreError};

pub const DEFAULT_PORT: u16 = 8400;
pub const ROOT_ENV: &str = "HGOS_ROOT";
pub const DEFAULT_PLAN: &str = "genplan";

/// `--root` wins over `HGOS_ROOT`, which wins over the current directory.
pub fn resolve_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub element: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
            element: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        let (status, code) = match &e {
            StoreError::NotFound(_) => (StatusCode::NOT_FOUND, "NOT_FOUND"),
            StoreError::Conflict { .. } => (StatusCode::CONFLICT, "CONFLICT"),
            StoreError::CaseCollision { .. } => (StatusCode::CONFLICT, "CASE_COLLISION"),
            StoreError::Integrity { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "INTEGRITY"),
            StoreError::IdMismatch { .. } => (StatusCode::BAD_REQUEST, "ID_MISMATCH"),
            StoreError::InvalidId(_) => (StatusCode::BAD_REQUEST, "BAD_ID"),
            StoreError::MetaModel { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "METAMODEL"),
            StoreError::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "IO"),
        };
        ApiError {
            status,
            code,
            element: e.element(),
            message: e.to_string(),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
struct AppState {
    store: Arc<Store>,
}

/// Runs store work off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?
}

fn etag(version: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{version}\"")).expect("ascii")
}

fn with_version(version: u64, body: impl IntoResponse) -> Response {
    let mut resp = body.into_response();
    resp.headers_mut().insert(header::ETAG, etag(version));
    resp
}

pub fn router(store: Store) -> Router {
    let state = AppState { store: Arc::new(store) };
    Router::new()
        .route("/workspaces", get(list_workspaces))
        .route("/workspaces/{id}", get(get_workspace).put(put_workspace))
        .route("/workspaces/{id}/validate", post(validate_workspace))
        .route("/workspaces/{id}/query", post(query_workspace))
        .route("/workspaces/{id}/generate", post(generate))
        .route("/workspaces/{id}/navigate", post(navigate))
        .route("/metamodels", get(list_metamodels))
        .route("/metamodels/{id}", get(get_metamodel))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "ROUTE", "no such route") })
        .with_state(state)
}

/// Binds and serves until interrupted.
pub async fn serve(root: PathBuf, port: u16) -> std::io::Result<()> {
    let store = Store::open(&root).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], port))).await?;
    eprintln!("serving {} on http://{}", root.display(), listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn list_workspaces(State(s): State<AppState>) -> ApiResult<Response> {
    let list = blocking(move || Ok(s.store.list()?)).await?;
    Ok(Json(list).into_response())
}

async fn get_workspace(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let ws = blocking(move || Ok(s.store.load(&id)?)).await?;
    let version = ws.version();
    let body = ([(header::CONTENT_TYPE, "application/json")], serialize(&ws));
    Ok(with_version(version, body))
}

fn if_match(headers: &HeaderMap) -> ApiResult<u64> {
    let Some(value) = headers.get(header::IF_MATCH) else {
        return Ok(0);
    };
    value
        .to_str()
        .ok()
        .map(|v| v.trim().trim_start_matches("W/").trim_matches('"'))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "BAD_IF_MATCH", "If-Match must be a version number"))
}

async fn put_workspace(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let expected = if_match(&headers)?;
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_BODY", e.to_string()))?;
    let ws = deserialize(text).map_err(|e| ApiError {
        status: StatusCode::UNPROCESSABLE_ENTITY,
        code: "INTEGRITY",
        element: e.element(),
        message: e.to_string(),
    })?;
    let version = blocking(move || Ok(s.store.save(&id, &ws, expected)?)).await?;
    Ok(with_version(version, Json(json!({ "version": version }))))
}

async fn validate_workspace(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let (version, violations) = blocking(move || {
        let ws = s.store.load(&id)?;
        let mm = s.store.metamodel(ws.metamodel())?;
        Ok((ws.version(), validate(&ws, &mm)))
    })
    .await?;
    Ok(with_version(version, Json(violations)))
}

#[derive(Deserialize)]
struct QueryBody {
    q: String,
}

async fn query_workspace(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<QueryBody>,
) -> ApiResult<Response> {
    let (version, sel) = blocking(move || {
        let ws = s.store.load(&id)?;
        let sel = query_str(&ws, &body.q).map_err(|e| {
            let code = match e {
                QueryError::Parse { .. } => "QUERY_SYNTAX",
                _ => "QUERY",
            };
            ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
        })?;
        Ok((ws.version(), sel))
    })
    .await?;
    Ok(with_version(version, Json(sel)))
}

#[derive(Deserialize, Default)]
struct GenerateBody {
    plan: Option<String>,
    out_dir: Option<String>,
}

/// Output directories are relative to the store root and stay inside it.
fn inside_root(root: &Path, rel: &str) -> ApiResult<PathBuf> {
    let p = Path::new(rel);
    if rel.is_empty() || !p.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir)) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "BAD_OUT_DIR",
            format!("out_dir `{rel}` must be relative to the store root"),
        ));
    }
    Ok(root.join(p))
}

async fn generate(State(s): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Response> {
    let body: GenerateBody = if body.iter().all(u8::is_ascii_whitespace) {
        GenerateBody::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_BODY", e.to_string()))?
    };
    let (version, report) = blocking(move || {
        let store = &s.store;
        let ws = store.load(&id)?;
        let mm = store.metamodel(ws.metamodel())?;
        let plan_ws = store.load(body.plan.as_deref().unwrap_or(DEFAULT_PLAN))?;
        let plan = load_genplan(&plan_ws).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "GENPLAN", e.to_string()))?;
        let out = inside_root(store.root(), body.out_dir.as_deref().unwrap_or(&format!("build/{id}")))?;
        let report = run_genplan(&plan, &ws, &mm, store.root(), &out)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "IO", e.to_string()))?;
        Ok((ws.version(), report))
    })
    .await?;
    Ok(with_version(version, Json(report)))
}

#[derive(Deserialize)]
struct NavigateBody {
    target: String,
}

async fn navigate(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<NavigateBody>,
) -> ApiResult<Response> {
    let (version, history) = blocking(move || {
        let history = s.store.navigate(&id, &body.target)?;
        Ok((s.store.load(&id)?.version(), history))
    })
    .await?;
    Ok(with_version(version, Json(json!({ "history": history }))))
}

async fn list_metamodels(State(s): State<AppState>) -> ApiResult<Response> {
    let ids = blocking(move || Ok(s.store.metamodel_ids())).await?;
    Ok(Json(ids).into_response())
}

async fn get_metamodel(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let (origin, source) = blocking(move || {
        s.store
            .metamodel_source(&id)?
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("metamodel `{id}` not found")))
    })
    .await?;
    let mm = load_metamodel(&source).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "METAMODEL", e.to_string()))?;
    Ok(Json(json!({
        "id": mm.id,
        "name": mm.name,
        "origin": origin,
        "source": source,
        "palette": palette(&mm),
    }))
    .into_response())
}
