use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use essencery_core::graph::GraphDocument;
use essencery_core::{print, render_graph_svg, Kernel, RenderTheme};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::{ServeDir, ServeFile};

use crate::store::{Store, StoreError};

const PLACEHOLDER_PAGE: &str = "<!doctype html>
<html lang=\"en\">
<head><meta charset=\"utf-8\"><title>essencery</title></head>
<body>
<h1>essencery</h1>
<p>The editor UI is not installed. Start the server with <code>--ui-dir</code> pointing at a built UI.</p>
<p>API: <a href=\"/api/graphs\">/api/graphs</a>, <a href=\"/api/kernel\">/api/kernel</a></p>
</body>
</html>
";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub kernel: Arc<Kernel>,
    pub theme: Arc<RenderTheme>,
}

impl AppState {
    pub fn new(store: Store, kernel: Kernel) -> Self {
        let theme = RenderTheme::from_kernel(&kernel);
        AppState {
            store: Arc::new(store),
            kernel: Arc::new(kernel),
            theme: Arc::new(theme),
        }
    }
}

/// The API plus static hosting of the editor UI from `ui_dir`, or a
/// placeholder page when none is given.
pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/graphs", get(list_graphs).post(create_graph))
        .route(
            "/api/graphs/{id}",
            get(get_graph).put(put_graph).delete(delete_graph),
        )
        .route("/api/graphs/{id}/svg", get(graph_svg))
        .route("/api/kernel", get(kernel))
        .with_state(state);
    match ui_dir {
        Some(dir) => api
            .route_service("/", ServeFile::new(dir.join("index.html")))
            .nest_service("/assets", ServeDir::new(dir.join("assets"))),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

impl IntoResponse for StoreError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        match self {
            StoreError::NotFound(_) | StoreError::BadId(_) => error(StatusCode::NOT_FOUND, message),
            StoreError::Stale { stored, .. } => (
                StatusCode::CONFLICT,
                Json(json!({ "error": message, "revision": stored })),
            )
                .into_response(),
            StoreError::Invalid {
                violations,
                diagnostics,
            } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                Json(json!({
                    "error": message,
                    "violations": violations,
                    "diagnostics": diagnostics,
                })),
            )
                .into_response(),
            StoreError::Corrupt { .. }
            | StoreError::IdMismatch { .. }
            | StoreError::DataDir { .. }
            | StoreError::Io(_) => {
                log::error!("{message}");
                error(StatusCode::INTERNAL_SERVER_ERROR, message)
            }
        }
    }
}

/// Runs blocking store work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, Response>
where
    F: FnOnce() -> Result<T, StoreError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(IntoResponse::into_response),
        Err(e) => Err(error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

fn etag(revision: u64) -> (header::HeaderName, HeaderValue) {
    (
        header::ETAG,
        HeaderValue::from_str(&format!("\"{revision}\"")).expect("digits"),
    )
}

async fn list_graphs(State(state): State<AppState>) -> Result<Response, Response> {
    let index = blocking(move || state.store.index()).await?;
    Ok(Json(index.graphs).into_response())
}

#[derive(Deserialize)]
struct CreateRequest {
    #[serde(default)]
    title: String,
}

async fn create_graph(State(state): State<AppState>, body: Bytes) -> Result<Response, Response> {
    let req: CreateRequest = if body.is_empty() {
        CreateRequest {
            title: String::new(),
        }
    } else {
        serde_json::from_slice(&body).map_err(|e| error(StatusCode::BAD_REQUEST, e.to_string()))?
    };
    let graph = blocking(move || state.store.create(&req.title)).await?;
    let location =
        HeaderValue::from_str(&format!("/api/graphs/{}", graph.id)).expect("id is ascii");
    Ok((
        StatusCode::CREATED,
        [(header::LOCATION, location), etag(graph.revision)],
        Json(json!({ "id": graph.id, "title": graph.title, "revision": graph.revision })),
    )
        .into_response())
}

async fn get_graph(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, Response> {
    if let Some(stem) = id.strip_suffix(".ess") {
        let stem = stem.to_owned();
        let graph = blocking(move || state.store.get(&stem)).await?;
        return Ok((
            [
                (
                    header::CONTENT_TYPE,
                    HeaderValue::from_static("text/plain; charset=utf-8"),
                ),
                etag(graph.revision),
            ],
            print(&graph),
        )
            .into_response());
    }
    let graph = blocking(move || state.store.get(&id)).await?;
    Ok(([etag(graph.revision)], Json(graph.to_document())).into_response())
}

/// Accepts `"3"`, `3` and `W/"3"`.
fn parse_if_match(headers: &HeaderMap) -> Result<u64, (StatusCode, &'static str)> {
    let Some(value) = headers.get(header::IF_MATCH) else {
        return Err((
            StatusCode::PRECONDITION_REQUIRED,
            "If-Match with the current revision is required",
        ));
    };
    value
        .to_str()
        .ok()
        .map(|v| v.trim().trim_start_matches("W/").trim_matches('"'))
        .and_then(|v| v.parse().ok())
        .ok_or((
            StatusCode::BAD_REQUEST,
            "If-Match must be a revision number",
        ))
}

async fn put_graph(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, Response> {
    let expected = parse_if_match(&headers).map_err(|(status, message)| error(status, message))?;
    let doc: GraphDocument =
        serde_json::from_slice(&body).map_err(|e| error(StatusCode::BAD_REQUEST, e.to_string()))?;
    let revision = blocking(move || state.store.save(&id, expected, &doc, &state.kernel)).await?;
    Ok(([etag(revision)], Json(json!({ "revision": revision }))).into_response())
}

async fn delete_graph(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, Response> {
    blocking(move || state.store.delete(&id)).await?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn graph_svg(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, Response> {
    let theme = state.theme.clone();
    let graph = blocking(move || state.store.get(&id)).await?;
    Ok((
        [(
            header::CONTENT_TYPE,
            HeaderValue::from_static("image/svg+xml"),
        )],
        render_graph_svg(&graph, &theme),
    )
        .into_response())
}

async fn kernel(State(state): State<AppState>) -> Response {
    match serde_json::to_string(&*state.kernel) {
        Ok(body) => (
            [(
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/json"),
            )],
            body,
        )
            .into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}
