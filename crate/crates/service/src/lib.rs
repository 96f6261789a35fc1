//! HTTP front end for [`ScenarioEngine`].
//!
//! | route               | body                                   |
//! |---------------------|----------------------------------------|
//! | `GET /api/health`   | `{"status":"ok"}`                      |
//! | `GET /api/models`   | catalog of loaded candidates           |
//! | `POST /api/scenario`| `ScenarioRequest` → `ScenarioResponse` |
//!
//! Errors are `{"error":{"code","message","field"}}` with a 4xx status.
//! Everything else is served from the static directory when one is given,
//! otherwise `/` returns a small built-in page.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;
use tradeoff_core::scenario::{parse_scenario_request, ScenarioError};
use tradeoff_core::ScenarioEngine;

const INDEX_HTML: &str = include_str!("index.html");

pub fn router(engine: Arc<ScenarioEngine>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/models", get(models))
        .route("/api/scenario", post(scenario))
        .with_state(engine);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_HTML) })),
    }
}

/// Serves `app` until the listener fails or the task is dropped.
pub async fn serve(listener: TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

fn json_response(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn health() -> Response {
    json_response(StatusCode::OK, br#"{"status":"ok"}"#.to_vec())
}

async fn models(State(engine): State<Arc<ScenarioEngine>>) -> Response {
    let body = serde_json::to_vec(engine.catalog()).expect("catalog serializes");
    json_response(StatusCode::OK, body)
}

async fn scenario(State(engine): State<Arc<ScenarioEngine>>, body: Bytes) -> Response {
    match parse_scenario_request(&body).and_then(|req| engine.evaluate(&req)) {
        Ok(resp) => json_response(
            StatusCode::OK,
            serde_json::to_vec(&resp).expect("response serializes"),
        ),
        Err(err) => error_response(&err),
    }
}

pub fn error_status(err: &ScenarioError) -> StatusCode {
    match err {
        ScenarioError::MalformedRequest { .. } => StatusCode::BAD_REQUEST,
        ScenarioError::UnknownDataset(_) => StatusCode::NOT_FOUND,
        ScenarioError::InvalidTau(_)
        | ScenarioError::InvalidOverrides { .. }
        | ScenarioError::Computation(_) => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn error_response(err: &ScenarioError) -> Response {
    let body = json!({
        "error": {
            "code": err.code(),
            "message": err.to_string(),
            "field": err.field(),
        }
    });
    json_response(error_status(err), body.to_string().into_bytes())
}
