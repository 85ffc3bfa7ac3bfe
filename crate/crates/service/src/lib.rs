//! JSON over HTTP for layouts, samples, decoding and saliency maps. The
//! service is stateless apart from a read-only model cache.

pub mod api;
pub mod models;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use api::ApiError;
pub use models::ModelStore;

pub type AppState = Arc<ModelStore>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("malformed-request", e.to_string()))
}

/// Runs a CPU-bound handler off the async workers.
async fn blocking<T, F>(f: F) -> Result<Json<T>, ApiError>
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("handler panicked: {e}")))?
        .map(Json)
}

async fn layout(Path(d): Path<String>) -> Result<Json<api::LayoutResponse>, ApiError> {
    let d: usize = d.parse().map_err(|_| ApiError::bad_request("invalid-distance", format!("{d:?} is not a distance")))?;
    api::layout(d).map(Json)
}

async fn decode(State(store): State<AppState>, body: Bytes) -> Result<Json<api::DecodeResponse>, ApiError> {
    let req: api::DecodeRequest = parse(&body)?;
    blocking(move || api::decode(&store, &req)).await
}

async fn saliency(State(store): State<AppState>, body: Bytes) -> Result<Json<api::SaliencyResponse>, ApiError> {
    let req: api::SaliencyRequest = parse(&body)?;
    blocking(move || api::saliency(&store, &req)).await
}

async fn sample(body: Bytes) -> Result<Json<api::SampleResponse>, ApiError> {
    let req: api::SampleRequest = parse(&body)?;
    blocking(move || api::sample(&req)).await
}

async fn list_models(State(store): State<AppState>) -> Result<Json<Vec<models::ModelEntry>>, ApiError> {
    blocking(move || store.list()).await
}

async fn not_found() -> ApiError {
    ApiError::not_found("no-route", "no such endpoint")
}

pub fn router(store: ModelStore) -> Router {
    Router::new()
        .route("/api/layouts/{d}", get(layout))
        .route("/api/decode", post(decode))
        .route("/api/saliency", post(saliency))
        .route("/api/sample", post(sample))
        .route("/api/models", get(list_models))
        .fallback(not_found)
        .with_state(Arc::new(store))
}

pub async fn serve(addr: SocketAddr, store: ModelStore) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await
}
