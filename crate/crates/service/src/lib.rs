//! HTTP API over the allocation pipeline: models, rules, project characterizations,
//! suggestion runs, risk reports and decision records, stored under one data directory.

mod api;
mod error;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::CorsLayer;

pub use error::{ApiError, ErrorBody};
pub use store::Store;

pub fn router(store: Store) -> Router {
    let state: api::AppState = Arc::new(store);
    Router::new()
        .route("/api/health", get(api::health))
        .route("/api/models", post(api::create_model))
        .route("/api/models/derive", post(api::derive_model))
        .route("/api/models/{id}", get(api::get_model).patch(api::patch_model))
        .route("/api/rules", post(api::create_rules))
        .route("/api/rules/{id}", get(api::get_rules))
        .route("/api/projects", post(api::create_project))
        .route("/api/projects/{id}", get(api::get_project).patch(api::patch_project))
        .route("/api/projects/{id}/findings", get(api::project_findings))
        .route("/api/suggestions", post(api::create_suggestions))
        .route("/api/suggestions/{id}", get(api::get_suggestions))
        .route("/api/risks", post(api::risks))
        .route("/api/risks/compare", post(api::compare))
        .route("/api/decisions", post(api::create_decision))
        .route("/api/decisions/{id}", get(api::get_decision))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf) -> std::io::Result<()> {
    let store = Store::open(&data_dir).map_err(|e| std::io::Error::other(e.body.message))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
