//! Expert review of suggested keywords: task hand-out, judgment collection
//! with an append-only log, and corrected-set metrics over HTTP.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

pub use api::{router, ApiError, SharedStore, CONCEPT_SEARCH_LIMIT};
pub use store::{AnnotatorProgress, ConceptHit, Progress, ReviewError, ReviewStore, ReviewTask, Suggestion, TaskStatus};

pub const DEFAULT_PORT: u16 = 8765;

pub fn shared(store: ReviewStore) -> SharedStore {
    Arc::new(RwLock::new(store))
}

/// Serves until Ctrl-C.
pub async fn serve(store: ReviewStore, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("review service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(shared(store), static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
