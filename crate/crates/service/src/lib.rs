//! HTTP front end for the gradecast pipeline.
//!
//! | method | path                         | body                              |
//! |--------|------------------------------|-----------------------------------|
//! | POST   | `/datasets`                  | raw CSV; `?range_check=&source=`  |
//! | POST   | `/models`                    | `{dataset_id, params?, split?}`   |
//! | GET    | `/models`                    |                                   |
//! | GET    | `/models/{id}`               |                                   |
//! | POST   | `/models/{id}/predict`       | `{features}`                      |
//! | POST   | `/models/{id}/whatif`        | `{features, config?}`             |
//! | GET    | `/models/{id}/export`        | `?format=dot\|model`              |
//!
//! Errors come back as `{code, message, detail?}`.

mod api;
mod error;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

use tokio::net::TcpListener;
use tracing::info;

pub use api::{
    router, AppState, Export, ExportFormat, ModelSummary, ModelView, PredictRequest, TrainRequest,
    TrainResponse, UploadOptions, UploadQuery, UploadResponse, WhatIfRequest,
};
pub use error::{ApiError, ErrorBody};
pub use store::{Store, StoreError, StoredModel};

pub const DATA_DIR_ENV: &str = "GRADECAST_DATA_DIR";
pub const ADDR_ENV: &str = "GRADECAST_ADDR";
pub const DEFAULT_DATA_DIR: &str = "gradecast-data";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub addr: SocketAddr,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            data_dir: DEFAULT_DATA_DIR.into(),
            addr: DEFAULT_ADDR.parse().expect("valid default address"),
        }
    }
}

impl ServiceConfig {
    /// Reads `GRADECAST_DATA_DIR` and `GRADECAST_ADDR`, falling back to the defaults.
    pub fn from_env() -> Result<Self, String> {
        let mut cfg = Self::default();
        if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
            cfg.data_dir = dir.into();
        }
        if let Ok(addr) = std::env::var(ADDR_ENV) {
            cfg.addr = addr
                .parse()
                .map_err(|e| format!("{ADDR_ENV}=`{addr}` is not a socket address: {e}"))?;
        }
        Ok(cfg)
    }
}

/// Opens the store and serves until Ctrl-C.
pub async fn serve(config: &ServiceConfig) -> std::io::Result<()> {
    let store = Store::open(&config.data_dir).map_err(std::io::Error::other)?;
    let listener = TcpListener::bind(config.addr).await?;
    info!(
        addr = %listener.local_addr()?,
        data_dir = %config.data_dir.display(),
        datasets = store.dataset_ids().len(),
        models = store.model_ids().len(),
        "listening"
    );
    axum::serve(listener, router(AppState::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
