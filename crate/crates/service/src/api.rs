use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tracing::info;

use gradecast::cart::{self, to_dot};
use gradecast::eval::{evaluate, train_test_split, EvaluationReport};
use gradecast::ingest::{load_csv, CleanOptions, CleaningReport, IngestError, Schema};
use gradecast::whatif::report;
use gradecast::{HyperParams, Prediction, SplitConfig, Tree, WhatIfConfig, WhatIfReport};

use crate::error::ApiError;
use crate::store::{new_id, Store, StoreError, StoredModel};

const MAX_UPLOAD_BYTES: usize = 16 * 1024 * 1024;

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::store(e.to_string())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct UploadQuery {
    pub range_check: Option<String>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UploadOptions {
    pub range_check: bool,
    pub source: String,
}

impl Default for UploadOptions {
    fn default() -> Self {
        Self {
            range_check: true,
            source: "upload".into(),
        }
    }
}

impl TryFrom<UploadQuery> for UploadOptions {
    type Error = ApiError;

    fn try_from(q: UploadQuery) -> Result<Self, ApiError> {
        let mut opts = Self::default();
        if let Some(v) = q.range_check {
            opts.range_check = match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                _ => {
                    return Err(ApiError::validation(format!(
                        "range_check must be a boolean, got `{v}`"
                    ))
                    .with_detail(json!({ "field": "range_check" })))
                }
            };
        }
        if let Some(s) = q.source {
            opts.source = s;
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UploadResponse {
    pub id: String,
    pub report: CleaningReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRequest {
    pub dataset_id: String,
    #[serde(default)]
    pub params: HyperParams,
    #[serde(default)]
    pub split: SplitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResponse {
    pub id: String,
    pub evaluation: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub dataset_id: String,
    pub created_at: DateTime<Utc>,
    pub accuracy: f64,
}

/// `GET /models/{id}` body: the stored model with its tree as a JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelView {
    pub id: String,
    pub dataset_id: String,
    pub created_at: DateTime<Utc>,
    pub split: SplitConfig,
    pub params: HyperParams,
    pub evaluation: EvaluationReport,
    pub tree: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub features: Vec<f64>,
    #[serde(default)]
    pub config: Option<WhatIfConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Model,
}

impl FromStr for ExportFormat {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, ApiError> {
        match s {
            "dot" => Ok(Self::Dot),
            "model" => Ok(Self::Model),
            other => Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "unsupported_format",
                format!("unsupported export format `{other}` (expected dot or model)"),
            )
            .with_detail(json!({ "format": other }))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Export {
    pub content_type: &'static str,
    pub body: String,
}

/// Shared handle to the store. Every endpoint is a thin wrapper over one of
/// these methods, so they can be called directly without HTTP.
#[derive(Debug, Clone)]
pub struct AppState {
    store: Arc<Store>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        Self {
            store: Arc::new(store),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn upload_dataset(
        &self,
        csv: &str,
        options: &UploadOptions,
    ) -> Result<UploadResponse, ApiError> {
        let clean = CleanOptions {
            range_validation: options.range_check,
        };
        let (data, report) = load_csv::<f64>(csv, &Schema::standard(), &options.source, clean)?;
        let id = self.store.insert_dataset(&data)?;
        info!(dataset = %id, records = data.len(), "dataset stored");
        Ok(UploadResponse { id, report })
    }

    pub fn train_model(&self, req: &TrainRequest) -> Result<TrainResponse, ApiError> {
        req.params.validate()?;
        req.split.validate()?;
        let data = self
            .store
            .dataset(&req.dataset_id)?
            .ok_or_else(|| ApiError::not_found("dataset", &req.dataset_id))?;
        let (train, test) = train_test_split(&data, &req.split)?;
        let tree = Tree::fit_dataset(&train, req.params)?;
        let evaluation = evaluate(&tree, train.len(), &test)?;
        let model = StoredModel {
            id: new_id(),
            dataset_id: req.dataset_id.clone(),
            created_at: Utc::now(),
            split: req.split,
            params: req.params,
            evaluation: evaluation.clone(),
            tree: cart::serialize(&tree),
        };
        self.store.insert_model(&model)?;
        info!(model = %model.id, dataset = %model.dataset_id, accuracy = evaluation.accuracy, "model trained");
        Ok(TrainResponse {
            id: model.id,
            evaluation,
        })
    }

    pub fn list_models(&self) -> Result<Vec<ModelSummary>, ApiError> {
        let mut out = Vec::new();
        for id in self.store.model_ids() {
            if let Some(m) = self.store.model(&id)? {
                out.push(ModelSummary {
                    id: m.id,
                    dataset_id: m.dataset_id,
                    created_at: m.created_at,
                    accuracy: m.evaluation.accuracy,
                });
            }
        }
        out.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        Ok(out)
    }

    pub fn model(&self, id: &str) -> Result<StoredModel, ApiError> {
        self.store
            .model(id)?
            .ok_or_else(|| ApiError::not_found("model", id))
    }

    pub fn model_view(&self, id: &str) -> Result<ModelView, ApiError> {
        let m = self.model(id)?;
        let tree = serde_json::from_str(&m.tree).map_err(|e| ApiError::store(e.to_string()))?;
        Ok(ModelView {
            id: m.id,
            dataset_id: m.dataset_id,
            created_at: m.created_at,
            split: m.split,
            params: m.params,
            evaluation: m.evaluation,
            tree,
        })
    }

    fn tree(&self, id: &str) -> Result<Tree, ApiError> {
        Ok(self.model(id)?.tree()?)
    }

    pub fn predict(&self, id: &str, req: &PredictRequest) -> Result<Prediction, ApiError> {
        let tree = self.tree(id)?;
        check_features(&req.features, tree.n_features())?;
        Ok(tree.predict(&req.features)?)
    }

    pub fn whatif(&self, id: &str, req: &WhatIfRequest) -> Result<WhatIfReport, ApiError> {
        let tree = self.tree(id)?;
        check_features(&req.features, tree.n_features())?;
        let config = req
            .config
            .clone()
            .unwrap_or_else(|| WhatIfConfig::for_features(tree.n_features()));
        Ok(report(&tree, tree.feature_names(), &req.features, &config)?)
    }

    pub fn export(&self, id: &str, format: ExportFormat) -> Result<Export, ApiError> {
        let model = self.model(id)?;
        Ok(match format {
            ExportFormat::Dot => Export {
                content_type: "text/vnd.graphviz",
                body: to_dot(&model.tree()?),
            },
            ExportFormat::Model => Export {
                content_type: "application/json",
                body: model.tree,
            },
        })
    }
}

fn check_features(features: &[f64], expected: usize) -> Result<(), ApiError> {
    if features.len() != expected {
        return Err(ApiError::validation(format!(
            "expected {expected} feature values, got {}",
            features.len()
        ))
        .with_detail(
            json!({ "field": "features", "expected": expected, "found": features.len() }),
        ));
    }
    Ok(())
}

fn parse_json<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::invalid_json(format!("invalid request body: {e}")))
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn upload_dataset(
    State(state): State<AppState>,
    Query(query): Query<UploadQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let options = UploadOptions::try_from(query)?;
    let text = String::from_utf8(body.to_vec()).map_err(|e| {
        ApiError::from(IngestError::Csv {
            row: None,
            message: format!("body is not valid UTF-8: {e}"),
        })
    })?;
    let out = blocking(move || state.upload_dataset(&text, &options)).await?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn train_model(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: TrainRequest = parse_json(&body)?;
    let out = blocking(move || state.train_model(&req)).await?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn list_models(State(state): State<AppState>) -> Result<Json<Vec<ModelSummary>>, ApiError> {
    blocking(move || state.list_models()).await.map(Json)
}

async fn get_model(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<ModelView>, ApiError> {
    blocking(move || state.model_view(&id)).await.map(Json)
}

async fn predict(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Prediction>, ApiError> {
    let req: PredictRequest = parse_json(&body)?;
    blocking(move || state.predict(&id, &req)).await.map(Json)
}

async fn whatif(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<WhatIfReport>, ApiError> {
    let req: WhatIfRequest = parse_json(&body)?;
    blocking(move || state.whatif(&id, &req)).await.map(Json)
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let format: ExportFormat = query
        .format
        .as_deref()
        .ok_or_else(|| ApiError::validation("missing `format` query parameter (dot or model)"))?
        .parse()?;
    let out = blocking(move || state.export(&id, format)).await?;
    Ok(([(header::CONTENT_TYPE, out.content_type)], out.body).into_response())
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/datasets", post(upload_dataset))
        .route("/models", post(train_model).get(list_models))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/predict", post(predict))
        .route("/models/{id}/whatif", post(whatif))
        .route("/models/{id}/export", get(export))
        .fallback(fallback)
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}
