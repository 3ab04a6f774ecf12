//! HTTP routes over a [`Store`].

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use resilab_core::mechanisms::MECHANISM_IDS;
use resilab_core::runner::{ExperimentConfig, FieldError};
use resilab_core::simulator::{ADAPTER_IDS, DISRUPTOR_IDS};

use crate::store::{Store, StoreError};

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/experiments", post(create).get(list))
        .route("/experiments/{id}", get(show))
        .route("/experiments/{id}/start", post(start))
        .route("/experiments/{id}/stop", post(stop))
        .route("/experiments/{id}/events", get(events))
        .route("/experiments/{id}/results", get(results))
        .route("/experiments/{id}/log.csv", get(log_csv))
        .route("/mechanisms", get(|| async { Json(MECHANISM_IDS) }))
        .route("/disruptors", get(|| async { Json(DISRUPTOR_IDS) }))
        .route("/adapters", get(|| async { Json(ADAPTER_IDS) }))
        .with_state(store)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldError>,
}

pub enum ApiError {
    Store(StoreError),
    Invalid(Vec<FieldError>),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Store(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, body) = match self {
            ApiError::Invalid(fields) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorBody {
                    error: "invalid experiment config".into(),
                    fields,
                },
            ),
            ApiError::Store(e) => {
                let code = match &e {
                    StoreError::NotFound(_) => StatusCode::NOT_FOUND,
                    StoreError::Conflict { .. } => StatusCode::CONFLICT,
                    // config passed validation but the run cannot be set up
                    StoreError::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
                    StoreError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
                };
                (
                    code,
                    ErrorBody {
                        error: e.to_string(),
                        fields: Vec::new(),
                    },
                )
            }
        };
        (code, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses the body so a type error still names its field.
fn parse_config(body: &[u8]) -> ApiResult<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::Invalid(vec![FieldError {
            field: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }])
    })?;
    config.validate().map_err(ApiError::Invalid)?;
    Ok(config)
}

async fn create(State(store): State<Store>, body: Bytes) -> ApiResult<Response> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { &body };
    let config = parse_config(body)?;
    let handle = tokio::task::spawn_blocking(move || store.create(config))
        .await
        .expect("create task panicked")?;
    Ok((StatusCode::CREATED, Json(handle)).into_response())
}

async fn list(State(store): State<Store>) -> impl IntoResponse {
    Json(store.list())
}

async fn show(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.handle(&id)?))
}

async fn start(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.start(&id)?))
}

async fn stop(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.stop(&id)?))
}

#[derive(Debug, Deserialize)]
struct Since {
    #[serde(default)]
    since: usize,
}

async fn events(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(q): Query<Since>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.events(&id, q.since)?))
}

async fn results(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Response> {
    let result = store.result(&id)?;
    Ok(Json(&*result).into_response())
}

async fn log_csv(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let body = store.log_csv(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body))
}
