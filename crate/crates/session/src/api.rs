//! HTTP+JSON routes under `/v1`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{middleware, Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{Condition, SessionDocument};
use crate::service::SessionService;
use crate::SessionError;

pub const API_VERSION: &str = "1";
pub const API_VERSION_HEADER: &str = "x-api-version";

/// Error body: `{code, message, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, detail: Value) -> Self {
        Self {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
            detail,
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownUseCase(_) | SessionError::Invalid(_) | SessionError::Replay { .. } => {
                StatusCode::BAD_REQUEST
            }
            SessionError::NotFound(_) | SessionError::NodeNotFound(_) => StatusCode::NOT_FOUND,
            SessionError::Depth(_) | SessionError::NoThirdOrder | SessionError::HasChildren(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            SessionError::Finalized | SessionError::Conflict(_) => StatusCode::CONFLICT,
            SessionError::Forbidden(_) => StatusCode::FORBIDDEN,
            SessionError::Engine(_) => StatusCode::BAD_GATEWAY,
            SessionError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let detail = match &e {
            SessionError::Replay { seq, .. } => json!({ "event": seq }),
            SessionError::NodeNotFound(n) | SessionError::HasChildren(n) => json!({ "node": n }),
            SessionError::NotFound(s) | SessionError::Conflict(s) => json!({ "session": s }),
            _ => Value::Null,
        };
        ApiError::new(status, e.code(), e.to_string(), detail)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", e.body_text(), Value::Null)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Svc = State<Arc<SessionService>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateBody {
    pub use_case: String,
    pub condition: Condition,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddBody {
    pub parent: u32,
    pub text: String,
    pub order: u8,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditBody {
    pub text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatBody {
    pub message: String,
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    Ok(b?.0)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "api_version": API_VERSION }))
}

async fn use_cases(State(svc): Svc) -> Json<Value> {
    Json(json!({ "use_cases": svc.use_cases() }))
}

async fn create(State(svc): Svc, b: Result<Json<CreateBody>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let b = body(b)?;
    Ok((StatusCode::CREATED, Json(svc.create(&b.use_case, b.condition).await?)))
}

async fn list(State(svc): Svc) -> Json<Value> {
    Json(json!({ "sessions": svc.store().ids() }))
}

async fn fetch(State(svc): Svc, Path(id): Path<String>) -> ApiResult<Json<SessionDocument>> {
    Ok(Json(svc.export(&id).await?))
}

async fn add(
    State(svc): Svc,
    Path(id): Path<String>,
    b: Result<Json<AddBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let b = body(b)?;
    Ok((StatusCode::CREATED, Json(svc.add_node(&id, b.parent, &b.text, b.order).await?)))
}

async fn edit(
    State(svc): Svc,
    Path((id, node)): Path<(String, u32)>,
    b: Result<Json<EditBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let b = body(b)?;
    Ok(Json(svc.edit_node(&id, node, &b.text).await?))
}

async fn delete(State(svc): Svc, Path((id, node)): Path<(String, u32)>) -> ApiResult<StatusCode> {
    svc.delete_node(&id, node).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn suggest(State(svc): Svc, Path((id, node)): Path<(String, u32)>) -> ApiResult<impl IntoResponse> {
    let nodes = svc.suggest(&id, node).await?;
    Ok((StatusCode::CREATED, Json(json!({ "nodes": nodes }))))
}

async fn chat(
    State(svc): Svc,
    Path(id): Path<String>,
    b: Result<Json<ChatBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let b = body(b)?;
    Ok(Json(json!({ "reply": svc.chat(&id, &b.message).await? })))
}

async fn finalize(State(svc): Svc, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "risks": svc.finalize(&id).await? })))
}

async fn import(State(svc): Svc, b: Result<Json<SessionDocument>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let doc = body(b)?;
    Ok((StatusCode::CREATED, Json(svc.import(&doc).await?)))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route", Value::Null)
}

async fn version_header(mut res: Response) -> Response {
    res.headers_mut()
        .insert(API_VERSION_HEADER, HeaderValue::from_static(API_VERSION));
    res
}

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/use-cases", get(use_cases))
        .route("/v1/sessions", post(create).get(list))
        .route("/v1/sessions/import", post(import))
        .route("/v1/sessions/{id}", get(fetch))
        .route("/v1/sessions/{id}/export", get(fetch))
        .route("/v1/sessions/{id}/nodes", post(add))
        .route("/v1/sessions/{id}/nodes/{node}", patch(edit).delete(delete))
        .route("/v1/sessions/{id}/nodes/{node}/suggest", post(suggest))
        .route("/v1/sessions/{id}/chat", post(chat))
        .route("/v1/sessions/{id}/finalize", post(finalize))
        .fallback(not_found)
        .layer(middleware::map_response(version_header))
        .with_state(service)
}
