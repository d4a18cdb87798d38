//! HTTP/JSON interface to the session store.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use revtp_core::estimator::{EstimateRecord, StopDecision};
use revtp_core::{Dms, Error, TransportPlan, Unlv};

use crate::session::{DecisionKind, DecisionRecord, EstimateSeries, Mode, Proposal, Session, SessionError, Situation};
use crate::store::{Store, StoreError};

pub type AppState = Arc<Store>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/situations", post(post_situation))
        .route("/sessions/{id}/situations/generate", post(generate_situation))
        .route("/sessions/{id}/situation", get(get_situation))
        .route("/sessions/{id}/decisions", get(list_decisions).post(post_decision))
        .route("/sessions/{id}/estimates", get(get_estimates))
        .route("/sessions/{id}/proposal", get(get_proposal))
        .route("/sessions/{id}/approve", post(approve))
        .route("/sessions/{id}/correct", post(correct))
        .with_state(store)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, name: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: name.to_string(), message: message.into() } }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn core_status(e: &Error) -> StatusCode {
    match e {
        Error::NoObservations | Error::ZeroSum => StatusCode::CONFLICT,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::Core(c) => core_status(c),
            SessionError::NoPendingSituation | SessionError::SituationPending(_) | SessionError::WrongMode(_) => {
                StatusCode::CONFLICT
            }
            SessionError::Log(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.name(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "SessionNotFound", e.to_string()),
            StoreError::Session(s) => s.into(),
            StoreError::Io(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageError", e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(e.status(), "ParseError", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub m: usize,
    pub n: usize,
    pub mode: Mode,
    pub window: Option<usize>,
    pub seed: u64,
    pub observations: usize,
    pub estimate: Option<Unlv>,
    pub pending_step: Option<usize>,
    pub stop: StopDecision,
}

impl From<&Session> for SessionSummary {
    fn from(s: &Session) -> Self {
        SessionSummary {
            id: s.id.clone(),
            m: s.m,
            n: s.n,
            mode: s.mode,
            window: s.window(),
            seed: s.seed,
            observations: s.state().count(),
            estimate: s.estimate(),
            pending_step: s.pending().map(|p| p.step),
            stop: s.series().stop,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default = "two")]
    pub m: usize,
    #[serde(default = "three")]
    pub n: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn two() -> usize {
    2
}

fn three() -> usize {
    3
}

async fn list_sessions(State(store): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "sessions": store.ids() }))
}

async fn create_session(
    State(store): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionSummary>)> {
    let Json(req) = body?;
    let s = store.create(req.m, req.n, req.mode, req.window, req.seed).await?;
    Ok((StatusCode::CREATED, Json(SessionSummary::from(s.as_ref()))))
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    Ok(Json(SessionSummary::from(store.snapshot(&id)?.as_ref())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SituationRequest {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
}

async fn post_situation(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SituationRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Situation>)> {
    let Json(req) = body?;
    let dms = Dms::new(req.supply, req.demand).map_err(SessionError::from)?;
    let situation = store
        .update(&id, |s| {
            let ev = s.open(dms, false)?;
            Ok((ev, s.pending().cloned().expect("just opened")))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(situation)))
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    pub range: Option<(u32, u32)>,
}

async fn generate_situation(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<Situation>)> {
    let req: GenerateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        GenerateRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "ParseError", e.to_string()))?
    };
    let range = req.range.unwrap_or((1, 100));
    let situation = store
        .update(&id, |s| {
            let ev = s.generate(range)?;
            Ok((ev, s.pending().cloned().expect("just opened")))
        })
        .await?;
    Ok((StatusCode::CREATED, Json(situation)))
}

async fn get_situation(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Situation>> {
    let s = store.snapshot(&id)?;
    let p = s.pending().cloned().ok_or(SessionError::NoPendingSituation)?;
    Ok(Json(p))
}

/// A vertex choice, either as interior cells or as the whole plan.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub free_vars: Option<Vec<f64>>,
    pub plan: Option<TransportPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub decision: DecisionRecord,
    pub estimate: EstimateRecord,
    pub stop: StopDecision,
}

fn decide(s: &mut Session, req: DecisionRequest, kind: DecisionKind) -> Result<(crate::session::Event, DecisionResponse), SessionError> {
    let (ev, decision) = match (req.free_vars, req.plan) {
        (Some(x), None) => match kind {
            DecisionKind::Corrected => s.correct(&x)?,
            _ => s.decide(&x, kind)?,
        },
        (None, Some(plan)) => {
            if kind == DecisionKind::Corrected && s.mode != Mode::Assist {
                return Err(SessionError::WrongMode(s.mode));
            }
            s.decide_plan(&plan, kind)?
        }
        _ => return Err(Error::Parse("give exactly one of free_vars or plan".into()).into()),
    };
    let resp = DecisionResponse { estimate: decision.estimate.clone(), decision, stop: s.series().stop };
    Ok((ev, resp))
}

async fn post_decision(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<DecisionRequest>, JsonRejection>,
) -> ApiResult<Json<DecisionResponse>> {
    let Json(req) = body?;
    Ok(Json(store.update(&id, |s| decide(s, req, DecisionKind::Chosen)).await?))
}

async fn list_decisions(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<DecisionRecord>>> {
    Ok(Json(store.snapshot(&id)?.decisions().to_vec()))
}

async fn get_estimates(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<EstimateSeries>> {
    Ok(Json(store.snapshot(&id)?.series()))
}

async fn get_proposal(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Proposal>> {
    Ok(Json(store.snapshot(&id)?.proposal()?))
}

async fn approve(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DecisionResponse>> {
    let resp = store
        .update(&id, |s| {
            let (ev, decision) = s.approve()?;
            Ok((ev, DecisionResponse { estimate: decision.estimate.clone(), decision, stop: s.series().stop }))
        })
        .await?;
    Ok(Json(resp))
}

async fn correct(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<DecisionRequest>, JsonRejection>,
) -> ApiResult<Json<DecisionResponse>> {
    let Json(req) = body?;
    Ok(Json(store.update(&id, |s| decide(s, req, DecisionKind::Corrected)).await?))
}
