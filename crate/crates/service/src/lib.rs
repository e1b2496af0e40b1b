//! HTTP/JSON sessions over the value engine.
//!
//! A session holds a saliency map, a fixation history and model parameters.
//! Every mutation recomputes the cost, exploration and value maps and the
//! predicted next fixation, and bumps the session revision.
//!
//! | route | effect |
//! |---|---|
//! | `POST /sessions` | create from a saliency map and parameters |
//! | `GET /sessions/{id}` | maps, fixations and prediction |
//! | `POST /sessions/{id}/fixations` | append a fixation |
//! | `DELETE /sessions/{id}/fixations/last` | undo the last fixation |
//! | `PATCH /sessions/{id}/params` | change some parameters |
//!
//! Mutations accept an optional `expected_revision`; a mismatch answers 409.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, patch, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;

use gazeval_core::io::decode_raster;
use gazeval_core::{presets, CostProfile, Grid, ModelParams, PhiIndexing, PixelCoord, PredictionContext};

/// Sessions untouched for this long are dropped.
pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPayload {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl From<&Grid> for MapPayload {
    fn from(g: &Grid) -> Self {
        Self {
            width: g.width(),
            height: g.height(),
            values: g.values().to_vec(),
            min: g.min(),
            max: g.max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maps {
    pub s: MapPayload,
    pub c: MapPayload,
    pub e: MapPayload,
    pub v: MapPayload,
}

/// Full state of a session at one revision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub revision: u64,
    pub fixations: Vec<PixelCoord>,
    pub params: ModelParams,
    pub maps: Maps,
    pub prediction: PixelCoord,
}

/// Saliency as raw values or as a base64 SMR raster.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SaliencyInput {
    Values {
        width: usize,
        height: usize,
        values: Vec<f64>,
    },
    Raster {
        smr_base64: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub saliency: SaliencyInput,
    pub params: ModelParams,
    /// Defaults to the bundled illustrative profile.
    pub profile: Option<CostProfile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub revision: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendFixation {
    pub x: f64,
    pub y: f64,
    pub expected_revision: Option<u64>,
}

/// Fields left out keep their current values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub sigma: Option<f64>,
    pub phis: Option<Vec<f64>>,
    pub phi_indexing: Option<PhiIndexing>,
    pub expected_revision: Option<u64>,
}

#[derive(Debug)]
pub enum ApiError {
    NotFound,
    BadRequest(String),
    Conflict { expected: u64, actual: u64 },
}

impl From<gazeval_core::Error> for ApiError {
    fn from(e: gazeval_core::Error) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::NotFound => (StatusCode::NOT_FOUND, "unknown session".to_string()),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Conflict { expected, actual } => (
                StatusCode::CONFLICT,
                format!("expected revision {expected}, session is at {actual}"),
            ),
        };
        (status, Json(serde_json::json!({ "error": message }))).into_response()
    }
}

struct Session {
    ctx: PredictionContext,
    view: Arc<SessionView>,
}

impl Session {
    fn new(ctx: PredictionContext, revision: u64) -> Result<Self, ApiError> {
        let view = Arc::new(render(&ctx, revision)?);
        Ok(Self { ctx, view })
    }

    fn check(&self, expected: Option<u64>) -> Result<(), ApiError> {
        match expected {
            Some(e) if e != self.view.revision => Err(ApiError::Conflict {
                expected: e,
                actual: self.view.revision,
            }),
            _ => Ok(()),
        }
    }

    /// Installs `ctx` as the next revision.
    fn commit(&mut self, ctx: PredictionContext) -> Result<Arc<SessionView>, ApiError> {
        let next = Session::new(ctx, self.view.revision + 1)?;
        *self = next;
        Ok(Arc::clone(&self.view))
    }
}

fn render(ctx: &PredictionContext, revision: u64) -> Result<SessionView, ApiError> {
    let maps = ctx.maps()?;
    Ok(SessionView {
        revision,
        fixations: ctx.history.clone(),
        params: ctx.params.clone(),
        prediction: gazeval_core::argmax(&maps.value),
        maps: Maps {
            s: MapPayload::from(ctx.saliency.as_ref()),
            c: MapPayload::from(&maps.cost),
            e: MapPayload::from(&maps.exploration),
            v: MapPayload::from(&maps.value),
        },
    })
}

struct Entry {
    session: RwLock<Session>,
    last_access: Mutex<Instant>,
}

impl Entry {
    fn touch(&self) {
        *self.last_access.lock().unwrap() = Instant::now();
    }
}

/// Shared service state: the session table.
#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Entry>>>>,
    idle_timeout: Duration,
}

impl Default for AppState {
    fn default() -> Self {
        Self::new(DEFAULT_IDLE_TIMEOUT)
    }
}

impl AppState {
    pub fn new(idle_timeout: Duration) -> Self {
        Self {
            sessions: Default::default(),
            idle_timeout,
        }
    }

    pub async fn session_count(&self) -> usize {
        self.sessions.read().await.len()
    }

    /// Drops sessions idle since before `now - idle_timeout`; returns how many.
    pub async fn evict_idle(&self, now: Instant) -> usize {
        let mut table = self.sessions.write().await;
        let before = table.len();
        table.retain(|_, e| now.saturating_duration_since(*e.last_access.lock().unwrap()) < self.idle_timeout);
        before - table.len()
    }

    async fn entry(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        let entry = self.sessions.read().await.get(id).cloned().ok_or(ApiError::NotFound)?;
        entry.touch();
        Ok(entry)
    }
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn saliency_grid(input: SaliencyInput) -> Result<Grid, ApiError> {
    Ok(match input {
        SaliencyInput::Values { width, height, values } => Grid::new(width, height, values)?,
        SaliencyInput::Raster { smr_base64 } => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(smr_base64.trim())
                .map_err(|e| ApiError::BadRequest(format!("invalid base64: {e}")))?;
            decode_raster(&bytes)?
        }
    })
}

async fn create(State(state): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: CreateSession = parse(&body)?;
    let saliency = saliency_grid(req.saliency)?;
    let profile = req.profile.unwrap_or_else(presets::illustrative_profile);
    let ctx = PredictionContext::new(Arc::new(saliency), Vec::new(), req.params, profile)?;
    let session = Session::new(ctx, 0)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let entry = Arc::new(Entry {
        session: RwLock::new(session),
        last_access: Mutex::new(Instant::now()),
    });
    state.sessions.write().await.insert(id.clone(), entry);
    log::info!("created session {id}");
    Ok((StatusCode::CREATED, Json(Created { id, revision: 0 })))
}

async fn show(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = state.entry(&id).await?;
    let view = Arc::clone(&entry.session.read().await.view);
    Ok(Json(view.as_ref().clone()))
}

async fn append(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    let req: AppendFixation = parse(&body)?;
    let entry = state.entry(&id).await?;
    let mut session = entry.session.write().await;
    session.check(req.expected_revision)?;
    let mut history = session.ctx.history.clone();
    history.push(PixelCoord::new(req.x, req.y));
    let ctx = session.ctx.with_history(history)?;
    Ok(Json(session.commit(ctx)?.as_ref().clone()))
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = state.entry(&id).await?;
    let mut session = entry.session.write().await;
    let mut history = session.ctx.history.clone();
    if history.pop().is_none() {
        return Err(ApiError::BadRequest("no fixation to undo".into()));
    }
    let ctx = session.ctx.with_history(history)?;
    Ok(Json(session.commit(ctx)?.as_ref().clone()))
}

async fn patch_params(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    let req: ParamsPatch = parse(&body)?;
    let entry = state.entry(&id).await?;
    let mut session = entry.session.write().await;
    session.check(req.expected_revision)?;
    let mut params = session.ctx.params.clone();
    params.w1 = req.w1.unwrap_or(params.w1);
    params.w2 = req.w2.unwrap_or(params.w2);
    params.sigma = req.sigma.unwrap_or(params.sigma);
    params.phis = req.phis.unwrap_or(params.phis);
    params.phi_indexing = req.phi_indexing.unwrap_or(params.phi_indexing);
    let ctx = PredictionContext::new(
        Arc::clone(&session.ctx.saliency),
        session.ctx.history.clone(),
        params,
        session.ctx.profile.clone(),
    )?;
    Ok(Json(session.commit(ctx)?.as_ref().clone()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/fixations", post(append))
        .route("/sessions/{id}/fixations/last", delete(undo))
        .route("/sessions/{id}/params", patch(patch_params))
        .with_state(state)
}

/// Serves on `listener` until the future is dropped, evicting idle sessions
/// once a minute.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            let gone = sweeper.evict_idle(Instant::now()).await;
            if gone > 0 {
                log::info!("evicted {gone} idle sessions");
            }
        }
    });
    axum::serve(listener, router(state)).await
}
