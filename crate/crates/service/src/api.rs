//! HTTP and WebSocket front end.
//!
//! | Method | Path | Body / reply |
//! |---|---|---|
//! | GET | `/health` | `{"ok": true}` |
//! | GET | `/scenes` | scene names |
//! | GET | `/scenes/{name}` | scene JSON |
//! | GET | `/assets/floor/{scene}/{encoding}` | baked floor PNG |
//! | GET | `/assets/legend/{encoding}` | legend strip PNG |
//! | GET | `/assets/stencil/{pattern}` | stencil preview PNG |
//! | POST | `/sessions` | [`CreateSession`] → [`SessionCreated`] |
//! | GET | `/sessions/{id}` | [`SessionView`] |
//! | POST | `/sessions/{id}/start` | [`Tick`] |
//! | POST | `/sessions/{id}/move` | [`MoveRequest`] → [`Tick`] |
//! | POST | `/sessions/{id}/pick` | [`PickRequest`] → [`PickOutcome`] |
//! | POST | `/sessions/{id}/end` | [`TrialRecord`] |
//! | POST | `/sessions/{id}/questionnaire` | any JSON object → `{"stored": n}` |
//! | POST | `/sessions/{id}/ranking` | [`RankingSubmission`] |
//! | GET | `/sessions/{id}/ws` | WebSocket carrying [`ClientMessage`] / [`ServerMessage`] |
//!
//! Errors reply `{"error": kind, "reason": text}` with a 4xx/5xx status.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use glam::DVec2;
use serde::{Deserialize, Serialize};

use radshade_core::encoding::{ColorLut, EncodingKind, EncodingSpec};
use radshade_core::render::{self, bake_floor_texture, FloorRect, Shader};
use radshade_core::stencil::StencilPattern;

use crate::error::{ServiceError, ServiceResult};
use crate::session::{
    builtin_scenes, PickOutcome, RankingSubmission, SceneSet, ScheduleSummary, Session, SessionView,
    Tick, TrialRecord,
};

/// Floor texture resolution along x; z follows the room aspect.
pub const FLOOR_TEXELS_X: u32 = 256;
pub const LEGEND_SIZE: (u32, u32) = (256, 16);
pub const STENCIL_PREVIEW: u32 = 128;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub scenes: SceneSet,
    /// Where finished trials are written; nothing is stored when absent.
    pub data_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            scenes: builtin_scenes(),
            data_dir: None,
        }
    }
}

pub struct AppState {
    config: ServiceConfig,
    lut: ColorLut,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    floor_cache: Mutex<HashMap<(String, EncodingKind), Arc<Vec<u8>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            config,
            lut: ColorLut::viridis(),
            sessions: RwLock::new(HashMap::new()),
            floor_cache: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn create_session(&self, participant: &str, seed: u64) -> ServiceResult<(String, ScheduleSummary)> {
        let id = format!("s{:06}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let session = Session::new(
            id.clone(),
            participant,
            seed,
            self.config.scenes.clone(),
            self.config.data_dir.clone(),
        )?;
        let summary = session.summary();
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok((id, summary))
    }

    pub fn session(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
    }

    /// Runs `f` with exclusive access to one session.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> ServiceResult<T>) -> ServiceResult<T> {
        let handle = self.session(id)?;
        let mut guard = handle.lock().expect("session poisoned");
        f(&mut guard)
    }

    fn scene(&self, name: &str) -> ServiceResult<&radshade_core::harness::Scene> {
        self.config
            .scenes
            .get(name)
            .ok_or_else(|| ServiceError::NotFound(format!("scene {name}")))
    }

    pub fn floor_png(&self, scene_name: &str, kind: EncodingKind) -> ServiceResult<Arc<Vec<u8>>> {
        let key = (scene_name.to_owned(), kind);
        if let Some(png) = self.floor_cache.lock().expect("cache poisoned").get(&key) {
            return Ok(png.clone());
        }
        let scene = self.scene(scene_name)?;
        let shader = Shader::new(scene.field()?, EncodingSpec::new(kind), self.lut.clone())?;
        let extent = FloorRect::new(0.0, 0.0, scene.room.width_m, scene.room.length_m);
        let h = (FLOOR_TEXELS_X as f64 * scene.room.length_m / scene.room.width_m).round() as u32;
        let img = bake_floor_texture(&shader, extent, FLOOR_TEXELS_X, h)?;
        let png = Arc::new(render::png_bytes(&img)?);
        self.floor_cache
            .lock()
            .expect("cache poisoned")
            .insert(key, png.clone());
        Ok(png)
    }
}

pub type SharedState = Arc<AppState>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(serde_json::json!({ "ok": true })) }))
        .route("/scenes", get(list_scenes))
        .route("/scenes/{name}", get(get_scene))
        .route("/assets/floor/{scene}/{encoding}", get(floor_asset))
        .route("/assets/legend/{encoding}", get(legend_asset))
        .route("/assets/stencil/{pattern}", get(stencil_asset))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/start", post(start_trial))
        .route("/sessions/{id}/move", post(move_avatar))
        .route("/sessions/{id}/pick", post(pick_card))
        .route("/sessions/{id}/end", post(end_trial))
        .route("/sessions/{id}/questionnaire", post(questionnaire))
        .route("/sessions/{id}/ranking", post(ranking))
        .route("/sessions/{id}/ws", get(ws_upgrade))
        .with_state(state)
}

pub fn app(config: ServiceConfig) -> Router {
    router(Arc::new(AppState::new(config)))
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(config)).await
}

fn png_response(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

fn parse_encoding(s: &str) -> ServiceResult<EncodingKind> {
    s.parse().map_err(|_| ServiceError::NotFound(format!("encoding {s}")))
}

async fn list_scenes(State(state): State<SharedState>) -> Json<Vec<String>> {
    let mut names: Vec<String> = state.config.scenes.keys().cloned().collect();
    names.sort();
    Json(names)
}

async fn get_scene(State(state): State<SharedState>, Path(name): Path<String>) -> ServiceResult<Response> {
    Ok(Json(state.scene(&name)?.clone()).into_response())
}

async fn floor_asset(
    State(state): State<SharedState>,
    Path((scene, encoding)): Path<(String, String)>,
) -> ServiceResult<Response> {
    let kind = parse_encoding(&encoding)?;
    let png = tokio::task::spawn_blocking(move || state.floor_png(&scene, kind))
        .await
        .map_err(|e| ServiceError::Io(e.to_string()))??;
    Ok(png_response(png.as_ref().clone()))
}

async fn legend_asset(State(state): State<SharedState>, Path(encoding): Path<String>) -> ServiceResult<Response> {
    let spec = EncodingSpec::new(parse_encoding(&encoding)?);
    let img = render::legend_strip(&spec, &state.lut, LEGEND_SIZE.0, LEGEND_SIZE.1)?;
    Ok(png_response(render::png_bytes(&img)?))
}

async fn stencil_asset(Path(pattern): Path<String>) -> ServiceResult<Response> {
    let pattern = match pattern.as_str() {
        "circle" => StencilPattern::Circle,
        "hex" => StencilPattern::Hex,
        "arrow" => StencilPattern::Arrow,
        other => return Err(ServiceError::NotFound(format!("stencil {other}"))),
    };
    let img = pattern.preview(STENCIL_PREVIEW);
    Ok(png_response(render::gray_png_bytes(&img)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub participant: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub schedule: ScheduleSummary,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MoveRequest {
    /// Floor direction `(x, z)`, length ≤ 1.
    pub intent: DVec2,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PickRequest {
    pub index: usize,
}

async fn create_session(
    State(state): State<SharedState>,
    Json(req): Json<CreateSession>,
) -> ServiceResult<Json<SessionCreated>> {
    let (id, schedule) = state.create_session(&req.participant, req.seed)?;
    Ok(Json(SessionCreated { id, schedule }))
}

async fn get_session(State(state): State<SharedState>, Path(id): Path<String>) -> ServiceResult<Json<SessionView>> {
    state.with_session(&id, |s| Ok(Json(s.view())))
}

async fn start_trial(State(state): State<SharedState>, Path(id): Path<String>) -> ServiceResult<Json<Tick>> {
    state.with_session(&id, |s| s.start_trial().map(Json))
}

async fn move_avatar(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Json(req): Json<MoveRequest>,
) -> ServiceResult<Json<Tick>> {
    state.with_session(&id, |s| s.move_avatar(req.intent, req.dt).map(Json))
}

async fn pick_card(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Json(req): Json<PickRequest>,
) -> ServiceResult<Json<PickOutcome>> {
    state.with_session(&id, |s| s.pick_card(req.index).map(Json))
}

async fn end_trial(State(state): State<SharedState>, Path(id): Path<String>) -> ServiceResult<Json<TrialRecord>> {
    state.with_session(&id, |s| s.end_trial().map(Json))
}

async fn questionnaire(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Json(body): Json<serde_json::Value>,
) -> ServiceResult<Json<serde_json::Value>> {
    state.with_session(&id, |s| {
        let n = s.submit_questionnaire(body)?;
        Ok(Json(serde_json::json!({ "stored": n })))
    })
}

async fn ranking(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    Json(body): Json<RankingSubmission>,
) -> ServiceResult<Json<serde_json::Value>> {
    state.with_session(&id, |s| {
        s.submit_ranking(body)?;
        Ok(Json(serde_json::json!({ "stored": true })))
    })
}

/// Messages a client sends over the WebSocket.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    State,
    Start,
    Move { intent: DVec2, dt: f64 },
    Pick { index: usize },
    End,
}

/// Messages the server sends back, one per client message.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State { session: SessionView },
    TrialStarted { tick: Tick },
    Tick { tick: Tick },
    Pick { outcome: PickOutcome },
    TrialEnded { record: TrialRecord, session: SessionView },
    Error { error: String, reason: String },
}

impl From<ServiceError> for ServerMessage {
    fn from(e: ServiceError) -> Self {
        ServerMessage::Error {
            error: e.kind().to_owned(),
            reason: e.to_string(),
        }
    }
}

pub fn handle_message(state: &AppState, id: &str, msg: ClientMessage) -> ServerMessage {
    let result = state.with_session(id, |s| {
        Ok(match msg {
            ClientMessage::State => ServerMessage::State { session: s.view() },
            ClientMessage::Start => ServerMessage::TrialStarted { tick: s.start_trial()? },
            ClientMessage::Move { intent, dt } => ServerMessage::Tick {
                tick: s.move_avatar(intent, dt)?,
            },
            ClientMessage::Pick { index } => ServerMessage::Pick {
                outcome: s.pick_card(index)?,
            },
            ClientMessage::End => {
                let record = s.end_trial()?;
                ServerMessage::TrialEnded {
                    record,
                    session: s.view(),
                }
            }
        })
    });
    result.unwrap_or_else(ServerMessage::from)
}

async fn ws_upgrade(
    State(state): State<SharedState>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> ServiceResult<Response> {
    state.session(&id)?;
    Ok(ws.on_upgrade(move |socket| ws_loop(socket, state, id)))
}

async fn ws_loop(mut socket: WebSocket, state: SharedState, id: String) {
    while let Some(Ok(msg)) = socket.recv().await {
        let reply = match msg {
            Message::Text(text) => match serde_json::from_str::<ClientMessage>(&text) {
                Ok(m) => handle_message(&state, &id, m),
                Err(e) => ServerMessage::from(ServiceError::BadRequest(e.to_string())),
            },
            Message::Close(_) => break,
            _ => continue,
        };
        let text = serde_json::to_string(&reply).expect("messages serialize");
        if socket.send(Message::Text(text.into())).await.is_err() {
            break;
        }
    }
}
