//! HTTP + WebSocket server for live sessions.
//!
//! `POST /sessions` creates a session in the lobby, `GET /sessions/{id}/stream`
//! upgrades to the message stream, `GET /health` reports liveness. Each
//! stream owns its session's event loop; the only shared mutable state is
//! the session table and the dataset file, each behind its own lock.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::serve::ListenerExt;
use axum::{Json, Router};
use tokenlab_core::live::{LiveSession, LiveState, LiveStep};
use tokenlab_core::market::{Side, SUBJECT};
use tokenlab_core::rng::{derive_seed, Stream};
use tokenlab_core::tokens::{build_token_set, InformationToken};
use tokenlab_core::TokenId;
use tokio::sync::Mutex;

use crate::config::ExperimentConfig;
use crate::dataset::append_record;
use crate::protocol::{
    decode_client, encode, ClientMessage, ClockMode, CreateSession, Decoded, ServerMessage, SessionCreated,
};

struct Slot {
    session: Arc<Mutex<LiveSession>>,
    attached: bool,
}

pub struct ServerState {
    config: ExperimentConfig,
    tokens: Vec<InformationToken>,
    sessions: Mutex<HashMap<u64, Slot>>,
    next_id: AtomicU64,
    dataset: std::sync::Mutex<PathBuf>,
}

impl ServerState {
    pub fn new(config: ExperimentConfig) -> anyhow::Result<Arc<Self>> {
        config.validate()?;
        let tokens = build_token_set(&config.virtue, &config.templates)?;
        let dataset = config.server_dataset();
        if let Some(dir) = dataset.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Arc::new(ServerState {
            config,
            tokens,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            dataset: std::sync::Mutex::new(dataset),
        }))
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset.lock().expect("dataset lock").clone()
    }
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(state)
}

/// Serves until the listener fails. Nagle is off: every frame is a small,
/// latency-sensitive message.
pub async fn serve(state: Arc<ServerState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    let listener = listener.tap_io(|tcp| {
        // Best effort; a socket that refuses only costs latency.
        let _ = tcp.set_nodelay(true);
    });
    axum::serve(listener, router(state)).await
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ServerMessage::Error { message: message.into() })).into_response()
}

async fn health(State(state): State<Arc<ServerState>>) -> Json<serde_json::Value> {
    let n = state.sessions.lock().await.len();
    Json(serde_json::json!({ "status": "ok", "sessions": n }))
}

async fn create_session(State(state): State<Arc<ServerState>>, Json(body): Json<CreateSession>) -> Response {
    let token_id: TokenId = match body.token_id.parse() {
        Ok(t) => t,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("{e}")),
    };
    let id = state.next_id.fetch_add(1, Ordering::SeqCst);
    let seed = body.seed.unwrap_or_else(|| derive_seed(state.config.master_seed, Stream::Session, id));
    let token = state.tokens[token_id.index()].clone();
    let subject_id = state.config.server.subject_id_base + id;
    let session = match LiveSession::new(token, &state.config.market, seed, subject_id) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let steps = session.steps();
    state.sessions.lock().await.insert(id, Slot { session: Arc::new(Mutex::new(session)), attached: false });
    let created = SessionCreated { session_id: id, token_id, seed, steps, stream: format!("/sessions/{id}/stream") };
    (StatusCode::CREATED, Json(created)).into_response()
}

async fn session_status(State(state): State<Arc<ServerState>>, Path(id): Path<u64>) -> Response {
    let session = match state.sessions.lock().await.get(&id) {
        Some(slot) => slot.session.clone(),
        None => return error(StatusCode::NOT_FOUND, format!("no session {id}")),
    };
    let s = session.lock().await;
    Json(serde_json::json!({
        "session_id": id,
        "token_id": s.token().id,
        "state": s.state(),
        "step": s.step(),
        "steps": s.steps(),
        "seed": s.seed(),
    }))
    .into_response()
}

async fn stream(State(state): State<Arc<ServerState>>, Path(id): Path<u64>, ws: WebSocketUpgrade) -> Response {
    let session = {
        let mut sessions = state.sessions.lock().await;
        match sessions.get_mut(&id) {
            None => return error(StatusCode::NOT_FOUND, format!("no session {id}")),
            Some(slot) if slot.attached => {
                return error(StatusCode::CONFLICT, format!("session {id} already has a client"))
            }
            Some(slot) => {
                slot.attached = true;
                slot.session.clone()
            }
        }
    };
    ws.on_upgrade(move |socket| async move {
        let mut conn = Connection { state, session_id: id, session, socket, refs: HashMap::new() };
        // A send failure means the client went away; nothing else to do.
        let _ = conn.run().await;
    })
}

struct Connection {
    state: Arc<ServerState>,
    session_id: u64,
    session: Arc<Mutex<LiveSession>>,
    socket: WebSocket,
    /// Ticket reference → client reference.
    refs: HashMap<u64, Option<u64>>,
}

type Sent = Result<(), axum::Error>;

impl Connection {
    async fn send(&mut self, msg: &ServerMessage) -> Sent {
        self.socket.send(Message::Text(encode(msg).into())).await
    }

    async fn send_state(&mut self) -> Sent {
        let (book, tick) = {
            let s = self.session.lock().await;
            (
                ServerMessage::book(s.step(), s.snapshot()),
                ServerMessage::ClockTick { step: s.step(), steps: s.steps(), state: s.state() },
            )
        };
        self.send(&book).await?;
        self.send(&tick).await
    }

    async fn run(&mut self) -> Sent {
        let artifact = {
            let s = self.session.lock().await;
            let t = s.token();
            ServerMessage::TokenArtifact {
                session_id: self.session_id,
                token_id: t.id,
                modality: t.modality,
                level: t.level,
                artifact_text: t.artifact_text.clone(),
            }
        };
        self.send(&artifact).await?;
        self.send_state().await?;

        let tick = Duration::from_millis(self.state.config.server.tick_ms.max(1));
        let mut ticker: Option<tokio::time::Interval> = None;
        loop {
            let next_tick = async {
                match ticker.as_mut() {
                    Some(t) => {
                        t.tick().await;
                    }
                    None => std::future::pending::<()>().await,
                }
            };
            tokio::select! {
                incoming = self.socket.recv() => {
                    let text = match incoming {
                        None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return Ok(()),
                        Some(Ok(Message::Text(t))) => t.to_string(),
                        Some(Ok(_)) => continue,
                    };
                    if let Some(mode) = self.handle(&text).await? {
                        if mode == ClockMode::Realtime && ticker.is_none() {
                            let mut t = tokio::time::interval(tick);
                            t.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
                            t.tick().await;
                            ticker = Some(t);
                        }
                    }
                }
                _ = next_tick => {
                    if !self.step_once().await? {
                        ticker = None;
                    }
                }
            }
        }
    }

    /// Handles one client frame. Returns the clock mode when the session starts.
    async fn handle(&mut self, text: &str) -> Result<Option<ClockMode>, axum::Error> {
        match decode_client(text) {
            Decoded::Invalid(e) => self.send(&ServerMessage::Error { message: e }).await.map(|_| None),
            Decoded::BadOrder { client_ref, error } => {
                self.send(&ServerMessage::OrderRejected { client_ref, reason: format!("invalid: {error}") }).await?;
                Ok(None)
            }
            Decoded::Message(ClientMessage::Start { mode }) => {
                let started = self.session.lock().await.start();
                match started {
                    Ok(()) => {
                        self.send_state().await?;
                        Ok(Some(mode))
                    }
                    Err(e) => self.send(&ServerMessage::Error { message: e.to_string() }).await.map(|_| None),
                }
            }
            Decoded::Message(ClientMessage::Order(req)) => {
                let verdict = self.session.lock().await.submit(req.ticket());
                match verdict {
                    Ok(r) => {
                        self.refs.insert(r, req.client_ref);
                    }
                    Err(reason) => {
                        let msg =
                            ServerMessage::OrderRejected { client_ref: req.client_ref, reason: reason.to_string() };
                        self.send(&msg).await?;
                    }
                }
                Ok(None)
            }
            Decoded::Message(ClientMessage::Advance { steps }) => {
                for _ in 0..steps {
                    if !self.step_once().await? {
                        break;
                    }
                }
                Ok(None)
            }
        }
    }

    /// Runs one step and reports it. Returns false once the session is over.
    async fn step_once(&mut self) -> Result<bool, axum::Error> {
        let outcome = {
            let mut s = self.session.lock().await;
            match s.state() {
                LiveState::Running => s.advance().map_err(|e| e.to_string()),
                LiveState::Lobby => Err("session has not started".to_owned()),
                LiveState::Closed => return Ok(false),
            }
        };
        let step: LiveStep = match outcome {
            Ok(step) => step,
            Err(message) => {
                self.send(&ServerMessage::Error { message }).await?;
                return Ok(false);
            }
        };
        for (r, order_id) in &step.accepted {
            let client_ref = self.refs.remove(r).flatten();
            self.send(&ServerMessage::OrderAccepted { client_ref, order_id: *order_id, step: step.step }).await?;
        }
        for (r, reason) in &step.rejected {
            let client_ref = self.refs.remove(r).flatten();
            self.send(&ServerMessage::OrderRejected { client_ref, reason: reason.to_string() }).await?;
        }
        for t in &step.fills {
            let side = if t.buyer == SUBJECT { Side::Buy } else { Side::Sell };
            self.send(&ServerMessage::Fill { price: t.price, qty: t.quantity, side, step: t.step }).await?;
        }
        self.send_state().await?;
        if step.finished {
            self.finish().await?;
        }
        Ok(!step.finished)
    }

    async fn finish(&mut self) -> Sent {
        let (record, first) = {
            let mut s = self.session.lock().await;
            let first = !s.is_finalized();
            (s.finalize(), first)
        };
        let record = match record {
            Ok(r) => r,
            Err(e) => return self.send(&ServerMessage::Error { message: e.to_string() }).await,
        };
        if first {
            let written = {
                let path = self.state.dataset.lock().expect("dataset lock");
                append_record(&path, &record)
            };
            if let Err(e) = written {
                self.send(&ServerMessage::Error { message: format!("could not record session: {e}") }).await?;
            }
        }
        self.send(&ServerMessage::SessionEnd { net_profit: record.net_profit, record }).await
    }
}
