//! HTTP front end: the `/session` WebSocket plus optional static files for
//! the trainer UI.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;

use crate::hub::{Frame, Hub, HubConfig, HubError};
use crate::messages::{parse_inbound, Inbound, Outbound};

/// Close code for protocol violations.
const CLOSE_PROTOCOL: u16 = 1002;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub hub: HubConfig,
    pub ui_dir: Option<PathBuf>,
    pub heartbeat: Duration,
    pub max_missed_pongs: u32,
}

impl ServiceConfig {
    pub fn new(hub: HubConfig) -> Self {
        Self { hub, ui_dir: None, heartbeat: Duration::from_secs(5), max_missed_pongs: 3 }
    }
}

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    ack: Frame,
    heartbeat: Duration,
    max_missed_pongs: u32,
}

/// A bound, running service.
pub struct Service {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl Service {
    pub async fn start(config: ServiceConfig, addr: SocketAddr) -> Result<Self, ServiceError> {
        let listener = TcpListener::bind(addr).await.map_err(ServiceError::Bind)?;
        let addr = listener.local_addr().map_err(ServiceError::Bind)?;
        let router = router(config)?;
        let (stop, stopped) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            axum::serve(listener, router)
                .with_graceful_shutdown(async {
                    let _ = stopped.await;
                })
                .await
        });
        Ok(Self { addr, stop: Some(stop), task })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Runs until the server fails or `shutdown` is requested elsewhere.
    pub async fn wait(self) -> std::io::Result<()> {
        let _stop = self.stop;
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }

    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("binding the listener: {0}")]
    Bind(std::io::Error),
    #[error(transparent)]
    Hub(#[from] HubError),
    #[error("ui directory {0} does not exist")]
    UiDir(PathBuf),
}

/// Builds the router and starts the engine thread behind it.
pub fn router(config: ServiceConfig) -> Result<Router, ServiceError> {
    let ack = Outbound::Ack {
        scene: Box::new(config.hub.scene.clone()),
        protocol: config.hub.scene.protocol,
        snapshot_hz: config.hub.snapshot_hz,
        input_mode: config.hub.input_mode,
    }
    .to_json()
    .into();
    let state = AppState {
        hub: Arc::new(Hub::start(config.hub)?),
        ack,
        heartbeat: config.heartbeat,
        max_missed_pongs: config.max_missed_pongs,
    };
    let router = Router::new().route("/session", get(session_ws)).with_state(state);
    Ok(match config.ui_dir {
        Some(dir) if !dir.is_dir() => return Err(ServiceError::UiDir(dir)),
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    })
}

async fn session_ws(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, state))
}

fn text(frame: &str) -> Message {
    Message::Text(frame.into())
}

async fn close(socket: &mut WebSocket, reason: &str) {
    let _ = socket.send(text(&Outbound::error(reason).to_json())).await;
    let frame = CloseFrame { code: CLOSE_PROTOCOL, reason: reason.into() };
    let _ = socket.send(Message::Close(Some(frame))).await;
}

async fn client(mut socket: WebSocket, state: AppState) {
    let patience = state.heartbeat * state.max_missed_pongs;
    let first = match tokio::time::timeout(patience, socket.recv()).await {
        Ok(Some(Ok(m))) => m,
        _ => return,
    };
    let hello = match &first {
        Message::Text(t) => parse_inbound(t.as_str()),
        _ => Err("expected a text frame".into()),
    };
    match hello {
        Ok(Inbound::Hello { role }) => tracing::info!(role, "client connected"),
        Ok(_) => return close(&mut socket, "protocol error: first message must be hello").await,
        Err(e) => return close(&mut socket, &format!("protocol error: {e}")).await,
    }

    let mut handle = state.hub.connect();
    if socket.send(text(&state.ack)).await.is_err() {
        return;
    }
    if let Some(snap) = state.hub.latest_snapshot() {
        if socket.send(text(&snap)).await.is_err() {
            return;
        }
    }

    let mut ping = tokio::time::interval_at(tokio::time::Instant::now() + state.heartbeat, state.heartbeat);
    let mut missed = 0u32;
    loop {
        tokio::select! {
            msg = socket.recv() => match msg {
                Some(Ok(Message::Text(t))) => {
                    let reply = match parse_inbound(t.as_str()) {
                        Ok(m) => {
                            handle.send(m);
                            None
                        }
                        Err(e) => Some(Outbound::error(format!("malformed message: {e}"))),
                    };
                    if let Some(r) = reply {
                        if socket.send(text(&r.to_json())).await.is_err() {
                            break;
                        }
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    if socket.send(text(&Outbound::error("binary frames are not accepted").to_json())).await.is_err() {
                        break;
                    }
                }
                Some(Ok(Message::Pong(_))) => missed = 0,
                Some(Ok(Message::Ping(_))) => {}
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
            },
            Some(frame) = handle.outbox.recv() => {
                if socket.send(text(&frame)).await.is_err() {
                    break;
                }
            }
            Ok(()) = handle.snapshots.changed() => {
                let snap = handle.snapshots.borrow_and_update().clone();
                if let Some(snap) = snap {
                    if socket.send(text(&snap)).await.is_err() {
                        break;
                    }
                }
            }
            _ = ping.tick() => {
                if missed >= state.max_missed_pongs {
                    tracing::info!("client missed {missed} heartbeats; closing");
                    let _ = socket.send(Message::Close(None)).await;
                    break;
                }
                missed += 1;
                if socket.send(Message::Ping(Default::default())).await.is_err() {
                    break;
                }
            }
        }
    }
}
