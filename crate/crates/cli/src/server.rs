//! Websocket steering server. Each connection gets its own simulation,
//! owned by one task; socket reads and writes run on separate tasks and talk
//! to the owner through queues.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use modal_core::calibration::CalibrationData;
use modal_core::engine::SimConfig;
use modal_core::steering::{ServerEvent, Session};
use tokio::sync::{mpsc, Notify};
use tokio::time::{interval, Interval, MissedTickBehavior};
use tower_http::services::ServeDir;

/// Unsent tick metrics kept per session before the oldest are dropped.
pub const METRICS_BACKLOG: usize = 256;

pub struct AppState {
    pub calib: CalibrationData,
    /// Configuration of every new session.
    pub config: SimConfig,
    /// Where to write each finished session's replay scenario, if anywhere.
    pub replay_dir: Option<PathBuf>,
    sessions: AtomicU64,
}

impl AppState {
    pub fn new(calib: CalibrationData, config: SimConfig, replay_dir: Option<PathBuf>) -> Self {
        AppState { calib, config, replay_dir, sessions: AtomicU64::new(0) }
    }
}

/// Outgoing events of one session. Acks, errors and views are always kept;
/// when the client falls behind, tick metrics are dropped oldest first.
pub struct Outbox {
    queue: Mutex<VecDeque<ServerEvent>>,
    ready: Notify,
    metrics_cap: usize,
    dropped: AtomicU64,
}

impl Outbox {
    pub fn new(metrics_cap: usize) -> Self {
        Outbox { queue: Mutex::new(VecDeque::new()), ready: Notify::new(), metrics_cap, dropped: AtomicU64::new(0) }
    }

    pub fn push(&self, event: ServerEvent) {
        let is_metrics = |e: &ServerEvent| matches!(e, ServerEvent::TickMetrics(_));
        {
            let mut q = self.queue.lock().expect("outbox lock");
            if is_metrics(&event) && q.iter().filter(|e| is_metrics(e)).count() >= self.metrics_cap {
                if let Some(pos) = q.iter().position(is_metrics) {
                    q.remove(pos);
                    self.dropped.fetch_add(1, Ordering::Relaxed);
                }
            }
            q.push_back(event);
        }
        self.ready.notify_one();
    }

    pub fn try_pop(&self) -> Option<ServerEvent> {
        self.queue.lock().expect("outbox lock").pop_front()
    }

    pub async fn pop(&self) -> ServerEvent {
        loop {
            if let Some(e) = self.try_pop() {
                return e;
            }
            self.ready.notified().await;
        }
    }

    /// Number of metrics events discarded so far.
    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

const INDEX: &str = "<!doctype html><title>modal-sim</title><p>Steering endpoint: <code>/ws</code>. \
Start the server with <code>--assets &lt;dir&gt;</code> to serve a dashboard.</p>";

pub fn router(state: Arc<AppState>, assets: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(upgrade)).with_state(state);
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(INDEX) })),
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| run_session(socket, state))
}

fn ticker(speed: f64) -> Interval {
    let mut t = interval(Duration::from_secs_f64(1.0 / speed));
    t.set_missed_tick_behavior(MissedTickBehavior::Delay);
    t
}

async fn run_session(socket: WebSocket, state: Arc<AppState>) {
    let id = state.sessions.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut stream) = socket.split();
    let outbox = Arc::new(Outbox::new(METRICS_BACKLOG));
    let (commands, mut inbox) = mpsc::channel::<String>(64);

    let writer = {
        let outbox = outbox.clone();
        tokio::spawn(async move {
            loop {
                let event = outbox.pop().await;
                if sink.send(Message::Text(event.to_json().into())).await.is_err() {
                    break;
                }
            }
        })
    };
    let reader = {
        let outbox = outbox.clone();
        tokio::spawn(async move {
            while let Some(Ok(msg)) = stream.next().await {
                match msg {
                    Message::Text(text) => {
                        if commands.send(text.to_string()).await.is_err() {
                            break;
                        }
                    }
                    Message::Binary(_) => outbox.push(ServerEvent::Error {
                        id: None,
                        message: "binary frames are not supported; send JSON text".into(),
                    }),
                    Message::Close(_) => break,
                    Message::Ping(_) | Message::Pong(_) => {}
                }
            }
        })
    };

    let mut session = match Session::new(&state.calib, state.config.clone()) {
        Ok(s) => s,
        Err(e) => {
            outbox.push(ServerEvent::Error { id: None, message: e.to_string() });
            tokio::time::sleep(Duration::from_millis(100)).await;
            writer.abort();
            reader.abort();
            return;
        }
    };
    let mut clock = ticker(session.speed());
    loop {
        tokio::select! {
            biased;
            cmd = inbox.recv() => {
                let Some(text) = cmd else { break };
                let (was_paused, speed) = (session.is_paused(), session.speed());
                for event in session.handle_text(&text) {
                    outbox.push(event);
                }
                if session.speed() != speed {
                    clock = ticker(session.speed());
                } else if was_paused && !session.is_paused() {
                    clock.reset_immediately();
                }
            }
            _ = clock.tick(), if !session.is_paused() => {
                outbox.push(ServerEvent::TickMetrics(session.tick()));
            }
        }
    }
    reader.abort();
    writer.abort();

    if let Some(dir) = &state.replay_dir {
        let path = dir.join(format!("session-{id}.json"));
        match session.replay_scenario().to_json() {
            Ok(text) => {
                if let Err(e) = std::fs::write(&path, text) {
                    eprintln!("cannot write replay {}: {e}", path.display());
                }
            }
            Err(e) => eprintln!("cannot serialize replay: {e}"),
        }
    }
}

/// Binds and serves until ctrl-c. Prints the bound address once listening.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, assets: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on http://{}", listener.local_addr()?);
    serve_on(listener, state, assets).await
}

/// Serves on an already bound listener until ctrl-c.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    assets: Option<PathBuf>,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, assets))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
