//! The UI host: static page at `/`, one play or demo session per WebSocket at `/session`.
//!
//! A session runs on its own blocking thread and talks to the socket only
//! through two queues: wire messages out, pointer input in.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use playtest_core::infer::{Provenance, TacticSet};
use playtest_core::scene::{load_icon_dir, IconSpec};
use playtest_games::{art, new_demonstrator, new_game, GameId};
use tokio::net::TcpListener;
use tokio::sync::mpsc::{unbounded_channel, UnboundedSender};

use crate::autoplay::{run_test_observed, Budget, DEFAULT_BUDGET};
use crate::demo::{record_demo, DemoSession, Limit, UiInput, UiSource};
use crate::wire::{Command, Overlay, WireMessage};
use crate::HarnessError;

const INDEX: &str = include_str!("../static/index.html");
/// Fastest an observed run may go.
const MIN_FRAME_GAP: Duration = Duration::from_millis(100);

#[derive(Debug, Clone)]
pub struct ServeConfig {
    /// Demo sessions are written under this directory.
    pub out: PathBuf,
    pub tactics: Option<PathBuf>,
    pub icons: Option<PathBuf>,
    pub period: f64,
    pub limit: Limit,
    pub budget: u64,
    /// When set, the first demo goes exactly here and its result is reported.
    pub single_demo: Option<SingleDemo>,
}

#[derive(Debug, Clone)]
pub struct SingleDemo {
    pub dir: PathBuf,
    pub game: GameId,
    pub seed: u64,
    pub done: Arc<Mutex<Option<mpsc::Sender<Result<DemoSession, String>>>>>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("sessions"),
            tactics: None,
            icons: None,
            period: crate::demo::DEFAULT_PERIOD,
            limit: Limit::Actions(40),
            budget: DEFAULT_BUDGET,
            single_demo: None,
        }
    }
}

pub fn router(config: ServeConfig) -> Router {
    Router::new()
        .route("/", get(|| async { Html(INDEX) }))
        .route("/session", get(upgrade))
        .with_state(Arc::new(config))
}

/// Serves until the process ends.
pub async fn serve(listener: TcpListener, config: ServeConfig) -> std::io::Result<()> {
    axum::serve(listener, router(config)).await
}

pub async fn bind(port: u16) -> std::io::Result<TcpListener> {
    TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], port))).await
}

async fn upgrade(ws: WebSocketUpgrade, State(config): State<Arc<ServeConfig>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, config))
}

fn error_status(msg: impl ToString) -> WireMessage {
    WireMessage::Status { score: 0, level: 0, actions: 0, error: Some(msg.to_string()), overlay: Vec::new() }
}

/// A running session as seen from the socket.
struct Running {
    input: Option<mpsc::Sender<UiInput>>,
    stop: Arc<AtomicBool>,
    finished: Arc<AtomicBool>,
}

async fn connection(socket: WebSocket, config: Arc<ServeConfig>) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = unbounded_channel::<WireMessage>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            let text = serde_json::to_string(&msg).expect("wire messages serialize");
            if sink.send(Message::Text(text)).await.is_err() {
                break;
            }
        }
    });

    let mut running: Option<Running> = None;
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let msg = match serde_json::from_str::<WireMessage>(&text) {
            Ok(m) => m,
            Err(e) => {
                let _ = out_tx.send(error_status(format!("bad message: {e}")));
                continue;
            }
        };
        let busy = running.as_ref().is_some_and(|r| !r.finished.load(Ordering::SeqCst));
        match msg {
            WireMessage::Pointer { phase, x, y, t_ms } => {
                if let Some(input) = running.as_ref().and_then(|r| r.input.as_ref()) {
                    let _ = input.send(UiInput::Pointer { phase, x, y, t_ms });
                }
            }
            WireMessage::Control { cmd: Command::Stop, .. } => {
                if let Some(r) = &running {
                    r.stop.store(true, Ordering::SeqCst);
                    if let Some(input) = &r.input {
                        let _ = input.send(UiInput::Stop);
                    }
                }
            }
            WireMessage::Control { .. } if busy => {
                let _ = out_tx.send(error_status("a session is already running"));
            }
            WireMessage::Control { cmd: Command::StartDemo, game, seed } => {
                running = Some(start_demo(&config, game, seed, out_tx.clone()));
            }
            WireMessage::Control { cmd: Command::StartPlay, game, seed } => {
                running = Some(start_play(&config, game, seed, out_tx.clone()));
            }
            _ => {
                let _ = out_tx.send(error_status("clients send only pointer and control messages"));
            }
        }
    }
    // the browser went away: let the session wind down on its own
    if let Some(r) = running {
        r.stop.store(true, Ordering::SeqCst);
        if let Some(input) = r.input {
            let _ = input.send(UiInput::Stop);
        }
    }
    drop(out_tx);
    let _ = writer.await;
}

fn fresh_dir(config: &ServeConfig, game: GameId, seed: u64) -> PathBuf {
    (0u32..)
        .map(|n| config.out.join(format!("{game}-{seed}-{n}")))
        .find(|p| !p.exists())
        .expect("some name is free")
}

fn start_demo(
    config: &ServeConfig,
    game: Option<GameId>,
    seed: Option<u64>,
    out: UnboundedSender<WireMessage>,
) -> Running {
    let (input_tx, input_rx) = mpsc::channel();
    let stop = Arc::new(AtomicBool::new(false));
    let finished = Arc::new(AtomicBool::new(false));
    let single = config.single_demo.clone();
    let (game, seed, dir) = match &single {
        Some(s) => (s.game, s.seed, s.dir.clone()),
        None => {
            let (g, s) = (game.unwrap_or(GameId::Slingshot), seed.unwrap_or(0));
            (g, s, fresh_dir(config, g, s))
        }
    };
    let (limit, period) = (config.limit, config.period);
    let done_flag = finished.clone();
    std::thread::spawn(move || {
        let sink = out.clone();
        let mut source = UiSource::new(input_rx, move |m| {
            let _ = sink.send(m);
        });
        let mut g = new_demonstrator(game, seed);
        let result = record_demo(&mut *g, &mut source, limit, period, &dir);
        let mut status = WireMessage::status(g.score(), g.level(), 0);
        if let (WireMessage::Status { error, .. }, Err(e)) = (&mut status, &result) {
            *error = Some(e.to_string());
        }
        let _ = out.send(status);
        done_flag.store(true, Ordering::SeqCst);
        if let Some(s) = single {
            if let Some(tx) = s.done.lock().expect("lock").take() {
                let _ = tx.send(result.map_err(|e| e.to_string()));
            }
        }
    });
    Running { input: Some(input_tx), stop, finished }
}

fn load_specs(config: &ServeConfig, game: GameId) -> Result<Vec<IconSpec>, HarnessError> {
    match &config.icons {
        Some(dir) => Ok(load_icon_dir(&dir.join(game.as_str())).or_else(|_| load_icon_dir(dir))?),
        None => Ok(art::icon_specs(game)),
    }
}

fn start_play(
    config: &ServeConfig,
    game: Option<GameId>,
    seed: Option<u64>,
    out: UnboundedSender<WireMessage>,
) -> Running {
    let stop = Arc::new(AtomicBool::new(false));
    let finished = Arc::new(AtomicBool::new(false));
    let (game, seed) = (game.unwrap_or(GameId::Slingshot), seed.unwrap_or(0));
    let tactics = match &config.tactics {
        Some(path) => TacticSet::load(path).map_err(HarnessError::from),
        None => Ok(TacticSet::new(Provenance::default(), Vec::new())),
    };
    let specs = load_specs(config, game);
    let budget = config.budget;
    let (stop_flag, done_flag) = (stop.clone(), finished.clone());
    std::thread::spawn(move || {
        let (tactics, specs) = match (tactics, specs) {
            (Ok(t), Ok(s)) => (t, s),
            (Err(e), _) | (_, Err(e)) => {
                let _ = out.send(error_status(e));
                done_flag.store(true, Ordering::SeqCst);
                return;
            }
        };
        let mut g = new_game(game, seed);
        let mut last = Instant::now() - MIN_FRAME_GAP;
        let report = run_test_observed(&mut *g, &specs, &tactics, Budget::Actions(budget), seed, &mut |step| {
            let wait = MIN_FRAME_GAP.saturating_sub(last.elapsed());
            std::thread::sleep(wait);
            last = Instant::now();
            let overlay = step
                .planned
                .gestures
                .iter()
                .map(|g| Overlay { kind: g.kind.to_string(), start: [g.start.x, g.start.y], end: [g.end.x, g.end.y] })
                .collect();
            let sent = out.send(WireMessage::frame(step.frame)).is_ok()
                && out
                    .send(WireMessage::Status {
                        score: step.score,
                        level: step.level,
                        actions: step.actions,
                        error: None,
                        overlay,
                    })
                    .is_ok();
            sent && !stop_flag.load(Ordering::SeqCst)
        });
        let _ = out.send(WireMessage::status(report.score, report.level, report.actions_issued));
        done_flag.store(true, Ordering::SeqCst);
    });
    Running { input: None, stop, finished }
}
