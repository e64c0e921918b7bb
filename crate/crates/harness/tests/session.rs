use std::time::Duration;

use futures::{SinkExt, StreamExt};
use playtest_core::trace::{parse_trace, segment_gestures, GestureKind};
use playtest_games::GameId;
use playtest_harness::demo::{Limit, Manifest};
use playtest_harness::serve::{self, ServeConfig};
use playtest_harness::wire::{Command, Phase, WireMessage};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

async fn start(config: ServeConfig) -> std::net::SocketAddr {
    let listener = serve::bind(0).await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve::serve(listener, config));
    addr
}

async fn send(ws: &mut Socket, msg: WireMessage) {
    ws.send(Message::Text(serde_json::to_string(&msg).unwrap())).await.unwrap();
}

async fn next(ws: &mut Socket) -> WireMessage {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(20), ws.next()).await.expect("server went quiet");
        if let Message::Text(t) = msg.unwrap().unwrap() {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn until_prompt(ws: &mut Socket) -> Vec<WireMessage> {
    let mut seen = Vec::new();
    loop {
        let m = next(ws).await;
        let done = matches!(m, WireMessage::Prompt { .. });
        seen.push(m);
        if done {
            return seen;
        }
    }
}

fn pointer(phase: Phase, x: f64, y: f64, t_ms: u64) -> WireMessage {
    WireMessage::Pointer { phase, x, y, t_ms }
}

#[tokio::test(flavor = "multi_thread")]
async fn index_is_served() {
    let addr = start(ServeConfig::default()).await;
    let mut tcp = TcpStream::connect(addr).await.unwrap();
    tcp.write_all(b"GET / HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").await.unwrap();
    let mut body = String::new();
    tcp.read_to_string(&mut body).await.unwrap();
    assert!(body.starts_with("HTTP/1.1 200"));
    assert!(body.contains("<canvas"));
    assert!(body.contains("/session"));
}

#[tokio::test(flavor = "multi_thread")]
async fn scripted_demo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServeConfig { out: dir.path().to_path_buf(), period: 0.4, limit: Limit::Actions(2), ..ServeConfig::default() };
    let addr = start(config).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session")).await.unwrap();

    send(&mut ws, WireMessage::Control { cmd: Command::StartDemo, game: Some(GameId::Slider), seed: Some(1) }).await;
    let first = until_prompt(&mut ws).await;
    assert!(matches!(first[0], WireMessage::Frame { w: 480, h: 800, .. }));
    let WireMessage::Prompt { text } = first.last().unwrap() else { unreachable!() };
    assert_eq!(text, "Please take an action to play the game");

    // a drag, then a stray move outside contact that must be ignored
    send(&mut ws, pointer(Phase::Down, 100.4, 400.0, 1000)).await;
    for (i, x) in [120.0, 150.0, 180.0].into_iter().enumerate() {
        send(&mut ws, pointer(Phase::Move, x, 401.0, 1040 + 40 * i as u64)).await;
    }
    send(&mut ws, pointer(Phase::Up, 199.6, 402.0, 1150)).await;
    send(&mut ws, pointer(Phase::Move, 10.0, 10.0, 1200)).await;
    until_prompt(&mut ws).await;

    // a click
    send(&mut ws, pointer(Phase::Down, 300.0, 300.0, 3000)).await;
    send(&mut ws, pointer(Phase::Up, 300.0, 300.0, 3060)).await;
    let last = next(&mut ws).await;
    assert!(matches!(last, WireMessage::Status { error: None, .. }), "{last:?}");

    let session = dir.path().join("slider-1-0");
    let manifest = Manifest::load(&session).unwrap();
    assert_eq!(manifest.pairs.len(), 2);
    let expected = [(GestureKind::Swipe, (100.4, 400.0), (199.6, 402.0), 150), (GestureKind::Tap, (300.0, 300.0), (300.0, 300.0), 60)];
    for (t, (kind, a, b, ms)) in manifest.pairs.iter().zip(expected) {
        let text = std::fs::read_to_string(session.join(format!("{t}.txt"))).unwrap();
        let seg = segment_gestures(&parse_trace(&text).unwrap());
        assert_eq!((seg.dangling, seg.dropped_without_coordinates), (0, 0));
        assert_eq!(seg.segments.len(), 1);
        let s = &seg.segments[0];
        assert!((s.first.x - a.0).abs() <= 2.0 && (s.first.y - a.1).abs() <= 2.0, "{:?}", s.first);
        assert!((s.last.x - b.0).abs() <= 2.0 && (s.last.y - b.1).abs() <= 2.0, "{:?}", s.last);
        let dur_ms = (s.ts_last.micros() - s.ts_first.micros()) as f64 / 1000.0;
        assert!((dur_ms - ms as f64).abs() <= 20.0, "{dur_ms}");
        assert_eq!(playtest_core::trace::classify_segment(s).kind, kind);
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn observed_play_streams_frames() {
    let config = ServeConfig { budget: 3, ..ServeConfig::default() };
    let addr = start(config).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session")).await.unwrap();
    send(&mut ws, WireMessage::Control { cmd: Command::StartPlay, game: Some(GameId::Buttonrow), seed: Some(2) }).await;
    let (mut frames, mut statuses) = (0, Vec::new());
    while statuses.len() < 4 {
        match next(&mut ws).await {
            WireMessage::Frame { .. } => frames += 1,
            WireMessage::Status { actions, overlay, error, .. } => {
                assert!(error.is_none());
                statuses.push((actions, overlay.len()));
            }
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(frames, 3);
    assert_eq!(statuses.iter().map(|s| s.0).collect::<Vec<_>>(), vec![1, 2, 3, 3]);
    assert!(statuses[..3].iter().all(|s| s.1 >= 1));
}

#[tokio::test(flavor = "multi_thread")]
async fn second_session_is_refused_while_busy() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServeConfig { out: dir.path().to_path_buf(), period: 5.0, ..ServeConfig::default() };
    let addr = start(config).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session")).await.unwrap();
    send(&mut ws, WireMessage::Control { cmd: Command::StartDemo, game: Some(GameId::Slider), seed: None }).await;
    until_prompt(&mut ws).await;
    send(&mut ws, WireMessage::Control { cmd: Command::StartPlay, game: None, seed: None }).await;
    assert!(matches!(next(&mut ws).await, WireMessage::Status { error: Some(_), .. }));
    send(&mut ws, WireMessage::Control { cmd: Command::Stop, game: None, seed: None }).await;
    assert!(matches!(next(&mut ws).await, WireMessage::Status { error: None, .. }));
    assert_eq!(Manifest::load(&dir.path().join("slider-0-0")).unwrap().pairs.len(), 1);
}
