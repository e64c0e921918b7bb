//! JSON messages exchanged with the browser over `/session`.

use base64::Engine;
use playtest_core::scene::Frame;
use playtest_core::trace::{EventCode, Timestamp, TraceEvent, CLOSE_ID};
use playtest_core::Screen;
use playtest_games::GameId;
use serde::{Deserialize, Serialize};

pub const PROMPT_TEXT: &str = "Please take an action to play the game";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Down,
    Move,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    StartDemo,
    Stop,
    StartPlay,
}

/// A gesture drawn over the observed frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub kind: String,
    pub start: [f64; 2],
    pub end: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WireMessage {
    /// Raw RGB, base64.
    Frame { t: u64, w: u32, h: u32, data: String },
    Prompt { text: String },
    Pointer { phase: Phase, x: f64, y: f64, t_ms: u64 },
    Control {
        cmd: Command,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        game: Option<GameId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Status {
        score: u64,
        level: u32,
        actions: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        overlay: Vec<Overlay>,
    },
}

impl WireMessage {
    pub fn frame(frame: &Frame) -> Self {
        WireMessage::Frame {
            t: frame.t,
            w: frame.width(),
            h: frame.height(),
            data: base64::engine::general_purpose::STANDARD.encode(frame.pixels()),
        }
    }

    pub fn prompt() -> Self {
        WireMessage::Prompt { text: PROMPT_TEXT.to_string() }
    }

    pub fn status(score: u64, level: u32, actions: u64) -> Self {
        WireMessage::Status { score, level, actions, error: None, overlay: Vec::new() }
    }

    /// Decodes a frame message back into pixels.
    pub fn to_frame(&self) -> Option<Frame> {
        let WireMessage::Frame { t, w, h, data } = self else { return None };
        let pixels = base64::engine::general_purpose::STANDARD.decode(data).ok()?;
        Frame::new(*w, *h, pixels, *t).ok()
    }
}

/// Turns pointer messages into trace events, one contact per down..up.
///
/// Coordinates are clamped to the screen and rounded; client milliseconds
/// become trace timestamps as they are.
#[derive(Debug, Clone)]
pub struct PointerTrace {
    screen: Screen,
    events: Vec<TraceEvent>,
    next_id: u32,
    down: bool,
    last_us: u64,
}

impl PointerTrace {
    pub fn new(screen: Screen) -> Self {
        Self { screen, events: Vec::new(), next_id: 1, down: false, last_us: 0 }
    }

    fn report(&mut self, ts: Timestamp, x: f64, y: f64) {
        let x = x.round().clamp(0.0, (self.screen.width - 1) as f64) as u32;
        let y = y.round().clamp(0.0, (self.screen.height - 1) as f64) as u32;
        self.events.push(TraceEvent::new(ts, EventCode::PositionX, x));
        self.events.push(TraceEvent::new(ts, EventCode::PositionY, y));
        self.events.push(TraceEvent::new(ts, EventCode::SynReport, 0));
    }

    /// Feeds one pointer message. Moves and ups without a down are ignored.
    pub fn push(&mut self, phase: Phase, x: f64, y: f64, t_ms: u64) {
        // timestamps never run backwards within a file
        let us = (t_ms * 1000).max(self.last_us);
        self.last_us = us;
        let ts = Timestamp(us);
        match phase {
            Phase::Down => {
                if self.down {
                    self.push(Phase::Up, x, y, t_ms);
                }
                self.events.push(TraceEvent::new(ts, EventCode::TrackingId, self.next_id));
                self.next_id += 1;
                self.report(ts, x, y);
                self.down = true;
            }
            Phase::Move if self.down => self.report(ts, x, y),
            Phase::Up if self.down => {
                self.report(ts, x, y);
                self.events.push(TraceEvent::new(ts, EventCode::TrackingId, CLOSE_ID));
                self.events.push(TraceEvent::new(ts, EventCode::SynReport, 0));
                self.down = false;
            }
            _ => {}
        }
    }

    /// Whether a contact is open.
    pub fn in_contact(&self) -> bool {
        self.down
    }

    /// Completed contacts so far.
    pub fn gestures(&self) -> usize {
        (self.next_id - 1) as usize - usize::from(self.down)
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }
}
