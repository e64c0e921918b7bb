//! getevent-style multitouch traces.
//!
//! A trace file holds one event per line:
//!
//! ```text
//! [ 377065.779086] /dev/input/event2: EV_ABS ABS_MT_POSITION_X 000002ba
//! ```
//!
//! Contacts are bracketed by `ABS_MT_TRACKING_ID` markers: any id other than
//! `ffffffff` opens a contact and `ffffffff` closes it. Between the markers the
//! latest X is paired with the latest Y at every `SYN_REPORT`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Screen};

/// Distance in pixels separating taps from swipes.
pub const SWIPE_MIN_DIST: f64 = 20.0;
/// Duration in seconds used by the tap/swipe heuristics.
pub const SWIPE_MIN_DUR: f64 = 0.2;
/// Tracking id that closes a contact.
pub const CLOSE_ID: u32 = 0xFFFF_FFFF;
/// Coordinate reports emitted for a swipe, not counting the touch-down report.
pub const SWIPE_STEPS: u32 = 8;
/// Pause between consecutive gestures of one action, in microseconds.
pub const GESTURE_GAP_US: u64 = 50_000;
/// Device path written by the emitter.
pub const DEVICE: &str = "/dev/input/event2";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("malformed trace line {0}")]
    MalformedLine(usize),
    #[error("coordinate ({x}, {y}) lies outside the screen")]
    OutOfBounds { x: f64, y: f64 },
    #[error("an action needs at least one gesture")]
    EmptyAction,
}

/// Event timestamp in whole microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn from_secs_f64(secs: f64) -> Self {
        Timestamp((secs.max(0.0) * 1e6).round() as u64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn micros(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventCode {
    TrackingId,
    PositionX,
    PositionY,
    SynReport,
    /// Anything else; holds the `TYPE CODE VALUE` tail of the line verbatim.
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub ts: Timestamp,
    pub code: EventCode,
    pub value: u32,
}

impl TraceEvent {
    pub fn new(ts: Timestamp, code: EventCode, value: u32) -> Self {
        Self { ts, code, value }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[ {}] {}: ", self.ts, DEVICE)?;
        match &self.code {
            EventCode::TrackingId => write!(f, "EV_ABS ABS_MT_TRACKING_ID {:08x}", self.value),
            EventCode::PositionX => write!(f, "EV_ABS ABS_MT_POSITION_X {:08x}", self.value),
            EventCode::PositionY => write!(f, "EV_ABS ABS_MT_POSITION_Y {:08x}", self.value),
            EventCode::SynReport => write!(f, "EV_SYN SYN_REPORT {:08x}", self.value),
            EventCode::Other(tail) => f.write_str(tail),
        }
    }
}

/// Parses trace-file contents into events, in file order.
///
/// Lines that do not start with `[` (the `add device` / `name:` header and
/// blank lines) are skipped. A bracketed line that does not follow the grammar
/// yields [`TraceError::MalformedLine`] with its 1-based line number.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if !line.starts_with('[') {
            continue;
        }
        events.push(parse_line(line).ok_or(TraceError::MalformedLine(idx + 1))?);
    }
    Ok(events)
}

/// Same as [`parse_trace`] for raw bytes; invalid UTF-8 is replaced, never rejected.
pub fn parse_trace_bytes(bytes: &[u8]) -> Result<Vec<TraceEvent>, TraceError> {
    parse_trace(&String::from_utf8_lossy(bytes))
}

fn parse_line(line: &str) -> Option<TraceEvent> {
    let rest = line.strip_prefix('[')?;
    let (stamp, rest) = rest.split_once(']')?;
    let ts = parse_timestamp(stamp.trim_start_matches(' '))?;

    let mut tokens = rest.split_whitespace();
    let device = tokens.next()?;
    if !device.ends_with(':') || device.len() < 2 {
        return None;
    }
    let ty = tokens.next()?;
    let code = tokens.next()?;
    let value = tokens.next()?;
    if tokens.next().is_some() {
        return None;
    }

    let hex = parse_hex(value);
    let known = match (ty, code) {
        ("EV_ABS", "ABS_MT_TRACKING_ID") => Some(EventCode::TrackingId),
        ("EV_ABS", "ABS_MT_POSITION_X") => Some(EventCode::PositionX),
        ("EV_ABS", "ABS_MT_POSITION_Y") => Some(EventCode::PositionY),
        ("EV_SYN", "SYN_REPORT") => Some(EventCode::SynReport),
        _ => None,
    };
    match known {
        Some(code) => Some(TraceEvent::new(ts, code, hex?)),
        None => {
            // Other EV_ABS / EV_SYN codes still carry hex; other types
            // (e.g. `EV_KEY BTN_TOUCH DOWN`) may not.
            if (ty == "EV_ABS" || ty == "EV_SYN") && hex.is_none() {
                return None;
            }
            let tail = format!("{ty} {code} {value}");
            Some(TraceEvent::new(ts, EventCode::Other(tail), hex.unwrap_or(0)))
        }
    }
}

fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let (secs, frac) = s.split_once('.')?;
    if secs.is_empty() || secs.len() > 12 || !secs.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac.len() != 6 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let secs: u64 = secs.parse().ok()?;
    let micros: u64 = frac.parse().ok()?;
    Some(Timestamp(secs.checked_mul(1_000_000)?.checked_add(micros)?))
}

fn parse_hex(s: &str) -> Option<u32> {
    if s.is_empty() || s.len() > 8 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return None;
    }
    u32::from_str_radix(s, 16).ok()
}

/// Formats events one per line in the trace grammar, newline-terminated.
pub fn format_events(events: &[TraceEvent]) -> String {
    let mut out = String::with_capacity(events.len() * 64);
    for ev in events {
        out.push_str(&ev.to_string());
        out.push('\n');
    }
    out
}

/// One contact between a touch-down and a lift-off marker.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSegment {
    pub events: Vec<TraceEvent>,
    pub first: Point,
    pub last: Point,
    /// Timestamp of the opening tracking-id marker.
    pub ts_first: Timestamp,
    /// Timestamp of the closing marker, or of the last event for a dangling segment.
    pub ts_last: Timestamp,
    /// Input ended (or a new contact started) before this contact was closed.
    pub dangling: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<RawSegment>,
    /// Segments closed implicitly rather than by a close marker.
    pub dangling: usize,
    /// Bracketed segments that never reported a full coordinate.
    pub dropped_without_coordinates: usize,
}

struct OpenSegment {
    events: Vec<TraceEvent>,
    ts_open: Timestamp,
    x: Option<u32>,
    y: Option<u32>,
    pending: bool,
    first: Option<Point>,
    last: Option<Point>,
}

impl OpenSegment {
    fn new(ev: &TraceEvent) -> Self {
        Self {
            events: vec![ev.clone()],
            ts_open: ev.ts,
            x: None,
            y: None,
            pending: false,
            first: None,
            last: None,
        }
    }

    fn report(&mut self) {
        if let (true, Some(x), Some(y)) = (self.pending, self.x, self.y) {
            let p = Point::new(x as f64, y as f64);
            self.first.get_or_insert(p);
            self.last = Some(p);
            self.pending = false;
        }
    }

    fn finish(mut self, ts_last: Timestamp, dangling: bool, out: &mut Segmentation) {
        self.report();
        match (self.first, self.last) {
            (Some(first), Some(last)) => {
                if dangling {
                    out.dangling += 1;
                }
                out.segments.push(RawSegment {
                    events: self.events,
                    first,
                    last,
                    ts_first: self.ts_open,
                    ts_last: ts_last.max(self.ts_open),
                    dangling,
                });
            }
            _ => out.dropped_without_coordinates += 1,
        }
    }
}

/// Splits a temporally ordered event list into contacts.
///
/// A bare `00000000` tracking id inside an open contact also closes it when the
/// next non-SYN event is another tracking id or the input ends there.
pub fn segment_gestures(events: &[TraceEvent]) -> Segmentation {
    let mut out = Segmentation::default();
    let mut open: Option<OpenSegment> = None;

    for (i, ev) in events.iter().enumerate() {
        match ev.code {
            EventCode::TrackingId => {
                let closes = ev.value == CLOSE_ID
                    || (ev.value == 0 && open.is_some() && zero_id_closes(&events[i + 1..]));
                if closes {
                    if let Some(mut seg) = open.take() {
                        seg.events.push(ev.clone());
                        seg.finish(ev.ts, false, &mut out);
                    }
                } else {
                    if let Some(seg) = open.take() {
                        let ts = seg.events.last().map(|e| e.ts).unwrap_or(seg.ts_open);
                        seg.finish(ts, true, &mut out);
                    }
                    open = Some(OpenSegment::new(ev));
                }
            }
            EventCode::PositionX | EventCode::PositionY => {
                if let Some(seg) = open.as_mut() {
                    if ev.code == EventCode::PositionX {
                        seg.x = Some(ev.value);
                    } else {
                        seg.y = Some(ev.value);
                    }
                    seg.pending = true;
                    seg.events.push(ev.clone());
                }
            }
            EventCode::SynReport => {
                if let Some(seg) = open.as_mut() {
                    seg.events.push(ev.clone());
                    seg.report();
                }
            }
            EventCode::Other(_) => {
                if let Some(seg) = open.as_mut() {
                    seg.events.push(ev.clone());
                }
            }
        }
    }
    if let Some(seg) = open.take() {
        let ts = seg.events.last().map(|e| e.ts).unwrap_or(seg.ts_open);
        seg.finish(ts, true, &mut out);
    }
    out
}

fn zero_id_closes(rest: &[TraceEvent]) -> bool {
    match rest.iter().find(|e| e.code != EventCode::SynReport) {
        None => true,
        Some(next) => next.code == EventCode::TrackingId,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GestureKind {
    Tap,
    Swipe,
}

impl GestureKind {
    /// Distance alone decides the kind; duration never does.
    pub fn classify(dist: f64) -> Self {
        if dist >= SWIPE_MIN_DIST {
            GestureKind::Swipe
        } else {
            GestureKind::Tap
        }
    }
}

impl fmt::Display for GestureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GestureKind::Tap => "Tap",
            GestureKind::Swipe => "Swipe",
        })
    }
}

/// A classified touch gesture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gesture {
    pub kind: GestureKind,
    pub start: Point,
    pub end: Point,
    /// Seconds from touch-down to lift-off.
    pub dur: f64,
}

impl Gesture {
    pub fn tap(at: Point, dur: f64) -> Self {
        Self { kind: GestureKind::Tap, start: at, end: at, dur }
    }

    /// A gesture between two points, its kind decided by distance.
    pub fn between(start: Point, end: Point, dur: f64) -> Self {
        Self { kind: GestureKind::classify(start.distance(end)), start, end, dur }
    }

    pub fn dist(&self) -> f64 {
        self.start.distance(self.end)
    }

    /// Vertical sine of the displacement; positive for downward swipes. `None` for taps.
    pub fn sinx(&self) -> Option<f64> {
        match self.kind {
            GestureKind::Tap => None,
            GestureKind::Swipe => {
                let d = self.dist();
                if d == 0.0 {
                    Some(0.0)
                } else {
                    Some(((self.end.y - self.start.y) / d).clamp(-1.0, 1.0))
                }
            }
        }
    }
}

pub fn classify_segment(seg: &RawSegment) -> Gesture {
    let dur = seg.ts_last.micros().saturating_sub(seg.ts_first.micros()) as f64 / 1e6;
    Gesture::between(seg.first, seg.last, dur)
}

/// All gestures recorded in one trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub gestures: Vec<Gesture>,
    /// Session timestamp of the originating trace file, milliseconds.
    pub demo_ts: u64,
}

impl Action {
    pub fn new(gestures: Vec<Gesture>, demo_ts: u64) -> Self {
        Self { gestures, demo_ts }
    }

    /// Parses, segments and classifies a trace file. The result may hold no gestures.
    pub fn from_trace(text: &str, demo_ts: u64) -> Result<Self, TraceError> {
        let events = parse_trace(text)?;
        let gestures = segment_gestures(&events).segments.iter().map(classify_segment).collect();
        Ok(Self::new(gestures, demo_ts))
    }

    pub fn kinds(&self) -> Vec<GestureKind> {
        self.gestures.iter().map(|g| g.kind).collect()
    }
}

/// Emits the events that replay `action`, starting at `base_ts` seconds.
///
/// Gestures are separated by [`GESTURE_GAP_US`]. Every gesture gets a fresh,
/// increasing tracking id; a tap reports one coordinate, a swipe is linearized
/// into [`SWIPE_STEPS`] further reports spread uniformly over its duration.
pub fn emit_events(action: &Action, screen: Screen, base_ts: f64) -> Result<Vec<TraceEvent>, TraceError> {
    if action.gestures.is_empty() {
        return Err(TraceError::EmptyAction);
    }
    for g in &action.gestures {
        for p in [g.start, g.end] {
            if !p.x.is_finite() || !p.y.is_finite() || !screen.contains(p) {
                return Err(TraceError::OutOfBounds { x: p.x, y: p.y });
            }
        }
    }

    let mut events = Vec::new();
    let mut t0 = Timestamp::from_secs_f64(base_ts).micros();
    for (n, g) in action.gestures.iter().enumerate() {
        let id = n as u32 + 1;
        let dur_us = (g.dur.max(0.0) * 1e6).round() as u64;
        let push_point = |events: &mut Vec<TraceEvent>, ts: u64, p: Point| {
            let ts = Timestamp(ts);
            events.push(TraceEvent::new(ts, EventCode::PositionX, p.x.round() as u32));
            events.push(TraceEvent::new(ts, EventCode::PositionY, p.y.round() as u32));
            events.push(TraceEvent::new(ts, EventCode::SynReport, 0));
        };

        events.push(TraceEvent::new(Timestamp(t0), EventCode::TrackingId, id));
        push_point(&mut events, t0, g.start);
        if g.kind == GestureKind::Swipe {
            for k in 1..=SWIPE_STEPS as u64 {
                let f = k as f64 / SWIPE_STEPS as f64;
                let p = Point::new(g.start.x + (g.end.x - g.start.x) * f, g.start.y + (g.end.y - g.start.y) * f);
                push_point(&mut events, t0 + dur_us * k / SWIPE_STEPS as u64, p);
            }
        }
        let t_up = Timestamp(t0 + dur_us);
        events.push(TraceEvent::new(t_up, EventCode::TrackingId, CLOSE_ID));
        events.push(TraceEvent::new(t_up, EventCode::SynReport, 0));
        t0 += dur_us + GESTURE_GAP_US;
    }
    Ok(events)
}

/// [`emit_events`] rendered as trace-file text.
pub fn emit_trace(action: &Action, screen: Screen, base_ts: f64) -> Result<String, TraceError> {
    emit_events(action, screen, base_ts).map(|ev| format_events(&ev))
}
