//! Demo recording: snapshot, prompt, record one action, repeat.

use std::path::{Path, PathBuf};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use playtest_core::scene::Frame;
use playtest_core::trace::{emit_trace, format_events};
use playtest_games::{Demonstrator, GameId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::wire::{Phase, PointerTrace, WireMessage};
use crate::HarnessError;

/// Snapshot period for human sources, seconds.
pub const DEFAULT_PERIOD: f64 = 9.0;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Oracle,
    Ui,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub game: GameId,
    pub seed: u64,
    /// Seconds between snapshots.
    pub period: f64,
    pub source: SourceKind,
    /// Timestamps of every `<t>.ppm`/`<t>.txt` pair, ascending.
    pub pairs: Vec<u64>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST))?)?)
    }

    fn save(&self, dir: &Path) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(std::fs::write(dir.join(MANIFEST), text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSession {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Actions(usize),
    Seconds(f64),
}

/// Whoever plays during a demo.
pub trait ActionSource {
    fn kind(&self) -> SourceKind;

    /// The action taken on `frame`, as trace text.
    fn act(&mut self, game: &dyn Demonstrator, frame: &Frame, period: f64) -> Result<String, HarnessError>;
}

/// The scripted player. Runs on a virtual clock, without waiting.
#[derive(Debug, Clone)]
pub struct OracleSource {
    rng: ChaCha8Rng,
}

impl OracleSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl ActionSource for OracleSource {
    fn kind(&self) -> SourceKind {
        SourceKind::Oracle
    }

    fn act(&mut self, game: &dyn Demonstrator, frame: &Frame, _period: f64) -> Result<String, HarnessError> {
        let action = game.demonstrate(&mut self.rng);
        Ok(emit_trace(&action, game.screen(), frame.t as f64 / 1000.0)?)
    }
}

/// Input arriving from a browser.
#[derive(Debug, Clone, PartialEq)]
pub enum UiInput {
    Pointer { phase: Phase, x: f64, y: f64, t_ms: u64 },
    Stop,
}

/// A human at the web UI. Frames and prompts go out through `send`,
/// pointer input comes in through `input`.
pub struct UiSource {
    input: Receiver<UiInput>,
    send: Box<dyn FnMut(WireMessage) + Send>,
    stopped: bool,
}

impl UiSource {
    pub fn new(input: Receiver<UiInput>, send: impl FnMut(WireMessage) + Send + 'static) -> Self {
        Self { input, send: Box::new(send), stopped: false }
    }
}

impl ActionSource for UiSource {
    fn kind(&self) -> SourceKind {
        SourceKind::Ui
    }

    /// Collects gestures until the next snapshot tick. With nothing drawn the
    /// wait stretches to three periods before giving up.
    fn act(&mut self, game: &dyn Demonstrator, frame: &Frame, period: f64) -> Result<String, HarnessError> {
        if self.stopped {
            return Err(HarnessError::Stopped);
        }
        (self.send)(WireMessage::frame(frame));
        (self.send)(WireMessage::status(game.score(), game.level(), 0));
        (self.send)(WireMessage::prompt());
        let start = Instant::now();
        let (tick, give_up) = (Duration::from_secs_f64(period), Duration::from_secs_f64(3.0 * period));
        let mut pointer = PointerTrace::new(game.screen());
        loop {
            let elapsed = start.elapsed();
            let done = pointer.gestures() > 0 && !pointer.in_contact();
            if done && elapsed >= tick {
                break;
            }
            if elapsed >= give_up {
                if pointer.gestures() > 0 {
                    break;
                }
                return Err(HarnessError::SourceTimeout(frame.t));
            }
            let wait = if done { tick } else { give_up }.saturating_sub(elapsed);
            match self.input.recv_timeout(wait) {
                Ok(UiInput::Pointer { phase, x, y, t_ms }) => pointer.push(phase, x, y, t_ms),
                Ok(UiInput::Stop) | Err(RecvTimeoutError::Disconnected) => {
                    self.stopped = true;
                    return if pointer.gestures() > 0 && !pointer.in_contact() {
                        Ok(format_events(pointer.events()))
                    } else {
                        Err(HarnessError::Stopped)
                    };
                }
                Err(RecvTimeoutError::Timeout) => {}
            }
        }
        Ok(format_events(pointer.events()))
    }
}

/// Records a demo session into `out`, which must be empty or absent.
///
/// Every snapshot `<t>.ppm` gets its `<t>.txt`, `t` being milliseconds since
/// the session started (virtual for the oracle). A source timeout still leaves
/// the pair, with an empty trace, and ends the session with the error.
pub fn record_demo(
    game: &mut dyn Demonstrator,
    source: &mut dyn ActionSource,
    limit: Limit,
    period: f64,
    out: &Path,
) -> Result<DemoSession, HarnessError> {
    if out.exists() && std::fs::read_dir(out)?.next().is_some() {
        return Err(HarnessError::OutputNotEmpty(out.to_path_buf()));
    }
    std::fs::create_dir_all(out)?;
    let live = source.kind() == SourceKind::Ui;
    let mut manifest =
        Manifest { game: game.id(), seed: game.seed(), period, source: source.kind(), pairs: Vec::new() };
    let started = Instant::now();
    let mut outcome = Ok(());
    for i in 0u64.. {
        let clock = if live { started.elapsed().as_millis() as u64 } else { (i as f64 * period * 1000.0).round() as u64 };
        let t = manifest.pairs.last().map_or(clock, |&last| clock.max(last + 1));
        let more = match limit {
            Limit::Actions(n) => (i as usize) < n,
            Limit::Seconds(s) => (t as f64) < s * 1000.0,
        };
        if !more {
            break;
        }
        let mut frame = game.render();
        frame.t = t;
        frame.write_ppm(&out.join(format!("{t}.ppm")))?;
        manifest.pairs.push(t);
        let text = match source.act(game, &frame, period) {
            Ok(text) => text,
            Err(e) => {
                std::fs::write(out.join(format!("{t}.txt")), "")?;
                if !matches!(e, HarnessError::Stopped) {
                    outcome = Err(e);
                }
                break;
            }
        };
        std::fs::write(out.join(format!("{t}.txt")), &text)?;
        game.inject(&text);
    }
    manifest.save(out)?;
    outcome.map(|()| DemoSession { dir: out.to_path_buf(), manifest })
}
