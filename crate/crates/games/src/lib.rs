//! Deterministic, seedable games that render frames and consume touch traces.
//!
//! Every game starts on a menu with a Play button, advances one turn per
//! injected trace, and renders purely from its state. Each also knows how to
//! demonstrate a good move, for headless demo recording.

pub mod art;
pub mod buttonrow;
pub mod linkpair;
pub mod slider;
pub mod slingshot;

use std::fmt;
use std::str::FromStr;

use playtest_core::scene::Frame;
use playtest_core::trace::{Action, Gesture, GestureKind};
use playtest_core::{Point, Rect, Screen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use buttonrow::ButtonRow;
pub use linkpair::{connectable, LinkPair};
pub use slider::Slider;
pub use slingshot::Slingshot;

pub const SCREEN: Screen = Screen::new(480, 800);
/// Share of demonstrated actions replaced by random ones.
pub const ORACLE_NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameId {
    Slingshot,
    Linkpair,
    Slider,
    Buttonrow,
}

impl GameId {
    pub const ALL: [GameId; 4] = [GameId::Slingshot, GameId::Linkpair, GameId::Slider, GameId::Buttonrow];

    pub fn as_str(self) -> &'static str {
        match self {
            GameId::Slingshot => "slingshot",
            GameId::Linkpair => "linkpair",
            GameId::Slider => "slider",
            GameId::Buttonrow => "buttonrow",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown game {0:?}")]
pub struct UnknownGame(pub String);

impl FromStr for GameId {
    type Err = UnknownGame;

    fn from_str(s: &str) -> Result<Self, UnknownGame> {
        GameId::ALL.into_iter().find(|g| g.as_str() == s).ok_or_else(|| UnknownGame(s.to_string()))
    }
}

/// Which screen a game is showing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scene {
    Menu,
    Playing,
    /// Level passed; a Next button continues.
    Complete,
    /// Level failed; a Retry button restarts it.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InjectOutcome {
    pub state_changed: bool,
}

/// The contract every simulated game implements. Nothing else crosses the
/// boundary to a tester: frames out, traces in, and the reported counters.
pub trait Game: Send {
    fn id(&self) -> GameId;
    fn seed(&self) -> u64;
    fn render(&self) -> Frame;
    /// Feeds one action's trace text. Unparseable or meaningless input is a no-op.
    fn inject(&mut self, trace: &str) -> InjectOutcome;
    fn score(&self) -> u64;
    fn level(&self) -> u32;
    fn is_over(&self) -> bool;
    fn scene(&self) -> Scene;
    fn screen(&self) -> Screen {
        SCREEN
    }
}

/// A game that can also play itself well, reading its own state.
pub trait Demonstrator: Game {
    /// The move a competent player would make now.
    fn oracle_move(&self, rng: &mut ChaCha8Rng) -> Action;

    /// A demonstrated action: usually the oracle move, sometimes noise.
    fn demonstrate(&self, rng: &mut ChaCha8Rng) -> Action {
        if self.scene() == Scene::Playing && rng.gen_bool(ORACLE_NOISE) {
            random_action(self.screen(), rng)
        } else {
            self.oracle_move(rng)
        }
    }
}

pub fn new_game(id: GameId, seed: u64) -> Box<dyn Game> {
    new_demonstrator(id, seed)
}

pub fn new_demonstrator(id: GameId, seed: u64) -> Box<dyn Demonstrator> {
    match id {
        GameId::Slingshot => Box::new(Slingshot::new(seed)),
        GameId::Linkpair => Box::new(LinkPair::new(seed)),
        GameId::Slider => Box::new(Slider::new(seed)),
        GameId::Buttonrow => Box::new(ButtonRow::new(seed)),
    }
}

/// One uniformly random tap or swipe (even odds) anywhere on the screen.
pub fn random_action<R: Rng + ?Sized>(screen: Screen, rng: &mut R) -> Action {
    let mut point = || Point::new(rng.gen_range(0..screen.width) as f64, rng.gen_range(0..screen.height) as f64);
    let (a, b) = (point(), point());
    let g = if rng.gen_bool(0.5) {
        Gesture::tap(a, rng.gen_range(0.03..0.2))
    } else {
        Gesture::between(a, b, rng.gen_range(0.1..1.0))
    };
    Action::new(vec![g], 0)
}

/// Gestures of a trace, or none when it does not parse.
pub(crate) fn gestures_of(trace: &str) -> Vec<Gesture> {
    Action::from_trace(trace, 0).map(|a| a.gestures).unwrap_or_default()
}

/// The single tap of an action, if that is all it holds.
pub(crate) fn single_tap(gestures: &[Gesture]) -> Option<Point> {
    match gestures {
        [g] if g.kind == GestureKind::Tap => Some(g.start),
        _ => None,
    }
}

/// Tap of a Function button with a little human jitter.
pub(crate) fn press(button: Rect, rng: &mut ChaCha8Rng) -> Action {
    let c = button.center();
    let p = Point::new(c.x + rng.gen_range(-6.0f64..=6.0).round(), c.y + rng.gen_range(-6.0f64..=6.0).round());
    Action::new(vec![Gesture::tap(p, rng.gen_range(0.05..0.15))], 0)
}

/// Per-frame brightness gain in [0.9, 1.1], a pure function of seed and step.
pub(crate) fn frame_gain(seed: u64, step: u64) -> f64 {
    let mut z = seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    0.9 + 0.2 * (z >> 11) as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in GameId::ALL {
            assert_eq!(id.as_str().parse::<GameId>(), Ok(id));
        }
        assert_eq!("tetris".parse::<GameId>(), Err(UnknownGame("tetris".into())));
    }

    #[test]
    fn gain_stays_in_range() {
        for step in 0..1000 {
            let g = frame_gain(7, step);
            assert!((0.9..=1.1).contains(&g));
        }
        assert_eq!(frame_gain(3, 4), frame_gain(3, 4));
    }

    #[test]
    fn random_actions_are_on_screen() {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        for _ in 0..500 {
            let a = random_action(SCREEN, &mut rng);
            assert_eq!(a.gestures.len(), 1);
            assert!(SCREEN.contains(a.gestures[0].start) && SCREEN.contains(a.gestures[0].end));
        }
    }
}
