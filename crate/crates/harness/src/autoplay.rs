//! Autonomous play with a tactic set, and the random baseline.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use playtest_core::apply::{action_to_events, match_context, synthesize_action, PlannedAction};
use playtest_core::infer::TacticSet;
use playtest_core::scene::{build_context, AbstractContext, Context, Frame, IconSpec};
use playtest_core::trace::emit_trace;
use playtest_games::{random_action, Game, GameId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Matching threshold used on every frame.
pub const THRESHOLD: f64 = 0.90;
pub const DEFAULT_BUDGET: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Actions(u64),
    Seconds(f64),
}

impl std::str::FromStr for Budget {
    type Err = String;

    /// `500` is an action count, `30s` a time budget.
    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_suffix('s') {
            Some(secs) => secs.parse().ok().filter(|v: &f64| *v >= 0.0).map(Budget::Seconds),
            None => s.parse().ok().map(Budget::Actions),
        }
        .ok_or_else(|| format!("bad budget {s:?}; expected N or Ns"))
    }
}

/// Where the issued actions went. `valid + invalid + fallback` is every action.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Tactic-driven (or baseline) actions that changed the game.
    pub valid: u64,
    pub invalid: u64,
    /// Random taps issued because no tactic applied.
    pub fallback: u64,
    /// Fallback taps that happened to change the game.
    pub fallback_valid: u64,
    /// Frames that failed recognition or tactics that failed to concretize.
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub game: GameId,
    pub seed: u64,
    pub score: u64,
    pub level: u32,
    pub actions_issued: u64,
    pub valid_action_rate: f64,
    pub distinct_signatures: usize,
    pub fallback_rate: f64,
    pub wall_seconds: f64,
    pub counts: Counts,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Equal in every field but the wall time.
    pub fn same_outcome(&self, other: &TestReport) -> bool {
        TestReport { wall_seconds: 0.0, ..self.clone() } == TestReport { wall_seconds: 0.0, ..other.clone() }
    }
}

/// One autoplay step, as shown to an observer.
#[derive(Debug, Clone)]
pub struct Step<'a> {
    pub frame: &'a Frame,
    pub context: Option<&'a Context>,
    pub planned: &'a PlannedAction,
    pub changed: bool,
    pub score: u64,
    pub level: u32,
    pub actions: u64,
}

struct Tally {
    started: Instant,
    counts: Counts,
    signatures: BTreeSet<AbstractContext>,
    issued: u64,
}

impl Tally {
    fn new() -> Self {
        Self { started: Instant::now(), counts: Counts::default(), signatures: BTreeSet::new(), issued: 0 }
    }

    fn within(&self, budget: Budget) -> bool {
        match budget {
            Budget::Actions(n) => self.issued < n,
            Budget::Seconds(s) => self.started.elapsed().as_secs_f64() < s,
        }
    }

    fn report(self, game: &dyn Game) -> TestReport {
        let c = &self.counts;
        let rate = |n: u64| if self.issued == 0 { 0.0 } else { n as f64 / self.issued as f64 };
        TestReport {
            game: game.id(),
            seed: game.seed(),
            score: game.score(),
            level: game.level(),
            actions_issued: self.issued,
            valid_action_rate: rate(c.valid + c.fallback_valid),
            distinct_signatures: self.signatures.len(),
            fallback_rate: rate(c.fallback),
            wall_seconds: self.started.elapsed().as_secs_f64(),
            counts: self.counts,
        }
    }
}

/// Plays `game` with `tactics` until the budget runs out.
///
/// Each step renders, recognizes the frame, picks a matching tactic and
/// concretizes it; without a usable tactic one random tap is issued instead.
/// Only frames go in and trace text comes out.
pub fn run_test(game: &mut dyn Game, specs: &[IconSpec], tactics: &TacticSet, budget: Budget, seed: u64) -> TestReport {
    run_test_observed(game, specs, tactics, budget, seed, &mut |_| true)
}

/// [`run_test`] that shows every step to `observe`; returning false stops the run.
pub fn run_test_observed(
    game: &mut dyn Game,
    specs: &[IconSpec],
    tactics: &TacticSet,
    budget: Budget,
    seed: u64,
    observe: &mut dyn FnMut(&Step) -> bool,
) -> TestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let screen = game.screen();
    let mut tally = Tally::new();
    while tally.within(budget) {
        let frame = game.render();
        let context = match build_context(&frame, specs, THRESHOLD) {
            Ok(c) => Some(c),
            Err(_) => {
                tally.counts.errors += 1;
                None
            }
        };
        let planned = context
            .as_ref()
            .and_then(|ctx| {
                tally.signatures.insert(ctx.signature.clone());
                let id = match_context(ctx, tactics, &mut rng)?;
                synthesize_action(tactics, id, ctx, screen, &mut rng)
                    .map_err(|_| tally.counts.errors += 1)
                    .ok()
            })
            .unwrap_or_else(|| PlannedAction::fallback(screen, &mut rng));
        let t = tally.issued as f64;
        let changed = match action_to_events(&planned, screen, t) {
            Ok(text) => game.inject(&text).state_changed,
            Err(_) => {
                tally.counts.errors += 1;
                false
            }
        };
        tally.issued += 1;
        let c = &mut tally.counts;
        match (planned.is_fallback(), changed) {
            (true, ch) => {
                c.fallback += 1;
                c.fallback_valid += u64::from(ch);
            }
            (false, true) => c.valid += 1,
            (false, false) => c.invalid += 1,
        }
        let step = Step {
            frame: &frame,
            context: context.as_ref(),
            planned: &planned,
            changed,
            score: game.score(),
            level: game.level(),
            actions: tally.issued,
        };
        if !observe(&step) {
            break;
        }
    }
    tally.report(game)
}

/// Uniformly random taps and swipes anywhere on the screen. Frames are still
/// recognized so that the signature count compares with [`run_test`].
pub fn run_random_baseline(game: &mut dyn Game, specs: &[IconSpec], budget: Budget, seed: u64) -> TestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let screen = game.screen();
    let mut tally = Tally::new();
    while tally.within(budget) {
        let frame = game.render();
        match build_context(&frame, specs, THRESHOLD) {
            Ok(ctx) => {
                tally.signatures.insert(ctx.signature);
            }
            Err(_) => tally.counts.errors += 1,
        }
        let action = random_action(screen, &mut rng);
        let text = emit_trace(&action, screen, tally.issued as f64).expect("random actions stay on screen");
        let changed = game.inject(&text).state_changed;
        tally.issued += 1;
        if changed {
            tally.counts.valid += 1;
        } else {
            tally.counts.invalid += 1;
        }
    }
    tally.report(game)
}
