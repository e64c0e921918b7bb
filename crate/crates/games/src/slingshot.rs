//! Pull the arrow back, let go, hit the board.
//!
//! The arrow flies in a straight line opposite the pull, covering
//! `POWER · dur · dist` pixels. A hit scores 100 per level (counting from 1).
//! Three hits pass the level; ten shots without three hits fail it.

use playtest_core::scene::Frame;
use playtest_core::trace::{Action, Gesture, GestureKind};
use playtest_core::{Point, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::art::{self, button_rect, icon_rect};
use crate::{frame_gain, gestures_of, press, single_tap, Demonstrator, Game, GameId, InjectOutcome, Scene};

pub const LAUNCH: Point = Point::new(150.0, 600.0);
pub const POWER: f64 = 6.0;
pub const SHOTS_PER_LEVEL: u32 = 10;
pub const HITS_TO_PASS: u32 = 3;
const TARGET_X: (i32, i32) = (320, 440);
const TARGET_Y: (i32, i32) = (300, 700);
const GROUND_Y: u32 = 720;

#[derive(Debug, Clone)]
pub struct Slingshot {
    seed: u64,
    rng: ChaCha8Rng,
    scene: Scene,
    score: u64,
    level: u32,
    shots: u32,
    hits: u32,
    target: Point,
    step: u64,
}

/// Whether the segment from `a` to `b` touches the rectangle (closed).
pub fn segment_hits_rect(a: Point, b: Point, r: Rect) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-dx, a.x - r.x), (dx, r.x + r.w - a.x), (-dy, a.y - r.y), (dy, r.y + r.h - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

impl Slingshot {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = Self::draw_target(&mut rng);
        Self { seed, rng, scene: Scene::Menu, score: 0, level: 0, shots: 0, hits: 0, target, step: 0 }
    }

    fn draw_target(rng: &mut ChaCha8Rng) -> Point {
        Point::new(rng.gen_range(TARGET_X.0..=TARGET_X.1) as f64, rng.gen_range(TARGET_Y.0..=TARGET_Y.1) as f64)
    }

    pub fn target(&self) -> Point {
        self.target
    }

    pub fn shots(&self) -> u32 {
        self.shots
    }

    pub fn hits(&self) -> u32 {
        self.hits
    }

    fn start_level(&mut self) {
        self.shots = 0;
        self.hits = 0;
        self.target = Self::draw_target(&mut self.rng);
        self.scene = Scene::Playing;
    }

    /// Where a release of `g` sends the arrow, if `g` pulls the arrow.
    pub fn flight(g: &Gesture) -> Option<(Point, Point)> {
        if g.kind != GestureKind::Swipe || !icon_rect(LAUNCH).contains(g.start) {
            return None;
        }
        let (vx, vy) = (g.end.x - g.start.x, g.end.y - g.start.y);
        let dist = vx.hypot(vy);
        let range = POWER * g.dur * dist;
        Some((LAUNCH, Point::new(LAUNCH.x - vx / dist * range, LAUNCH.y - vy / dist * range)))
    }

    fn shoot(&mut self, g: &Gesture) -> bool {
        let Some((from, to)) = Self::flight(g) else { return false };
        self.shots += 1;
        if segment_hits_rect(from, to, icon_rect(self.target)) {
            self.hits += 1;
            self.score += 100 * (self.level as u64 + 1);
        }
        self.target = Self::draw_target(&mut self.rng);
        if self.hits >= HITS_TO_PASS {
            self.level += 1;
            self.scene = Scene::Complete;
        } else if self.shots >= SHOTS_PER_LEVEL {
            self.scene = Scene::Failed;
        }
        true
    }
}

impl Game for Slingshot {
    fn id(&self) -> GameId {
        GameId::Slingshot
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn render(&self) -> Frame {
        let mut f = art::bands(&[(GROUND_Y, [120, 170, 215]), (800 - GROUND_Y, [96, 140, 72])]);
        let gain = frame_gain(self.seed, self.step);
        match self.scene {
            Scene::Menu => art::draw_button(&mut f, "play", gain),
            Scene::Complete => art::draw_button(&mut f, "next", gain),
            Scene::Failed => art::draw_button(&mut f, "retry", gain),
            Scene::Playing => {
                art::draw_icon(&mut f, "arrow", LAUNCH, gain);
                art::draw_icon(&mut f, "board", self.target, gain);
                for i in 0..SHOTS_PER_LEVEL - self.shots {
                    f.fill_rect(16 + 16 * i as i64, 16, 10, 10, [250, 250, 250]);
                }
                for i in 0..self.hits {
                    f.fill_rect(400 + 20 * i as i64, 16, 14, 14, [220, 40, 40]);
                }
            }
        }
        f
    }

    fn inject(&mut self, trace: &str) -> InjectOutcome {
        self.step += 1;
        let gestures = gestures_of(trace);
        let changed = match self.scene {
            Scene::Playing => gestures.first().is_some_and(|g| self.shoot(g)),
            _ => {
                if single_tap(&gestures).is_some_and(|p| button_rect().contains(p)) {
                    if self.scene == Scene::Menu {
                        self.score = 0;
                    }
                    self.start_level();
                    true
                } else {
                    false
                }
            }
        };
        InjectOutcome { state_changed: changed }
    }

    fn score(&self) -> u64 {
        self.score
    }

    fn level(&self) -> u32 {
        self.level
    }

    fn is_over(&self) -> bool {
        self.scene == Scene::Failed
    }

    fn scene(&self) -> Scene {
        self.scene
    }
}

impl Demonstrator for Slingshot {
    /// Pulls straight away from the board, give or take a pixel or two,
    /// with enough power to reach it.
    fn oracle_move(&self, rng: &mut ChaCha8Rng) -> Action {
        if self.scene != Scene::Playing {
            return press(button_rect(), rng);
        }
        let (tx, ty) = (self.target.x - LAUNCH.x, self.target.y - LAUNCH.y);
        let reach = tx.hypot(ty);
        let (ux, uy) = (tx / reach, ty / reach);
        let pull = rng.gen_range(80.0..140.0);
        let wobble = rng.gen_range(-2.0..=2.0);
        let end = Point::new(
            (LAUNCH.x - pull * ux - wobble * uy).round(),
            (LAUNCH.y - pull * uy + wobble * ux).round(),
        );
        let dur = (1.25 * reach / (POWER * pull)).max(0.3) + rng.gen_range(0.0..0.2);
        Action::new(vec![Gesture::between(LAUNCH, end, (dur * 1000.0).round() / 1000.0)], 0)
    }
}
