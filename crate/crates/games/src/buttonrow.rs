//! Flood the field from its top-left corner by pressing colour buttons.
//!
//! Each press recolours the captured region and absorbs neighbouring cells of
//! the new colour, one point per newly captured cell. Capturing the whole
//! field passes the level.

use std::collections::VecDeque;

use playtest_core::scene::Frame;
use playtest_core::trace::Action;
use playtest_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::art::{self, button_rect, icon_rect, FLOOD_COLORS};
use crate::{frame_gain, gestures_of, press, single_tap, Demonstrator, Game, GameId, InjectOutcome, Scene};

pub const SIDE: usize = 10;
pub const CELL: u32 = 40;
pub const FIELD_X: u32 = 40;
pub const FIELD_Y: u32 = 120;
pub const BUTTON_Y: f64 = 640.0;

pub type Field = [[u8; SIDE]; SIDE];

pub fn button_center(color: usize) -> Point {
    Point::new(80.0 + 80.0 * color as f64, BUTTON_Y)
}

const FIELD_RGB: [[u8; 3]; 5] = [[200, 50, 50], [60, 180, 70], [50, 90, 210], [215, 200, 50], [150, 60, 180]];

/// Cells connected to the corner through its colour.
pub fn captured(field: &Field) -> Vec<(usize, usize)> {
    let color = field[0][0];
    let mut seen = [[false; SIDE]; SIDE];
    let mut out = Vec::new();
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    seen[0][0] = true;
    while let Some((r, c)) = queue.pop_front() {
        out.push((r, c));
        let near = [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)];
        for (nr, nc) in near {
            if nr < SIDE && nc < SIDE && !seen[nr][nc] && field[nr][nc] == color {
                seen[nr][nc] = true;
                queue.push_back((nr, nc));
            }
        }
    }
    out
}

/// Recolours the captured region. Returns how many cells it grew by.
pub fn flood(field: &mut Field, color: u8) -> usize {
    let before = captured(field);
    for &(r, c) in &before {
        field[r][c] = color;
    }
    captured(field).len() - before.len()
}

#[derive(Debug, Clone)]
pub struct ButtonRow {
    seed: u64,
    rng: ChaCha8Rng,
    scene: Scene,
    score: u64,
    level: u32,
    field: Field,
    step: u64,
}

impl ButtonRow {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = Self::paint(&mut rng);
        Self { seed, rng, scene: Scene::Menu, score: 0, level: 0, field, step: 0 }
    }

    fn paint(rng: &mut ChaCha8Rng) -> Field {
        let mut f = [[0; SIDE]; SIDE];
        f.iter_mut().flatten().for_each(|v| *v = rng.gen_range(0..FLOOD_COLORS.len() as u8));
        f
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    fn choose(&mut self, color: u8) -> bool {
        if self.field[0][0] == color {
            return false;
        }
        self.score += flood(&mut self.field, color) as u64;
        if captured(&self.field).len() == SIDE * SIDE {
            self.level += 1;
            self.scene = Scene::Complete;
        }
        true
    }
}

impl Game for ButtonRow {
    fn id(&self) -> GameId {
        GameId::Buttonrow
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn render(&self) -> Frame {
        let mut f = art::bands(&[(580, [40, 44, 52]), (120, [64, 70, 82]), (100, [40, 44, 52])]);
        let gain = frame_gain(self.seed, self.step);
        match self.scene {
            Scene::Menu => art::draw_button(&mut f, "play", gain),
            Scene::Complete | Scene::Failed => art::draw_button(&mut f, "next", gain),
            Scene::Playing => {
                for (r, row) in self.field.iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        let (x, y) = (FIELD_X + CELL * c as u32, FIELD_Y + CELL * r as u32);
                        f.fill_rect(x as i64, y as i64, CELL, CELL, FIELD_RGB[v as usize]);
                    }
                }
                for (i, name) in FLOOD_COLORS.iter().enumerate() {
                    art::draw_icon(&mut f, name, button_center(i), gain);
                }
            }
        }
        f
    }

    fn inject(&mut self, trace: &str) -> InjectOutcome {
        self.step += 1;
        let tap = single_tap(&gestures_of(trace));
        let changed = match self.scene {
            Scene::Playing => {
                match tap.and_then(|p| (0..FLOOD_COLORS.len()).find(|&i| icon_rect(button_center(i)).contains(p))) {
                    Some(i) => self.choose(i as u8),
                    None => false,
                }
            }
            _ => {
                if tap.is_some_and(|p| button_rect().contains(p)) {
                    if self.scene == Scene::Complete {
                        self.field = Self::paint(&mut self.rng);
                    }
                    self.scene = Scene::Playing;
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
        false
    }

    fn scene(&self) -> Scene {
        self.scene
    }
}

impl Demonstrator for ButtonRow {
    /// Presses the colour that captures the most cells right now.
    fn oracle_move(&self, rng: &mut ChaCha8Rng) -> Action {
        if self.scene != Scene::Playing {
            return press(button_rect(), rng);
        }
        let current = self.field[0][0];
        let best = (0..FLOOD_COLORS.len() as u8)
            .filter(|&c| c != current)
            .max_by_key(|&c| {
                let mut f = self.field;
                (flood(&mut f, c), std::cmp::Reverse(c))
            })
            .expect("several colours");
        press(icon_rect(button_center(best as usize)), rng)
    }
}
