//! Sliding number tiles on a 4×4 board. A swipe pushes every tile toward one
//! edge and equal neighbours merge; a new tile appears after each move.
//!
//! The score is the sum of merged values and carries over retries. The level
//! is log2 of the best tile minus six, never below zero.

use playtest_core::scene::Frame;
use playtest_core::trace::{Action, Gesture, GestureKind};
use playtest_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::art::{self, button_rect};
use crate::{frame_gain, gestures_of, press, single_tap, Demonstrator, Game, GameId, InjectOutcome, Scene};

pub const N: usize = 4;
pub const CELL: u32 = 100;
pub const BOARD_X: u32 = 40;
pub const BOARD_Y: u32 = 200;

pub type Board = [[u32; N]; N];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Up, Dir::Down, Dir::Left, Dir::Right];

    /// The axis nearest to a displacement.
    pub fn of(dx: f64, dy: f64) -> Dir {
        if dx.abs() >= dy.abs() {
            if dx >= 0.0 {
                Dir::Right
            } else {
                Dir::Left
            }
        } else if dy >= 0.0 {
            Dir::Down
        } else {
            Dir::Up
        }
    }

    fn unit(self) -> (f64, f64) {
        match self {
            Dir::Up => (0.0, -1.0),
            Dir::Down => (0.0, 1.0),
            Dir::Left => (-1.0, 0.0),
            Dir::Right => (1.0, 0.0),
        }
    }
}

/// Pushes one line toward index 0. Returns the merged points.
fn slide_line(line: &mut [u32; N]) -> u64 {
    let tiles: Vec<u32> = line.iter().copied().filter(|&v| v != 0).collect();
    let mut out = Vec::with_capacity(N);
    let mut points = 0;
    let mut i = 0;
    while i < tiles.len() {
        if i + 1 < tiles.len() && tiles[i] == tiles[i + 1] {
            out.push(tiles[i] * 2);
            points += tiles[i] as u64 * 2;
            i += 2;
        } else {
            out.push(tiles[i]);
            i += 1;
        }
    }
    out.resize(N, 0);
    line.copy_from_slice(&out);
    points
}

/// Applies a move without spawning. Returns the merged points.
pub fn slide(board: &mut Board, dir: Dir) -> u64 {
    let mut points = 0;
    for k in 0..N {
        // cells of line k, ordered from the edge tiles move toward
        let cells: [(usize, usize); N] = std::array::from_fn(|i| match dir {
            Dir::Left => (k, i),
            Dir::Right => (k, N - 1 - i),
            Dir::Up => (i, k),
            Dir::Down => (N - 1 - i, k),
        });
        let mut line = cells.map(|(r, c)| board[r][c]);
        points += slide_line(&mut line);
        for (&(r, c), v) in cells.iter().zip(line) {
            board[r][c] = v;
        }
    }
    points
}

pub fn can_move(board: &Board) -> bool {
    Dir::ALL.iter().any(|&d| {
        let mut b = *board;
        slide(&mut b, d);
        b != *board
    })
}

fn tile_rgb(v: u32) -> [u8; 3] {
    let k = v.trailing_zeros().min(12) as u8;
    [250 - 8 * k, 240 - 14 * k, 220 - 16 * k]
}

#[derive(Debug, Clone)]
pub struct Slider {
    seed: u64,
    rng: ChaCha8Rng,
    scene: Scene,
    score: u64,
    level: u32,
    board: Board,
    step: u64,
}

impl Slider {
    pub fn new(seed: u64) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self { seed, rng, scene: Scene::Menu, score: 0, level: 0, board: [[0; N]; N], step: 0 };
        s.reset_board();
        s
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    fn reset_board(&mut self) {
        self.board = [[0; N]; N];
        self.spawn();
        self.spawn();
    }

    fn spawn(&mut self) {
        let empty: Vec<(usize, usize)> =
            (0..N).flat_map(|r| (0..N).map(move |c| (r, c))).filter(|&(r, c)| self.board[r][c] == 0).collect();
        if empty.is_empty() {
            return;
        }
        let (r, c) = empty[self.rng.gen_range(0..empty.len())];
        self.board[r][c] = if self.rng.gen_bool(0.9) { 2 } else { 4 };
    }

    fn play(&mut self, dir: Dir) -> bool {
        let before = self.board;
        let points = slide(&mut self.board, dir);
        if self.board == before {
            return false;
        }
        self.score += points;
        self.spawn();
        let best = self.board.iter().flatten().copied().max().unwrap_or(0);
        self.level = self.level.max(best.max(1).ilog2().saturating_sub(6));
        if !can_move(&self.board) {
            self.scene = Scene::Failed;
        }
        true
    }
}

impl Game for Slider {
    fn id(&self) -> GameId {
        GameId::Slider
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn render(&self) -> Frame {
        let mut f = art::bands(&[(160, [187, 173, 160]), (480, [205, 193, 180]), (160, [187, 173, 160])]);
        let gain = frame_gain(self.seed, self.step);
        match self.scene {
            Scene::Menu => art::draw_button(&mut f, "play", gain),
            Scene::Failed | Scene::Complete => art::draw_button(&mut f, "retry", gain),
            Scene::Playing => {
                f.fill_rect(BOARD_X as i64, BOARD_Y as i64, CELL * N as u32, CELL * N as u32, [170, 158, 146]);
                for (r, row) in self.board.iter().enumerate() {
                    for (c, &v) in row.iter().enumerate() {
                        if v != 0 {
                            let (x, y) = (BOARD_X + CELL * c as u32 + 4, BOARD_Y + CELL * r as u32 + 4);
                            f.fill_rect(x as i64, y as i64, CELL - 8, CELL - 8, tile_rgb(v));
                        }
                    }
                }
            }
        }
        f
    }

    fn inject(&mut self, trace: &str) -> InjectOutcome {
        self.step += 1;
        let gestures = gestures_of(trace);
        let changed = match self.scene {
            Scene::Playing => match gestures.first() {
                Some(g) if g.kind == GestureKind::Swipe => self.play(Dir::of(g.end.x - g.start.x, g.end.y - g.start.y)),
                _ => false,
            },
            _ => {
                if single_tap(&gestures).is_some_and(|p| button_rect().contains(p)) {
                    if self.scene == Scene::Failed {
                        self.reset_board();
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
        self.scene == Scene::Failed
    }

    fn scene(&self) -> Scene {
        self.scene
    }
}

impl Demonstrator for Slider {
    /// Keeps big tiles in the bottom-left corner: down, then left, right, up.
    fn oracle_move(&self, rng: &mut ChaCha8Rng) -> Action {
        if self.scene != Scene::Playing {
            return press(button_rect(), rng);
        }
        let dir = [Dir::Down, Dir::Left, Dir::Right, Dir::Up]
            .into_iter()
            .find(|&d| {
                let mut b = self.board;
                slide(&mut b, d);
                b != self.board
            })
            .unwrap_or(Dir::Down);
        let (ux, uy) = dir.unit();
        let len = rng.gen_range(100.0..160.0);
        let start = Point::new(rng.gen_range(200.0f64..280.0).round(), rng.gen_range(340.0f64..460.0).round());
        let end = Point::new((start.x + ux * len).round(), (start.y + uy * len).round());
        Action::new(vec![Gesture::between(start, end, rng.gen_range(0.15..0.3))], 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use playtest_core::trace::emit_trace;

    #[test]
    fn lines_merge_once_per_tile() {
        let mut l = [2, 2, 2, 2];
        assert_eq!(slide_line(&mut l), 8);
        assert_eq!(l, [4, 4, 0, 0]);
        let mut l = [0, 4, 4, 8];
        assert_eq!(slide_line(&mut l), 8);
        assert_eq!(l, [8, 8, 0, 0]);
        let mut l = [2, 0, 0, 2];
        slide_line(&mut l);
        assert_eq!(l, [4, 0, 0, 0]);
    }

    #[test]
    fn directions() {
        let mut b = [[0, 0, 0, 0], [2, 0, 0, 2], [0, 0, 0, 0], [0, 4, 0, 0]];
        slide(&mut b, Dir::Right);
        assert_eq!(b[1], [0, 0, 0, 4]);
        slide(&mut b, Dir::Up);
        assert_eq!(b[0], [0, 0, 0, 8]);
        assert_eq!(Dir::of(-30.0, 10.0), Dir::Left);
        assert_eq!(Dir::of(3.0, -40.0), Dir::Up);
    }

    #[test]
    fn stuck_board() {
        let b = [[2, 4, 2, 4], [4, 2, 4, 2], [2, 4, 2, 4], [4, 2, 4, 2]];
        assert!(!can_move(&b));
    }

    #[test]
    fn oracle_plays_until_stuck_and_retries() {
        let mut g = Slider::new(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut failed = false;
        let mut last = 0;
        for _ in 0..600 {
            let a = g.oracle_move(&mut rng);
            g.inject(&emit_trace(&a, crate::SCREEN, 0.0).unwrap());
            failed |= g.is_over();
            assert!(g.score >= last);
            last = g.score;
        }
        assert!(failed);
        assert!(g.score > 1000, "score {}", g.score);
    }
}
