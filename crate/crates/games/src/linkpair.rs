//! Match two equal fruits that can be joined by a path of at most three
//! straight segments over empty cells. The path may run outside the board.

use std::collections::VecDeque;

use playtest_core::scene::Frame;
use playtest_core::trace::{Action, Gesture, GestureKind};
use playtest_core::Point;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::art::{self, button_rect, icon_rect, FRUITS};
use crate::{frame_gain, gestures_of, press, single_tap, Demonstrator, Game, GameId, InjectOutcome, Scene};

pub const ROWS: usize = 6;
pub const COLS: usize = 8;
pub const PITCH: f64 = 56.0;
pub const ORIGIN: Point = Point::new(44.0, 188.0);
pub const PAIR_POINTS: u64 = 10;

pub type Board = Vec<Vec<Option<u8>>>;

#[derive(Debug, Clone)]
pub struct LinkPair {
    seed: u64,
    rng: ChaCha8Rng,
    scene: Scene,
    score: u64,
    level: u32,
    board: Board,
    step: u64,
}

pub fn cell_center(r: usize, c: usize) -> Point {
    Point::new(ORIGIN.x + PITCH * c as f64, ORIGIN.y + PITCH * r as f64)
}

fn cell_at(p: Point) -> Option<(usize, usize)> {
    (0..ROWS)
        .flat_map(|r| (0..COLS).map(move |c| (r, c)))
        .find(|&(r, c)| icon_rect(cell_center(r, c)).contains(p))
}

/// Whether `a` and `b` can be linked with at most two turns through empty
/// cells, the ring around the board counting as empty.
pub fn connectable(board: &Board, a: (usize, usize), b: (usize, usize)) -> bool {
    if a == b {
        return false;
    }
    let (rows, cols) = (board.len() as i64 + 2, board.first().map_or(0, |r| r.len()) as i64 + 2);
    let free = |r: i64, c: i64| {
        r == 0 || c == 0 || r == rows - 1 || c == cols - 1 || board[(r - 1) as usize][(c - 1) as usize].is_none()
    };
    let (src, dst) = ((a.0 as i64 + 1, a.1 as i64 + 1), (b.0 as i64 + 1, b.1 as i64 + 1));
    const DIRS: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
    // fewest turns to reach each (cell, heading)
    let mut turns = vec![u8::MAX; (rows * cols * 4) as usize];
    let idx = |r: i64, c: i64, d: usize| ((r * cols + c) * 4) as usize + d;
    let mut queue = VecDeque::new();
    for d in 0..4 {
        queue.push_back((src.0, src.1, d, 0u8));
    }
    while let Some((r, c, d, t)) = queue.pop_front() {
        let (nr, nc) = (r + DIRS[d].0, c + DIRS[d].1);
        if nr < 0 || nc < 0 || nr >= rows || nc >= cols {
            continue;
        }
        if (nr, nc) == dst {
            return true;
        }
        if !free(nr, nc) {
            continue;
        }
        for nd in 0..4 {
            let nt = t + u8::from(nd != d);
            if nt <= 2 && nt < turns[idx(nr, nc, nd)] {
                turns[idx(nr, nc, nd)] = nt;
                // straight moves first keeps the search breadth-first in turns
                if nd == d {
                    queue.push_front((nr, nc, nd, nt));
                } else {
                    queue.push_back((nr, nc, nd, nt));
                }
            }
        }
    }
    false
}

impl LinkPair {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let board = Self::deal(&mut rng);
        Self { seed, rng, scene: Scene::Menu, score: 0, level: 0, board, step: 0 }
    }

    fn deal(rng: &mut ChaCha8Rng) -> Board {
        let mut tiles: Vec<u8> = (0..ROWS * COLS / 2)
            .flat_map(|_| {
                let f = rng.gen_range(0..FRUITS.len() as u8);
                [f, f]
            })
            .collect();
        tiles.shuffle(rng);
        tiles.chunks(COLS).map(|row| row.iter().map(|&f| Some(f)).collect()).collect()
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..ROWS).flat_map(|r| (0..COLS).map(move |c| (r, c))).filter(|&(r, c)| self.board[r][c].is_some())
    }

    /// All linkable pairs, nearest first.
    pub fn moves(&self) -> Vec<((usize, usize), (usize, usize))> {
        let cells: Vec<_> = self.occupied().collect();
        let mut v = Vec::new();
        for (i, &a) in cells.iter().enumerate() {
            for &b in &cells[i + 1..] {
                if self.board[a.0][a.1] == self.board[b.0][b.1] && connectable(&self.board, a, b) {
                    v.push((a, b));
                }
            }
        }
        v.sort_by_key(|(a, b)| a.0.abs_diff(b.0) + a.1.abs_diff(b.1));
        v
    }

    /// Reshuffles the remaining fruits until some pair links.
    fn unstick(&mut self) {
        let cells: Vec<_> = self.occupied().collect();
        if cells.is_empty() {
            return;
        }
        while self.moves().is_empty() {
            let mut fruits: Vec<_> = cells.iter().map(|&(r, c)| self.board[r][c]).collect();
            fruits.shuffle(&mut self.rng);
            for (&(r, c), f) in cells.iter().zip(fruits) {
                self.board[r][c] = f;
            }
        }
    }

    fn link(&mut self, a: (usize, usize), b: (usize, usize)) -> bool {
        let (fa, fb) = (self.board[a.0][a.1], self.board[b.0][b.1]);
        if fa.is_none() || fa != fb || !connectable(&self.board, a, b) {
            return false;
        }
        self.board[a.0][a.1] = None;
        self.board[b.0][b.1] = None;
        self.score += PAIR_POINTS;
        if self.occupied().next().is_none() {
            self.level += 1;
            self.scene = Scene::Complete;
        } else {
            self.unstick();
        }
        true
    }
}

impl Game for LinkPair {
    fn id(&self) -> GameId {
        GameId::Linkpair
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn render(&self) -> Frame {
        let mut f = art::bands(&[(120, [70, 60, 110]), (680, [110, 96, 160])]);
        let gain = frame_gain(self.seed, self.step);
        match self.scene {
            Scene::Menu => art::draw_button(&mut f, "play", gain),
            Scene::Complete | Scene::Failed => art::draw_button(&mut f, "next", gain),
            Scene::Playing => {
                for (r, c) in self.occupied() {
                    let fruit = self.board[r][c].expect("occupied");
                    art::draw_icon(&mut f, FRUITS[fruit as usize], cell_center(r, c), gain);
                }
            }
        }
        f
    }

    fn inject(&mut self, trace: &str) -> InjectOutcome {
        self.step += 1;
        let gestures = gestures_of(trace);
        let changed = match self.scene {
            Scene::Playing => match gestures.as_slice() {
                [g, h] if g.kind == GestureKind::Tap && h.kind == GestureKind::Tap => {
                    match (cell_at(g.start), cell_at(h.start)) {
                        (Some(a), Some(b)) => self.link(a, b),
                        _ => false,
                    }
                }
                _ => false,
            },
            _ => {
                if single_tap(&gestures).is_some_and(|p| button_rect().contains(p)) {
                    if self.scene == Scene::Complete {
                        self.board = Self::deal(&mut self.rng);
                    }
                    self.unstick();
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

impl Demonstrator for LinkPair {
    /// Links the nearest linkable pair.
    fn oracle_move(&self, rng: &mut ChaCha8Rng) -> Action {
        if self.scene != Scene::Playing {
            return press(button_rect(), rng);
        }
        let Some(&(a, b)) = self.moves().first() else {
            return press(button_rect(), rng);
        };
        let tap = |(r, c): (usize, usize), rng: &mut ChaCha8Rng| {
            let p = cell_center(r, c);
            let j = |rng: &mut ChaCha8Rng| rng.gen_range(-4.0f64..=4.0).round();
            Gesture::tap(Point::new(p.x + j(rng), p.y + j(rng)), rng.gen_range(0.05..0.12))
        };
        let (ga, gb) = (tap(a, rng), tap(b, rng));
        Action::new(vec![ga, gb], 0)
    }
}
