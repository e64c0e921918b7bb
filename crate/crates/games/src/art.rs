//! Procedural artwork: icons, buttons and backgrounds.
//!
//! Icons are 32×32 and built from 8×8 flat blocks, so each one is a 4×4
//! mosaic whose colours are drawn from a generator seeded by the icon name.

use std::io;
use std::path::Path;

use playtest_core::scene::{Category, Frame, IconSpec};
use playtest_core::{Point, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{GameId, SCREEN};

pub const ICON: u32 = 32;
const BLOCK: u32 = 8;
/// Hit area of a Function button around its icon.
pub const PANEL_W: u32 = 240;
pub const PANEL_H: u32 = 96;
/// Where every Function button sits.
pub const BUTTON_CENTER: Point = Point::new(240.0, 400.0);
const PANEL_RGB: [u8; 3] = [236, 228, 200];

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Base colour of tinted icons; others are fully random mosaics.
fn tint(name: &str) -> Option<[u8; 3]> {
    Some(match name {
        "red" => [200, 50, 50],
        "green" => [60, 180, 70],
        "blue" => [50, 90, 210],
        "yellow" => [215, 200, 50],
        "purple" => [150, 60, 180],
        _ => return None,
    })
}

pub fn icon(name: &str) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(name));
    let base = tint(name);
    let mut f = Frame::filled(ICON, ICON, [0, 0, 0]);
    for by in 0..ICON / BLOCK {
        for bx in 0..ICON / BLOCK {
            let rgb = match base {
                Some(b) => b.map(|c| (c as i32 + rng.gen_range(-70..=70)).clamp(20, 225) as u8),
                None => [rng.gen_range(30..=220), rng.gen_range(30..=220), rng.gen_range(30..=220)],
            };
            f.fill_rect((bx * BLOCK) as i64, (by * BLOCK) as i64, BLOCK, BLOCK, rgb);
        }
    }
    f
}

/// Flood colours shared by the buttonrow field and its buttons.
pub const FLOOD_COLORS: [&str; 5] = ["red", "green", "blue", "yellow", "purple"];
pub const FRUITS: [&str; 5] = ["apple", "banana", "cherry", "grape", "lemon"];

/// The icon specification shipped with a game: (name, category).
pub fn icon_names(game: GameId) -> Vec<(&'static str, Category)> {
    let mut v: Vec<(&'static str, Category)> = match game {
        GameId::Slingshot => vec![
            ("arrow", Category::Actionable),
            ("board", Category::Target),
            ("next", Category::Function),
            ("play", Category::Function),
            ("retry", Category::Function),
        ],
        GameId::Linkpair => {
            let mut v: Vec<_> = FRUITS.iter().map(|&f| (f, Category::Actionable)).collect();
            v.extend([("next", Category::Function), ("play", Category::Function)]);
            v
        }
        GameId::Slider => vec![("play", Category::Function), ("retry", Category::Function)],
        GameId::Buttonrow => {
            let mut v: Vec<_> = FLOOD_COLORS.iter().map(|&c| (c, Category::Actionable)).collect();
            v.extend([("next", Category::Function), ("play", Category::Function)]);
            v
        }
    };
    v.sort_by_key(|(n, c)| format!("{n}.{c}.ppm"));
    v
}

/// Specs in the order a loaded icon directory would list them.
pub fn icon_specs(game: GameId) -> Vec<IconSpec> {
    icon_names(game)
        .into_iter()
        .map(|(name, category)| IconSpec { name: name.to_string(), category, template: icon(name) })
        .collect()
}

/// Index of a named icon among [`icon_specs`].
pub fn spec_index(game: GameId, name: &str) -> Option<usize> {
    icon_names(game).iter().position(|(n, _)| *n == name)
}

/// Writes `<name>.<category>.ppm` for every icon of the game.
pub fn write_icon_dir(game: GameId, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for spec in icon_specs(game) {
        spec.template.write_ppm(&dir.join(spec.file_name())).map_err(|e| io::Error::new(io::ErrorKind::Other, e))?;
    }
    Ok(())
}

/// A screen of flat horizontal bands, top to bottom.
pub fn bands(bands: &[(u32, [u8; 3])]) -> Frame {
    let mut f = Frame::filled(SCREEN.width, SCREEN.height, bands.last().map_or([0, 0, 0], |b| b.1));
    let mut y = 0i64;
    for &(h, rgb) in bands {
        f.fill_rect(0, y, SCREEN.width, h, rgb);
        y += h as i64;
    }
    f
}

/// Icon box centred on a point.
pub fn icon_rect(center: Point) -> Rect {
    let half = (ICON / 2) as f64;
    Rect::new(center.x - half, center.y - half, ICON as f64, ICON as f64)
}

pub fn draw_icon(frame: &mut Frame, name: &str, center: Point, gain: f64) {
    let r = icon_rect(center);
    frame.blit(&icon(name), r.x as i64, r.y as i64, gain);
}

pub fn button_rect() -> Rect {
    Rect::new(
        BUTTON_CENTER.x - (PANEL_W / 2) as f64,
        BUTTON_CENTER.y - (PANEL_H / 2) as f64,
        PANEL_W as f64,
        PANEL_H as f64,
    )
}

/// A Function button: a flat panel with the icon in the middle.
pub fn draw_button(frame: &mut Frame, name: &str, gain: f64) {
    let r = button_rect();
    frame.fill_rect(r.x as i64, r.y as i64, PANEL_W, PANEL_H, PANEL_RGB);
    draw_icon(frame, name, BUTTON_CENTER, gain);
}
