//! Scene recognition: which user-specified icons are on screen, where, and
//! whether the actionable ones form a grid.

mod frame;
mod grid;
pub mod matcher;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::Frame;
pub use grid::{detect_grid, GridLayout, Matrix, EMPTY, GAP_FACTOR, MIN_OCCUPANCY};
pub use matcher::match_icons;

use crate::geometry::{Point, Rect};

/// Default correlation threshold for accepting a template match.
pub const DEFAULT_THRESHOLD: f64 = 0.90;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("frame {width}x{height} cannot hold {len} bytes of RGB")]
    InvalidFrame { width: u32, height: u32, len: usize },
    #[error("ppm: {0}")]
    Ppm(String),
    #[error("template {0:?} is not smaller than the frame")]
    TemplateTooLarge(String),
    #[error("icon file name {0:?} is not <name>.<category>.ppm")]
    BadIconName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    /// Icons the player manipulates.
    Actionable,
    /// Icons the player aims at.
    Target,
    /// Buttons that move between game phases.
    Function,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Actionable, Category::Target, Category::Function];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Actionable => "actionable",
            Category::Target => "target",
            Category::Function => "function",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Category::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IconSpec {
    pub name: String,
    pub category: Category,
    pub template: Frame,
}

impl IconSpec {
    pub fn file_name(&self) -> String {
        format!("{}.{}.ppm", self.name, self.category)
    }
}

/// Loads every `<name>.<category>.ppm` in `dir`, sorted by file name. Other files are ignored.
pub fn load_icon_dir(dir: &Path) -> Result<Vec<IconSpec>, SceneError> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".ppm"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|file| {
            let stem = file.strip_suffix(".ppm").unwrap_or(&file);
            let (name, cat) = stem.rsplit_once('.').ok_or_else(|| SceneError::BadIconName(file.clone()))?;
            let category = cat.parse().map_err(|_| SceneError::BadIconName(file.clone()))?;
            if name.is_empty() {
                return Err(SceneError::BadIconName(file.clone()));
            }
            Ok(IconSpec { name: name.to_string(), category, template: Frame::read_ppm(&dir.join(&file))? })
        })
        .collect()
}

/// One recognized placement of an icon spec.
#[derive(Debug, Clone, PartialEq)]
pub struct IconInstance {
    /// Index of the spec in the list the frame was matched against.
    pub spec: usize,
    pub category: Category,
    pub centroid: Point,
    pub bbox: Rect,
    pub score: f64,
}

/// A context reduced to what tactics are matched on.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AbstractContext {
    pub categories: BTreeSet<Category>,
    pub grid: bool,
}

impl AbstractContext {
    pub fn new(categories: impl IntoIterator<Item = Category>, grid: bool) -> Self {
        Self { categories: categories.into_iter().collect(), grid }
    }

    pub fn contains(&self, c: Category) -> bool {
        self.categories.contains(&c)
    }
}

impl fmt::Display for AbstractContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cats: Vec<&str> = self.categories.iter().map(|c| c.as_str()).collect();
        write!(f, "{{{}}}{}", cats.join(","), if self.grid { "+grid" } else { "" })
    }
}

/// The icon content of one frame; the background is not retained.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub instances: Vec<IconInstance>,
    pub grid: Option<GridLayout>,
    pub signature: AbstractContext,
}

impl Context {
    pub fn from_instances(instances: Vec<IconInstance>) -> Self {
        let grid = detect_grid(&instances);
        let signature = context_signature(&instances, grid.is_some());
        Self { instances, grid, signature }
    }

    pub fn of_category(&self, c: Category) -> impl Iterator<Item = (usize, &IconInstance)> {
        self.instances.iter().enumerate().filter(move |(_, i)| i.category == c)
    }

    /// First instance whose bounding box contains `p`.
    pub fn instance_at(&self, p: Point) -> Option<usize> {
        self.instances.iter().position(|i| i.bbox.contains(p))
    }
}

pub fn context_signature(instances: &[IconInstance], grid_present: bool) -> AbstractContext {
    AbstractContext::new(instances.iter().map(|i| i.category), grid_present)
}

/// Matches icons in `frame`, detects a grid among the actionable ones and derives the signature.
pub fn build_context(frame: &Frame, specs: &[IconSpec], threshold: f64) -> Result<Context, SceneError> {
    Ok(Context::from_instances(match_icons(frame, specs, threshold)?))
}
