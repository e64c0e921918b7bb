//! Tactic inference from recorded demos.
//!
//! Pairs are clustered by abstract context; within each cluster the dominant
//! gesture sequence becomes the action type, a rule is chosen from what the
//! action touched and what else is on screen, and the rule decides which
//! gesture properties are collected into the tactic's pools.

mod fit;
mod submatrix;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{
    fit_direction, quadratic_through, triangle_area, DirectionKind, DirectionParam, FitError, COLLINEAR_AREA,
    VERTICAL_EPS,
};
pub use submatrix::{extract_submatrix, extract_with_rect, CellRect, SubmatrixError, SubmatrixPattern};

use crate::geometry::Point;
use crate::scene::{build_context, AbstractContext, Category, Context, Frame, IconSpec, SceneError};
use crate::trace::{Action, GestureKind, TraceError};

pub const TACTICS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InferError {
    #[error("demo timestamp {0} has a frame or a trace but not both")]
    OrphanFile(u64),
    #[error("trace {t}: {source}")]
    Trace { t: u64, source: TraceError },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("no gesture sequence is shared by more than half of the cluster's actions")]
    NoMajority,
    #[error("no cluster produced a tactic")]
    EmptyDemo,
    #[error("tactic file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextActionPair {
    pub context: Context,
    pub action: Action,
    /// Session timestamp shared by the frame and the trace, milliseconds.
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoPairs {
    pub pairs: Vec<ContextActionPair>,
    /// Timestamps whose trace held no gesture.
    pub dropped_empty: Vec<u64>,
}

fn demo_timestamps(dir: &Path) -> Result<(Vec<u64>, Vec<u64>), InferError> {
    let (mut frames, mut traces) = (Vec::new(), Vec::new());
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        let Some((stem, ext)) = name.rsplit_once('.') else { continue };
        let Ok(t) = stem.parse::<u64>() else { continue };
        match ext {
            "ppm" => frames.push(t),
            "txt" => traces.push(t),
            _ => {}
        }
    }
    frames.sort_unstable();
    traces.sort_unstable();
    Ok((frames, traces))
}

/// Pairs every `<t>.ppm` with its `<t>.txt`, recognizing the frame's context
/// and classifying the trace's gestures. Timestamps whose trace holds no
/// gesture are dropped and reported.
pub fn pair_demo(dir: &Path, specs: &[IconSpec], threshold: f64) -> Result<DemoPairs, InferError> {
    let (frames, traces) = demo_timestamps(dir)?;
    if let Some(&t) = frames.iter().find(|t| traces.binary_search(t).is_err()) {
        return Err(InferError::OrphanFile(t));
    }
    if let Some(&t) = traces.iter().find(|t| frames.binary_search(t).is_err()) {
        return Err(InferError::OrphanFile(t));
    }

    let mut out = DemoPairs { pairs: Vec::new(), dropped_empty: Vec::new() };
    for t in frames {
        let text = std::fs::read_to_string(dir.join(format!("{t}.txt")))?;
        let action = Action::from_trace(&text, t).map_err(|source| InferError::Trace { t, source })?;
        if action.gestures.is_empty() {
            out.dropped_empty.push(t);
            continue;
        }
        let mut frame = Frame::read_ppm(&dir.join(format!("{t}.ppm")))?;
        frame.t = t;
        let context = build_context(&frame, specs, threshold)?;
        out.pairs.push(ContextActionPair { context, action, t });
    }
    Ok(out)
}

/// Groups pair indexes by exact signature.
pub fn cluster_contexts(pairs: &[ContextActionPair]) -> BTreeMap<AbstractContext, Vec<usize>> {
    let mut clusters: BTreeMap<AbstractContext, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        clusters.entry(p.context.signature.clone()).or_default().push(i);
    }
    clusters
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionType {
    pub gestures: Vec<GestureKind>,
    /// Category most actions of the type start on, if any.
    pub anchor: Option<Category>,
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kinds: Vec<String> = self.gestures.iter().map(|k| k.to_string()).collect();
        write!(f, "[{}]", kinds.join(", "))?;
        if let Some(a) = self.anchor {
            write!(f, " ({a})")?;
        }
        Ok(())
    }
}

fn starts_on(pair: &ContextActionPair, category: Category) -> bool {
    let start = pair.action.gestures[0].start;
    pair.context.of_category(category).any(|(_, inst)| inst.bbox.contains(start))
}

/// Finds the gesture sequence shared by a strict majority of the cluster's
/// actions, and the icon category most of those start on. Returns it with the
/// indexes (into `pairs`) of the actions that follow it.
pub fn identify_action_type(
    pairs: &[ContextActionPair],
    cluster: &[usize],
) -> Result<(ActionType, Vec<usize>), InferError> {
    let mut counts: BTreeMap<Vec<GestureKind>, Vec<usize>> = BTreeMap::new();
    for &i in cluster {
        counts.entry(pairs[i].action.kinds()).or_default().push(i);
    }
    let (gestures, members) = counts
        .into_iter()
        .find(|(_, members)| 2 * members.len() > cluster.len())
        .ok_or(InferError::NoMajority)?;
    // Like the gesture sequence, the anchor only needs a strict majority;
    // actions of the group starting elsewhere are dropped as noise.
    let anchored = [Category::Actionable, Category::Function, Category::Target].into_iter().find_map(|c| {
        let on: Vec<usize> = members.iter().copied().filter(|&i| starts_on(&pairs[i], c)).collect();
        (2 * on.len() > members.len()).then_some((c, on))
    });
    Ok(match anchored {
        Some((c, on)) => (ActionType { gestures, anchor: Some(c) }, on),
        None => (ActionType { gestures, anchor: None }, members),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// The action touched no specified icon.
    R1,
    /// The action started on a function icon.
    R2,
    /// An actionable icon was manipulated with targets on screen.
    R3,
    /// An actionable icon in a grid was manipulated, no targets on screen.
    R4,
    /// Any other icon-anchored action.
    R5,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn select_rule(signature: &AbstractContext, action_type: &ActionType) -> Rule {
    match action_type.anchor {
        None => Rule::R1,
        Some(Category::Function) => Rule::R2,
        Some(Category::Actionable) if signature.contains(Category::Target) => Rule::R3,
        Some(Category::Actionable) if signature.grid => Rule::R4,
        _ => Rule::R5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapPoint {
    pub x: f64,
    pub y: f64,
    pub dur: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pools {
    pub dist: Vec<f64>,
    pub dur: Vec<f64>,
    pub sinx: Vec<f64>,
    pub direction: Vec<DirectionParam>,
    pub taps: Vec<TapPoint>,
    /// Swipe start points, for swipes not tied to an icon.
    #[serde(default)]
    pub starts: Vec<[f64; 2]>,
    /// Mean unit displacement of the demo swipes; zero when there were none.
    pub mean_disp: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tactic {
    pub signature: AbstractContext,
    pub action_type: ActionType,
    pub rule: Rule,
    pub pools: Pools,
    pub patterns: Vec<SubmatrixPattern>,
}

impl Tactic {
    fn has_swipes(&self) -> bool {
        self.action_type.gestures.contains(&GestureKind::Swipe)
    }

    fn has_taps(&self) -> bool {
        self.action_type.gestures.contains(&GestureKind::Tap)
    }

    /// Checks that every pool the rule draws from is populated.
    pub fn validate(&self) -> Result<(), String> {
        let p = &self.pools;
        let swipe_pools = |need_sinx: bool| {
            if !self.has_swipes() {
                return Ok(());
            }
            if p.dist.is_empty() || p.dur.is_empty() || (need_sinx && p.sinx.is_empty()) {
                return Err("swipe pools are empty".to_string());
            }
            Ok(())
        };
        if self.action_type.gestures.is_empty() {
            return Err("empty action type".into());
        }
        match self.rule {
            Rule::R1 => {
                if self.has_taps() && p.taps.is_empty() {
                    return Err("R1 tap pool is empty".into());
                }
                if self.has_swipes() && p.starts.is_empty() {
                    return Err("R1 start pool is empty".into());
                }
                swipe_pools(true)
            }
            Rule::R2 | Rule::R5 => {
                if p.dur.is_empty() {
                    return Err("duration pool is empty".into());
                }
                swipe_pools(true)
            }
            Rule::R3 => {
                if p.dist.is_empty() || p.dur.is_empty() || p.direction.is_empty() {
                    return Err("R3 needs distances, durations and directions".into());
                }
                Ok(())
            }
            Rule::R4 => {
                if self.patterns.is_empty() || p.dur.is_empty() {
                    return Err("R4 needs patterns and durations".into());
                }
                if !self.patterns.iter().all(SubmatrixPattern::is_well_formed) {
                    return Err("malformed pattern".into());
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub session: String,
    /// Icon directory the demo was recognized with.
    pub icons: String,
    /// SHA-256 over the icon specs, so a changed directory is noticed.
    #[serde(default)]
    pub icons_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TacticSet {
    pub version: u32,
    pub provenance: Provenance,
    pub tactics: Vec<Tactic>,
}

impl TacticSet {
    pub fn new(provenance: Provenance, tactics: Vec<Tactic>) -> Self {
        Self { version: TACTICS_VERSION, provenance, tactics }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tactic sets always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, InferError> {
        let set: TacticSet = serde_json::from_str(text).map_err(|e| InferError::Format(e.to_string()))?;
        if set.version != TACTICS_VERSION {
            return Err(InferError::Format(format!("unsupported version {}", set.version)));
        }
        for (i, t) in set.tactics.iter().enumerate() {
            t.validate().map_err(|e| InferError::Format(format!("tactic {i}: {e}")))?;
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<(), InferError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, InferError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A cluster that did not yield a tactic, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct Discarded {
    pub signature: AbstractContext,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub tactics: TacticSet,
    pub discarded: Vec<Discarded>,
    /// Grid moves whose touched cells held different icons.
    pub heterogeneous_pairs: usize,
}

fn swipe_props(pools: &mut Pools, g: &crate::trace::Gesture) {
    pools.dist.push(g.dist());
    pools.dur.push(g.dur);
    pools.sinx.push(g.sinx().unwrap_or(0.0));
}

/// The actionable instance a point falls in, or the nearest one.
fn actionable_under(ctx: &Context, p: Point) -> Option<usize> {
    ctx.of_category(Category::Actionable)
        .find(|(_, inst)| inst.bbox.contains(p))
        .or_else(|| {
            ctx.of_category(Category::Actionable)
                .min_by(|a, b| a.1.centroid.distance(p).total_cmp(&b.1.centroid.distance(p)))
        })
        .map(|(i, _)| i)
}

/// Grid cell under a point, if the point lies on a grid instance.
fn grid_cell_at(ctx: &Context, p: Point) -> Option<(usize, usize)> {
    let grid = ctx.grid.as_ref()?;
    (0..ctx.instances.len()).find_map(|i| grid.cell_of(i).filter(|_| ctx.instances[i].bbox.contains(p)))
}

fn build_tactic<R: Rng + ?Sized>(
    pairs: &[ContextActionPair],
    signature: &AbstractContext,
    action_type: ActionType,
    members: &[usize],
    rng: &mut R,
    heterogeneous: &mut usize,
) -> Tactic {
    let rule = select_rule(signature, &action_type);
    let mut pools = Pools::default();
    let mut patterns: Vec<SubmatrixPattern> = Vec::new();
    let mut disp = [0.0f64; 2];
    let mut n_swipes = 0usize;

    for &i in members {
        let pair = &pairs[i];
        for g in &pair.action.gestures {
            if g.kind == GestureKind::Swipe {
                let d = g.dist();
                if d > 0.0 {
                    disp[0] += (g.end.x - g.start.x) / d;
                    disp[1] += (g.end.y - g.start.y) / d;
                    n_swipes += 1;
                }
            }
        }
        match rule {
            Rule::R1 => {
                for g in &pair.action.gestures {
                    match g.kind {
                        GestureKind::Tap => pools.taps.push(TapPoint { x: g.start.x, y: g.start.y, dur: g.dur }),
                        GestureKind::Swipe => {
                            swipe_props(&mut pools, g);
                            pools.starts.push([g.start.x, g.start.y]);
                        }
                    }
                }
            }
            Rule::R2 | Rule::R5 => {
                for g in &pair.action.gestures {
                    match g.kind {
                        GestureKind::Tap => pools.dur.push(g.dur),
                        GestureKind::Swipe => swipe_props(&mut pools, g),
                    }
                }
            }
            Rule::R3 => {
                let targets: Vec<Point> =
                    pair.context.of_category(Category::Target).map(|(_, inst)| inst.centroid).collect();
                for g in &pair.action.gestures {
                    match g.kind {
                        GestureKind::Tap => pools.dur.push(g.dur),
                        GestureKind::Swipe => {
                            swipe_props(&mut pools, g);
                            let origin = actionable_under(&pair.context, g.start)
                                .map(|idx| pair.context.instances[idx].centroid);
                            let target = targets.choose(rng).copied();
                            if let (Some(p0), Some(p2)) = (origin, target) {
                                if let Ok(dir) = fit_direction(p0, g.end, p2) {
                                    pools.direction.push(dir);
                                }
                            }
                        }
                    }
                }
            }
            Rule::R4 => {
                let mut touched = Vec::new();
                let mut on_grid = true;
                for g in &pair.action.gestures {
                    let points: &[Point] =
                        if g.kind == GestureKind::Swipe { &[g.start, g.end] } else { std::slice::from_ref(&g.start) };
                    for &p in points {
                        match grid_cell_at(&pair.context, p) {
                            Some(cell) if !touched.contains(&cell) => touched.push(cell),
                            Some(_) => {}
                            None => on_grid = false,
                        }
                    }
                }
                let grid = pair.context.grid.as_ref();
                if let (true, Some(grid)) = (on_grid, grid) {
                    match extract_submatrix(&grid.matrix, &touched) {
                        Ok(p) => {
                            if !patterns.contains(&p) {
                                patterns.push(p);
                            }
                            for g in &pair.action.gestures {
                                match g.kind {
                                    GestureKind::Tap => pools.dur.push(g.dur),
                                    GestureKind::Swipe => swipe_props(&mut pools, g),
                                }
                            }
                        }
                        Err(SubmatrixError::HeterogeneousTouch) => *heterogeneous += 1,
                        Err(_) => {}
                    }
                }
            }
        }
    }

    let norm = (disp[0] * disp[0] + disp[1] * disp[1]).sqrt();
    if n_swipes > 0 && norm > 0.0 {
        pools.mean_disp = [disp[0] / norm, disp[1] / norm];
    }
    Tactic { signature: signature.clone(), action_type, rule, pools, patterns }
}

/// Infers one tactic per cluster that has a majority action type and enough
/// data for its rule. `rng` only picks among several targets for curve fitting.
pub fn infer_tactics_report<R: Rng + ?Sized>(
    pairs: &[ContextActionPair],
    provenance: Provenance,
    rng: &mut R,
) -> Result<Inference, InferError> {
    let mut tactics = Vec::new();
    let mut discarded = Vec::new();
    let mut heterogeneous = 0;
    for (signature, cluster) in cluster_contexts(pairs) {
        let (action_type, members) = match identify_action_type(pairs, &cluster) {
            Ok(found) => found,
            Err(e) => {
                discarded.push(Discarded { signature, reason: e.to_string() });
                continue;
            }
        };
        let tactic = build_tactic(pairs, &signature, action_type, &members, rng, &mut heterogeneous);
        match tactic.validate() {
            Ok(()) => tactics.push(tactic),
            Err(reason) => discarded.push(Discarded { signature, reason }),
        }
    }
    if tactics.is_empty() {
        return Err(InferError::EmptyDemo);
    }
    Ok(Inference { tactics: TacticSet::new(provenance, tactics), discarded, heterogeneous_pairs: heterogeneous })
}

pub fn infer_tactics<R: Rng + ?Sized>(
    pairs: &[ContextActionPair],
    provenance: Provenance,
    rng: &mut R,
) -> Result<TacticSet, InferError> {
    infer_tactics_report(pairs, provenance, rng).map(|inf| inf.tactics)
}
