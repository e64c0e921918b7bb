//! Tactic application: pick the tactic for a live context and turn its pools
//! into a concrete, injectable action.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::geometry::{Point, Screen};
use crate::infer::{DirectionKind, DirectionParam, Rule, SubmatrixPattern, Tactic, TacticSet};
use crate::scene::{Category, Context, Matrix, EMPTY};
use crate::trace::{emit_trace, Action, Gesture, GestureKind, TraceError};

/// Closed-form and bisection tolerances on the chord length, px.
pub const LINEAR_TOL: f64 = 1e-6;
pub const QUADRATIC_TOL: f64 = 1e-3;
pub const MAX_BISECTIONS: usize = 200;
/// Resampling attempts before a synthesis gives up on an out-of-screen action.
pub const MAX_ATTEMPTS: usize = 32;
/// Duration of an exploration tap, s.
pub const FALLBACK_TAP_DUR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplyError {
    #[error("bisection did not converge")]
    NoConvergence,
    #[error("target shares the origin's x; no parabola through both")]
    DegenerateTarget,
    #[error("quadratic direction needs a target")]
    MissingTarget,
    #[error("no root agrees with the demo displacement")]
    NoAgreeingRoot,
    #[error("distance must be positive")]
    NonPositiveDistance,
    #[error("no stored pattern matches the grid")]
    NoApplicablePattern,
    #[error("context has no {0} instance")]
    MissingInstance(Category),
    #[error("context has no grid")]
    MissingGrid,
    #[error("tactic pool {0} is empty")]
    EmptyPool(&'static str),
    #[error("no sampled action fits on the screen")]
    OffScreen,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A concrete action ready for injection.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedAction {
    pub gestures: Vec<Gesture>,
    /// Index of the applied tactic in its set; `None` for exploration taps.
    pub tactic_id: Option<usize>,
    pub rule: Option<Rule>,
}

impl PlannedAction {
    /// One uniformly random tap, issued when no tactic matches.
    pub fn fallback<R: Rng + ?Sized>(screen: Screen, rng: &mut R) -> Self {
        let p = Point::new(rng.gen_range(0..screen.width) as f64, rng.gen_range(0..screen.height) as f64);
        Self { gestures: vec![Gesture::tap(p, FALLBACK_TAP_DUR)], tactic_id: None, rule: None }
    }

    pub fn is_fallback(&self) -> bool {
        self.tactic_id.is_none()
    }
}

/// Index of a tactic whose signature equals the context's, uniformly among ties.
pub fn match_context<R: Rng + ?Sized>(context: &Context, tactics: &TacticSet, rng: &mut R) -> Option<usize> {
    let hits: Vec<usize> =
        (0..tactics.tactics.len()).filter(|&i| tactics.tactics[i].signature == context.signature).collect();
    hits.choose(rng).copied()
}

/// How the endpoint direction is constrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Param(DirectionParam),
    Sinx(f64),
}

fn dot(d: (f64, f64), hint: [f64; 2]) -> f64 {
    d.0 * hint[0] + d.1 * hint[1]
}

/// Endpoint `dist` away from `origin` along the constrained direction whose
/// displacement agrees (non-negative dot product) with `hint`.
pub fn solve_endpoint(
    origin: Point,
    target: Option<Point>,
    dist: f64,
    dir: Direction,
    hint: [f64; 2],
) -> Result<Point, ApplyError> {
    if !(dist > 0.0) || !dist.is_finite() {
        return Err(ApplyError::NonPositiveDistance);
    }
    let d = match dir {
        Direction::Sinx(s) => {
            let s = s.clamp(-1.0, 1.0);
            let sign = if hint[0] < 0.0 { -1.0 } else { 1.0 };
            (sign * dist * (1.0 - s * s).sqrt(), dist * s)
        }
        Direction::Param(DirectionParam { kind: DirectionKind::Linear, value: k }) => {
            let n = (1.0 + k * k).sqrt();
            let u = (dist / n, dist * k / n);
            if dot(u, hint) >= 0.0 {
                u
            } else {
                (-u.0, -u.1)
            }
        }
        Direction::Param(DirectionParam { kind: DirectionKind::Quadratic, value: a }) => {
            let target = target.ok_or(ApplyError::MissingTarget)?;
            return solve_quadratic(origin, target, a, dist, hint);
        }
    };
    if dot(d, hint) < 0.0 {
        return Err(ApplyError::NoAgreeingRoot);
    }
    Ok(Point::new(origin.x + d.0, origin.y + d.1))
}

fn solve_quadratic(origin: Point, target: Point, a: f64, dist: f64, hint: [f64; 2]) -> Result<Point, ApplyError> {
    let (x1, y1) = (origin.x, origin.y);
    let dx2 = target.x - x1;
    if dx2.abs() < crate::infer::VERTICAL_EPS {
        return Err(ApplyError::DegenerateTarget);
    }
    let b = ((target.y - y1) - a * (target.x * target.x - x1 * x1)) / dx2;
    // displacement after moving `s` along x from the origin
    let disp = |s: f64| {
        let x = x1 + s;
        (s, a * (x * x - x1 * x1) + b * s)
    };
    let chord = |s: f64| {
        let (u, v) = disp(s);
        u.hypot(v)
    };
    let slope = 2.0 * a * x1 + b;
    let preferred = if dot((1.0, slope), hint) >= 0.0 { 1.0 } else { -1.0 };

    let mut last_err = ApplyError::NoAgreeingRoot;
    for sigma in [preferred, -preferred] {
        // march outward until the chord passes dist, then bisect the bracket
        let (mut lo, mut hi) = (0.0f64, dist.min(1.0));
        let mut iters = 0;
        while chord(sigma * hi) < dist {
            lo = hi;
            hi *= 2.0;
            iters += 1;
            if iters > MAX_BISECTIONS || !hi.is_finite() {
                return Err(ApplyError::NoConvergence);
            }
        }
        let mut s = hi;
        let mut converged = false;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let c = chord(sigma * mid);
            s = mid;
            if (c - dist).abs() <= QUADRATIC_TOL * 1e-3 {
                converged = true;
                break;
            }
            if c < dist {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.max(1.0) {
                break;
            }
        }
        if !converged && (chord(sigma * s) - dist).abs() > QUADRATIC_TOL {
            last_err = ApplyError::NoConvergence;
            continue;
        }
        let d = disp(sigma * s);
        if dot(d, hint) >= 0.0 {
            return Ok(Point::new(x1 + d.0, y1 + d.1));
        }
    }
    Err(last_err)
}

/// Full curve `(a, b, c)` the quadratic solver walks along, for checking residuals.
pub fn solver_curve(origin: Point, target: Point, a: f64) -> (f64, f64, f64) {
    let b = ((target.y - origin.y) - a * (target.x * target.x - origin.x * origin.x)) / (target.x - origin.x);
    let c = origin.y - a * origin.x * origin.x - b * origin.x;
    (a, b, c)
}

/// Every placement `(row, col, i)` where the pattern fits the matrix:
/// all 1-cells hold icon `i`, all 0-cells hold some other icon, −1-cells match anything.
pub fn matching_placements(matrix: &Matrix, pattern: &SubmatrixPattern) -> Vec<(usize, usize, i32)> {
    let mut out = Vec::new();
    if pattern.rows > matrix.rows || pattern.cols > matrix.cols || pattern.rows == 0 || pattern.cols == 0 {
        return out;
    }
    let Some(first_one) = pattern.cells.iter().position(|&v| v == 1) else { return out };
    let (fr, fc) = (first_one / pattern.cols, first_one % pattern.cols);
    for r0 in 0..=matrix.rows - pattern.rows {
        'placement: for c0 in 0..=matrix.cols - pattern.cols {
            let i = matrix.get(r0 + fr, c0 + fc);
            if i == EMPTY {
                continue;
            }
            for pr in 0..pattern.rows {
                for pc in 0..pattern.cols {
                    let v = matrix.get(r0 + pr, c0 + pc);
                    let ok = match pattern.get(pr, pc) {
                        1 => v == i,
                        0 => v != i && v != EMPTY,
                        _ => true,
                    };
                    if !ok {
                        continue 'placement;
                    }
                }
            }
            out.push((r0, c0, i));
        }
    }
    out
}

/// Matrix cells of the pattern's touched positions at one uniformly random matching placement.
pub fn match_pattern<R: Rng + ?Sized>(
    matrix: &Matrix,
    pattern: &SubmatrixPattern,
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let &(r0, c0, _) = matching_placements(matrix, pattern).choose(rng)?;
    Some(pattern.touched.iter().map(|&(r, c)| (r0 + r, c0 + c)).collect())
}

fn pick<'a, T, R: Rng + ?Sized>(pool: &'a [T], name: &'static str, rng: &mut R) -> Result<&'a T, ApplyError> {
    pool.choose(rng).ok_or(ApplyError::EmptyPool(name))
}

fn on_screen(screen: Screen, g: &Gesture) -> bool {
    [g.start, g.end].iter().all(|p| p.x.is_finite() && p.y.is_finite() && screen.contains(*p))
}

/// The gesture as the device will see it, with integer coordinates.
fn survives_rounding(g: &Gesture) -> bool {
    let r = |p: Point| Point::new(p.x.round(), p.y.round());
    GestureKind::classify(r(g.start).distance(r(g.end))) == g.kind
}

/// Swipe from `start` with pool `dist` and `sinx`, x sign chosen at random.
fn free_swipe<R: Rng + ?Sized>(tactic: &Tactic, start: Point, rng: &mut R) -> Result<Gesture, ApplyError> {
    let p = &tactic.pools;
    let dist = *pick(&p.dist, "dist", rng)?;
    let dur = *pick(&p.dur, "dur", rng)?;
    let s = pick(&p.sinx, "sinx", rng)?.clamp(-1.0, 1.0);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let end = Point::new(start.x + sign * dist * (1.0 - s * s).sqrt(), start.y + dist * s);
    Ok(Gesture { kind: GestureKind::Swipe, start, end, dur })
}

fn tap_at<R: Rng + ?Sized>(tactic: &Tactic, at: Point, rng: &mut R) -> Result<Gesture, ApplyError> {
    Ok(Gesture::tap(at, *pick(&tactic.pools.dur, "dur", rng)?))
}

fn anchored_instance<R: Rng + ?Sized>(
    context: &Context,
    category: Category,
    rng: &mut R,
) -> Result<Point, ApplyError> {
    let all: Vec<Point> = context.of_category(category).map(|(_, i)| i.centroid).collect();
    all.choose(rng).copied().ok_or(ApplyError::MissingInstance(category))
}

fn r3_swipe<R: Rng + ?Sized>(tactic: &Tactic, context: &Context, rng: &mut R) -> Result<Gesture, ApplyError> {
    let origin = anchored_instance(context, Category::Actionable, rng)?;
    let target = anchored_instance(context, Category::Target, rng)?;
    let p = &tactic.pools;
    let dist = *pick(&p.dist, "dist", rng)?;
    let dur = *pick(&p.dur, "dur", rng)?;
    let dir = *pick(&p.direction, "direction", rng)?;
    let end = match solve_endpoint(origin, Some(target), dist, Direction::Param(dir), p.mean_disp) {
        Ok(end) => end,
        Err(ApplyError::DegenerateTarget | ApplyError::NoAgreeingRoot | ApplyError::NoConvergence) => {
            let s = *pick(&p.sinx, "sinx", rng)?;
            solve_endpoint(origin, Some(target), dist, Direction::Sinx(s), p.mean_disp)?
        }
        Err(e) => return Err(e),
    };
    Ok(Gesture { kind: GestureKind::Swipe, start: origin, end, dur })
}

fn synthesize_once<R: Rng + ?Sized>(
    tactic: &Tactic,
    context: &Context,
    rng: &mut R,
) -> Result<Vec<Gesture>, ApplyError> {
    let kinds = &tactic.action_type.gestures;
    match tactic.rule {
        Rule::R1 => kinds
            .iter()
            .map(|k| match k {
                GestureKind::Tap => {
                    let t = pick(&tactic.pools.taps, "taps", rng)?;
                    Ok(Gesture::tap(Point::new(t.x, t.y), t.dur))
                }
                GestureKind::Swipe => {
                    let s = pick(&tactic.pools.starts, "starts", rng)?;
                    free_swipe(tactic, Point::new(s[0], s[1]), rng)
                }
            })
            .collect(),
        Rule::R2 | Rule::R5 => {
            let category = tactic.action_type.anchor.unwrap_or(Category::Function);
            kinds
                .iter()
                .map(|k| {
                    let at = anchored_instance(context, category, rng)?;
                    match k {
                        GestureKind::Tap => tap_at(tactic, at, rng),
                        GestureKind::Swipe => free_swipe(tactic, at, rng),
                    }
                })
                .collect()
        }
        Rule::R3 => kinds
            .iter()
            .map(|k| match k {
                GestureKind::Swipe => r3_swipe(tactic, context, rng),
                GestureKind::Tap => {
                    let at = anchored_instance(context, Category::Actionable, rng)?;
                    tap_at(tactic, at, rng)
                }
            })
            .collect(),
        Rule::R4 => synthesize_grid(tactic, context, rng),
    }
}

fn synthesize_grid<R: Rng + ?Sized>(
    tactic: &Tactic,
    context: &Context,
    rng: &mut R,
) -> Result<Vec<Gesture>, ApplyError> {
    let grid = context.grid.as_ref().ok_or(ApplyError::MissingGrid)?;
    let mut order: Vec<&SubmatrixPattern> = tactic.patterns.iter().collect();
    order.shuffle(rng);
    for pattern in order {
        let Some(cells) = match_pattern(&grid.matrix, pattern, rng) else { continue };
        let centers: Vec<Point> = cells
            .iter()
            .map(|&(r, c)| grid.instance_at(r, c).map(|i| context.instances[i].centroid))
            .collect::<Option<_>>()
            .ok_or(ApplyError::MissingInstance(Category::Actionable))?;
        let dur = *pick(&tactic.pools.dur, "dur", rng)?;
        if tactic.action_type.gestures == [GestureKind::Swipe] && centers.len() == 2 {
            return Ok(vec![Gesture { kind: GestureKind::Swipe, start: centers[0], end: centers[1], dur }]);
        }
        let mut taps = vec![Gesture::tap(centers[0], dur)];
        for &c in &centers[1..] {
            taps.push(tap_at(tactic, c, rng)?);
        }
        return Ok(taps);
    }
    Err(ApplyError::NoApplicablePattern)
}

/// Concretizes `tactics.tactics[tactic_id]` against a live context.
///
/// Samples are redrawn while a gesture would leave the screen or round to a
/// different kind, up to [`MAX_ATTEMPTS`] times.
pub fn synthesize_action<R: Rng + ?Sized>(
    tactics: &TacticSet,
    tactic_id: usize,
    context: &Context,
    screen: Screen,
    rng: &mut R,
) -> Result<PlannedAction, ApplyError> {
    let tactic = &tactics.tactics[tactic_id];
    for _ in 0..MAX_ATTEMPTS {
        let gestures = synthesize_once(tactic, context, rng)?;
        if gestures.iter().all(|g| on_screen(screen, g) && survives_rounding(g)) {
            return Ok(PlannedAction { gestures, tactic_id: Some(tactic_id), rule: Some(tactic.rule) });
        }
    }
    Err(ApplyError::OffScreen)
}

/// Trace text that performs the action, gestures 50 ms apart.
pub fn action_to_events(planned: &PlannedAction, screen: Screen, base_ts: f64) -> Result<String, ApplyError> {
    Ok(emit_trace(&Action::new(planned.gestures.clone(), 0), screen, base_ts)?)
}
