//! Acceptance criteria, one PASS/FAIL line each (written past the test
//! harness' output capture so they always show).

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use playtest_core::apply::{matching_placements, solve_endpoint, solver_curve, ApplyError, Direction};
use playtest_core::geometry::{Point, Rect, Screen};
use playtest_core::infer::{
    extract_with_rect, fit_direction, quadratic_through, DirectionKind, DirectionParam, SubmatrixPattern, TacticSet,
};
use playtest_core::scene::{match_icons, Frame, IconSpec, Matrix, EMPTY};
use playtest_core::trace::{
    classify_segment, emit_trace, Action, Gesture, GestureKind, RawSegment, Timestamp,
};
use playtest_games::{art, new_demonstrator, new_game, GameId};
use playtest_harness::demo::DEFAULT_PERIOD;
use playtest_harness::{
    infer_with_specs, record_demo, run_random_baseline, run_test, Budget, Limit, OracleSource, TestReport, THRESHOLD,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCREEN: Screen = Screen::new(480, 800);

fn verdict(name: &str, ok: bool, detail: String) {
    let line = format!("\n{} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "{name}: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn trace_round_trip() {
    let mut r = rng(1);
    let started = Instant::now();
    let pixel = |r: &mut ChaCha8Rng| Point::new(r.gen_range(0..480) as f64, r.gen_range(0..800) as f64);
    let (mut gestures, mut bad) = (0, Vec::new());
    for n in 0..1000 {
        let count = r.gen_range(1..=3);
        let mut gs = Vec::new();
        while gs.len() < count {
            let g = if r.gen_bool(0.5) {
                Gesture::tap(pixel(&mut r), r.gen_range(0.01..0.4))
            } else {
                let (a, b) = (pixel(&mut r), pixel(&mut r));
                if a.distance(b) < 20.0 {
                    continue;
                }
                Gesture::between(a, b, r.gen_range(0.05..1.5))
            };
            gs.push(g);
        }
        let a = Action::new(gs, 0);
        let back = Action::from_trace(&emit_trace(&a, SCREEN, n as f64 * 2.5).unwrap(), 0).unwrap();
        gestures += a.gestures.len();
        let same = back.gestures.len() == a.gestures.len()
            && a.gestures.iter().zip(&back.gestures).all(|(g, h)| {
                g.kind == h.kind && (g.dist() - h.dist()).abs() <= 1.0 && (g.dur - h.dur).abs() <= 1e-3
            });
        if !same {
            bad.push(n);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        "trace round trip",
        bad.is_empty() && secs < 5.0,
        format!("1000 actions, {gestures} gestures, {} mismatches, {secs:.2}s (limit 5s)", bad.len()),
    );
}

/// The two heuristics written out case by case, with distance settling the gaps.
fn brute_kind(dist: f64, dur: f64) -> GestureKind {
    if dist > 20.0 && dur > 0.2 {
        GestureKind::Swipe
    } else if dist < 20.0 && dur < 0.2 {
        GestureKind::Tap
    } else if dist >= 20.0 {
        GestureKind::Swipe
    } else {
        GestureKind::Tap
    }
}

#[test]
fn classifier_oracle() {
    let mut r = rng(2);
    let mut disagree = 0;
    let mut boundary = 0;
    for _ in 0..10_000 {
        let first = Point::new(r.gen_range(0..480) as f64, r.gen_range(0..800) as f64);
        // a third of the cases sit on or near the 20 px / 0.2 s lines
        let (last, dur_us) = if r.gen_bool(1.0 / 3.0) {
            boundary += 1;
            let d = [19.0, 20.0, 21.0][r.gen_range(0..3)];
            let (dx, dy) = [(d, 0.0), (0.0, d), (12.0, 16.0)][r.gen_range(0..3)];
            let dx = if dx == 12.0 { dx * d / 20.0 } else { dx };
            let dy = if dy == 16.0 { dy * d / 20.0 } else { dy };
            (Point::new(first.x + dx, first.y + dy), [199_999u64, 200_000, 200_001][r.gen_range(0..3)])
        } else {
            let reach = if r.gen_bool(0.5) { 40.0 } else { 400.0 };
            (
                Point::new(first.x + r.gen_range(-reach..reach), first.y + r.gen_range(-reach..reach)),
                r.gen_range(0..1_500_000u64),
            )
        };
        let t0 = r.gen_range(0..10_000_000u64);
        let seg = RawSegment {
            events: Vec::new(),
            first,
            last,
            ts_first: Timestamp(t0),
            ts_last: Timestamp(t0 + dur_us),
            dangling: false,
        };
        let dist = ((last.x - first.x).powi(2) + (last.y - first.y).powi(2)).sqrt();
        if classify_segment(&seg).kind != brute_kind(dist, dur_us as f64 / 1e6) {
            disagree += 1;
        }
    }
    verdict("gesture classifier oracle", disagree == 0, format!("10000 segments ({boundary} on the thresholds), {disagree} disagreements"));
}

#[test]
fn curve_fitting() {
    let mut r = rng(3);
    let (mut worst, mut wrong_kind, mut tried) = (0.0f64, 0, 0);
    while tried < 1000 {
        let p: Vec<Point> = (0..3).map(|_| Point::new(r.gen_range(0.0..480.0), r.gen_range(0.0..800.0))).collect();
        let distinct = (p[0].x - p[1].x).abs() > 1.0 && (p[1].x - p[2].x).abs() > 1.0 && (p[0].x - p[2].x).abs() > 1.0;
        if !distinct || playtest_core::infer::triangle_area(p[0], p[1], p[2]) < 1.0 {
            continue;
        }
        tried += 1;
        let (a, b, c) = quadratic_through(p[0], p[1], p[2]);
        worst = p.iter().map(|q| (a * q.x * q.x + b * q.x + c - q.y).abs()).fold(worst, f64::max);
        match fit_direction(p[0], p[1], p[2]) {
            Ok(f) if f.kind == DirectionKind::Quadratic && f.value == a => {}
            _ => wrong_kind += 1,
        }
    }
    let mut not_linear = 0;
    for _ in 0..1000 {
        let p0 = Point::new(r.gen_range(0..200) as f64, r.gen_range(0..300) as f64);
        let (dx, dy) = (r.gen_range(1..40) as f64, r.gen_range(-40..40) as f64);
        let (t1, t2) = (r.gen_range(1..5) as f64, r.gen_range(5..9) as f64);
        let p1 = Point::new(p0.x + t1 * dx, p0.y + t1 * dy);
        let p2 = Point::new(p0.x + t2 * dx, p0.y + t2 * dy);
        match fit_direction(p0, p1, p2) {
            Ok(f) if f.kind == DirectionKind::Linear && (f.value - dy / dx).abs() < 1e-12 => {}
            _ => not_linear += 1,
        }
    }
    let fixture = fit_direction(Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 4.0));
    let fixture_ok = fixture == Ok(DirectionParam::quadratic(1.0));
    verdict(
        "curve fitting",
        worst <= 1e-6 && wrong_kind == 0 && not_linear == 0 && fixture_ok,
        format!(
            "worst residual {worst:.2e} px over 1000 triples, {wrong_kind} not quadratic, {not_linear}/1000 collinear not linear, (0,0),(1,1),(2,4) -> {fixture:?}"
        ),
    );
}

/// Every root of the distance constraint along the solver's curve, by a fine scan.
fn curve_roots(o: Point, t: Point, a: f64, dist: f64) -> Vec<(f64, f64)> {
    let (a, b, c) = solver_curve(o, t, a);
    let disp = |s: f64| {
        let x = o.x + s;
        (s, a * x * x + b * x + c - o.y)
    };
    let f = |s: f64| {
        let (u, v) = disp(s);
        u.hypot(v) - dist
    };
    const STEPS: usize = 40_000;
    let mut roots = Vec::new();
    for sign in [1.0, -1.0] {
        // a root never lies further than `dist` along x
        let mut prev = f(0.0);
        for k in 1..=STEPS {
            let s = sign * dist * k as f64 / STEPS as f64;
            let cur = f(s);
            if prev < 0.0 && cur >= 0.0 || prev >= 0.0 && cur < 0.0 {
                roots.push(disp(s));
            }
            prev = cur;
        }
    }
    roots
}

#[test]
fn endpoint_solver() {
    let mut r = rng(4);
    let (mut returned, mut worst_lin, mut worst_quad, mut against, mut unjustified) = (0, 0.0f64, 0.0f64, 0, 0);
    let mut refused = 0;
    for i in 0..1000 {
        let o = Point::new(r.gen_range(0.0..480.0), r.gen_range(0.0..800.0));
        let mut t = Point::new(r.gen_range(0.0..480.0), r.gen_range(0.0..800.0));
        if (t.x - o.x).abs() < 1.0 {
            t.x += 5.0;
        }
        let dist = r.gen_range(10.0..300.0);
        let angle = r.gen_range(0.0..std::f64::consts::TAU);
        let hint = [angle.cos(), angle.sin()];
        let dir = match i % 3 {
            0 => Direction::Param(DirectionParam::linear(r.gen_range(-20.0..20.0))),
            1 => Direction::Sinx(r.gen_range(-1.0..=1.0)),
            _ => {
                let a = r.gen_range(0.0005..0.02) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
                Direction::Param(DirectionParam::quadratic(a))
            }
        };
        match solve_endpoint(o, Some(t), dist, dir, hint) {
            Ok(p) => {
                returned += 1;
                let err = (p.distance(o) - dist).abs();
                match dir {
                    Direction::Param(DirectionParam { kind: DirectionKind::Quadratic, .. }) => worst_quad = worst_quad.max(err),
                    _ => worst_lin = worst_lin.max(err),
                }
                if (p.x - o.x) * hint[0] + (p.y - o.y) * hint[1] < 0.0 {
                    against += 1;
                }
            }
            Err(ApplyError::NoAgreeingRoot) => {
                refused += 1;
                // justified only if no root on the curve agrees with the hint
                let agreeing = match dir {
                    Direction::Sinx(s) => {
                        let (dx, dy) = (dist * (1.0 - s * s).sqrt(), dist * s);
                        dx * hint[0] + dy * hint[1] >= 0.0 || -dx * hint[0] + dy * hint[1] >= 0.0
                    }
                    Direction::Param(DirectionParam { kind: DirectionKind::Linear, .. }) => true,
                    Direction::Param(DirectionParam { value: a, .. }) => {
                        curve_roots(o, t, a, dist).iter().any(|d| d.0 * hint[0] + d.1 * hint[1] > 1e-9)
                    }
                };
                unjustified += usize::from(agreeing);
            }
            Err(_) => unjustified += 1,
        }
    }
    let fixture = solve_endpoint(
        Point::new(0.0, 0.0),
        Some(Point::new(2.0, 0.0)),
        1.34629,
        Direction::Param(DirectionParam::quadratic(1.0)),
        [-1.0, 0.0],
    );
    let fixture_ok = fixture.as_ref().is_ok_and(|p| (p.x + 0.5).abs() <= 1e-3 && (p.y - 1.25).abs() <= 1e-3);
    verdict(
        "endpoint solver",
        worst_lin <= 1e-6 && worst_quad <= 1e-3 && against == 0 && unjustified == 0 && fixture_ok,
        format!(
            "{returned}/1000 solved, worst chord error {worst_lin:.1e} (line/sinx) {worst_quad:.1e} (quadratic), {against} against the hint, {refused} refused with no agreeing root ({unjustified} unjustified), fixture {fixture:?}"
        ),
    );
}

fn random_matrix(r: &mut ChaCha8Rng, max: usize, icons: i32) -> Matrix {
    let (rows, cols) = (r.gen_range(1..=max), r.gen_range(1..=max));
    let cells = (0..rows * cols).map(|_| if r.gen_bool(0.2) { EMPTY } else { r.gen_range(0..icons) }).collect();
    Matrix::new(rows, cols, cells)
}

/// Bounding box of the touched cells and every same-index cell 8-connected to them.
fn flood_box(m: &Matrix, touched: &[(usize, usize)]) -> (usize, usize, usize, usize) {
    let e = m.get(touched[0].0, touched[0].1);
    let mut seen = vec![false; m.rows * m.cols];
    let mut queue: VecDeque<(usize, usize)> = touched.iter().copied().collect();
    for &(r, c) in touched {
        seen[r * m.cols + c] = true;
    }
    let mut b = (usize::MAX, usize::MAX, 0, 0);
    while let Some((r, c)) = queue.pop_front() {
        b = (b.0.min(r), b.1.min(c), b.2.max(r), b.3.max(c));
        for nr in r.saturating_sub(1)..=(r + 1).min(m.rows - 1) {
            for nc in c.saturating_sub(1)..=(c + 1).min(m.cols - 1) {
                if !seen[nr * m.cols + nc] && m.get(nr, nc) == e {
                    seen[nr * m.cols + nc] = true;
                    queue.push_back((nr, nc));
                }
            }
        }
    }
    b
}

/// Every (row, col, index) that fits, by trying every index at every offset.
fn brute_placements(m: &Matrix, p: &SubmatrixPattern) -> BTreeSet<(usize, usize, i32)> {
    let mut out = BTreeSet::new();
    if p.rows > m.rows || p.cols > m.cols {
        return out;
    }
    let indexes: BTreeSet<i32> = m.cells.iter().copied().filter(|&v| v != EMPTY).collect();
    for r0 in 0..=m.rows - p.rows {
        for c0 in 0..=m.cols - p.cols {
            for &i in &indexes {
                let fits = (0..p.rows).all(|pr| {
                    (0..p.cols).all(|pc| {
                        let v = m.get(r0 + pr, c0 + pc);
                        match p.get(pr, pc) {
                            1 => v == i,
                            0 => v != i && v != EMPTY,
                            _ => true,
                        }
                    })
                });
                if fits {
                    out.insert((r0, c0, i));
                }
            }
        }
    }
    out
}

fn random_pattern(r: &mut ChaCha8Rng) -> SubmatrixPattern {
    let (rows, cols) = (r.gen_range(1..=4), r.gen_range(1..=4));
    let mut cells: Vec<i8> = (0..rows * cols).map(|_| [1, 0, -1][r.gen_range(0..3)]).collect();
    let k = r.gen_range(0..cells.len());
    cells[k] = 1;
    SubmatrixPattern { rows, cols, cells, touched: vec![(k / cols, k % cols)] }
}

#[test]
fn submatrix_oracles() {
    let mut r = rng(5);
    let (mut box_mismatch, mut checked) = (0, 0);
    while checked < 500 {
        let m = random_matrix(&mut r, 8, 5);
        let filled: Vec<(usize, usize)> =
            (0..m.rows).flat_map(|a| (0..m.cols).map(move |b| (a, b))).filter(|&(a, b)| m.get(a, b) != EMPTY).collect();
        let Some(&first) = filled.choose(&mut r) else {
            continue;
        };
        checked += 1;
        let e = m.get(first.0, first.1);
        let same: Vec<_> = filled.iter().copied().filter(|&(a, b)| m.get(a, b) == e).collect();
        let mut touched = vec![first];
        if r.gen_bool(0.5) {
            touched.push(*same.choose(&mut r).unwrap());
            touched.dedup();
        }
        let (_, rect) = extract_with_rect(&m, &touched).unwrap();
        if rect != flood_box(&m, &touched) {
            box_mismatch += 1;
        }
    }
    let mut set_mismatch = 0;
    let mut non_empty = 0;
    for n in 0..500 {
        // half the grids are cut from themselves so that matches are common
        let m = random_matrix(&mut r, 8, if n % 2 == 0 { 2 } else { 5 });
        let p = random_pattern(&mut r);
        let fast: BTreeSet<_> = matching_placements(&m, &p).into_iter().collect();
        non_empty += usize::from(!fast.is_empty());
        if fast != brute_placements(&m, &p) {
            set_mismatch += 1;
        }
    }
    verdict(
        "submatrix extraction and pattern matching oracles",
        box_mismatch == 0 && set_mismatch == 0,
        format!("{box_mismatch}/500 rectangles differ from flood fill, {set_mismatch}/500 placement sets differ from brute force ({non_empty} non-empty)"),
    );
}

fn every_icon() -> Vec<IconSpec> {
    let mut seen = BTreeSet::new();
    GameId::ALL.into_iter().flat_map(art::icon_specs).filter(|s| seen.insert(s.name.clone())).collect()
}

fn textured(r: &mut ChaCha8Rng) -> Frame {
    let base: [f64; 3] = std::array::from_fn(|_| r.gen_range(30.0..200.0));
    let slope: [f64; 3] = std::array::from_fn(|_| r.gen_range(-0.06..0.06));
    let mut f = Frame::filled(480, 800, [0, 0, 0]);
    for y in 0..800 {
        for x in 0..480 {
            let px = std::array::from_fn(|k| {
                (base[k] + slope[k] * (x as f64 + y as f64) + r.gen_range(-6.0..6.0)).clamp(0.0, 255.0) as u8
            });
            f.set_pixel(x, y, px);
        }
    }
    f
}

#[test]
fn matcher_precision_recall() {
    let specs = every_icon();
    let mut r = rng(6);
    let (mut truth, mut found, mut hits) = (0usize, 0usize, 0usize);
    let started = Instant::now();
    for _ in 0..200 {
        let mut frame = textured(&mut r);
        let mut placed: Vec<(usize, Rect)> = Vec::new();
        let want = r.gen_range(2..=8);
        for _ in 0..200 {
            if placed.len() == want {
                break;
            }
            let i = r.gen_range(0..specs.len());
            let t = &specs[i].template;
            let (w, h) = (t.width() as f64, t.height() as f64);
            let rect = Rect::new(r.gen_range(0..480 - t.width()) as f64, r.gen_range(0..800 - t.height()) as f64, w, h);
            let padded = Rect::new(rect.x - 4.0, rect.y - 4.0, w + 8.0, h + 8.0);
            if placed.iter().any(|(_, p)| p.intersection_area(&padded) > 0.0) {
                continue;
            }
            frame.blit(t, rect.x as i64, rect.y as i64, r.gen_range(0.9..=1.1));
            placed.push((i, rect));
        }
        let got = match_icons(&frame, &specs, THRESHOLD).unwrap();
        truth += placed.len();
        found += got.len();
        hits += got.iter().filter(|g| placed.iter().any(|(i, p)| *i == g.spec && p.iou(&g.bbox) >= 0.5)).count();
    }
    let (precision, recall) = (hits as f64 / found.max(1) as f64, hits as f64 / truth.max(1) as f64);
    verdict(
        "matcher precision and recall",
        precision >= 0.95 && recall >= 0.95,
        format!(
            "200 frames, {truth} placed, {found} found, precision {precision:.4}, recall {recall:.4} (both need 0.95), {:.1}s",
            started.elapsed().as_secs_f64()
        ),
    );
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const BUDGET: u64 = 500;

struct Run {
    seed: u64,
    tactics: TacticSet,
    learned: TestReport,
    base: TestReport,
}

fn pipeline(game: GameId, seed: u64, work: &Path) -> Run {
    let (demo, icons) = (work.join(format!("{game}-{seed}")), work.join(format!("{game}-icons-{seed}")));
    art::write_icon_dir(game, &icons).unwrap();
    let specs = art::icon_specs(game);
    record_demo(&mut *new_demonstrator(game, seed), &mut OracleSource::new(seed), Limit::Actions(40), DEFAULT_PERIOD, &demo)
        .unwrap();
    let tactics = infer_with_specs(&demo, &specs, &icons, seed).map(|i| i.tactics).unwrap_or_else(|_| {
        TacticSet::new(playtest_core::infer::Provenance::default(), Vec::new())
    });
    // autoplay meets a different deal than the demo did
    let play_seed = seed + 100;
    let learned = run_test(&mut *new_game(game, play_seed), &specs, &tactics, Budget::Actions(BUDGET), seed);
    let base = run_random_baseline(&mut *new_game(game, play_seed), &specs, Budget::Actions(BUDGET), seed);
    Run { seed, tactics, learned, base }
}

fn runs(game: GameId) -> &'static [Run] {
    static CELLS: [OnceLock<Vec<Run>>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let k = GameId::ALL.iter().position(|&g| g == game).unwrap();
    CELLS[k].get_or_init(|| {
        let work = tempfile::tempdir().unwrap();
        let started = Instant::now();
        let v: Vec<Run> = std::thread::scope(|scope| {
            let work = work.path();
            let handles: Vec<_> = SEEDS.iter().map(|&s| scope.spawn(move || pipeline(game, s, work))).collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut out = std::io::stdout().lock();
        for r in &v {
            let rules: Vec<String> = r.tactics.tactics.iter().map(|t| t.rule.to_string()).collect();
            let _ = writeln!(
                out,
                "     {game} seed {}: tactics [{}] | tactics score {} level {} valid {:.3} fallback {:.3} | baseline score {} level {} valid {:.3}",
                r.seed,
                rules.join(" "),
                r.learned.score,
                r.learned.level,
                r.learned.valid_action_rate,
                r.learned.fallback_rate,
                r.base.score,
                r.base.level,
                r.base.valid_action_rate
            );
        }
        let _ = writeln!(out, "     {game}: 5 seeds in {:.1}s", started.elapsed().as_secs_f64());
        v
    })
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn end_to_end() {
    let started = Instant::now();
    let sling = runs(GameId::Slingshot);
    let learned_levels = sling.iter().all(|r| r.learned.level >= 1);
    let base_levels = sling.iter().all(|r| r.base.level == 0);
    let (learned_mean, base_mean) =
        (mean(sling.iter().map(|r| r.learned.score as f64)), mean(sling.iter().map(|r| r.base.score as f64)));
    let sling_ok = learned_levels && base_levels && learned_mean >= 3.0 * base_mean;

    let link = runs(GameId::Linkpair);
    let link_ok = link.iter().all(|r| r.learned.valid_action_rate >= 2.0 * r.base.valid_action_rate)
        && link.iter().any(|r| r.learned.valid_action_rate > 0.0);
    let (link_lit, link_base) = (
        mean(link.iter().map(|r| r.learned.valid_action_rate)),
        mean(link.iter().map(|r| r.base.valid_action_rate)),
    );

    let slider = runs(GameId::Slider);
    let (s_lit, s_base) =
        (mean(slider.iter().map(|r| r.learned.score as f64)), mean(slider.iter().map(|r| r.base.score as f64)));
    let ratio = s_lit.max(s_base) / s_lit.min(s_base).max(1.0);
    let per_seed = slider.iter().filter(|r| {
        let (a, b) = (r.learned.score.max(1) as f64, r.base.score.max(1) as f64);
        a.max(b) / a.min(b) <= 2.0
    });
    let slider_ok = ratio <= 2.0;
    let secs = started.elapsed().as_secs_f64();

    verdict(
        "end to end, slingshot",
        sling_ok,
        format!(
            "tactic levels {:?}, baseline levels {:?}, mean score {learned_mean:.0} vs {base_mean:.0}",
            sling.iter().map(|r| r.learned.level).collect::<Vec<_>>(),
            sling.iter().map(|r| r.base.level).collect::<Vec<_>>()
        ),
    );
    verdict(
        "end to end, linkpair",
        link_ok,
        format!(
            "valid rate per seed tactics {:?} vs baseline {:?} (means {link_lit:.3} vs {link_base:.3})",
            link.iter().map(|r| format!("{:.3}", r.learned.valid_action_rate)).collect::<Vec<_>>(),
            link.iter().map(|r| format!("{:.3}", r.base.valid_action_rate)).collect::<Vec<_>>()
        ),
    );
    verdict(
        "end to end, slider",
        slider_ok,
        format!(
            "mean score tactics {s_lit:.0} vs baseline {s_base:.0}, ratio {ratio:.2} (limit 2); {} of 5 seeds within 2x on their own",
            per_seed.count()
        ),
    );
    verdict("end to end, runtime", secs < 600.0, format!("{secs:.0}s for three games (limit 600s)"));
}

#[test]
fn stability() {
    let sling = runs(GameId::Slingshot);
    let learned_min = sling.iter().map(|r| r.learned.score).min().unwrap();
    let base_max = sling.iter().map(|r| r.base.score).max().unwrap();
    verdict("stability", learned_min > base_max, format!("slingshot tactics minimum {learned_min} vs baseline maximum {base_max}"));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn determinism() {
    let work = tempfile::tempdir().unwrap();
    let mut problems = Vec::new();
    for game in GameId::ALL {
        let specs = art::icon_specs(game);
        let icons = work.path().join(format!("{game}-icons"));
        art::write_icon_dir(game, &icons).unwrap();
        let demo = |tag: &str| {
            let d = work.path().join(format!("{game}-{tag}"));
            record_demo(&mut *new_demonstrator(game, 9), &mut OracleSource::new(9), Limit::Actions(25), DEFAULT_PERIOD, &d)
                .unwrap();
            d
        };
        let (d1, d2) = (demo("a"), demo("b"));
        if dir_bytes(&d1) != dir_bytes(&d2) {
            problems.push(format!("{game} demo"));
        }
        let infer = |d: &Path| infer_with_specs(d, &specs, &icons, 9).map(|i| i.tactics.to_json());
        let (t1, t2) = (infer(&d1), infer(&d1));
        let tactics = match (&t1, &t2) {
            (Ok(a), Ok(b)) if a.as_bytes() == b.as_bytes() => TacticSet::from_json(a).unwrap(),
            _ => {
                problems.push(format!("{game} tactics"));
                continue;
            }
        };
        let play = || run_test(&mut *new_game(game, 11), &specs, &tactics, Budget::Actions(120), 11);
        if !play().same_outcome(&play()) {
            problems.push(format!("{game} autoplay report"));
        }
        let base = || run_random_baseline(&mut *new_game(game, 11), &specs, Budget::Actions(120), 11);
        if !base().same_outcome(&base()) {
            problems.push(format!("{game} baseline report"));
        }
    }
    verdict(
        "determinism",
        problems.is_empty(),
        format!("demo files, tactic files and reports repeated for 4 games; differing: {problems:?}"),
    );
}
