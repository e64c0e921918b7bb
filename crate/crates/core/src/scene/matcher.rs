//! Zero-mean normalized cross-correlation on grayscale (r + g + b) images.
//!
//! Every valid offset is evaluated, but most are settled by an upper bound
//! instead of the full correlation. The template is cut into 8×8 blocks; with
//! `c` the zero-mean template, `m_b` its mean over block `b`, `S_b` the window
//! sum over `b` and `f = c - m_b` the in-block residual,
//!
//! ```text
//! Σ c·w = Σ_b m_b·S_b + Σ f·w  ≤  Σ_b m_b·S_b + ‖f‖·sqrt(Σ w² − Σ_b S_b²/n_b)
//! ```
//!
//! Offsets whose bound falls below the threshold cannot match and are skipped.
//! Everything else is scored exactly, in integer arithmetic where possible, so
//! the output does not depend on the bound.

use super::frame::Frame;
use super::{IconInstance, IconSpec, SceneError};
use crate::geometry::Rect;

const BLOCK: usize = 8;
/// Candidates overlapping an accepted instance of the same spec by more than
/// this intersection-over-union are suppressed.
pub const NMS_IOU: f64 = 0.3;

/// Gray image where each pixel is r + g + b. Scaling luma by 1/3 does not
/// change a correlation coefficient, so the sum keeps everything integral.
#[derive(Debug, Clone)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u32>,
}

impl GrayImage {
    pub fn from_frame(frame: &Frame) -> Self {
        let data = frame.pixels().chunks_exact(3).map(|p| p[0] as u32 + p[1] as u32 + p[2] as u32).collect();
        Self { width: frame.width() as usize, height: frame.height() as usize, data }
    }
}

/// Per-frame tables shared by all templates.
pub struct FrameStats {
    gray: GrayImage,
    /// Summed-area tables with a zero first row and column.
    sum: Vec<u64>,
    sumsq: Vec<u64>,
    /// Sum over the 8×8 block whose top-left corner is (x, y); stride `width - 7`.
    box8: Vec<f32>,
}

impl FrameStats {
    pub fn new(frame: &Frame) -> Self {
        let gray = GrayImage::from_frame(frame);
        let (w, h) = (gray.width, gray.height);
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sumsq = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let (mut row, mut rowsq) = (0u64, 0u64);
            for x in 0..w {
                let v = gray.data[y * w + x] as u64;
                row += v;
                rowsq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row;
                sumsq[(y + 1) * stride + x + 1] = sumsq[y * stride + x + 1] + rowsq;
            }
        }
        let mut stats = Self { gray, sum, sumsq, box8: Vec::new() };
        stats.box8 = stats.box_table(BLOCK);
        stats
    }

    fn box_table(&self, size: usize) -> Vec<f32> {
        let (w, h) = (self.gray.width, self.gray.height);
        if w < size || h < size {
            return Vec::new();
        }
        let bw = w - size + 1;
        let mut table = vec![0.0f32; bw * (h - size + 1)];
        for y in 0..=h - size {
            for x in 0..bw {
                // at most 64·765, exact in f32
                table[y * bw + x] = self.rect_sum(x, y, size, size) as f32;
            }
        }
        table
    }

    #[inline]
    fn table(t: &[u64], stride: usize, x: usize, y: usize, w: usize, h: usize) -> u64 {
        t[(y + h) * stride + x + w] + t[y * stride + x] - t[y * stride + x + w] - t[(y + h) * stride + x]
    }

    #[inline]
    fn rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        Self::table(&self.sum, self.gray.width + 1, x, y, w, h)
    }

    #[inline]
    fn rect_sumsq(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        Self::table(&self.sumsq, self.gray.width + 1, x, y, w, h)
    }
}

struct Block {
    dx: usize,
    dy: usize,
    w: usize,
    h: usize,
    /// Mean of the zero-mean template over the block.
    mean: f64,
}

/// A template prepared for repeated matching.
pub struct PreparedTemplate {
    width: usize,
    height: usize,
    gray: Vec<u32>,
    n: u64,
    sum: u64,
    /// n·Σt² − (Σt)²
    var_n: f64,
    /// ‖t − mean(t)‖
    norm: f64,
    blocks: Vec<Block>,
    max_abs_mean: f64,
    /// ‖f‖: residual energy not explained by block means.
    residual: f64,
}

/// Blocks of the zero-mean template with their means, and the residual norm.
fn block_means(gray: &[u32], width: usize, height: usize, mean: f64, size: usize) -> (Vec<Block>, f64) {
    let mut blocks = Vec::new();
    let mut residual_sq = 0.0;
    for dy in (0..height).step_by(size) {
        for dx in (0..width).step_by(size) {
            let (bw, bh) = (size.min(width - dx), size.min(height - dy));
            let vals: Vec<f64> = (dy..dy + bh)
                .flat_map(|y| (dx..dx + bw).map(move |x| (y, x)))
                .map(|(y, x)| gray[y * width + x] as f64 - mean)
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            residual_sq += vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            blocks.push(Block { dx, dy, w: bw, h: bh, mean: m });
        }
    }
    (blocks, residual_sq.max(0.0).sqrt())
}

impl PreparedTemplate {
    pub fn new(template: &Frame) -> Self {
        let gray = GrayImage::from_frame(template);
        let (width, height) = (gray.width, gray.height);
        let n = (width * height) as u64;
        let sum: u64 = gray.data.iter().map(|&v| v as u64).sum();
        let sumsq: u64 = gray.data.iter().map(|&v| v as u64 * v as u64).sum();
        let var_n = n as f64 * sumsq as f64 - (sum as f64) * (sum as f64);
        let mean = sum as f64 / n as f64;
        let norm = (var_n.max(0.0) / n as f64).sqrt();

        let (blocks, residual) = block_means(&gray.data, width, height, mean, BLOCK);
        Self { width, height, gray: gray.data, n, sum, var_n, norm, max_abs_mean: blocks.iter().map(|b| b.mean.abs()).fold(0.0, f64::max), blocks, residual }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Exact correlation coefficient at offset (x, y); 0 when either side has no variance.
    pub fn score_at(&self, stats: &FrameStats, x: usize, y: usize) -> f64 {
        let win_sum = stats.rect_sum(x, y, self.width, self.height);
        let win_sumsq = stats.rect_sumsq(x, y, self.width, self.height);
        self.exact(stats, x, y, win_sum, win_sumsq)
    }

    fn exact(&self, stats: &FrameStats, x: usize, y: usize, win_sum: u64, win_sumsq: u64) -> f64 {
        let n = self.n as i128;
        let win_var_n = n * win_sumsq as i128 - (win_sum as i128) * (win_sum as i128);
        if win_var_n <= 0 || self.var_n <= 0.0 {
            return 0.0;
        }
        let fw = stats.gray.width;
        let mut cross: u64 = 0;
        for ty in 0..self.height {
            let frow = &stats.gray.data[(y + ty) * fw + x..(y + ty) * fw + x + self.width];
            let trow = &self.gray[ty * self.width..(ty + 1) * self.width];
            cross += trow.iter().zip(frow).map(|(&a, &b)| (a * b) as u64).sum::<u64>();
        }
        let num = n * cross as i128 - self.sum as i128 * win_sum as i128;
        num as f64 / (self.var_n * win_var_n as f64).sqrt()
    }

    /// All offsets scoring at least `threshold`, as (x, y, score) in scan order.
    pub fn candidates(&self, stats: &FrameStats, threshold: f64) -> Vec<(usize, usize, f64)> {
        scan(stats, &[self], threshold).pop().unwrap_or_default()
    }

    fn same_shape(&self, other: &PreparedTemplate) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Bound minus requirement, with slack for floating-point error; the offset
/// can only match when this is non-negative. `rounding` covers computing
/// `low` in single precision.
#[inline]
fn pruning_margin(low: f64, unexplained: f64, need: f64, rounding: f64) -> f64 {
    let slack = 1e-9 * (low.abs() + unexplained + need) + 1e-6 + rounding;
    low + unexplained + slack - need
}

/// Bound on |Σ m_b·S_b − its f32 evaluation| for 16 or so blocks; S_b ≥ 0 and Σ S_b ≤ the window sum.
const F32_ROUNDING: f64 = 1e-5;

/// Candidates for several templates of one shape, sharing the window statistics.
///
/// Work proceeds a row of offsets at a time so the inner loops run over
/// contiguous memory.
fn scan(stats: &FrameStats, templates: &[&PreparedTemplate], threshold: f64) -> Vec<Vec<(usize, usize, f64)>> {
    let mut out = vec![Vec::new(); templates.len()];
    let Some(first) = templates.first() else { return out };
    debug_assert!(templates.iter().all(|t| t.same_shape(first)));
    let (fw, fh) = (stats.gray.width, stats.gray.height);
    let (tw, th) = (first.width, first.height);
    if tw > fw || th > fh {
        return out;
    }
    let fast = !stats.box8.is_empty() && first.blocks.iter().all(|b| b.w == BLOCK && b.h == BLOCK);
    let stride8 = fw.saturating_sub(BLOCK - 1);
    let n = first.n as f64;
    let nx = fw - tw + 1;

    let mut win_sum = vec![0u64; nx];
    let mut win_sumsq = vec![0u64; nx];
    let mut win_var = vec![0.0f64; nx];
    let mut sd = vec![0.0f64; nx];
    let mut rest = vec![0.0f64; nx];
    let mut acc = vec![0.0f64; nx];
    let mut low = vec![0.0f64; nx];
    let mut low32 = vec![0.0f32; nx];
    let mut margin = vec![0.0f64; nx];

    // Σ_b S_b²/n_b over the blocks, a row of offsets at a time
    let explained_row = |acc: &mut [f64], table: &[f32], stride: usize, blocks: &[Block], y: usize| {
        acc.iter_mut().for_each(|e| *e = 0.0);
        for b in blocks {
            let row = &table[(y + b.dy) * stride + b.dx..][..nx];
            for (e, &s) in acc.iter_mut().zip(row) {
                *e += s as f64 * s as f64;
            }
        }
        let size = (blocks[0].w * blocks[0].h) as f64;
        acc.iter_mut().for_each(|e| *e /= size);
    };
    let low_row = |low: &mut [f32], table: &[f32], stride: usize, blocks: &[Block], y: usize| {
        low.iter_mut().for_each(|l| *l = 0.0);
        let row = |b: &Block| &table[(y + b.dy) * stride + b.dx..][..nx];
        let mut quads = blocks.chunks_exact(4);
        for q in &mut quads {
            let (m0, m1, m2, m3) = (q[0].mean as f32, q[1].mean as f32, q[2].mean as f32, q[3].mean as f32);
            let (r0, r1, r2, r3) = (row(&q[0]), row(&q[1]), row(&q[2]), row(&q[3]));
            for x in 0..nx {
                low[x] += m0 * r0[x] + m1 * r1[x] + m2 * r2[x] + m3 * r3[x];
            }
        }
        for b in quads.remainder() {
            let m = b.mean as f32;
            for (l, &s) in low.iter_mut().zip(row(b)) {
                *l += m * s;
            }
        }
    };

    for y in 0..=fh - th {
        let mut any = false;
        for x in 0..nx {
            win_sum[x] = stats.rect_sum(x, y, tw, th);
            win_sumsq[x] = stats.rect_sumsq(x, y, tw, th);
            win_var[x] = win_sumsq[x] as f64 - (win_sum[x] as f64) * (win_sum[x] as f64) / n;
            sd[x] = win_var[x].max(0.0).sqrt();
            any |= win_var[x] > 0.0;
        }
        if threshold <= 0.0 {
            for (t, found) in templates.iter().zip(out.iter_mut()) {
                for x in 0..nx {
                    let score = if win_var[x] > 0.0 { t.exact(stats, x, y, win_sum[x], win_sumsq[x]) } else { 0.0 };
                    if score >= threshold {
                        found.push((x, y, score));
                    }
                }
            }
            continue;
        }
        if !any {
            continue;
        }

        if fast {
            explained_row(&mut acc, &stats.box8, stride8, &first.blocks, y);
        } else {
            for x in 0..nx {
                acc[x] = first
                    .blocks
                    .iter()
                    .map(|b| {
                        let s = stats.rect_sum(x + b.dx, y + b.dy, b.w, b.h) as f64;
                        s * s / (b.w * b.h) as f64
                    })
                    .sum();
            }
        }
        for x in 0..nx {
            rest[x] = (win_sumsq[x] as f64 - acc[x]).max(0.0).sqrt();
        }
        for (t, found) in templates.iter().zip(out.iter_mut()) {
            let mut rounding = 0.0;
            if fast {
                low_row(&mut low32, &stats.box8, stride8, &t.blocks, y);
                low.iter_mut().zip(&low32).for_each(|(l, &v)| *l = v as f64);
                rounding = F32_ROUNDING * t.max_abs_mean;
            } else {
                for x in 0..nx {
                    low[x] = t
                        .blocks
                        .iter()
                        .map(|b| b.mean * stats.rect_sum(x + b.dx, y + b.dy, b.w, b.h) as f64)
                        .sum();
                }
            }
            let k = threshold * t.norm;
            for x in 0..nx {
                margin[x] = pruning_margin(low[x], t.residual * rest[x], k * sd[x], rounding * win_sum[x] as f64);
            }
            for x in 0..nx {
                if win_var[x] <= 0.0 || margin[x] < 0.0 {
                    continue;
                }
                let score = t.exact(stats, x, y, win_sum[x], win_sumsq[x]);
                if score >= threshold {
                    found.push((x, y, score));
                }
            }
        }
    }
    out
}

/// Keeps local maxima (8-neighbourhood, ties kept) among scan-ordered candidates.
fn local_maxima(cands: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let key = |x: usize, y: usize| (y, x);
    let find = |x: usize, y: usize| {
        cands.binary_search_by(|c| key(c.0, c.1).cmp(&key(x, y))).ok().map(|i| cands[i].2)
    };
    cands
        .iter()
        .copied()
        .filter(|&(x, y, s)| {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 {
                        continue;
                    }
                    if let Some(ns) = find(nx as usize, ny as usize) {
                        if ns > s {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect()
}

/// Greedy non-maximum suppression by descending score; ties broken by scan order.
pub fn non_max_suppression(mut found: Vec<IconInstance>) -> Vec<IconInstance> {
    found.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.bbox.y.total_cmp(&b.bbox.y))
            .then(a.bbox.x.total_cmp(&b.bbox.x))
    });
    let mut kept: Vec<IconInstance> = Vec::new();
    for cand in found {
        if kept.iter().all(|k| k.spec != cand.spec || k.bbox.iou(&cand.bbox) <= NMS_IOU) {
            kept.push(cand);
        }
    }
    kept
}

/// Finds every placement of every spec scoring at least `threshold`.
///
/// The result is ordered by spec, then by position (top to bottom, left to right).
pub fn match_icons(frame: &Frame, specs: &[IconSpec], threshold: f64) -> Result<Vec<IconInstance>, SceneError> {
    for spec in specs {
        if spec.template.width() >= frame.width() || spec.template.height() >= frame.height() {
            return Err(SceneError::TemplateTooLarge(spec.name.clone()));
        }
    }
    let stats = FrameStats::new(frame);
    let prepared: Vec<PreparedTemplate> = specs.iter().map(|s| PreparedTemplate::new(&s.template)).collect();
    let mut cands: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); specs.len()];
    let mut done = vec![false; specs.len()];
    for i in 0..specs.len() {
        if done[i] {
            continue;
        }
        let group: Vec<usize> = (i..specs.len()).filter(|&j| !done[j] && prepared[j].same_shape(&prepared[i])).collect();
        let refs: Vec<&PreparedTemplate> = group.iter().map(|&j| &prepared[j]).collect();
        for (&j, found) in group.iter().zip(scan(&stats, &refs, threshold)) {
            done[j] = true;
            cands[j] = found;
        }
    }

    let mut all = Vec::new();
    for (idx, spec) in specs.iter().enumerate() {
        let (w, h) = (prepared[idx].width as f64, prepared[idx].height as f64);
        let found = local_maxima(&cands[idx])
            .into_iter()
            .map(|(x, y, score)| {
                let bbox = Rect::new(x as f64, y as f64, w, h);
                IconInstance { spec: idx, category: spec.category, centroid: bbox.center(), bbox, score }
            })
            .collect();
        let mut kept = non_max_suppression(found);
        kept.sort_by(|a, b| a.bbox.y.total_cmp(&b.bbox.y).then(a.bbox.x.total_cmp(&b.bbox.x)));
        all.extend(kept);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Category;

    fn pattern(w: u32, h: u32, seed: u32) -> Frame {
        let mut f = Frame::filled(w, h, [0, 0, 0]);
        let mut s = seed.wrapping_mul(2654435761).wrapping_add(1);
        for y in 0..h {
            for x in 0..w {
                s ^= s << 13;
                s ^= s >> 17;
                s ^= s << 5;
                let v = 30 + (s % 190) as u8;
                f.set_pixel(x, y, [v, v / 2 + 20, 220 - v]);
            }
        }
        f
    }

    fn spec(template: Frame) -> IconSpec {
        IconSpec { name: "t".into(), category: Category::Actionable, template }
    }

    /// Brute-force zero-mean NCC in floating point.
    fn reference_ncc(frame: &Frame, template: &Frame, x: u32, y: u32) -> f64 {
        let g = |p: [u8; 3]| p.iter().map(|&c| c as f64).sum::<f64>() / 3.0;
        let n = (template.width() * template.height()) as f64;
        let (mut ts, mut ws) = (vec![], vec![]);
        for ty in 0..template.height() {
            for tx in 0..template.width() {
                ts.push(g(template.pixel(tx, ty)));
                ws.push(g(frame.pixel(x + tx, y + ty)));
            }
        }
        let tm = ts.iter().sum::<f64>() / n;
        let wm = ws.iter().sum::<f64>() / n;
        let num: f64 = ts.iter().zip(&ws).map(|(a, b)| (a - tm) * (b - wm)).sum();
        let da: f64 = ts.iter().map(|a| (a - tm).powi(2)).sum();
        let db: f64 = ws.iter().map(|b| (b - wm).powi(2)).sum();
        if da == 0.0 || db == 0.0 {
            0.0
        } else {
            num / (da * db).sqrt()
        }
    }

    #[test]
    fn exact_copy_scores_one() {
        let t = pattern(16, 16, 3);
        let mut frame = pattern(120, 90, 99);
        frame.blit(&t, 10, 20, 1.0);
        let found = match_icons(&frame, &[spec(t)], 0.9).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].bbox, Rect::new(10.0, 20.0, 16.0, 16.0));
        assert_eq!(found[0].centroid, crate::Point::new(18.0, 28.0));
        assert!((found[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ragged_template_blocks() {
        // 13×11 is not a multiple of the block size; exercises the slow path.
        let t = pattern(13, 11, 5);
        let mut frame = pattern(80, 60, 7);
        frame.blit(&t, 40, 30, 1.0);
        let found = match_icons(&frame, &[spec(t)], 0.9).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!((found[0].bbox.x, found[0].bbox.y), (40.0, 30.0));
    }

    #[test]
    fn gain_scaled_copy_still_matches() {
        let t = pattern(16, 16, 11);
        let mut frame = Frame::filled(100, 100, [90, 90, 90]);
        frame.blit(&t, 50, 5, 1.1);
        let found = match_icons(&frame, &[spec(t)], 0.9).unwrap();
        assert_eq!(found.len(), 1);
        assert!(found[0].score >= 0.99, "{}", found[0].score);
    }

    #[test]
    fn flat_frame_has_no_matches() {
        let frame = Frame::filled(64, 64, [40, 80, 120]);
        assert!(match_icons(&frame, &[spec(pattern(8, 8, 1))], 0.9).unwrap().is_empty());
    }

    #[test]
    fn template_must_be_smaller_than_frame() {
        let frame = Frame::filled(16, 16, [0, 0, 0]);
        assert!(matches!(
            match_icons(&frame, &[spec(pattern(16, 8, 1))], 0.9),
            Err(SceneError::TemplateTooLarge(_))
        ));
    }

    #[test]
    fn integer_scores_agree_with_floating_reference() {
        let t = pattern(16, 8, 21);
        let frame = pattern(40, 30, 8);
        let stats = FrameStats::new(&frame);
        let prepared = PreparedTemplate::new(&t);
        for (x, y) in [(0, 0), (3, 7), (24, 22), (10, 10)] {
            let a = prepared.score_at(&stats, x, y);
            let b = reference_ncc(&frame, &t, x as u32, y as u32);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn bound_never_drops_a_qualifying_offset() {
        // Compare pruned candidates against an exhaustive scan at a low threshold.
        for seed in 0..4 {
            let t = pattern(16, 16, seed);
            let mut frame = pattern(64, 48, seed + 100);
            frame.blit(&t, 20, 12, 0.95);
            let stats = FrameStats::new(&frame);
            let prepared = PreparedTemplate::new(&t);
            for threshold in [0.05, 0.2, 0.5] {
                let fast: Vec<_> = prepared.candidates(&stats, threshold).iter().map(|c| (c.0, c.1)).collect();
                let mut slow = vec![];
                for y in 0..=48 - 16 {
                    for x in 0..=64 - 16 {
                        if prepared.score_at(&stats, x, y) >= threshold {
                            slow.push((x, y));
                        }
                    }
                }
                assert_eq!(fast, slow, "seed {seed} threshold {threshold}");
            }
        }
    }

    #[test]
    fn suppression_keeps_best_of_overlapping() {
        let mk = |x: f64, score: f64| IconInstance {
            spec: 0,
            category: Category::Target,
            centroid: crate::Point::new(x + 5.0, 5.0),
            bbox: Rect::new(x, 0.0, 10.0, 10.0),
            score,
        };
        let kept = non_max_suppression(vec![mk(0.0, 0.95), mk(2.0, 0.97), mk(30.0, 0.91)]);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].bbox.x, 2.0);
        assert_eq!(kept[1].bbox.x, 30.0);
    }
}
