use serde::{Deserialize, Serialize};

use super::{Category, IconInstance};

/// Cluster gap as a fraction of the median icon side.
pub const GAP_FACTOR: f64 = 0.6;
/// Minimum share of filled cells for a layout to count as a grid.
pub const MIN_OCCUPANCY: f64 = 0.5;
pub const EMPTY: i32 = -1;

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<i32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, cells: Vec<i32>) -> Self {
        assert_eq!(rows * cols, cells.len(), "matrix shape mismatch");
        Self { rows, cols, cells }
    }

    pub fn filled(rows: usize, cols: usize, value: i32) -> Self {
        Self { rows, cols, cells: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: &[&[i32]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let cells: Vec<i32> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(rows.len(), cols, cells)
    }

    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: i32) {
        self.cells[row * self.cols + col] = value;
    }
}

/// Actionable icons arranged in rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
    /// Spec index per cell, [`EMPTY`] where no icon sits.
    pub matrix: Matrix,
    pub row_lines: Vec<f64>,
    pub col_lines: Vec<f64>,
    /// Cell of each instance passed to [`detect_grid`]; `None` for non-actionable ones.
    pub cells: Vec<Option<(usize, usize)>>,
}

impl GridLayout {
    pub fn cell_of(&self, instance: usize) -> Option<(usize, usize)> {
        self.cells.get(instance).copied().flatten()
    }

    /// Index of the instance occupying a cell.
    pub fn instance_at(&self, row: usize, col: usize) -> Option<usize> {
        self.cells.iter().position(|c| *c == Some((row, col)))
    }

    pub fn occupancy(&self) -> f64 {
        self.cells.iter().flatten().count() as f64 / (self.rows * self.cols) as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// 1-D clustering: sorted values split wherever consecutive values differ by more than `gap`.
fn cluster_centers(values: &[f64], gap: f64) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut centers = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for v in sorted {
        if let Some(&last) = group.last() {
            if v - last > gap {
                centers.push(group.iter().sum::<f64>() / group.len() as f64);
                group.clear();
            }
        }
        group.push(v);
    }
    if !group.is_empty() {
        centers.push(group.iter().sum::<f64>() / group.len() as f64);
    }
    centers
}

/// Puts back lines hidden by empty rows or columns: a spacing close to a whole
/// multiple of the smallest one gets evenly spaced lines in between.
fn fill_lattice(lines: Vec<f64>, tolerance: f64) -> Vec<f64> {
    let Some(pitch) = lines.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp) else {
        return lines;
    };
    let mut out = vec![lines[0]];
    for w in lines.windows(2) {
        let d = w[1] - w[0];
        let k = (d / pitch).round();
        if k >= 2.0 && (d - k * pitch).abs() <= tolerance {
            out.extend((1..k as usize).map(|j| w[0] + d * j as f64 / k));
        }
        out.push(w[1]);
    }
    out
}

fn nearest(lines: &[f64], v: f64) -> (usize, f64) {
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| (i, (l - v).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one line")
}

/// Detects a matrix layout among the actionable instances.
///
/// Rows and columns left empty inside the layout are kept when the spacing
/// shows them. Returns `None` unless there are at least two rows and two columns, every
/// actionable instance sits within half a gap of one row and one column line,
/// no two instances share a cell, and at least half of the cells are filled.
pub fn detect_grid(instances: &[IconInstance]) -> Option<GridLayout> {
    let actionable: Vec<usize> =
        (0..instances.len()).filter(|&i| instances[i].category == Category::Actionable).collect();
    if actionable.len() < 4 {
        return None;
    }
    let side = median(actionable.iter().map(|&i| (instances[i].bbox.w + instances[i].bbox.h) / 2.0).collect());
    let gap = GAP_FACTOR * side;
    if gap <= 0.0 {
        return None;
    }
    let xs: Vec<f64> = actionable.iter().map(|&i| instances[i].centroid.x).collect();
    let ys: Vec<f64> = actionable.iter().map(|&i| instances[i].centroid.y).collect();
    let col_lines = fill_lattice(cluster_centers(&xs, gap), gap / 2.0);
    let row_lines = fill_lattice(cluster_centers(&ys, gap), gap / 2.0);
    let (rows, cols) = (row_lines.len(), col_lines.len());
    if rows < 2 || cols < 2 {
        return None;
    }

    let mut matrix = Matrix::filled(rows, cols, EMPTY);
    let mut cells = vec![None; instances.len()];
    for &i in &actionable {
        let (r, dr) = nearest(&row_lines, instances[i].centroid.y);
        let (c, dc) = nearest(&col_lines, instances[i].centroid.x);
        if dr > gap / 2.0 || dc > gap / 2.0 || matrix.get(r, c) != EMPTY {
            return None;
        }
        matrix.set(r, c, instances[i].spec as i32);
        cells[i] = Some((r, c));
    }
    if (actionable.len() as f64) < MIN_OCCUPANCY * (rows * cols) as f64 {
        return None;
    }
    Some(GridLayout { rows, cols, matrix, row_lines, col_lines, cells })
}
