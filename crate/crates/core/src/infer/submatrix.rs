use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Matrix, EMPTY};

/// Normalized neighbourhood of a demonstrated grid move.
///
/// Cells are 1 where the icon equals the touched one, 0 for a different icon
/// and −1 for an empty slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubmatrixPattern {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<i8>,
    /// Positions (row, col) of the touched cells inside the pattern.
    pub touched: Vec<(usize, usize)>,
}

impl SubmatrixPattern {
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.cells[row * self.cols + col]
    }

    /// True when the invariants hold: shape matches, ≥1 one-cell, every touched cell is a 1.
    pub fn is_well_formed(&self) -> bool {
        self.rows * self.cols == self.cells.len()
            && self.cells.contains(&1)
            && self.touched.iter().all(|&(r, c)| r < self.rows && c < self.cols && self.get(r, c) == 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubmatrixError {
    #[error("touched cells hold different icons")]
    HeterogeneousTouch,
    #[error("no touched cells")]
    NoTouch,
    #[error("touched cell ({0}, {1}) is empty or outside the matrix")]
    BadTouch(usize, usize),
}

/// Inclusive cell rectangle (min_row, min_col, max_row, max_col).
pub type CellRect = (usize, usize, usize, usize);

/// Extracts the action-relevant submatrix around the touched cells.
///
/// Starting from the touched cells, a breadth-first walk over 8-neighbourhoods
/// follows cells normalized to 1 and grows the covering rectangle to include
/// each one reached. The normalized matrix cropped to that rectangle is the pattern.
pub fn extract_submatrix(matrix: &Matrix, touched: &[(usize, usize)]) -> Result<SubmatrixPattern, SubmatrixError> {
    let (pattern, _) = extract_with_rect(matrix, touched)?;
    Ok(pattern)
}

/// As [`extract_submatrix`], also returning the rectangle in matrix coordinates.
pub fn extract_with_rect(
    matrix: &Matrix,
    touched: &[(usize, usize)],
) -> Result<(SubmatrixPattern, CellRect), SubmatrixError> {
    let &(r0, c0) = touched.first().ok_or(SubmatrixError::NoTouch)?;
    for &(r, c) in touched {
        if r >= matrix.rows || c >= matrix.cols || matrix.get(r, c) == EMPTY {
            return Err(SubmatrixError::BadTouch(r, c));
        }
    }
    let e = matrix.get(r0, c0);
    if touched.iter().any(|&(r, c)| matrix.get(r, c) != e) {
        return Err(SubmatrixError::HeterogeneousTouch);
    }

    let normalized: Vec<i8> = matrix
        .cells
        .iter()
        .map(|&v| if v == e { 1 } else if v == EMPTY { -1 } else { 0 })
        .collect();

    let (mut min_r, mut min_c, mut max_r, mut max_c) = (r0, c0, r0, c0);
    for &(r, c) in touched {
        min_r = min_r.min(r);
        min_c = min_c.min(c);
        max_r = max_r.max(r);
        max_c = max_c.max(c);
    }

    let mut visited: HashSet<(usize, usize)> = touched.iter().copied().collect();
    let mut queue: VecDeque<(usize, usize)> = touched.iter().copied().collect();
    while let Some((r, c)) = queue.pop_front() {
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 || nr >= matrix.rows as i64 || nc >= matrix.cols as i64 {
                    continue;
                }
                let n = (nr as usize, nc as usize);
                if normalized[n.0 * matrix.cols + n.1] == 1 && visited.insert(n) {
                    queue.push_back(n);
                    min_r = min_r.min(n.0);
                    min_c = min_c.min(n.1);
                    max_r = max_r.max(n.0);
                    max_c = max_c.max(n.1);
                }
            }
        }
    }

    let (rows, cols) = (max_r - min_r + 1, max_c - min_c + 1);
    let mut cells = Vec::with_capacity(rows * cols);
    for r in min_r..=max_r {
        for c in min_c..=max_c {
            cells.push(normalized[r * matrix.cols + c]);
        }
    }
    let mut rebased: Vec<(usize, usize)> = touched.iter().map(|&(r, c)| (r - min_r, c - min_c)).collect();
    rebased.dedup();
    Ok((SubmatrixPattern { rows, cols, cells, touched: rebased }, (min_r, min_c, max_r, max_c)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pair_fixture() {
        let m = Matrix::from_rows(&[&[1, 2], &[2, 3]]);
        let p = extract_submatrix(&m, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!((p.rows, p.cols), (2, 2));
        assert_eq!(p.cells, vec![0, 1, 1, 0]);
        assert_eq!(p.touched, vec![(0, 1), (1, 0)]);
        assert!(p.is_well_formed());
    }

    #[test]
    fn single_cell() {
        let p = extract_submatrix(&Matrix::from_rows(&[&[2]]), &[(0, 0)]).unwrap();
        assert_eq!(p.cells, vec![1]);
        assert_eq!(p.touched, vec![(0, 0)]);
    }

    #[test]
    fn expansion_follows_diagonal_chains() {
        let m = Matrix::from_rows(&[
            &[4, 0, 0, 0],
            &[0, 4, 0, 0],
            &[0, 0, 4, 4],
            &[-1, 0, 0, 0],
        ]);
        let (p, rect) = extract_with_rect(&m, &[(0, 0)]).unwrap();
        assert_eq!(rect, (0, 0, 2, 3));
        assert_eq!(p.cells, vec![1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn empty_cells_normalize_to_minus_one() {
        let m = Matrix::from_rows(&[&[7, -1], &[3, 7]]);
        let p = extract_submatrix(&m, &[(0, 0), (1, 1)]).unwrap();
        assert_eq!(p.cells, vec![1, -1, 0, 1]);
    }

    #[test]
    fn heterogeneous_and_bad_touches() {
        let m = Matrix::from_rows(&[&[1, 2], &[-1, 3]]);
        assert_eq!(extract_submatrix(&m, &[(0, 0), (0, 1)]), Err(SubmatrixError::HeterogeneousTouch));
        assert_eq!(extract_submatrix(&m, &[(1, 0)]), Err(SubmatrixError::BadTouch(1, 0)));
        assert_eq!(extract_submatrix(&m, &[(5, 0)]), Err(SubmatrixError::BadTouch(5, 0)));
        assert_eq!(extract_submatrix(&m, &[]), Err(SubmatrixError::NoTouch));
    }
}
