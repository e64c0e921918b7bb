use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

/// Triangles with a smaller area (px²) count as collinear.
pub const COLLINEAR_AREA: f64 = 1e-6;
/// Horizontal separation below which a line through two points is vertical.
pub const VERTICAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionKind {
    Linear,
    Quadratic,
}

/// Retained coefficient of a fitted swipe trajectory: the slope `k` of
/// `y = kx + b`, or the leading coefficient `a` of `y = ax² + bx + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionParam {
    pub kind: DirectionKind,
    pub value: f64,
}

impl DirectionParam {
    pub fn linear(k: f64) -> Self {
        Self { kind: DirectionKind::Linear, value: k }
    }

    pub fn quadratic(a: f64) -> Self {
        Self { kind: DirectionKind::Quadratic, value: a }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("swipe is vertical; no finite slope")]
    VerticalDegenerate,
}

/// Full parabola coefficients `(a, b, c)` through three points with pairwise
/// distinct x, from Newton's divided differences.
pub fn quadratic_through(p0: Point, p1: Point, p2: Point) -> (f64, f64, f64) {
    let s01 = (p1.y - p0.y) / (p1.x - p0.x);
    let s12 = (p2.y - p1.y) / (p2.x - p1.x);
    let a = (s12 - s01) / (p2.x - p0.x);
    let b = s01 - a * (p0.x + p1.x);
    let c = p0.y - a * p0.x * p0.x - b * p0.x;
    (a, b, c)
}

pub fn triangle_area(p0: Point, p1: Point, p2: Point) -> f64 {
    ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y)).abs() / 2.0
}

/// Fits the trajectory through the manipulated icon `p0`, the swipe end `p1`
/// and the target `p2`.
///
/// A parabola is tried first; when the x-values are not pairwise distinct or
/// the points are collinear, the line through `p0` and `p1` is used instead.
pub fn fit_direction(p0: Point, p1: Point, p2: Point) -> Result<DirectionParam, FitError> {
    let distinct_x = p0.x != p1.x && p1.x != p2.x && p0.x != p2.x;
    if distinct_x && triangle_area(p0, p1, p2) >= COLLINEAR_AREA {
        let (a, _, _) = quadratic_through(p0, p1, p2);
        if a != 0.0 && a.is_finite() {
            return Ok(DirectionParam::quadratic(a));
        }
    }
    let dx = p1.x - p0.x;
    if dx.abs() < VERTICAL_EPS {
        return Err(FitError::VerticalDegenerate);
    }
    Ok(DirectionParam::linear((p1.y - p0.y) / dx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn parabola_fixture() {
        assert_eq!(quadratic_through(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 4.0)), (1.0, 0.0, 0.0));
        assert_eq!(fit_direction(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 4.0)), Ok(DirectionParam::quadratic(1.0)));
    }

    #[test]
    fn collinear_points_give_a_line() {
        assert_eq!(fit_direction(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)), Ok(DirectionParam::linear(1.0)));
    }

    #[test]
    fn vertical_swipe_is_degenerate() {
        assert_eq!(fit_direction(p(0.0, 0.0), p(0.0, 5.0), p(3.0, 1.0)), Err(FitError::VerticalDegenerate));
        assert_eq!(fit_direction(p(0.0, 0.0), p(0.0, 5.0), p(0.0, 9.0)), Err(FitError::VerticalDegenerate));
    }

    #[test]
    fn repeated_target_x_falls_back_to_line() {
        // p2 shares p0's x, so no parabola y(x) exists
        assert_eq!(fit_direction(p(0.0, 0.0), p(2.0, 1.0), p(0.0, -7.0)), Ok(DirectionParam::linear(0.5)));
    }
}
