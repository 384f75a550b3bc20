//! Closed convex feasible sets with Euclidean projection.

use std::fmt::Debug;

use crate::point::Point;

/// Membership tolerance used by every "within tolerance" contract.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

pub trait FeasibleSet: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Largest constraint violation of `x`; zero when `x` is in the set.
    fn violation(&self, x: &Point) -> f64;

    fn contains(&self, x: &Point, tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Euclidean projection onto the set.
    fn project(&self, x: &Point) -> Point;

    /// Coordinate-wise bounding box `(lower, upper)`, entries may be infinite.
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>);

    /// `Some(true)` when the set is known to be bounded.
    fn bounded(&self) -> Option<bool> {
        let (lo, hi) = self.bounding_box();
        Some(lo.iter().chain(&hi).all(|v| v.is_finite()))
    }

    /// Projects a direction onto the recession cone: the directions along
    /// which a ray from any point of the set stays in the set.
    fn recession_direction(&self, d: &Point) -> Point;

    fn describe(&self) -> String;
}

/// Axis-aligned box `{x : lower <= x <= upper}` with possibly infinite bounds.
/// Covers half-spaces `x_i >= a`, slabs and the whole space.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "bound vectors differ in length");
        assert!(
            lower
                .iter()
                .zip(&upper)
                .all(|(l, u)| l <= u && !l.is_nan() && !u.is_nan()),
            "empty or NaN box"
        );
        BoxSet { lower, upper }
    }

    pub fn whole_space(dim: usize) -> Self {
        BoxSet::new(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

impl FeasibleSet for BoxSet {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn violation(&self, x: &Point) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    fn project(&self, x: &Point) -> Point {
        Point::new(
            x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(&v, (&l, &u))| v.clamp(l, u))
                .collect(),
        )
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }

    fn recession_direction(&self, d: &Point) -> Point {
        Point::new(
            d.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(&v, (&l, &u))| match (l.is_finite(), u.is_finite()) {
                    (true, true) => 0.0,
                    (true, false) => v.max(0.0),
                    (false, true) => v.min(0.0),
                    (false, false) => v,
                })
                .collect(),
        )
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .lower
            .iter()
            .zip(&self.upper)
            .enumerate()
            .map(|(i, (l, u))| {
                let i = i + 1;
                match (l.is_finite(), u.is_finite()) {
                    (true, true) => format!("{l} <= x{i} <= {u}"),
                    (true, false) => format!("x{i} >= {l}"),
                    (false, true) => format!("x{i} <= {u}"),
                    (false, false) => format!("x{i} free"),
                }
            })
            .collect();
        format!("box {{ {} }}", parts.join(", "))
    }
}
