//! Brute-force estimate of the forcing function
//!
//! `c(alpha, beta) = inf { |f(x) - f*| : x in X, Dist(x, X*) = alpha, g(x) - g* = beta }`
//!
//! The equality constraints are relaxed to bands of half-width `delta` and
//! the infimum is taken over a product grid centred at `x*`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{sample_feasible, ProblemInstance};
use crate::point::{ExtReal, Point};
use crate::set::MEMBERSHIP_TOL;

/// Refuse grids larger than this many points.
const MAX_GRID_POINTS: usize = 50_000_000;

/// Product grid used by [`c_oracle`].
///
/// Per axis: when the feasible set bounds the axis on both sides the axis is
/// covered by `points_per_dim` evenly spaced values (radius ignored);
/// otherwise the values are `center + k h` with `h = 2 radius / (points_per_dim - 1)`,
/// `|k h| <= radius`, clipped to the set's bounds. The center coordinate is
/// always included. Halving the spacing (`G -> 2G - 1`) or doubling the
/// radius together with the point count therefore yields a superset of grid
/// points, which makes the estimate monotone under such enlargements.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchGrid {
    axes: Vec<Vec<f64>>,
}

impl SearchGrid {
    pub fn new(
        inst: &ProblemInstance,
        center: &Point,
        radius: f64,
        points_per_dim: usize,
    ) -> Result<Self> {
        if points_per_dim < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 points per dimension, got {points_per_dim}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!(
                "grid radius must be positive, got {radius}"
            )));
        }
        let (lo, hi) = inst.set.bounding_box();
        let g = points_per_dim;
        let axes: Vec<Vec<f64>> = (0..center.dim())
            .map(|i| {
                let c = center[i];
                let mut vals: Vec<f64> = if lo[i].is_finite() && hi[i].is_finite() {
                    let span = hi[i] - lo[i];
                    (0..g)
                        .map(|j| lo[i] + span * (j as f64 / (g - 1) as f64))
                        .collect()
                } else {
                    let h = 2.0 * radius / (g - 1) as f64;
                    let kmax = ((g - 1) / 2) as i64;
                    (-kmax..=kmax)
                        .map(|k| c + k as f64 * h)
                        .filter(|v| *v >= lo[i] && *v <= hi[i])
                        .collect()
                };
                vals.push(c);
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                vals
            })
            .collect();
        let total = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
        match total {
            Some(t) if t <= MAX_GRID_POINTS => Ok(SearchGrid { axes }),
            _ => Err(Error::Config(format!(
                "grid exceeds {MAX_GRID_POINTS} points"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Point at a lexicographic index (first coordinate most significant).
    pub fn point(&self, mut index: usize) -> Point {
        let mut coords = vec![0.0; self.axes.len()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            coords[i] = axis[index % axis.len()];
            index /= axis.len();
        }
        Point::new(coords)
    }

    /// Grid point nearest to `x` (per-axis nearest value).
    pub fn nearest(&self, x: &Point) -> Point {
        Point::new(
            self.axes
                .iter()
                .zip(x.iter())
                .map(|(axis, &v)| {
                    let j = axis.partition_point(|&a| a < v);
                    let cand = [j.checked_sub(1), (j < axis.len()).then_some(j)];
                    cand.into_iter()
                        .flatten()
                        .map(|k| axis[k])
                        .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
                        .expect("nonempty axis")
                })
                .collect(),
        )
    }

    /// Smallest spacing between consecutive axis values.
    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct COracleResult {
    pub alpha: f64,
    pub beta: f64,
    /// `+inf` (`"pos_inf"`) when no grid point falls in the band.
    pub c_estimate: ExtReal,
    pub band_delta: f64,
    pub grid_radius: f64,
    pub grid_points: usize,
    pub points_evaluated: usize,
    pub attaining_point: Option<Point>,
}

/// `(Dist(x, X*), g(x) - g*, |f(x) - f*|, index)` for every feasible grid point.
struct GridValues(Vec<(f64, f64, f64, usize)>);

impl GridValues {
    fn new(inst: &ProblemInstance, grid: &SearchGrid) -> Self {
        let dist = inst.meta.dist_xstar.as_ref().expect("checked by caller");
        let (f_star, g_star) = (inst.meta.f_star, inst.meta.g_star);
        GridValues(
            (0..grid.len())
                .into_par_iter()
                .filter_map(|idx| {
                    let x = grid.point(idx);
                    inst.set.contains(&x, MEMBERSHIP_TOL).then(|| {
                        (
                            dist.at(&x),
                            inst.g.eval(&x) - g_star,
                            (inst.f.eval(&x) - f_star).abs(),
                            idx,
                        )
                    })
                })
                .collect(),
        )
    }

    fn band_min(&self, alpha: f64, beta: f64, delta: f64) -> Option<(f64, usize)> {
        self.0
            .par_iter()
            .filter(|(d, b, _, _)| (d - alpha).abs() <= delta && (b - beta).abs() <= delta)
            .map(|&(_, _, v, idx)| (v, idx))
            // ties go to the lowest lexicographic index
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
    }
}

fn require_oracle(inst: &ProblemInstance) -> Result<Point> {
    if inst.meta.dist_xstar.is_none() {
        return Err(Error::Unsupported(format!(
            "`{}` has no Dist(., X*) oracle",
            inst.name
        )));
    }
    inst.meta.x_star.clone().ok_or_else(|| {
        Error::Unsupported(format!("`{}` has no x_star to centre the grid", inst.name))
    })
}

/// Grid estimate of `c(alpha, beta)`; `delta = None` uses half the smallest
/// grid spacing.
pub fn c_oracle(
    inst: &ProblemInstance,
    alpha: f64,
    beta: f64,
    delta: Option<f64>,
    grid_radius: f64,
    grid_points_per_dim: usize,
) -> Result<COracleResult> {
    let center = require_oracle(inst)?;
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::Domain(format!(
            "alpha and beta must be nonnegative, got ({alpha}, {beta})"
        )));
    }
    let grid = SearchGrid::new(inst, &center, grid_radius, grid_points_per_dim)?;
    let delta = delta.unwrap_or_else(|| grid.min_spacing() / 2.0);
    if !(delta > 0.0) {
        return Err(Error::Config(format!(
            "band half-width must be positive, got {delta}"
        )));
    }
    let values = GridValues::new(inst, &grid);
    Ok(oracle_on_grid(
        &grid,
        &values,
        alpha,
        beta,
        delta,
        grid_radius,
        grid_points_per_dim,
    ))
}

fn oracle_on_grid(
    grid: &SearchGrid,
    values: &GridValues,
    alpha: f64,
    beta: f64,
    delta: f64,
    grid_radius: f64,
    grid_points: usize,
) -> COracleResult {
    let found = values.band_min(alpha, beta, delta);
    COracleResult {
        alpha,
        beta,
        c_estimate: found.map_or(ExtReal::PosInf, |(v, _)| ExtReal::Finite(v)),
        band_delta: delta,
        grid_radius,
        grid_points,
        points_evaluated: grid.len(),
        attaining_point: found.map(|(_, idx)| grid.point(idx)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingConfig {
    pub delta: f64,
    pub grid_radius: f64,
    pub grid_points: usize,
    /// Half-width of the sampling box around the reference point.
    pub sample_radius: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingSample {
    pub x: Point,
    pub alpha: f64,
    pub beta: f64,
    pub abs_f_gap: f64,
    pub c_estimate: ExtReal,
    /// Band half-width actually used: widened so the grid point nearest to
    /// `x` lies in the band.
    pub band_delta: f64,
    /// `max(0, |f(y) - f*| - |f(x) - f*|)` for that nearest grid point `y`.
    pub eps_grid: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingReport {
    pub verdict: String,
    pub passed: usize,
    pub failed: usize,
    pub samples: Vec<ForcingSample>,
}

/// Checks `|f(x) - f*| >= c(Dist(x, X*), g(x) - g*) - eps_grid` on seeded
/// feasible samples, with `c` from [`c_oracle`] on a shared grid.
pub fn check_forcing_inequality(
    inst: &ProblemInstance,
    samples: usize,
    cfg: &ForcingConfig,
) -> Result<ForcingReport> {
    let center = require_oracle(inst)?;
    if !(cfg.delta > 0.0) {
        return Err(Error::Config(format!(
            "band half-width must be positive, got {}",
            cfg.delta
        )));
    }
    let grid = SearchGrid::new(inst, &center, cfg.grid_radius, cfg.grid_points)?;
    let values = GridValues::new(inst, &grid);
    let dist = inst.meta.dist_xstar.clone().expect("checked");
    let (f_star, g_star) = (inst.meta.f_star, inst.meta.g_star);

    let mut out = Vec::with_capacity(samples);
    for x in sample_feasible(inst, samples, cfg.sample_radius, cfg.seed) {
        let alpha = dist.at(&x);
        let beta = (inst.g.eval(&x) - g_star).max(0.0);
        let abs_f_gap = (inst.f.eval(&x) - f_star).abs();
        let y = grid.nearest(&x);
        let band_delta = cfg
            .delta
            .max((dist.at(&y) - alpha).abs())
            .max((inst.g.eval(&y) - g_star - beta).abs());
        let eps_grid = ((inst.f.eval(&y) - f_star).abs() - abs_f_gap).max(0.0);
        let res = oracle_on_grid(
            &grid,
            &values,
            alpha,
            beta,
            band_delta,
            cfg.grid_radius,
            cfg.grid_points,
        );
        let pass = match res.c_estimate {
            ExtReal::Finite(c) => abs_f_gap >= c - eps_grid - 1e-12,
            ExtReal::NegInf => true,
            ExtReal::PosInf => false,
        };
        out.push(ForcingSample {
            x,
            alpha,
            beta,
            abs_f_gap,
            c_estimate: res.c_estimate,
            band_delta,
            eps_grid,
            pass,
        });
    }
    let passed = out.iter().filter(|s| s.pass).count();
    let failed = out.len() - passed;
    Ok(ForcingReport {
        verdict: if failed == 0 {
            "pass".into()
        } else {
            "fail".into()
        },
        passed,
        failed,
        samples: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_all, catalog_get};

    #[test]
    fn c_at_origin_is_zero() {
        for inst in catalog_all() {
            let r = c_oracle(&inst, 0.0, 0.0, Some(1e-9), 10.0, 21).unwrap();
            assert_eq!(r.c_estimate, ExtReal::Finite(0.0), "{}", inst.name);
            assert_eq!(r.attaining_point, inst.meta.x_star);
        }
    }

    // closed form on the band Dist = 1, g = 0: x = (1, +-1), |f - f*| = 1/2
    #[test]
    fn minnorm_unit_distance() {
        let ls = catalog_get("minnorm_ls").unwrap();
        let r = c_oracle(&ls, 1.0, 0.0, Some(1e-3), 5.0, 201).unwrap();
        let c = r.c_estimate.finite().unwrap();
        assert!((c - 0.5).abs() <= 0.01, "{r:?}");
        let p = r.attaining_point.unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1].abs() - 1.0).abs() < 1e-12);
    }

    // 400 points per dimension: no grid point satisfies both bands at
    // delta = 1e-3, so the band is empty on this grid
    #[test]
    fn minnorm_empty_band_is_pos_inf() {
        let ls = catalog_get("minnorm_ls").unwrap();
        let r = c_oracle(&ls, 1.0, 0.0, Some(1e-3), 5.0, 400).unwrap();
        assert_eq!(r.c_estimate, ExtReal::PosInf);
        assert!(r.attaining_point.is_none());
    }

    #[test]
    fn counterexample2_ill_posed_signature() {
        let c2 = catalog_get("counterexample2").unwrap();
        let r = c_oracle(&c2, 0.5, 0.0, Some(1e-6), 100.0, 41).unwrap();
        let c = r.c_estimate.finite().unwrap();
        // f = alpha^2 / x1 at x = (101, 0.5, 0)
        assert!(c <= 0.25 / 100.0, "{r:?}");
        assert!((c - 0.25 / 101.0).abs() < 1e-15);
    }

    #[test]
    fn grid_contract() {
        let ls = catalog_get("minnorm_ls").unwrap();
        assert!(matches!(
            c_oracle(&ls, 1.0, 0.0, None, 5.0, 1),
            Err(Error::Config(_))
        ));
        let grid = SearchGrid::new(&ls, &Point::from([1.0, 0.0]), 1.0, 5).unwrap();
        assert_eq!(grid.axes()[0], vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(grid.point(0), Point::from([0.0, -1.0]));
        assert_eq!(grid.point(7), Point::from([0.5, 0.0]));
        assert_eq!(
            grid.nearest(&Point::from([0.7, 0.3])),
            Point::from([0.5, 0.5])
        );
        // bounded axis ignores the radius
        let c2 = catalog_get("counterexample2").unwrap();
        let grid = SearchGrid::new(&c2, &Point::from([1.0, 0.0, 0.0]), 100.0, 5).unwrap();
        assert_eq!(grid.axes()[1], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid.axes()[0], vec![1.0, 51.0, 101.0]);
    }

    #[test]
    fn forcing_inequality_at_x_star() {
        let ls = catalog_get("minnorm_ls").unwrap();
        let mut ls0 = ls.clone();
        ls0.meta.reference_init = ls.meta.x_star.clone().unwrap();
        let cfg = ForcingConfig {
            delta: 1e-3,
            grid_radius: 5.0,
            grid_points: 51,
            sample_radius: 0.0,
            seed: 0,
        };
        let r = check_forcing_inequality(&ls0, 1, &cfg).unwrap();
        let s = &r.samples[0];
        assert_eq!((s.abs_f_gap, s.c_estimate), (0.0, ExtReal::Finite(0.0)));
        assert!(s.pass);
    }
}
