//! Bilevel problem instances: `min f over argmin_{X} g`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::ConvexFn;
use crate::point::{ExtReal, Point};
use crate::set::{FeasibleSet, MEMBERSHIP_TOL};

/// A closed-form oracle attached to instance metadata, carried together with
/// a human-readable description (the description is what gets exported).
pub struct Analytic<F: ?Sized> {
    description: String,
    func: Arc<F>,
}

impl<F: ?Sized> Clone for Analytic<F> {
    fn clone(&self) -> Self {
        Analytic {
            description: self.description.clone(),
            func: Arc::clone(&self.func),
        }
    }
}

impl<F: ?Sized> Analytic<F> {
    pub fn description(&self) -> &str {
        &self.description
    }
}

impl<F: ?Sized> fmt::Debug for Analytic<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Analytic({})", self.description)
    }
}

impl<F: ?Sized> Serialize for Analytic<F> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.description)
    }
}

pub type PointFn = dyn Fn(&Point) -> f64 + Send + Sync;
pub type DualFn = dyn Fn(f64) -> ExtReal + Send + Sync;
pub type IndexedPointFn = dyn Fn(u64) -> Point + Send + Sync;
pub type WitnessFn = dyn Fn(f64, f64) -> Point + Send + Sync;

impl Analytic<PointFn> {
    pub fn point(
        desc: impl Into<String>,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Analytic {
            description: desc.into(),
            func: Arc::new(f),
        }
    }
    pub fn at(&self, x: &Point) -> f64 {
        (self.func)(x)
    }
}

impl Analytic<DualFn> {
    pub fn dual(
        desc: impl Into<String>,
        f: impl Fn(f64) -> ExtReal + Send + Sync + 'static,
    ) -> Self {
        Analytic {
            description: desc.into(),
            func: Arc::new(f),
        }
    }
    pub fn at(&self, lambda: f64) -> ExtReal {
        (self.func)(lambda)
    }
}

impl Analytic<IndexedPointFn> {
    pub fn indexed(
        desc: impl Into<String>,
        f: impl Fn(u64) -> Point + Send + Sync + 'static,
    ) -> Self {
        Analytic {
            description: desc.into(),
            func: Arc::new(f),
        }
    }
    pub fn at(&self, t: u64) -> Point {
        (self.func)(t)
    }
}

impl Analytic<WitnessFn> {
    pub fn witness(
        desc: impl Into<String>,
        f: impl Fn(f64, f64) -> Point + Send + Sync + 'static,
    ) -> Self {
        Analytic {
            description: desc.into(),
            func: Arc::new(f),
        }
    }
    /// A point whose penalized value at multiplier `lambda` is within `slack`
    /// of the dual value.
    pub fn at(&self, lambda: f64, slack: f64) -> Point {
        (self.func)(lambda, slack)
    }
}

/// Ground truth for an instance. Optional fields are present only where a
/// closed form is known.
#[derive(Clone, Debug, Serialize)]
pub struct InstanceMetadata {
    /// Optimal value of the lower-level problem.
    pub g_star: f64,
    /// Optimal value of the bilevel problem.
    pub f_star: f64,
    pub x_star: Option<Point>,
    #[serde(rename = "dist_xg")]
    pub dist_xg: Option<Analytic<PointFn>>,
    #[serde(rename = "dist_xstar")]
    pub dist_xstar: Option<Analytic<PointFn>>,
    /// Closed-form Lagrange dual `q(lambda)`.
    pub dual_value: Option<Analytic<DualFn>>,
    pub d_star: Option<ExtReal>,
    pub strong_duality: Option<bool>,
    #[serde(rename = "xstar_compact")]
    pub xstar_compact: Option<bool>,
    /// `z_t` with `f(z_t) + t (g(z_t) - g*) <= -t`, for instances with `d* = -inf`.
    pub divergent_z: Option<Analytic<IndexedPointFn>>,
    /// Near-minimizers of the penalized objective, `(lambda, slack) -> x`.
    pub penalized_witness: Option<Analytic<WitnessFn>>,
    pub reference_init: Point,
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub name: String,
    pub f: ConvexFn,
    pub g: ConvexFn,
    pub set: Arc<dyn FeasibleSet>,
    pub meta: InstanceMetadata,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// Rejects points of the wrong dimension or with non-finite coordinates.
    pub fn check_point(&self, x: &Point) -> Result<()> {
        x.validate(self.dim())
    }

    pub fn check_feasible(&self, x: &Point) -> Result<()> {
        self.check_point(x)?;
        let violation = self.set.violation(x);
        if violation > MEMBERSHIP_TOL {
            return Err(Error::Infeasible {
                point: x.clone(),
                violation,
            });
        }
        Ok(())
    }

    /// `f(x) + lambda (g(x) - g*)`
    pub fn penalized(&self, lambda: f64, x: &Point) -> f64 {
        self.f.eval(x) + lambda * (self.g.eval(x) - self.meta.g_star)
    }

    /// `max{f - f*, g - g*}`
    pub fn h_bar(&self, x: &Point) -> f64 {
        (self.f.eval(x) - self.meta.f_star).max(self.g.eval(x) - self.meta.g_star)
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "dim": self.dim(),
            "f": self.f.label(),
            "g": self.g.label(),
            "feasible_set": self.set.describe(),
            "smoothness": {
                "f": self.f.smoothness(),
                "g": self.g.smoothness(),
            },
            "metadata": self.meta,
        })
    }
}

/// Residuals `(r_f, r_g) = (f(x) - f*, g(x) - g*)`. `r_f` keeps its sign:
/// a negative value means `x` is super-optimal.
pub fn eval_residuals(inst: &ProblemInstance, x: &Point) -> Result<(f64, f64)> {
    inst.check_feasible(x)?;
    Ok((
        inst.f.eval(x) - inst.meta.f_star,
        inst.g.eval(x) - inst.meta.g_star,
    ))
}

/// Seeded feasible samples: uniform draws from the box of half-width `radius`
/// around the reference point, projected onto the feasible set.
pub fn sample_feasible(inst: &ProblemInstance, count: usize, radius: f64, seed: u64) -> Vec<Point> {
    sample_around(inst, &inst.meta.reference_init, count, radius, seed)
}

/// As [`sample_feasible`] with an explicit center.
pub fn sample_around(
    inst: &ProblemInstance,
    center: &Point,
    count: usize,
    radius: f64,
    seed: u64,
) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = center
                .iter()
                .map(|&c| {
                    if radius > 0.0 {
                        c + rng.random_range(-radius..=radius)
                    } else {
                        c
                    }
                })
                .collect();
            inst.set.project(&Point::new(raw))
        })
        .collect()
}
