//! Analytically solved instances.
//!
//! | name              | strong duality | X* compact | d*   |
//! |-------------------|----------------|------------|------|
//! | `counterexample1` | no             | no         | -1   |
//! | `counterexample2` | yes            | no         | 0    |
//! | `minnorm_ls`      | yes            | yes        | 1/2  |
//! | `infinite_gap`    | no             | no         | -inf |
//!
//! Reference points are chosen so that desk-scale solver budgets suffice:
//! minimizers of the penalized objectives of the first and last entries sit
//! "at infinity" in `x1`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instance::{Analytic, InstanceMetadata, ProblemInstance};
use crate::oracle::ConvexFn;
use crate::point::{ExtReal, Point};
use crate::set::BoxSet;

pub const CATALOG_NAMES: [&str; 4] = [
    "counterexample1",
    "counterexample2",
    "minnorm_ls",
    "infinite_gap",
];

pub fn catalog_names() -> Vec<String> {
    CATALOG_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn catalog_get(name: &str) -> Result<ProblemInstance> {
    match name {
        "counterexample1" => Ok(counterexample1()),
        "counterexample2" => Ok(counterexample2()),
        "minnorm_ls" => Ok(minnorm_ls()),
        "infinite_gap" => Ok(infinite_gap()),
        _ => Err(Error::UnknownInstance {
            name: name.to_string(),
            valid: catalog_names(),
        }),
    }
}

pub fn catalog_all() -> Vec<ProblemInstance> {
    CATALOG_NAMES
        .iter()
        .map(|n| catalog_get(n).expect("registered"))
        .collect()
}

/// Distance from a planar point to the ray `{(s, 0) : s >= start}`.
fn dist_to_ray(x1: f64, x2: f64, start: f64) -> f64 {
    let dx = (start - x1).max(0.0);
    (dx * dx + x2 * x2).sqrt()
}

/// `x2^2 / x1` on `x1 >= 1`; convex (perspective of a square).
fn quad_over_lin(label: &str) -> ConvexFn {
    ConvexFn::new(
        label,
        |x: &Point| x[1] * x[1] / x[0],
        |x: &Point| {
            let mut g = vec![0.0; x.dim()];
            g[0] = -x[1] * x[1] / (x[0] * x[0]);
            g[1] = 2.0 * x[1] / x[0];
            Point::new(g)
        },
    )
}

fn counterexample1() -> ProblemInstance {
    let f = ConvexFn::new(
        "x2^2 - 2 x2 + [100 - x1]_+^2",
        |x: &Point| {
            let k = (100.0 - x[0]).max(0.0);
            x[1] * x[1] - 2.0 * x[1] + k * k
        },
        // [100 - x1]_+^2 is C^1, so the gradient is the subgradient
        |x: &Point| Point::from([-2.0 * (100.0 - x[0]).max(0.0), 2.0 * x[1] - 2.0]),
    )
    .with_smoothness(2.0);
    // Hessian (2/x1) v v^T with |v|^2 = 1 + (x2/x1)^2 <= 2 on X
    let g = quad_over_lin("x2^2 / x1").with_smoothness(4.0);
    let set = BoxSet::new(vec![1.0, 0.0], vec![f64::INFINITY, 1.0]);

    let meta = InstanceMetadata {
        g_star: 0.0,
        f_star: 0.0,
        x_star: Some(Point::from([100.0, 0.0])),
        dist_xg: Some(Analytic::point(
            "distance to the ray {(s,0): s >= 1}; equals x2 on X",
            |x: &Point| dist_to_ray(x[0], x[1], 1.0),
        )),
        dist_xstar: Some(Analytic::point(
            "distance to the ray {(s,0): s >= 100}",
            |x: &Point| dist_to_ray(x[0], x[1], 100.0),
        )),
        dual_value: Some(Analytic::dual(
            "q(lambda) = -1 for all lambda >= 0 (approached along (s,1), s -> inf)",
            |_| ExtReal::Finite(-1.0),
        )),
        d_star: Some(ExtReal::Finite(-1.0)),
        strong_duality: Some(false),
        xstar_compact: Some(false),
        divergent_z: None,
        penalized_witness: Some(Analytic::witness(
            "(W, 1) with W = max(100, lambda / slack): value -1 + lambda / W",
            |lambda, slack| {
                let w = if lambda > 0.0 {
                    (lambda / slack).max(100.0)
                } else {
                    100.0
                };
                Point::from([w, 1.0])
            },
        )),
        reference_init: Point::from([10_000.0, 0.5]),
    };
    ProblemInstance {
        name: "counterexample1".into(),
        f,
        g,
        set: Arc::new(set),
        meta,
    }
}

fn counterexample2() -> ProblemInstance {
    let f = quad_over_lin("x2^2 / x1").with_smoothness(4.0);
    let g = ConvexFn::new(
        "x3^2",
        |x: &Point| x[2] * x[2],
        |x: &Point| Point::from([0.0, 0.0, 2.0 * x[2]]),
    )
    .with_smoothness(2.0);
    let set = BoxSet::new(
        vec![1.0, 0.0, f64::NEG_INFINITY],
        vec![f64::INFINITY, 1.0, f64::INFINITY],
    );

    let meta = InstanceMetadata {
        g_star: 0.0,
        f_star: 0.0,
        x_star: Some(Point::from([1.0, 0.0, 0.0])),
        dist_xg: Some(Analytic::point(
            "distance to {x1 >= 1, 0 <= x2 <= 1, x3 = 0}; equals |x3| = sqrt(g) on X",
            |x: &Point| {
                let a = (1.0 - x[0]).max(0.0);
                let b = (-x[1]).max(x[1] - 1.0).max(0.0);
                (a * a + b * b + x[2] * x[2]).sqrt()
            },
        )),
        dist_xstar: Some(Analytic::point(
            "distance to the ray {(s,0,0): s >= 1}",
            |x: &Point| {
                let a = (1.0 - x[0]).max(0.0);
                (a * a + x[1] * x[1] + x[2] * x[2]).sqrt()
            },
        )),
        dual_value: Some(Analytic::dual("q(lambda) = 0, attained at (1,0,0)", |_| {
            ExtReal::Finite(0.0)
        })),
        d_star: Some(ExtReal::Finite(0.0)),
        strong_duality: Some(true),
        xstar_compact: Some(false),
        divergent_z: None,
        penalized_witness: Some(Analytic::witness("(1, 0, 0), exact minimizer", |_, _| {
            Point::from([1.0, 0.0, 0.0])
        })),
        reference_init: Point::from([1.0, 1.0, 1.0]),
    };
    ProblemInstance {
        name: "counterexample2".into(),
        f,
        g,
        set: Arc::new(set),
        meta,
    }
}

fn minnorm_ls() -> ProblemInstance {
    let f = ConvexFn::new(
        "0.5 |x|^2",
        |x: &Point| 0.5 * x.dot(x),
        |x: &Point| x.clone(),
    )
    .with_smoothness(1.0);
    let g = ConvexFn::new(
        "0.5 (x1 - 1)^2",
        |x: &Point| 0.5 * (x[0] - 1.0) * (x[0] - 1.0),
        |x: &Point| Point::from([x[0] - 1.0, 0.0]),
    )
    .with_smoothness(1.0);

    let meta = InstanceMetadata {
        g_star: 0.0,
        f_star: 0.5,
        x_star: Some(Point::from([1.0, 0.0])),
        dist_xg: Some(Analytic::point("|x1 - 1|", |x: &Point| (x[0] - 1.0).abs())),
        dist_xstar: Some(Analytic::point("|x - (1,0)|", |x: &Point| {
            x.dist(&Point::from([1.0, 0.0]))
        })),
        dual_value: Some(Analytic::dual(
            "q(lambda) = lambda / (2 (1 + lambda))",
            |l| ExtReal::Finite(l / (2.0 * (1.0 + l))),
        )),
        d_star: Some(ExtReal::Finite(0.5)),
        strong_duality: Some(true),
        xstar_compact: Some(true),
        divergent_z: None,
        penalized_witness: Some(Analytic::witness(
            "(lambda / (1 + lambda), 0), exact minimizer",
            |l, _| Point::from([l / (1.0 + l), 0.0]),
        )),
        reference_init: Point::from([0.5, 0.5]),
    };
    ProblemInstance {
        name: "minnorm_ls".into(),
        f,
        g,
        set: Arc::new(BoxSet::whole_space(2)),
        meta,
    }
}

fn infinite_gap() -> ProblemInstance {
    let f = ConvexFn::new(
        "-x2",
        |x: &Point| -x[1],
        |_: &Point| Point::from([0.0, -1.0]),
    )
    .with_smoothness(0.0);
    // gradient of x2^2/x1 is not Lipschitz on the unbounded x2 range
    let g = quad_over_lin("x2^2 / x1");
    let set = BoxSet::new(vec![1.0, 0.0], vec![f64::INFINITY, f64::INFINITY]);

    let ray = |x: &Point| dist_to_ray(x[0], x[1], 1.0);
    let meta = InstanceMetadata {
        g_star: 0.0,
        f_star: 0.0,
        x_star: Some(Point::from([1.0, 0.0])),
        dist_xg: Some(Analytic::point("distance to the ray {(s,0): s >= 1}", ray)),
        dist_xstar: Some(Analytic::point(
            "distance to the ray {(s,0): s >= 1} (X* = X_g)",
            ray,
        )),
        dual_value: Some(Analytic::dual("q(lambda) = -inf for all lambda", |_| {
            ExtReal::NegInf
        })),
        d_star: Some(ExtReal::NegInf),
        strong_duality: Some(false),
        xstar_compact: Some(false),
        divergent_z: Some(Analytic::indexed("z_t = (4 t^3, 2 t)", |t| {
            let t = t as f64;
            Point::from([4.0 * t * t * t, 2.0 * t])
        })),
        penalized_witness: None,
        reference_init: Point::from([10.0, 1.0]),
    };
    ProblemInstance {
        name: "infinite_gap".into(),
        f,
        g,
        set: Arc::new(set),
        meta,
    }
}
