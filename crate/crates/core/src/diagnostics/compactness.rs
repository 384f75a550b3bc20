use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::point::Point;

const RAY_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompactnessVerdict {
    RefutedWithWitness,
    NoWitnessFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactnessProbe {
    pub verdict: CompactnessVerdict,
    pub origin: Point,
    /// Unit recession direction along which `h_bar <= 1` up to the probe radius.
    pub witness_direction: Option<Point>,
    pub probe_radius: f64,
    /// `h_bar` sampled along the witness ray (or the best ray tried).
    pub h_bar_values: Vec<f64>,
    pub directions_tried: usize,
}

/// `h_bar(origin + s * dir)` at `RAY_SAMPLES` evenly spaced `s in [0, radius]`.
pub fn probe_ray(inst: &ProblemInstance, origin: &Point, dir: &Point, radius: f64) -> Vec<f64> {
    (0..RAY_SAMPLES)
        .map(|i| {
            let s = radius * i as f64 / (RAY_SAMPLES - 1) as f64;
            inst.h_bar(&origin.axpy(s, dir))
        })
        .collect()
}

/// Searches for a ray from `x*` in the 1-sublevel set of
/// `h_bar = max{f - f*, g - g*}`. Such a ray means the sublevel set is
/// unbounded, hence `X*` is not compact. Failing to find one proves nothing.
///
/// Candidates are the coordinate directions followed by `directions` seeded
/// Gaussian directions, each projected onto the recession cone of the
/// feasible set so the whole ray is feasible. `h_bar` is convex with
/// `h_bar(x*) = 0`, so `h_bar <= 1` at the far end of the ray implies it on
/// the whole segment.
pub fn probe_compactness(
    inst: &ProblemInstance,
    directions: usize,
    probe_radius: f64,
    seed: u64,
) -> Result<CompactnessProbe> {
    if !(probe_radius > 0.0 && probe_radius.is_finite()) {
        return Err(Error::Config(format!(
            "probe radius must be positive, got {probe_radius}"
        )));
    }
    let origin = inst.meta.x_star.clone().ok_or_else(|| {
        Error::Unsupported(format!("`{}` has no x_star to probe from", inst.name))
    })?;
    let n = inst.dim();

    let mut candidates: Vec<Point> = Vec::with_capacity(2 * n + directions);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            candidates.push(Point::new(e));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..directions {
        candidates.push(Point::new(
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
        ));
    }

    let mut tried = 0;
    let mut best: Option<(f64, Point)> = None;
    for raw in candidates {
        let d = inst.set.recession_direction(&raw);
        let norm = d.norm();
        if norm < 1e-12 {
            continue;
        }
        let d = d.scale(1.0 / norm);
        tried += 1;
        let far = inst.h_bar(&origin.axpy(probe_radius, &d));
        if far <= 1.0 {
            let h_bar_values = probe_ray(inst, &origin, &d, probe_radius);
            return Ok(CompactnessProbe {
                verdict: CompactnessVerdict::RefutedWithWitness,
                origin,
                witness_direction: Some(d),
                probe_radius,
                h_bar_values,
                directions_tried: tried,
            });
        }
        if best.as_ref().is_none_or(|(v, _)| far < *v) {
            best = Some((far, d));
        }
    }
    let h_bar_values = best
        .map(|(_, d)| probe_ray(inst, &origin, &d, probe_radius))
        .unwrap_or_default();
    Ok(CompactnessProbe {
        verdict: CompactnessVerdict::NoWitnessFound,
        origin,
        witness_direction: None,
        probe_radius,
        h_bar_values,
        directions_tried: tried,
    })
}
