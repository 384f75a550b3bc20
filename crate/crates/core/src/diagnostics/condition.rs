use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{sample_feasible, ProblemInstance};
use crate::sequence::GuaranteeTrace;

/// Floor on `g - g*` below which a sample carries no slope information.
pub const LOG_FLOOR: f64 = 1e-12;

const MIN_FIT_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition1Verdict {
    Consistent,
    Violated,
    NotEvaluable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition1Witness {
    pub t: u64,
    pub r_g: f64,
    pub dist_xg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition1Report {
    pub verdict: Condition1Verdict,
    pub tol: f64,
    pub tail_fraction: f64,
    /// Tail records with `r_g <= tol` (the ones the condition constrains).
    pub checked: usize,
    /// First violating record, if any.
    pub witnesses: Vec<Condition1Witness>,
}

/// Over the tail window, every record with `g - g* <= tol` must have
/// `Dist(x, X_g) <= tol`.
pub fn check_condition1(
    inst: &ProblemInstance,
    trace: &GuaranteeTrace,
    tol: f64,
    tail_fraction: f64,
) -> Result<Condition1Report> {
    if !(tol > 0.0) || !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Config(
            "condition 1 check needs tol > 0 and tail fraction in (0, 1]".into(),
        ));
    }
    let Some(dist) = &inst.meta.dist_xg else {
        return Ok(Condition1Report {
            verdict: Condition1Verdict::NotEvaluable,
            tol,
            tail_fraction,
            checked: 0,
            witnesses: vec![],
        });
    };
    let mut checked = 0;
    for r in trace.tail(tail_fraction) {
        inst.check_point(&r.x)?;
        let r_g = inst.g.eval(&r.x) - inst.meta.g_star;
        if r_g > tol {
            continue;
        }
        checked += 1;
        let d = dist.at(&r.x);
        if d > tol {
            return Ok(Condition1Report {
                verdict: Condition1Verdict::Violated,
                tol,
                tail_fraction,
                checked,
                witnesses: vec![Condition1Witness {
                    t: r.t,
                    r_g,
                    dist_xg: d,
                }],
            });
        }
    }
    Ok(Condition1Report {
        verdict: Condition1Verdict::Consistent,
        tol,
        tail_fraction,
        checked,
        witnesses: vec![],
    })
}

/// `tau Dist(x, X_g)^r <= g(x) - g*`, fitted in log-log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundFit {
    pub tau: f64,
    pub r: f64,
    /// Mean squared log-residual.
    pub residual: f64,
    pub sample_count: usize,
}

/// Least squares fit of `log(g - g*) = log tau + r log Dist(x, X_g)` over
/// seeded feasible samples with `g - g* > LOG_FLOOR`.
pub fn fit_error_bound(
    inst: &ProblemInstance,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<ErrorBoundFit> {
    let dist =
        inst.meta.dist_xg.as_ref().ok_or_else(|| {
            Error::Unsupported(format!("`{}` has no Dist(., X_g) oracle", inst.name))
        })?;
    if samples < MIN_FIT_SAMPLES {
        return Err(Error::Config(format!(
            "error-bound fit needs at least {MIN_FIT_SAMPLES} samples"
        )));
    }
    let pts: Vec<(f64, f64)> = sample_feasible(inst, samples, radius, seed)
        .iter()
        .filter_map(|x| {
            let gap = inst.g.eval(x) - inst.meta.g_star;
            let d = dist.at(x);
            (gap > LOG_FLOOR && d > 0.0).then(|| (d.ln(), gap.ln()))
        })
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            usable: pts.len(),
            required: MIN_FIT_SAMPLES,
        });
    }

    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData {
            usable: 0,
            required: MIN_FIT_SAMPLES,
        });
    }
    let r = sxy / sxx;
    let log_tau = my - r * mx;
    let residual = pts
        .iter()
        .map(|(x, y)| (y - log_tau - r * x).powi(2))
        .sum::<f64>()
        / n;
    Ok(ErrorBoundFit {
        tau: log_tau.exp(),
        r,
        residual,
        sample_count: pts.len(),
    })
}
