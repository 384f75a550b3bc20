//! Lagrange dual of the value-function formulation
//! `min f(x) s.t. g(x) <= g*`:
//!
//! `q(lambda) = inf_X f + lambda (g - g*)`, `d* = sup q = lim q(lambda)`.
//!
//! Numeric estimates come from feasible witnesses and are upper bounds on
//! `q(lambda)`. A finite schedule can therefore never certify a gap; the
//! sweep reports `inconclusive` while the estimates are still rising.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{sample_feasible, ProblemInstance};
use crate::point::{ExtReal, Point};
use crate::sequence::{
    adversarial_case1, adversarial_case2, approach_sequence, score_trace, AsymptoticVerdict,
    GuaranteeTrace, ScoreParams,
};
use crate::solver::{
    iterative_regularization, minimize_penalized, RegularizationSchedule, SolverConfig,
};

pub const DEFAULT_GAP_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualMode {
    Numeric,
    Analytic,
}

/// Fixed-smooth steps when both oracles declare smoothness, otherwise
/// diminishing steps with `gamma0 = 1`.
pub fn preferred_config(inst: &ProblemInstance, max_iters: u64) -> SolverConfig {
    if inst.f.smoothness().is_some() && inst.g.smoothness().is_some() {
        SolverConfig::smooth(max_iters)
    } else {
        SolverConfig::diminishing(max_iters, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualEstimate {
    pub lambda: f64,
    pub q: ExtReal,
    pub witness: Option<Point>,
}

pub fn eval_dual(
    inst: &ProblemInstance,
    lambda: f64,
    cfg: &SolverConfig,
    mode: DualMode,
) -> Result<DualEstimate> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be a finite nonnegative number, got {lambda}"
        )));
    }
    if let (DualMode::Analytic, Some(q)) = (mode, &inst.meta.dual_value) {
        let q = q.at(lambda);
        let witness = match (q, &inst.meta.penalized_witness) {
            (ExtReal::Finite(v), Some(w)) => Some(w.at(lambda, 1e-9 * v.abs().max(1.0))),
            _ => None,
        };
        return Ok(DualEstimate { lambda, q, witness });
    }
    let r = minimize_penalized(inst, lambda, cfg, None)?;
    Ok(DualEstimate {
        lambda,
        q: ExtReal::Finite(r.best_value),
        witness: Some(r.best_point),
    })
}

/// Running maximum.
pub fn isotonize(values: &[ExtReal]) -> Vec<ExtReal> {
    let mut acc = ExtReal::NegInf;
    values
        .iter()
        .map(|&v| {
            acc = acc.max(v);
            acc
        })
        .collect()
}

/// `geometric:l0,rho,k` or a comma-separated list.
pub fn parse_schedule(text: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("bad number `{s}` in lambda schedule")))
    };
    let out = if let Some(rest) = text.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(
                "geometric schedule is `geometric:l0,rho,k`".into(),
            ));
        }
        let (l0, rho) = (parse(parts[0])?, parse(parts[1])?);
        let k: u32 = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad count `{}`", parts[2])))?;
        (0..k).map(|i| l0 * rho.powi(i as i32)).collect()
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse)
            .collect::<Result<Vec<_>>>()?
    };
    validate_schedule(&out)?;
    Ok(out)
}

pub fn default_schedule() -> Vec<f64> {
    vec![1.0, 10.0, 100.0, 1000.0]
}

fn validate_schedule(s: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Config("lambda schedule is empty".into()));
    }
    if s.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::Config(
            "lambda schedule entries must be finite and nonnegative".into(),
        ));
    }
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "lambda schedule must be strictly increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualVerdict {
    StrongDualityConsistent,
    GapDetected,
    Inconclusive,
}

impl DualVerdict {
    pub fn token(self) -> &'static str {
        match self {
            DualVerdict::StrongDualityConsistent => "strong_duality_consistent",
            DualVerdict::GapDetected => "gap_detected",
            DualVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSweepResult {
    pub instance: String,
    pub mode: DualMode,
    pub f_star: f64,
    pub gap_tolerance: f64,
    pub lambdas: Vec<f64>,
    pub q_estimates: Vec<ExtReal>,
    pub q_analytic: Option<Vec<ExtReal>>,
    pub q_isotonic: Vec<ExtReal>,
    pub d_star_estimate: ExtReal,
    pub verdict: DualVerdict,
    /// `max(0, f* - d_star_estimate)`
    pub gap_lower_bound: ExtReal,
    /// Pairs of consecutive raw estimates that decreased (solver noise).
    pub monotonicity_violations: usize,
    pub witnesses: Vec<Option<Point>>,
}

pub fn sweep_dual(
    inst: &ProblemInstance,
    schedule: &[f64],
    cfg: &SolverConfig,
    mode: DualMode,
    gap_tolerance: f64,
) -> Result<DualSweepResult> {
    validate_schedule(schedule)?;
    if !(gap_tolerance > 0.0) {
        return Err(Error::Config(format!(
            "gap tolerance must be positive, got {gap_tolerance}"
        )));
    }
    let estimates: Vec<DualEstimate> = schedule
        .par_iter()
        .map(|&l| eval_dual(inst, l, cfg, mode))
        .collect::<Result<_>>()?;

    let q_estimates: Vec<ExtReal> = estimates.iter().map(|e| e.q).collect();
    let q_isotonic = isotonize(&q_estimates);
    let monotonicity_violations = q_estimates.windows(2).filter(|w| w[1] < w[0]).count();
    let q_analytic = inst
        .meta
        .dual_value
        .as_ref()
        .map(|q| schedule.iter().map(|&l| q.at(l)).collect());

    let f_star = inst.meta.f_star;
    let d_star_estimate = match (mode, inst.meta.d_star) {
        (DualMode::Analytic, Some(d)) if inst.meta.dual_value.is_some() => d,
        _ => *q_isotonic.last().expect("nonempty schedule"),
    };
    let gap = d_star_estimate.subtracted_from(f_star);
    let rising = mode == DualMode::Numeric && {
        let inc: Vec<Option<f64>> = q_isotonic
            .windows(2)
            .map(|w| match (w[0], w[1]) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => Some(b - a),
                _ => None,
            })
            .collect();
        inc.len() >= 2
            && inc[inc.len() - 2..]
                .iter()
                .all(|d| d.is_some_and(|d| d > gap_tolerance / 2.0))
    };
    let verdict = if gap <= ExtReal::Finite(gap_tolerance) {
        DualVerdict::StrongDualityConsistent
    } else if rising {
        DualVerdict::Inconclusive
    } else {
        DualVerdict::GapDetected
    };

    Ok(DualSweepResult {
        instance: inst.name.clone(),
        mode,
        f_star,
        gap_tolerance,
        lambdas: schedule.to_vec(),
        q_estimates,
        q_analytic,
        q_isotonic,
        d_star_estimate,
        verdict,
        gap_lower_bound: gap.max(ExtReal::Finite(0.0)),
        monotonicity_violations,
        witnesses: estimates.into_iter().map(|e| e.witness).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyParams {
    /// Length of the adversarial trace on the gap side.
    pub t_adversarial: u64,
    /// Length of each battery trace on the strong-duality side.
    pub t_battery: u64,
    pub premise_tol: f64,
    pub conclusion_tol: f64,
    pub tail_fraction: f64,
    pub battery_min: usize,
    pub seed: u64,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        DichotomyParams {
            t_adversarial: 1000,
            t_battery: 10_000,
            premise_tol: 1e-2,
            conclusion_tol: 2e-2,
            tail_fraction: 0.1,
            battery_min: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyVerdict {
    Consistent,
    Contradiction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyTrace {
    pub generator: String,
    /// Scored at the premise tolerance.
    pub premise: AsymptoticVerdict,
    /// Scored at the conclusion tolerance.
    pub conclusion: AsymptoticVerdict,
    pub min_tail_f: f64,
    /// Tail `f` values strictly decreasing.
    pub divergent: bool,
    pub in_battery: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub instance: String,
    pub strong_duality: bool,
    /// Which direction of the equivalence was exercised.
    pub side: String,
    pub params: DichotomyParams,
    pub traces: Vec<DichotomyTrace>,
    pub battery_size: usize,
    pub verdict: DichotomyVerdict,
    /// Generators whose traces decided the verdict.
    pub witnesses: Vec<String>,
}

pub const SIDE_GAP: &str = "2 fails => 1 fails";
pub const SIDE_STRONG: &str = "2 holds => 1 holds";

fn score_pair(trace: &GuaranteeTrace, p: &DichotomyParams, f_star: f64) -> Result<DichotomyTrace> {
    let premise = ScoreParams::new(p.tail_fraction, p.premise_tol, p.premise_tol, p.premise_tol)?;
    let conclusion = ScoreParams::new(
        p.tail_fraction,
        p.conclusion_tol,
        p.conclusion_tol,
        p.conclusion_tol,
    )?;
    let tail = trace.tail(p.tail_fraction);
    let min_tail_f = tail.iter().map(|r| r.r_f).fold(f64::INFINITY, f64::min) + f_star;
    let divergent = tail.len() >= 2 && tail.windows(2).all(|w| w[1].f < w[0].f);
    let premise = score_trace(trace, &premise);
    Ok(DichotomyTrace {
        generator: trace.generator.clone(),
        in_battery: premise.satisfies_6,
        premise,
        conclusion: score_trace(trace, &conclusion),
        min_tail_f,
        divergent,
    })
}

/// Exercises one direction of the equivalence between strong duality and
/// "every weakly convergent sequence converges in value":
///
/// * no strong duality: an adversarial sequence must satisfy the weak
///   asymptotics and violate value convergence;
/// * strong duality: every trace of a battery that satisfies the weak
///   asymptotics must also converge in value.
pub fn duality_dichotomy_report(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    params: &DichotomyParams,
) -> Result<DichotomyReport> {
    let strong = inst.meta.strong_duality.ok_or_else(|| {
        Error::Unsupported(format!("`{}` has no strong_duality metadata", inst.name))
    })?;
    let f_star = inst.meta.f_star;

    if !strong {
        let trace = if inst.meta.d_star.is_some_and(ExtReal::is_neg_inf) {
            adversarial_case2(inst, params.t_adversarial)?
        } else {
            adversarial_case1(inst, params.t_adversarial, 0.0, cfg)?
        };
        let scored = score_pair(&trace, params, f_star)?;
        let ok = scored.premise.satisfies_6 && !scored.conclusion.satisfies_7;
        return Ok(DichotomyReport {
            instance: inst.name.clone(),
            strong_duality: false,
            side: SIDE_GAP.into(),
            params: params.clone(),
            battery_size: usize::from(scored.in_battery),
            witnesses: vec![scored.generator.clone()],
            traces: vec![scored],
            verdict: if ok {
                DichotomyVerdict::Consistent
            } else {
                DichotomyVerdict::Contradiction
            },
        });
    }

    let mut traces = vec![adversarial_case1(inst, params.t_adversarial, 0.0, cfg)?];
    for power in [1.0, 0.5] {
        let sched = RegularizationSchedule::new(1.0, power)?;
        traces.push(iterative_regularization(
            inst,
            &sched,
            params.t_battery,
            cfg,
            None,
        )?);
    }
    for anchor in sample_feasible(inst, 4, 1.0, params.seed) {
        traces.push(approach_sequence(inst, &anchor, params.t_battery)?);
    }
    let scored: Vec<DichotomyTrace> = traces
        .iter()
        .map(|t| score_pair(t, params, f_star))
        .collect::<Result<_>>()?;
    let battery: Vec<&DichotomyTrace> = scored.iter().filter(|s| s.in_battery).collect();
    let failures: Vec<String> = battery
        .iter()
        .filter(|s| !s.conclusion.satisfies_7)
        .map(|s| s.generator.clone())
        .collect();
    let ok = battery.len() >= params.battery_min && failures.is_empty();
    let witnesses = if failures.is_empty() {
        battery.iter().map(|s| s.generator.clone()).collect()
    } else {
        failures
    };

    Ok(DichotomyReport {
        instance: inst.name.clone(),
        strong_duality: true,
        side: SIDE_STRONG.into(),
        params: params.clone(),
        battery_size: battery.len(),
        traces: scored,
        verdict: if ok {
            DichotomyVerdict::Consistent
        } else {
            DichotomyVerdict::Contradiction
        },
        witnesses,
    })
}
