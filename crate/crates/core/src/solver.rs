//! Projected subgradient engine for penalized objectives
//! `phi_lambda(x) = f(x) + lambda (g(x) - g*)` and an iterative-regularization
//! driver for `sigma_t f + g`.
//!
//! Estimates of the dual value are always upper bounds: the solver only ever
//! reports the value of a feasible point it has visited.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::point::Point;
use crate::sequence::{GuaranteeTrace, TraceRecord};

/// Upper bound on the number of entries kept in `SolverResult::value_history`.
pub const HISTORY_POINTS: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `gamma0 / (sqrt(k) * max(1, |h|))`
    Diminishing,
    /// `1 / (L_f + lambda L_g)`, needs declared smoothness constants.
    FixedSmooth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: u64,
    pub step_rule: StepRule,
    pub gamma0: f64,
    #[serde(default)]
    pub stop_value: Option<f64>,
    #[serde(default)]
    pub stop_grad_norm: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 100_000,
            step_rule: StepRule::Diminishing,
            gamma0: 1.0,
            stop_value: None,
            stop_grad_norm: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn smooth(max_iters: u64) -> Self {
        SolverConfig {
            max_iters,
            step_rule: StepRule::FixedSmooth,
            ..Default::default()
        }
    }

    pub fn diminishing(max_iters: u64, gamma0: f64) -> Self {
        SolverConfig {
            max_iters,
            step_rule: StepRule::Diminishing,
            gamma0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::Config(format!(
                "gamma0 must be positive, got {}",
                self.gamma0
            )));
        }
        Ok(())
    }

    /// Parses the key-value (TOML) form. Keys: `max_iters`, `step_rule`,
    /// `gamma0`, `stop_value`, `stop_grad_norm`, `seed`.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SolverConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Budget,
    StopValue,
    StopGradNorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub best_point: Point,
    pub best_value: f64,
    pub iterations_used: u64,
    pub halted_by: HaltReason,
    /// Objective values at the initial point and every `stride`-th iterate.
    pub value_history: Vec<f64>,
}

fn smooth_step(inst: &ProblemInstance, weight_f: f64, weight_g: f64) -> Result<f64> {
    let (lf, lg) = match (inst.f.smoothness(), inst.g.smoothness()) {
        (Some(lf), Some(lg)) => (lf, lg),
        _ => {
            return Err(Error::Config(format!(
                "fixed_smooth step needs smoothness constants for f and g on `{}`",
                inst.name
            )))
        }
    };
    let l = weight_f * lf + weight_g * lg;
    if l <= 0.0 {
        return Err(Error::Config(
            "fixed_smooth step with zero curvature constant".into(),
        ));
    }
    Ok(1.0 / l)
}

fn diminishing_step(gamma0: f64, k: u64, h_norm: f64) -> f64 {
    gamma0 / ((k as f64).sqrt() * h_norm.max(1.0))
}

/// Approximately minimizes `f + lambda (g - g*)` over the feasible set by
/// projected subgradient steps, keeping the best iterate.
pub fn minimize_penalized(
    inst: &ProblemInstance,
    lambda: f64,
    cfg: &SolverConfig,
    init: Option<&Point>,
) -> Result<SolverResult> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be a finite nonnegative number, got {lambda}"
        )));
    }
    cfg.validate()?;
    let mut x = init
        .cloned()
        .unwrap_or_else(|| inst.meta.reference_init.clone());
    inst.check_feasible(&x)?;

    let fixed = match cfg.step_rule {
        StepRule::FixedSmooth => Some(smooth_step(inst, 1.0, lambda)?),
        StepRule::Diminishing => None,
    };
    let objective = |p: &Point| -> Result<f64> {
        let v = inst.penalized(lambda, p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric { point: p.clone() })
        }
    };

    let stride = cfg.max_iters.div_ceil(HISTORY_POINTS).max(1);
    let mut value = objective(&x)?;
    let mut best_point = x.clone();
    let mut best_value = value;
    let mut history = vec![value];
    let mut halted_by = HaltReason::Budget;
    let mut iterations_used = 0;

    if cfg.stop_value.is_some_and(|s| best_value <= s) {
        halted_by = HaltReason::StopValue;
    } else {
        for k in 1..=cfg.max_iters {
            let h = inst.f.subgradient(&x).axpy(lambda, &inst.g.subgradient(&x));
            let h_norm = h.norm();
            if cfg.stop_grad_norm.is_some_and(|s| h_norm <= s) {
                halted_by = HaltReason::StopGradNorm;
                break;
            }
            let step = fixed.unwrap_or_else(|| diminishing_step(cfg.gamma0, k, h_norm));
            x = inst.set.project(&x.axpy(-step, &h));
            value = objective(&x)?;
            iterations_used = k;
            if value < best_value {
                best_value = value;
                best_point = x.clone();
            }
            if k % stride == 0 {
                history.push(value);
            }
            if cfg.stop_value.is_some_and(|s| best_value <= s) {
                halted_by = HaltReason::StopValue;
                break;
            }
        }
    }

    // recomputed so that best_value is exactly objective(best_point)
    let best_value = objective(&best_point)?;
    Ok(SolverResult {
        best_point,
        best_value,
        iterations_used,
        halted_by,
        value_history: history,
    })
}

/// `sigma_t = sigma0 / t^power`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSchedule {
    pub sigma0: f64,
    pub power: f64,
}

impl RegularizationSchedule {
    pub fn new(sigma0: f64, power: f64) -> Result<Self> {
        let s = RegularizationSchedule { sigma0, power };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if !(self.power > 0.0 && self.power <= 1.0) {
            return Err(Error::Config(format!(
                "schedule power must lie in (0, 1], got {}",
                self.power
            )));
        }
        Ok(())
    }

    pub fn sigma(&self, t: u64) -> f64 {
        self.sigma0 / (t as f64).powf(self.power)
    }
}

/// One projected subgradient step on `sigma_t f + g` per outer iteration.
/// Records `x_1 = init` (or the reference point) and every subsequent iterate.
pub fn iterative_regularization(
    inst: &ProblemInstance,
    schedule: &RegularizationSchedule,
    outer_iters: u64,
    cfg: &SolverConfig,
    init: Option<&Point>,
) -> Result<GuaranteeTrace> {
    schedule.validate()?;
    cfg.validate()?;
    if outer_iters < 1 {
        return Err(Error::Config("outer_iters must be >= 1".into()));
    }
    let mut x = init
        .cloned()
        .unwrap_or_else(|| inst.meta.reference_init.clone());
    inst.check_feasible(&x)?;

    let mut records = Vec::with_capacity(outer_iters as usize);
    records.push(TraceRecord::at(inst, 1, x.clone()));
    for t in 1..outer_iters {
        let sigma = schedule.sigma(t);
        let h = inst
            .f
            .subgradient(&x)
            .scale(sigma)
            .add(&inst.g.subgradient(&x));
        let step = match cfg.step_rule {
            StepRule::FixedSmooth => smooth_step(inst, sigma, 1.0)?,
            StepRule::Diminishing => diminishing_step(cfg.gamma0, t, h.norm()),
        };
        x = inst.set.project(&x.axpy(-step, &h));
        let rec = TraceRecord::at(inst, t + 1, x.clone());
        if !(rec.f.is_finite() && rec.g.is_finite()) {
            return Err(Error::Numeric { point: x });
        }
        records.push(rec);
    }
    GuaranteeTrace::new(
        &inst.name,
        format!("iterreg(sigma0={}, p={})", schedule.sigma0, schedule.power),
        records,
    )
}
