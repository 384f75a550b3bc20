//! Iterate sequences scored against the guarantee template
//! `f(x_t) <= f* + r_{f,t}`, `g(x_t) <= g* + r_{g,t}` and against the three
//! asymptotic notions:
//!
//! * weak: `limsup f(x_t) <= f*` and `g(x_t) -> g*`
//! * value: `f(x_t) -> f*` and `g(x_t) -> g*`
//! * solution: `Dist(x_t, X*) -> 0`
//!
//! Limits are proxied by a tail window of the recorded trace with absolute
//! tolerances. This module also builds the explicit counterexample sequences
//! and both constructions of a sequence whose values approach `d*`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::catalog_get;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::point::{ExtReal, Point};
use crate::solver::{minimize_penalized, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub x: Point,
    pub f: f64,
    pub g: f64,
    /// `f - f*`, signed: negative means super-optimal.
    pub r_f: f64,
    pub r_g: f64,
    pub dist_xg: Option<f64>,
    pub dist_xstar: Option<f64>,
}

impl TraceRecord {
    pub fn at(inst: &ProblemInstance, t: u64, x: Point) -> Self {
        let f = inst.f.eval(&x);
        let g = inst.g.eval(&x);
        TraceRecord {
            t,
            f,
            g,
            r_f: f - inst.meta.f_star,
            r_g: g - inst.meta.g_star,
            dist_xg: inst.meta.dist_xg.as_ref().map(|d| d.at(&x)),
            dist_xstar: inst.meta.dist_xstar.as_ref().map(|d| d.at(&x)),
            x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeTrace {
    pub instance_name: String,
    pub generator: String,
    pub records: Vec<TraceRecord>,
}

impl GuaranteeTrace {
    pub fn new(
        instance: &str,
        generator: impl Into<String>,
        records: Vec<TraceRecord>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Config("trace has no records".into()));
        }
        if let Some(w) = records.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::Config(format!(
                "trace indices not increasing: {} then {}",
                w[0].t, w[1].t
            )));
        }
        Ok(GuaranteeTrace {
            instance_name: instance.to_string(),
            generator: generator.into(),
            records,
        })
    }

    /// The last `ceil(fraction * len)` records (at least one).
    pub fn tail(&self, fraction: f64) -> &[TraceRecord] {
        let n = self.records.len();
        let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
        &self.records[n - k..]
    }

    /// Every `stride`-th record, keeping the last one.
    pub fn subsample(&self, stride: usize) -> GuaranteeTrace {
        let stride = stride.max(1);
        let n = self.records.len();
        let records = self
            .records
            .iter()
            .enumerate()
            .filter(|(i, _)| (n - 1 - i).is_multiple_of(stride))
            .map(|(_, r)| r.clone())
            .collect();
        GuaranteeTrace {
            instance_name: self.instance_name.clone(),
            generator: self.generator.clone(),
            records,
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8 json")
    }

    pub fn read_jsonl<R: Read>(r: R, instance: &str, generator: &str) -> Result<Self> {
        let mut records = Vec::new();
        for line in BufReader::new(r).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        GuaranteeTrace::new(instance, generator, records)
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        GuaranteeTrace::read_jsonl(file, "unknown", stem)
    }

    /// CSV with the JSONL column set; `x` is a JSON array string.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "f", "g", "r_f", "r_g", "dist_xg", "dist_xstar"])?;
        let opt = |v: Option<f64>| v.map(|d| d.to_string()).unwrap_or_default();
        for r in &self.records {
            out.write_record([
                r.t.to_string(),
                serde_json::to_string(&r.x)?,
                r.f.to_string(),
                r.g.to_string(),
                r.r_f.to_string(),
                r.r_g.to_string(),
                opt(r.dist_xg),
                opt(r.dist_xstar),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn trace_from_points(
    inst: &ProblemInstance,
    generator: &str,
    points: impl IntoIterator<Item = (u64, Point)>,
) -> Result<GuaranteeTrace> {
    let records = points
        .into_iter()
        .map(|(t, x)| TraceRecord::at(inst, t, x))
        .collect();
    GuaranteeTrace::new(&inst.name, generator, records)
}

fn require_len(t_max: u64) -> Result<()> {
    if t_max < 1 {
        return Err(Error::Config("T must be >= 1".into()));
    }
    Ok(())
}

/// `x_t = (t, 1)` on `counterexample1`: `g -> 0` while `f -> -1 < f* = 0`.
pub fn example1_sequence(t_max: u64) -> Result<GuaranteeTrace> {
    require_len(t_max)?;
    let inst = catalog_get("counterexample1")?;
    trace_from_points(
        &inst,
        "example1",
        (1..=t_max).map(|t| (t, Point::from([t as f64, 1.0]))),
    )
}

/// `x_t = (t, 1, 0)` on `counterexample2`: feasible, `f -> f*`, but
/// `Dist(x_t, X*) = 1` throughout.
pub fn example2_sequence(t_max: u64) -> Result<GuaranteeTrace> {
    require_len(t_max)?;
    let inst = catalog_get("counterexample2")?;
    trace_from_points(
        &inst,
        "example2",
        (1..=t_max).map(|t| (t, Point::from([t as f64, 1.0, 0.0]))),
    )
}

/// `x_t = x* + (anchor - x*) / t`: a feasible segment shrinking onto `x*`.
pub fn approach_sequence(
    inst: &ProblemInstance,
    anchor: &Point,
    t_max: u64,
) -> Result<GuaranteeTrace> {
    require_len(t_max)?;
    inst.check_feasible(anchor)?;
    let x_star = inst
        .meta
        .x_star
        .clone()
        .ok_or_else(|| Error::Unsupported(format!("`{}` has no x_star", inst.name)))?;
    let dir = anchor.sub(&x_star);
    trace_from_points(
        inst,
        &format!("approach{anchor}"),
        (1..=t_max).map(|t| (t, x_star.axpy(1.0 / t as f64, &dir))),
    )
}

/// Finite-`d*` construction: `x_t` is within `1/t` of minimizing
/// `f + (t + lambda0)(g - g*)`, so `g(x_t) -> g*` and `limsup f(x_t) <= d*`.
///
/// Uses the instance's closed-form witness family when present; otherwise
/// runs the inner solver with a stop target `q(t + lambda0) + 1/t`, which
/// needs a closed-form dual.
pub fn adversarial_case1(
    inst: &ProblemInstance,
    t_max: u64,
    lambda0: f64,
    cfg: &SolverConfig,
) -> Result<GuaranteeTrace> {
    require_len(t_max)?;
    if !(lambda0 >= 0.0 && lambda0.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda0 must be nonnegative, got {lambda0}"
        )));
    }
    if inst.meta.d_star.is_some_and(ExtReal::is_neg_inf) {
        return Err(Error::Unsupported(format!(
            "`{}` has d* = -inf; use adversarial_case2",
            inst.name
        )));
    }
    let q = inst.meta.dual_value.as_ref();
    if let Some(q) = q {
        if !q.at(lambda0).is_finite() {
            return Err(Error::Domain(format!("q({lambda0}) is not finite")));
        }
    } else if inst.meta.penalized_witness.is_none() {
        return Err(Error::Unsupported(format!(
            "`{}` has neither a closed-form dual nor a witness family",
            inst.name
        )));
    }

    let points: Vec<(u64, Point)> = (1..=t_max)
        .into_par_iter()
        .map(|t| {
            let lambda = t as f64 + lambda0;
            let slack = 1.0 / t as f64;
            if let Some(w) = &inst.meta.penalized_witness {
                return Ok((t, w.at(lambda, slack)));
            }
            let target = q
                .and_then(|q| q.at(lambda).finite())
                .ok_or_else(|| Error::Generator {
                    t,
                    reason: "q(t + lambda0) not finite".into(),
                })?
                + slack;
            let run_cfg = SolverConfig {
                stop_value: Some(target),
                ..cfg.clone()
            };
            let r = minimize_penalized(inst, lambda, &run_cfg, None)?;
            if r.best_value > target {
                return Err(Error::Generator {
                    t,
                    reason: format!(
                        "slack 1/t not reached: best {} > target {target}",
                        r.best_value
                    ),
                });
            }
            Ok((t, r.best_point))
        })
        .collect::<Result<_>>()?;
    trace_from_points(inst, &format!("adv1(lambda0={lambda0})"), points)
}

/// `d* = -inf` construction: blends `z_t` (with `f(z_t) + t(g(z_t) - g*) <= -t`)
/// towards `x*` with weight `theta_t = 1 / (sqrt(t) max{1, g(z_t) - g*})`,
/// giving `g(x_t) <= g* + 1/sqrt(t)` while `f(x_t) -> -inf`.
pub fn adversarial_case2(inst: &ProblemInstance, t_max: u64) -> Result<GuaranteeTrace> {
    require_len(t_max)?;
    let meta = &inst.meta;
    if !meta.d_star.is_some_and(ExtReal::is_neg_inf) {
        return Err(Error::Unsupported(format!(
            "`{}` does not have d* = -inf",
            inst.name
        )));
    }
    let z = meta
        .divergent_z
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("`{}` has no divergent_z", inst.name)))?;
    let x_star = meta
        .x_star
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("`{}` has no x_star", inst.name)))?;

    let mut points = Vec::with_capacity(t_max as usize);
    for t in 1..=t_max {
        let tf = t as f64;
        let zt = z.at(t);
        inst.check_feasible(&zt)?;
        let gap = inst.g.eval(&zt) - meta.g_star;
        let value = inst.f.eval(&zt) + tf * gap;
        if value > -tf {
            return Err(Error::Metadata(format!(
                "divergent_z({t}) = {zt} violates f + t (g - g*) <= -t (value {value})"
            )));
        }
        let theta = 1.0 / (tf.sqrt() * gap.max(1.0));
        points.push((t, zt.blend(theta, x_star)));
    }
    trace_from_points(inst, "adv2", points)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub tail_fraction: f64,
    pub tol_f: f64,
    pub tol_g: f64,
    pub tol_dist: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            tail_fraction: 0.1,
            tol_f: 1e-2,
            tol_g: 1e-2,
            tol_dist: 1e-2,
        }
    }
}

impl ScoreParams {
    pub fn new(tail_fraction: f64, tol_f: f64, tol_g: f64, tol_dist: f64) -> Result<Self> {
        if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "tail fraction must lie in (0, 1], got {tail_fraction}"
            )));
        }
        if [tol_f, tol_g, tol_dist].iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(ScoreParams {
            tail_fraction,
            tol_f,
            tol_g,
            tol_dist,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticVerdict {
    /// Weak asymptotics: `limsup f <= f*`, `g -> g*`.
    pub satisfies_6: bool,
    /// Value convergence: `f -> f*`, `g -> g*`.
    pub satisfies_7: bool,
    /// Solution convergence `Dist(x_t, X*) -> 0`; `None` when the trace
    /// carries no distances.
    pub satisfies_8: Option<bool>,
    /// `f* - min tail f`, clipped at zero.
    pub tail_f_gap: f64,
    /// `max tail (g - g*)`
    pub tail_g_gap: f64,
    pub tail_dist_xstar: Option<f64>,
    pub tail_fraction: f64,
    pub tail_len: usize,
}

pub fn score_trace(trace: &GuaranteeTrace, params: &ScoreParams) -> AsymptoticVerdict {
    let tail = trace.tail(params.tail_fraction);
    let max_rf_pos = tail.iter().map(|r| r.r_f.max(0.0)).fold(0.0, f64::max);
    let min_rf = tail.iter().map(|r| r.r_f).fold(f64::INFINITY, f64::min);
    let max_rg = tail.iter().map(|r| r.r_g).fold(f64::NEG_INFINITY, f64::max);
    let dists: Option<Vec<f64>> = tail.iter().map(|r| r.dist_xstar).collect();
    let tail_dist = dists.map(|d| d.into_iter().fold(0.0, f64::max));

    let satisfies_6 = max_rf_pos <= params.tol_f && max_rg <= params.tol_g;
    let satisfies_7 = satisfies_6 && min_rf >= -params.tol_f;
    AsymptoticVerdict {
        satisfies_6,
        satisfies_7,
        satisfies_8: tail_dist.map(|d| d <= params.tol_dist),
        tail_f_gap: (-min_rf).max(0.0),
        tail_g_gap: max_rg,
        tail_dist_xstar: tail_dist,
        tail_fraction: params.tail_fraction,
        tail_len: tail.len(),
    }
}

/// Indices `t` at which the iterate is super-optimal: `f(x_t) < f* - tol`.
pub fn superoptimality_flags(trace: &GuaranteeTrace, tol: f64) -> Vec<u64> {
    trace
        .records
        .iter()
        .filter(|r| r.r_f < -tol)
        .map(|r| r.t)
        .collect()
}
