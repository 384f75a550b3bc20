use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::point::Point;
use crate::sequence::{score_trace, AsymptoticVerdict, GuaranteeTrace, ScoreParams};

/// Candidate cluster centres examined per trace.
const MAX_CENTRES: usize = 256;

/// Levitin-Polyak variants, ordered by premise strength.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellposednessNotion {
    /// Premise: `Dist(x_t, X_g) -> 0` and `f(x_t) -> f*`.
    Lp,
    /// Premise: `g(x_t) -> g*` and `f(x_t) -> f*`.
    #[default]
    Generalized,
    /// Premise: `g(x_t) -> g*` and `limsup f(x_t) <= f*`.
    StrongGeneralized,
}

impl WellposednessNotion {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(Self::Lp),
            "generalized" => Ok(Self::Generalized),
            "strong_generalized" => Ok(Self::StrongGeneralized),
            _ => Err(Error::Config(format!(
                "unknown well-posedness notion `{s}` (expected lp, generalized, strong_generalized)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellposednessParams {
    pub notion: WellposednessNotion,
    pub cluster_tol: f64,
    pub premise: ScoreParams,
}

impl Default for WellposednessParams {
    fn default() -> Self {
        WellposednessParams {
            notion: WellposednessNotion::Generalized,
            cluster_tol: 1e-2,
            premise: ScoreParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellposednessVerdict {
    WitnessFound,
    RefutationWitness,
    Inconclusive,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellposednessReport {
    pub instance: String,
    pub notion: WellposednessNotion,
    pub verdict: WellposednessVerdict,
    pub premise_holds: bool,
    pub score: AsymptoticVerdict,
    pub cluster_tol: f64,
    /// Cluster centre for `witness_found`; the last tail iterate for a refutation.
    pub witness_point: Option<Point>,
    pub cluster_size: usize,
    pub tail_len: usize,
    pub min_tail_dist_xstar: f64,
    pub tail_norm_first: f64,
    pub tail_norm_last: f64,
}

fn premise_holds(
    inst: &ProblemInstance,
    trace: &GuaranteeTrace,
    p: &WellposednessParams,
    score: &AsymptoticVerdict,
) -> bool {
    match p.notion {
        WellposednessNotion::StrongGeneralized => score.satisfies_6,
        WellposednessNotion::Generalized => score.satisfies_7,
        WellposednessNotion::Lp => {
            let Some(dist) = &inst.meta.dist_xg else {
                return false;
            };
            trace
                .tail(p.premise.tail_fraction)
                .iter()
                .all(|r| dist.at(&r.x) <= p.premise.tol_g && r.r_f.abs() <= p.premise.tol_f)
        }
    }
}

/// Looks for a convergent-subsequence witness in the tail of `trace`.
///
/// `witness_found`: some tail iterate within `cluster_tol` of `X*` has at
/// least half of the tail within `cluster_tol` of it. `refutation_witness`:
/// every tail iterate stays more than `cluster_tol` from `X*` and the norms
/// grow strictly along the tail.
pub fn classify_wellposedness(
    inst: &ProblemInstance,
    trace: &GuaranteeTrace,
    params: &WellposednessParams,
) -> Result<WellposednessReport> {
    let dist =
        inst.meta.dist_xstar.as_ref().ok_or_else(|| {
            Error::Unsupported(format!("`{}` has no Dist(., X*) oracle", inst.name))
        })?;
    if !(params.cluster_tol > 0.0) {
        return Err(Error::Config(format!(
            "cluster tolerance must be positive, got {}",
            params.cluster_tol
        )));
    }
    let score = score_trace(trace, &params.premise);
    let premise = premise_holds(inst, trace, params, &score);
    let tail = trace.tail(params.premise.tail_fraction);
    for r in tail {
        inst.check_point(&r.x)?;
    }
    let dists: Vec<f64> = tail.iter().map(|r| dist.at(&r.x)).collect();
    let norms: Vec<f64> = tail.iter().map(|r| r.x.norm()).collect();
    let mut report = WellposednessReport {
        instance: inst.name.clone(),
        notion: params.notion,
        verdict: WellposednessVerdict::NotApplicable,
        premise_holds: premise,
        score,
        cluster_tol: params.cluster_tol,
        witness_point: None,
        cluster_size: 0,
        tail_len: tail.len(),
        min_tail_dist_xstar: dists.iter().copied().fold(f64::INFINITY, f64::min),
        tail_norm_first: norms.first().copied().unwrap_or(0.0),
        tail_norm_last: norms.last().copied().unwrap_or(0.0),
    };
    if !premise || tail.is_empty() {
        return Ok(report);
    }

    let stride = tail.len().div_ceil(MAX_CENTRES);
    let needed = tail.len().div_ceil(2);
    let centre = (0..tail.len())
        .step_by(stride)
        .filter(|&i| dists[i] <= params.cluster_tol)
        .map(|i| {
            (
                i,
                tail.iter()
                    .filter(|r| r.x.dist(&tail[i].x) <= params.cluster_tol)
                    .count(),
            )
        })
        .find(|&(_, n)| n >= needed);
    if let Some((i, n)) = centre {
        report.verdict = WellposednessVerdict::WitnessFound;
        report.witness_point = Some(tail[i].x.clone());
        report.cluster_size = n;
        return Ok(report);
    }

    let growing = norms.len() >= 2 && norms.windows(2).all(|w| w[1] > w[0]);
    if report.min_tail_dist_xstar > params.cluster_tol && growing {
        report.verdict = WellposednessVerdict::RefutationWitness;
        report.witness_point = tail.last().map(|r| r.x.clone());
    } else {
        report.verdict = WellposednessVerdict::Inconclusive;
    }
    Ok(report)
}
