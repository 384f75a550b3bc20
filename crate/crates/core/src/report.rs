//! Versioned report documents and their JSON / Markdown renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagnostics::{
    COracleResult, CompactnessProbe, CompactnessVerdict, Condition1Report, Condition1Verdict,
    ErrorBoundFit, ForcingReport, WellposednessReport, WellposednessVerdict,
};
use crate::dual::{DichotomyReport, DichotomyVerdict, DualSweepResult};
use crate::error::{Error, Result};
use crate::point::ExtReal;
use crate::sequence::{AsymptoticVerdict, ScoreParams};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            _ => Err(Error::Config(format!(
                "unknown report format `{s}` (expected json or markdown)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub instance: String,
    pub generator: String,
    pub params: ScoreParams,
    pub score: AsymptoticVerdict,
    /// Number of iterates with `f(x_t) < f* - tol_f`.
    pub superoptimal_count: usize,
    pub first_superoptimal_t: Option<u64>,
}

impl ScoreReport {
    pub fn verdict_token(&self) -> &'static str {
        match (self.score.satisfies_6, self.score.satisfies_7) {
            (_, true) => "satisfies_7",
            (true, false) => "satisfies_6_only",
            (false, _) => "fails_6",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "section", rename_all = "snake_case")]
pub enum DiagnosticSection {
    Condition1(Condition1Report),
    ErrorBound(ErrorBoundFit),
    Compactness(CompactnessProbe),
    Wellposedness(WellposednessReport),
    Superoptimality {
        tol: f64,
        count: usize,
        first_t: Option<u64>,
    },
}

impl DiagnosticSection {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Condition1(_) => "condition1",
            Self::ErrorBound(_) => "error_bound",
            Self::Compactness(_) => "compactness",
            Self::Wellposedness(_) => "wellposedness",
            Self::Superoptimality { .. } => "superoptimality",
        }
    }

    pub fn verdict_token(&self) -> String {
        match self {
            Self::Condition1(r) => token(&r.verdict),
            Self::ErrorBound(_) => "fitted".into(),
            Self::Compactness(p) => token(&p.verdict),
            Self::Wellposedness(w) => token(&w.verdict),
            Self::Superoptimality { count, .. } => if *count == 0 {
                "none_flagged"
            } else {
                "superoptimal_iterates"
            }
            .into(),
        }
    }

    /// True when the section holds a refutation or violation witness.
    pub fn refutes(&self) -> bool {
        match self {
            Self::Condition1(r) => r.verdict == Condition1Verdict::Violated,
            Self::Compactness(p) => p.verdict == CompactnessVerdict::RefutedWithWitness,
            Self::Wellposedness(w) => w.verdict == WellposednessVerdict::RefutationWitness,
            Self::Superoptimality { count, .. } => *count > 0,
            Self::ErrorBound(_) => false,
        }
    }

    fn witnesses(&self) -> Vec<Value> {
        match self {
            Self::Condition1(r) => r.witnesses.iter().map(|w| json!({"section": "condition1", "witness": w})).collect(),
            Self::Compactness(p) => p
                .witness_direction
                .iter()
                .map(|d| json!({"section": "compactness", "origin": p.origin, "direction": d, "radius": p.probe_radius}))
                .collect(),
            Self::Wellposedness(w) => w
                .witness_point
                .iter()
                .map(|x| json!({"section": "wellposedness", "verdict": token(&w.verdict), "point": x}))
                .collect(),
            Self::Superoptimality { first_t, .. } => {
                first_t.map(|t| json!({"section": "superoptimality", "first_t": t})).into_iter().collect()
            }
            Self::ErrorBound(_) => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub instance: String,
    pub trace: Option<String>,
    pub sections: Vec<DiagnosticSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "report", rename_all = "snake_case")]
pub enum Report {
    DualSweep(DualSweepResult),
    Dichotomy(DichotomyReport),
    Score(ScoreReport),
    Diagnostics(DiagnosticsReport),
    COracle(COracleResult),
    Forcing(ForcingReport),
    Wellposedness(WellposednessReport),
}

fn token<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

impl Report {
    pub fn kind(&self) -> &'static str {
        match self {
            Report::DualSweep(_) => "dual_sweep",
            Report::Dichotomy(_) => "dichotomy",
            Report::Score(_) => "score",
            Report::Diagnostics(_) => "diagnostics",
            Report::COracle(_) => "c_oracle",
            Report::Forcing(_) => "forcing",
            Report::Wellposedness(_) => "wellposedness",
        }
    }

    pub fn verdict(&self) -> String {
        match self {
            Report::DualSweep(r) => r.verdict.token().into(),
            Report::Dichotomy(r) => token(&r.verdict),
            Report::Score(r) => r.verdict_token().into(),
            Report::Diagnostics(r) => {
                if r.sections.is_empty() {
                    "empty".into()
                } else if r.sections.iter().any(DiagnosticSection::refutes) {
                    "refutation_found".into()
                } else {
                    "no_refutation".into()
                }
            }
            Report::COracle(r) => if r.c_estimate == ExtReal::PosInf {
                "empty_band"
            } else {
                "estimated"
            }
            .into(),
            Report::Forcing(r) => r.verdict.clone(),
            Report::Wellposedness(r) => token(&r.verdict),
        }
    }

    pub fn witnesses(&self) -> Vec<Value> {
        match self {
            Report::DualSweep(r) => r
                .lambdas
                .iter()
                .zip(&r.witnesses)
                .filter_map(|(l, w)| w.as_ref().map(|x| json!({"lambda": l, "point": x})))
                .collect(),
            Report::Dichotomy(r) => r.witnesses.iter().map(|w| json!(w)).collect(),
            Report::Score(r) => r
                .first_superoptimal_t
                .map(|t| json!({"first_superoptimal_t": t}))
                .into_iter()
                .collect(),
            Report::Diagnostics(r) => r
                .sections
                .iter()
                .flat_map(DiagnosticSection::witnesses)
                .collect(),
            Report::COracle(r) => r
                .attaining_point
                .iter()
                .map(|x| json!({"attaining_point": x}))
                .collect(),
            Report::Forcing(r) => r
                .samples
                .iter()
                .filter(|s| !s.pass)
                .map(|s| json!(s))
                .collect(),
            Report::Wellposedness(r) => r
                .witness_point
                .iter()
                .map(|x| json!({"point": x}))
                .collect(),
        }
    }
}

/// A report together with the tool version that produced it and the files
/// written alongside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool_version: String,
    pub verdict: String,
    pub witnesses: Vec<Value>,
    pub files: Vec<String>,
    #[serde(flatten)]
    pub report: Report,
}

impl ReportDocument {
    pub fn new(report: Report) -> Self {
        ReportDocument {
            tool_version: TOOL_VERSION.to_string(),
            verdict: report.verdict(),
            witnesses: report.witnesses(),
            files: vec![],
            report,
        }
    }

    pub fn with_files(mut self, files: Vec<String>) -> Self {
        self.files = files;
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ReportDocument = serde_json::from_str(s)?;
        doc.check_version()?;
        Ok(doc)
    }

    fn check_version(&self) -> Result<()> {
        if self.tool_version != TOOL_VERSION {
            return Err(Error::VersionMismatch {
                found: self.tool_version.clone(),
                expected: TOOL_VERSION.into(),
            });
        }
        Ok(())
    }
}

pub fn render_report(doc: &ReportDocument, format: ReportFormat) -> Result<String> {
    doc.check_version()?;
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(doc)? + "\n"),
        ReportFormat::Markdown => Ok(markdown(doc)),
    }
}

fn fmt_point(v: &impl Serialize) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

fn markdown(doc: &ReportDocument) -> String {
    let mut s = String::new();
    let r = &doc.report;
    let _ = writeln!(s, "# {} report\n", r.kind());
    let _ = writeln!(s, "- tool version: {}", doc.tool_version);
    let _ = writeln!(s, "- verdict: `{}`", doc.verdict);
    match r {
        Report::DualSweep(d) => {
            let _ = writeln!(s, "- instance: {}", d.instance);
            let _ = writeln!(s, "- mode: {}", token(&d.mode));
            let _ = writeln!(s, "- f*: {}", d.f_star);
            let _ = writeln!(s, "- d* estimate: {}", d.d_star_estimate.pretty());
            let _ = writeln!(s, "- gap lower bound: {}", d.gap_lower_bound.pretty());
            let _ = writeln!(s, "- gap tolerance: {}", d.gap_tolerance);
            let _ = writeln!(
                s,
                "- monotonicity violations: {}",
                d.monotonicity_violations
            );
            let _ = writeln!(
                s,
                "\n| lambda | q estimate | q isotonic | q analytic |\n|---|---|---|---|"
            );
            for (i, l) in d.lambdas.iter().enumerate() {
                let qa = d
                    .q_analytic
                    .as_ref()
                    .map_or("".to_string(), |v| v[i].pretty());
                let _ = writeln!(
                    s,
                    "| {l} | {} | {} | {qa} |",
                    d.q_estimates[i].pretty(),
                    d.q_isotonic[i].pretty()
                );
            }
        }
        Report::Dichotomy(d) => {
            let _ = writeln!(s, "- instance: {}", d.instance);
            let _ = writeln!(s, "- strong duality (metadata): {}", d.strong_duality);
            let _ = writeln!(s, "- side exercised: {}", d.side);
            let _ = writeln!(s, "- battery size: {}", d.battery_size);
            let _ = writeln!(s, "\n| generator | satisfies_6 | satisfies_7 | min tail f | in battery |\n|---|---|---|---|---|");
            for t in &d.traces {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {:.6e} | {} |",
                    t.generator,
                    t.premise.satisfies_6,
                    t.conclusion.satisfies_7,
                    t.min_tail_f,
                    t.in_battery
                );
            }
            if d.verdict == DichotomyVerdict::Contradiction {
                let _ = writeln!(s, "\nmetadata contradicts the empirical outcome");
            }
        }
        Report::Score(sc) => {
            let v = &sc.score;
            let _ = writeln!(s, "- instance: {}", sc.instance);
            let _ = writeln!(s, "- generator: {}", sc.generator);
            let _ = writeln!(s, "- satisfies_6: {}", v.satisfies_6);
            let _ = writeln!(s, "- satisfies_7: {}", v.satisfies_7);
            let s8 = v.satisfies_8.map_or("n/a".to_string(), |b| b.to_string());
            let _ = writeln!(s, "- satisfies_8: {s8}");
            let _ = writeln!(s, "- tail f gap: {:.6e}", v.tail_f_gap);
            let _ = writeln!(s, "- tail g gap: {:.6e}", v.tail_g_gap);
            if let Some(d) = v.tail_dist_xstar {
                let _ = writeln!(s, "- tail Dist(x, X*): {d:.6e}");
            }
            let _ = writeln!(s, "- super-optimal iterates: {}", sc.superoptimal_count);
        }
        Report::Diagnostics(d) => {
            let _ = writeln!(s, "- instance: {}", d.instance);
            if let Some(t) = &d.trace {
                let _ = writeln!(s, "- trace: {t}");
            }
            let _ = writeln!(s, "- sections: {}", d.sections.len());
            for sec in &d.sections {
                let _ = writeln!(
                    s,
                    "\n## {}\n\n- verdict: `{}`",
                    sec.name(),
                    sec.verdict_token()
                );
                match sec {
                    DiagnosticSection::Condition1(c) => {
                        let _ = writeln!(s, "- records checked: {}", c.checked);
                    }
                    DiagnosticSection::ErrorBound(f) => {
                        let _ = writeln!(
                            s,
                            "- tau: {:.6}\n- r: {:.6}\n- residual: {:.3e}",
                            f.tau, f.r, f.residual
                        );
                    }
                    DiagnosticSection::Compactness(p) => {
                        let _ = writeln!(
                            s,
                            "- directions tried: {}\n- radius: {}",
                            p.directions_tried, p.probe_radius
                        );
                    }
                    DiagnosticSection::Wellposedness(w) => {
                        let _ = writeln!(s, "- premise holds: {}", w.premise_holds);
                        let _ =
                            writeln!(s, "- min tail Dist(x, X*): {:.6e}", w.min_tail_dist_xstar);
                    }
                    DiagnosticSection::Superoptimality { tol, count, .. } => {
                        let _ = writeln!(s, "- tol: {tol}\n- flagged: {count}");
                    }
                }
            }
        }
        Report::COracle(c) => {
            let _ = writeln!(s, "- alpha: {}\n- beta: {}", c.alpha, c.beta);
            let _ = writeln!(s, "- c estimate: {}", c.c_estimate.pretty());
            let _ = writeln!(s, "- band delta: {}", c.band_delta);
            let _ = writeln!(
                s,
                "- grid: radius {}, {} points per axis",
                c.grid_radius, c.grid_points
            );
            if let Some(p) = &c.attaining_point {
                let _ = writeln!(s, "- attained at: {}", fmt_point(p));
            }
        }
        Report::Forcing(f) => {
            let _ = writeln!(s, "- passed: {}\n- failed: {}", f.passed, f.failed);
        }
        Report::Wellposedness(w) => {
            let _ = writeln!(s, "- instance: {}", w.instance);
            let _ = writeln!(s, "- notion: {}", token(&w.notion));
            let _ = writeln!(s, "- premise holds: {}", w.premise_holds);
            let _ = writeln!(s, "- min tail Dist(x, X*): {:.6e}", w.min_tail_dist_xstar);
        }
    }
    if !doc.witnesses.is_empty() {
        let _ = writeln!(s, "\n## witnesses\n");
        for w in &doc.witnesses {
            let _ = writeln!(s, "- `{}`", fmt_point(w));
        }
    }
    if !doc.files.is_empty() {
        let _ = writeln!(s, "\n## files\n");
        for f in &doc.files {
            let _ = writeln!(s, "- {f}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::catalog_get;
    use crate::dual::{default_schedule, sweep_dual, DualMode, DEFAULT_GAP_TOLERANCE};
    use crate::solver::SolverConfig;

    fn c1_sweep() -> ReportDocument {
        let inst = catalog_get("counterexample1").unwrap();
        let r = sweep_dual(
            &inst,
            &[1.0, 10.0, 100.0, 1000.0],
            &SolverConfig::default(),
            DualMode::Analytic,
            DEFAULT_GAP_TOLERANCE,
        )
        .unwrap();
        ReportDocument::new(Report::DualSweep(r))
    }

    #[test]
    fn json_roundtrip_is_lossless() {
        let doc = c1_sweep().with_files(vec!["out/trace.jsonl".into()]);
        let text = render_report(&doc, ReportFormat::Json).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["kind"], "dual_sweep");
        assert_eq!(v["verdict"], "gap_detected");
        assert!(v["witnesses"].is_array());
        assert_eq!(ReportDocument::from_json(&text).unwrap(), doc);
    }

    #[test]
    fn markdown_carries_verdict_and_gap() {
        let md = render_report(&c1_sweep(), ReportFormat::Markdown).unwrap();
        assert!(md.contains("gap_detected"));
        assert!(md.contains("gap lower bound: 1"));
        assert!(md.contains("out") || !md.contains("## files"));
    }

    #[test]
    fn neg_inf_encoding() {
        let inst = catalog_get("infinite_gap").unwrap();
        let r = sweep_dual(
            &inst,
            &default_schedule(),
            &SolverConfig::default(),
            DualMode::Analytic,
            0.05,
        )
        .unwrap();
        let doc = ReportDocument::new(Report::DualSweep(r));
        let json = render_report(&doc, ReportFormat::Json).unwrap();
        assert!(json.contains("\"d_star_estimate\": \"neg_inf\""));
        let md = render_report(&doc, ReportFormat::Markdown).unwrap();
        assert!(md.contains("d* estimate: −∞"));
    }

    #[test]
    fn empty_battery_has_zero_sections() {
        let doc = ReportDocument::new(Report::Diagnostics(DiagnosticsReport {
            instance: "minnorm_ls".into(),
            trace: None,
            sections: vec![],
        }));
        let md = render_report(&doc, ReportFormat::Markdown).unwrap();
        assert!(!md.contains("\n## "));
        let json = render_report(&doc, ReportFormat::Json).unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["report"]["sections"], json!([]));
        assert_eq!(v["verdict"], "empty");
    }

    #[test]
    fn version_mismatch_refused() {
        let mut doc = c1_sweep();
        doc.tool_version = "0.0.0-other".into();
        assert!(matches!(
            render_report(&doc, ReportFormat::Markdown),
            Err(Error::VersionMismatch { .. })
        ));
        let text = serde_json::to_string(&doc).unwrap();
        assert!(matches!(
            ReportDocument::from_json(&text),
            Err(Error::VersionMismatch { .. })
        ));
    }
}
