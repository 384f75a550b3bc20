//! Convex simple-bilevel optimization toolkit.
//!
//! A simple-bilevel problem minimizes an outer convex objective `f` over the
//! solution set `X_g = argmin_X g` of an inner convex problem. This crate
//! provides a catalog of closed-form instances, a projected subgradient
//! solver for the penalized objective `f + lambda (g - g*)`, evaluation of
//! the Lagrange dual of the value-function formulation, generators for
//! guarantee-style iterate sequences, and finite-sample diagnostics that
//! produce witnesses for or refutations of regularity conditions.
//!
//! ```
//! use bilevel_core::{catalog_get, example1_sequence, score_trace, ScoreParams};
//!
//! let trace = example1_sequence(10_000).unwrap();
//! assert_eq!(trace.instance_name, "counterexample1");
//! let v = score_trace(&trace, &ScoreParams::default());
//! assert!(v.satisfies_6 && !v.satisfies_7);
//! assert_eq!(catalog_get("minnorm_ls").unwrap().meta.f_star, 0.5);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod diagnostics;
pub mod dual;
pub mod error;
pub mod instance;
pub mod manifest;
pub mod oracle;
pub mod point;
pub mod report;
pub mod sequence;
pub mod set;
pub mod solver;

pub use catalog::{catalog_all, catalog_get, catalog_names, CATALOG_NAMES};
pub use diagnostics::*;
pub use dual::{
    default_schedule, duality_dichotomy_report, eval_dual, isotonize, parse_schedule,
    preferred_config, sweep_dual, DichotomyParams, DichotomyReport, DichotomyTrace,
    DichotomyVerdict, DualEstimate, DualMode, DualSweepResult, DualVerdict, DEFAULT_GAP_TOLERANCE,
    SIDE_GAP, SIDE_STRONG,
};
pub use error::{Error, Result};
pub use instance::{
    eval_residuals, sample_around, sample_feasible, InstanceMetadata, ProblemInstance,
};
pub use manifest::{config_digest, RunManifest};
pub use oracle::ConvexFn;
pub use point::{ExtReal, Point};
pub use report::{
    render_report, DiagnosticSection, DiagnosticsReport, Report, ReportDocument, ReportFormat,
    ScoreReport, TOOL_VERSION,
};
pub use sequence::{
    adversarial_case1, adversarial_case2, approach_sequence, example1_sequence, example2_sequence,
    score_trace, superoptimality_flags, AsymptoticVerdict, GuaranteeTrace, ScoreParams,
    TraceRecord,
};
pub use set::{BoxSet, FeasibleSet, MEMBERSHIP_TOL};
pub use solver::{
    iterative_regularization, minimize_penalized, HaltReason, RegularizationSchedule, SolverConfig,
    SolverResult, StepRule,
};
