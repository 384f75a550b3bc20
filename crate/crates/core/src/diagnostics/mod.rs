//! Finite-sample diagnostics for the regularity conditions of a bilevel
//! instance. Everything here produces witnesses or refutations; nothing
//! certifies a property that quantifies over all sequences or all radii.

mod compactness;
mod condition;
mod forcing;
mod wellposed;

pub use compactness::{probe_compactness, probe_ray, CompactnessProbe, CompactnessVerdict};
pub use condition::{
    check_condition1, fit_error_bound, Condition1Report, Condition1Verdict, Condition1Witness,
    ErrorBoundFit, LOG_FLOOR,
};
pub use forcing::{
    c_oracle, check_forcing_inequality, COracleResult, ForcingConfig, ForcingReport, ForcingSample,
    SearchGrid,
};
pub use wellposed::{
    classify_wellposedness, WellposednessNotion, WellposednessParams, WellposednessReport,
    WellposednessVerdict,
};
