use bilevel_core::{
    default_schedule, DichotomyParams, ScoreParams, SolverConfig, WellposednessParams,
    DEFAULT_GAP_TOLERANCE,
};
use serde_json::{json, Value};

/// Bumped whenever any value below changes.
pub const DEFAULTS_VERSION: u32 = 1;

pub const DUAL_MAX_ITERS: u64 = 100_000;
pub const ITERREG_SIGMA0: f64 = 1.0;
pub const ITERREG_POWER: f64 = 1.0;
pub const ITERREG_OUTER: u64 = 10_000;
pub const SEQUENCE_T: u64 = 10_000;
pub const CONDITION1_TOL: f64 = 1e-2;
pub const COMPACTNESS_RADIUS: f64 = 1e4;
pub const COMPACTNESS_DIRS: usize = 64;
pub const ERROR_BOUND_SAMPLES: usize = 500;
pub const SAMPLE_RADIUS: f64 = 1.0;
pub const SUPEROPT_TOL: f64 = 1e-2;
pub const C_ORACLE_RADIUS: f64 = 5.0;
pub const C_ORACLE_GRID: usize = 201;
pub const FORCING_DELTA: f64 = 1e-3;
pub const FORCING_GRID: usize = 101;
pub const FORCING_SAMPLES: usize = 50;

pub fn table() -> Value {
    json!({
        "defaults_version": DEFAULTS_VERSION,
        "solver": SolverConfig::default(),
        "dual_sweep": {
            "lambdas": default_schedule(),
            "gap_tol": DEFAULT_GAP_TOLERANCE,
            "max_iters": DUAL_MAX_ITERS,
        },
        "iterative_regularization": {
            "sigma0": ITERREG_SIGMA0,
            "power": ITERREG_POWER,
            "outer_iters": ITERREG_OUTER,
        },
        "sequence": { "T": SEQUENCE_T, "lambda0": 0.0 },
        "score": ScoreParams::default(),
        "dichotomy": DichotomyParams::default(),
        "condition1": { "tol": CONDITION1_TOL, "tail": ScoreParams::default().tail_fraction },
        "error_bound": { "samples": ERROR_BOUND_SAMPLES, "sample_radius": SAMPLE_RADIUS },
        "compactness": { "radius": COMPACTNESS_RADIUS, "dirs": COMPACTNESS_DIRS },
        "wellposedness": WellposednessParams::default(),
        "superoptimality": { "tol": SUPEROPT_TOL },
        "c_oracle": { "radius": C_ORACLE_RADIUS, "grid": C_ORACLE_GRID, "delta": "half the smallest grid spacing" },
        "forcing": {
            "samples": FORCING_SAMPLES,
            "delta": FORCING_DELTA,
            "radius": C_ORACLE_RADIUS,
            "grid": FORCING_GRID,
            "sample_radius": SAMPLE_RADIUS,
        },
    })
}
