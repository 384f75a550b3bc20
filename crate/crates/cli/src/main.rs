use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use bilevel_core as core;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use core::{
    adversarial_case1, adversarial_case2, approach_sequence, c_oracle, catalog_get, catalog_names,
    check_condition1, check_forcing_inequality, classify_wellposedness, duality_dichotomy_report,
    example1_sequence, example2_sequence, fit_error_bound, iterative_regularization,
    minimize_penalized, parse_schedule, preferred_config, probe_compactness, render_report,
    score_trace, superoptimality_flags, sweep_dual, DiagnosticSection, DiagnosticsReport,
    DichotomyParams, DichotomyVerdict, DualMode, Error, ForcingConfig, GuaranteeTrace, Point,
    RegularizationSchedule, Report, ReportDocument, ReportFormat, RunManifest, ScoreParams,
    ScoreReport, SolverConfig, StepRule, WellposednessNotion, WellposednessParams,
};

mod defaults;

const EXIT_NUMERIC: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ASSERT: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "bilevel",
    version,
    about = "Convex simple-bilevel optimization experiments"
)]
struct Cli {
    /// Worker threads for parallel sweeps and grid searches (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Format of the report printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output directory for traces, reports and the run manifest.
    #[arg(
        long,
        global = true,
        env = "BILEVEL_OUT_DIR",
        default_value = "bilevel-out"
    )]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List catalog instances or show one with the defaults table.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Solve the penalized problem for one lambda, or run iterative regularization.
    Run(RunArgs),
    /// Generate a guarantee trace.
    Sequence(SequenceArgs),
    /// Score a JSONL trace against the asymptotic notions.
    Score(ScoreArgs),
    /// Evaluate the Lagrange dual over a lambda schedule.
    DualSweep(DualSweepArgs),
    /// Run regularity diagnostics on an instance and a trace.
    Diagnose(DiagnoseArgs),
    /// Grid estimate of the forcing function c(alpha, beta).
    OracleC(OracleCArgs),
    /// Check |f - f*| >= c(Dist, g - g*) on seeded feasible samples.
    Forcing(ForcingArgs),
    /// Exercise the strong-duality dichotomy on an instance.
    Dichotomy(DichotomyArgs),
    /// Re-run the command recorded in a manifest and compare outputs byte for byte.
    Replay(ReplayArgs),
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    List,
    Show { name: String },
}

#[derive(Args, Debug, Serialize)]
struct SolverArgs {
    /// Solver config file (keys: max_iters, step_rule, gamma0, stop_value, stop_grad_norm, seed).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<u64>,
    /// diminishing | fixed_smooth
    #[arg(long, value_parser = parse_step_rule)]
    step_rule: Option<StepRule>,
    #[arg(long)]
    gamma0: Option<f64>,
}

impl SolverArgs {
    fn resolve(&self, base: SolverConfig) -> core::Result<SolverConfig> {
        let mut cfg = match &self.config {
            Some(p) => SolverConfig::load(p)?,
            None => base,
        };
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.step_rule {
            cfg.step_rule = v;
        }
        if let Some(v) = self.gamma0 {
            cfg.gamma0 = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_step_rule(s: &str) -> Result<StepRule, String> {
    match s {
        "diminishing" => Ok(StepRule::Diminishing),
        "fixed_smooth" => Ok(StepRule::FixedSmooth),
        _ => Err(format!(
            "unknown step rule `{s}` (expected diminishing or fixed_smooth)"
        )),
    }
}

fn parse_point(s: &str) -> core::Result<Point> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad coordinate `{v}` in `{s}`")))
        })
        .collect::<core::Result<Vec<_>>>()
        .map(Point::new)
}

#[derive(Args, Debug, Serialize)]
struct RunArgs {
    #[arg(long)]
    instance: String,
    /// Solve min f + lambda (g - g*) once instead of running iterative regularization.
    #[arg(long)]
    lambda: Option<f64>,
    /// Initial point, comma separated (default: the instance's reference point).
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = defaults::ITERREG_SIGMA0)]
    sigma0: f64,
    #[arg(long, default_value_t = defaults::ITERREG_POWER)]
    power: f64,
    #[arg(long, default_value_t = defaults::ITERREG_OUTER)]
    outer: u64,
    /// Also write the trace as CSV.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Generator {
    Example1,
    Example2,
    Adv1,
    Adv2,
    Approach,
}

#[derive(Args, Debug, Serialize)]
struct SequenceArgs {
    #[arg(long, value_enum)]
    generator: Generator,
    #[arg(long = "T", default_value_t = defaults::SEQUENCE_T)]
    t: u64,
    /// Instance for adv1/adv2/approach (defaults: counterexample1, infinite_gap, minnorm_ls).
    #[arg(long)]
    instance: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    lambda0: f64,
    /// Anchor point for the approach generator, comma separated.
    #[arg(long)]
    anchor: Option<String>,
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug, Serialize)]
struct ScoreArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Instance name recorded in the report.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    tail: f64,
    #[arg(long, default_value_t = 1e-2)]
    tol_f: f64,
    #[arg(long, default_value_t = 1e-2)]
    tol_g: f64,
    #[arg(long, default_value_t = 1e-2)]
    tol_dist: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Numeric,
    Analytic,
}

#[derive(Args, Debug, Serialize)]
struct DualSweepArgs {
    #[arg(long)]
    instance: String,
    /// Comma separated values or `geometric:l0,rho,k`.
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Numeric)]
    mode: ModeArg,
    #[arg(long, default_value_t = core::DEFAULT_GAP_TOLERANCE)]
    gap_tol: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug, Serialize)]
struct DiagnoseArgs {
    #[arg(long)]
    instance: String,
    /// JSONL trace for the trace-based checks.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    condition1: bool,
    #[arg(long, default_value_t = defaults::CONDITION1_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0.1)]
    tail: f64,
    #[arg(long)]
    compactness: bool,
    #[arg(long, default_value_t = defaults::COMPACTNESS_RADIUS)]
    radius: f64,
    #[arg(long, default_value_t = defaults::COMPACTNESS_DIRS)]
    dirs: usize,
    #[arg(long)]
    error_bound: bool,
    #[arg(long, default_value_t = defaults::ERROR_BOUND_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = defaults::SAMPLE_RADIUS)]
    sample_radius: f64,
    #[arg(long)]
    wellposedness: bool,
    /// lp | generalized | strong_generalized
    #[arg(long, default_value = "generalized")]
    notion: String,
    #[arg(long, default_value_t = 1e-2)]
    cluster_tol: f64,
    /// Flag iterates with f < f* - tol.
    #[arg(long)]
    superoptimality: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct OracleCArgs {
    #[arg(long)]
    instance: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Band half-width (default: half the smallest grid spacing).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = defaults::C_ORACLE_RADIUS)]
    radius: f64,
    /// Grid points per dimension.
    #[arg(long, default_value_t = defaults::C_ORACLE_GRID)]
    grid: usize,
}

#[derive(Args, Debug, Serialize)]
struct ForcingArgs {
    #[arg(long)]
    instance: String,
    #[arg(long, default_value_t = defaults::FORCING_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = defaults::FORCING_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = defaults::C_ORACLE_RADIUS)]
    radius: f64,
    #[arg(long, default_value_t = defaults::FORCING_GRID)]
    grid: usize,
    #[arg(long, default_value_t = defaults::SAMPLE_RADIUS)]
    sample_radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct DichotomyArgs {
    #[arg(long)]
    instance: String,
    /// Exit with status 3 when metadata contradicts the empirical outcome.
    #[arg(long)]
    assert: bool,
    #[arg(long)]
    t_adversarial: Option<u64>,
    #[arg(long)]
    t_battery: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

/// What a command produced, for the manifest.
struct Outcome {
    instance: String,
    seed: u64,
    config: Value,
    outputs: Vec<String>,
    assert_failed: bool,
}

impl Outcome {
    fn new(instance: &str, seed: u64, config: Value) -> Self {
        Outcome {
            instance: instance.into(),
            seed,
            config,
            outputs: vec![],
            assert_failed: false,
        }
    }
}

struct Ctx {
    out: PathBuf,
    format: Format,
}

impl Ctx {
    fn ensure_dir(&self) -> anyhow::Result<()> {
        fs::create_dir_all(&self.out)
            .map_err(Error::from)
            .with_context(|| format!("creating {}", self.out.display()))
    }

    fn write(&self, outcome: &mut Outcome, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        self.ensure_dir()?;
        let path = self.out.join(name);
        fs::write(&path, bytes)
            .map_err(Error::from)
            .with_context(|| format!("writing {}", path.display()))?;
        outcome.outputs.push(name.to_string());
        Ok(())
    }

    fn write_trace(
        &self,
        outcome: &mut Outcome,
        trace: &GuaranteeTrace,
        csv: bool,
    ) -> anyhow::Result<()> {
        self.write(outcome, "trace.jsonl", trace.to_jsonl_string().as_bytes())?;
        if csv {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            self.write(outcome, "trace.csv", &buf)?;
        }
        Ok(())
    }

    /// Writes `<name>.json` (and `<name>.md` for markdown) and prints the report.
    fn emit(&self, outcome: &mut Outcome, name: &str, doc: ReportDocument) -> anyhow::Result<()> {
        let json = render_report(&doc, ReportFormat::Json)?;
        self.write(outcome, &format!("{name}.json"), json.as_bytes())?;
        match self.format {
            Format::Json => print!("{json}"),
            Format::Markdown => {
                let md = render_report(&doc, ReportFormat::Markdown)?;
                self.write(outcome, &format!("{name}.md"), md.as_bytes())?;
                print!("{md}");
            }
        }
        Ok(())
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn cmd_catalog(action: &CatalogAction, format: Format) -> anyhow::Result<()> {
    match action {
        CatalogAction::List => {
            for name in catalog_names() {
                println!("{name}");
            }
        }
        CatalogAction::Show { name } => {
            let inst = catalog_get(name)?;
            let doc = json!({ "instance": inst.metadata_json(), "defaults": defaults::table() });
            let text = serde_json::to_string_pretty(&doc)?;
            match format {
                Format::Json => println!("{text}"),
                Format::Markdown => println!("# {name}\n\n```json\n{text}\n```"),
            }
        }
    }
    Ok(())
}

fn cmd_run(ctx: &Ctx, a: &RunArgs) -> anyhow::Result<Outcome> {
    let inst = catalog_get(&a.instance)?;
    let init = a.init.as_deref().map(parse_point).transpose()?;
    let mut cfg = a
        .solver
        .resolve(preferred_config(&inst, SolverConfig::default().max_iters))?;
    cfg.seed = a.seed;
    let mut out = Outcome::new(
        &inst.name,
        a.seed,
        json!({ "args": to_value(a), "solver": to_value(&cfg) }),
    );
    match a.lambda {
        Some(lambda) => {
            let r = minimize_penalized(&inst, lambda, &cfg, init.as_ref())?;
            let doc =
                json!({ "instance": inst.name, "lambda": lambda, "config": cfg, "result": r });
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            ctx.write(&mut out, "solve.json", text.as_bytes())?;
            print!("{text}");
        }
        None => {
            let sched = RegularizationSchedule::new(a.sigma0, a.power)?;
            let trace = iterative_regularization(&inst, &sched, a.outer, &cfg, init.as_ref())?;
            ctx.write_trace(&mut out, &trace, a.csv)?;
            print_trace_summary(ctx, &trace);
        }
    }
    Ok(out)
}

fn print_trace_summary(ctx: &Ctx, trace: &GuaranteeTrace) {
    let last = trace.records.last().expect("nonempty trace");
    let summary = json!({
        "instance": trace.instance_name,
        "generator": trace.generator,
        "records": trace.records.len(),
        "last": last,
        "path": ctx.out.join("trace.jsonl"),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).unwrap_or_default()
    );
}

fn cmd_sequence(ctx: &Ctx, a: &SequenceArgs) -> anyhow::Result<Outcome> {
    let default_instance = match a.generator {
        Generator::Example1 | Generator::Adv1 => "counterexample1",
        Generator::Example2 => "counterexample2",
        Generator::Adv2 => "infinite_gap",
        Generator::Approach => "minnorm_ls",
    };
    let name = a
        .instance
        .clone()
        .unwrap_or_else(|| default_instance.to_string());
    let fixed = match a.generator {
        Generator::Example1 => Some("counterexample1"),
        Generator::Example2 => Some("counterexample2"),
        _ => None,
    };
    if let Some(f) = fixed.filter(|f| *f != name) {
        let g = a
            .generator
            .to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default();
        return Err(Error::Config(format!("generator {g} is defined on `{f}` only")).into());
    }
    let inst = catalog_get(&name)?;
    let cfg = a
        .solver
        .resolve(preferred_config(&inst, SolverConfig::default().max_iters))?;
    let trace = match a.generator {
        Generator::Example1 => example1_sequence(a.t)?,
        Generator::Example2 => example2_sequence(a.t)?,
        Generator::Adv1 => adversarial_case1(&inst, a.t, a.lambda0, &cfg)?,
        Generator::Adv2 => adversarial_case2(&inst, a.t)?,
        Generator::Approach => {
            let anchor = match &a.anchor {
                Some(s) => parse_point(s)?,
                None => inst.meta.reference_init.clone(),
            };
            approach_sequence(&inst, &anchor, a.t)?
        }
    };
    let mut out = Outcome::new(
        &inst.name,
        cfg.seed,
        json!({ "args": to_value(a), "solver": to_value(&cfg) }),
    );
    ctx.write_trace(&mut out, &trace, a.csv)?;
    print_trace_summary(ctx, &trace);
    Ok(out)
}

fn cmd_score(ctx: &Ctx, a: &ScoreArgs) -> anyhow::Result<Outcome> {
    let params = ScoreParams::new(a.tail, a.tol_f, a.tol_g, a.tol_dist)?;
    let trace = GuaranteeTrace::load_jsonl(&a.trace)
        .with_context(|| format!("reading {}", a.trace.display()))?;
    let instance = a.instance.clone().unwrap_or(trace.instance_name.clone());
    let flags = superoptimality_flags(&trace, params.tol_f);
    let report = ScoreReport {
        instance: instance.clone(),
        generator: trace.generator.clone(),
        params,
        score: score_trace(&trace, &params),
        superoptimal_count: flags.len(),
        first_superoptimal_t: flags.first().copied(),
    };
    let mut out = Outcome::new(&instance, 0, to_value(a));
    let doc =
        ReportDocument::new(Report::Score(report)).with_files(vec![a.trace.display().to_string()]);
    ctx.emit(&mut out, "score", doc)?;
    Ok(out)
}

fn cmd_dual_sweep(ctx: &Ctx, a: &DualSweepArgs) -> anyhow::Result<Outcome> {
    let inst = catalog_get(&a.instance)?;
    let lambdas = match &a.lambdas {
        Some(s) => parse_schedule(s)?,
        None => core::default_schedule(),
    };
    let cfg = a
        .solver
        .resolve(preferred_config(&inst, defaults::DUAL_MAX_ITERS))?;
    let mode = match a.mode {
        ModeArg::Numeric => DualMode::Numeric,
        ModeArg::Analytic => DualMode::Analytic,
    };
    let r = sweep_dual(&inst, &lambdas, &cfg, mode, a.gap_tol)?;
    let mut out = Outcome::new(
        &inst.name,
        cfg.seed,
        json!({ "args": to_value(a), "solver": to_value(&cfg) }),
    );
    ctx.emit(
        &mut out,
        "dual_sweep",
        ReportDocument::new(Report::DualSweep(r)),
    )?;
    Ok(out)
}

fn cmd_diagnose(ctx: &Ctx, a: &DiagnoseArgs) -> anyhow::Result<Outcome> {
    let inst = catalog_get(&a.instance)?;
    let trace = a
        .trace
        .as_ref()
        .map(|p| GuaranteeTrace::load_jsonl(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let need_trace = |flag: &str| -> anyhow::Result<&GuaranteeTrace> {
        trace
            .as_ref()
            .ok_or_else(|| anyhow!(Error::Config(format!("--{flag} needs --trace"))))
    };
    let mut sections = vec![];
    if a.condition1 {
        sections.push(DiagnosticSection::Condition1(check_condition1(
            &inst,
            need_trace("condition1")?,
            a.tol,
            a.tail,
        )?));
    }
    if a.error_bound {
        sections.push(DiagnosticSection::ErrorBound(fit_error_bound(
            &inst,
            a.samples,
            a.sample_radius,
            a.seed,
        )?));
    }
    if a.compactness {
        sections.push(DiagnosticSection::Compactness(probe_compactness(
            &inst, a.dirs, a.radius, a.seed,
        )?));
    }
    if a.wellposedness {
        let params = WellposednessParams {
            notion: WellposednessNotion::parse(&a.notion)?,
            cluster_tol: a.cluster_tol,
            premise: ScoreParams {
                tail_fraction: a.tail,
                ..ScoreParams::default()
            },
        };
        sections.push(DiagnosticSection::Wellposedness(classify_wellposedness(
            &inst,
            need_trace("wellposedness")?,
            &params,
        )?));
    }
    if a.superoptimality {
        let flags = superoptimality_flags(need_trace("superoptimality")?, defaults::SUPEROPT_TOL);
        sections.push(DiagnosticSection::Superoptimality {
            tol: defaults::SUPEROPT_TOL,
            count: flags.len(),
            first_t: flags.first().copied(),
        });
    }
    let report = DiagnosticsReport {
        instance: inst.name.clone(),
        trace: a.trace.as_ref().map(|p| p.display().to_string()),
        sections,
    };
    let mut out = Outcome::new(&inst.name, a.seed, to_value(a));
    let files = a.trace.iter().map(|p| p.display().to_string()).collect();
    ctx.emit(
        &mut out,
        "diagnostics",
        ReportDocument::new(Report::Diagnostics(report)).with_files(files),
    )?;
    Ok(out)
}

fn cmd_oracle_c(ctx: &Ctx, a: &OracleCArgs) -> anyhow::Result<Outcome> {
    let inst = catalog_get(&a.instance)?;
    let r = c_oracle(&inst, a.alpha, a.beta, a.delta, a.radius, a.grid)?;
    let mut out = Outcome::new(&inst.name, 0, to_value(a));
    ctx.emit(
        &mut out,
        "c_oracle",
        ReportDocument::new(Report::COracle(r)),
    )?;
    Ok(out)
}

fn cmd_forcing(ctx: &Ctx, a: &ForcingArgs) -> anyhow::Result<Outcome> {
    let inst = catalog_get(&a.instance)?;
    let cfg = ForcingConfig {
        delta: a.delta,
        grid_radius: a.radius,
        grid_points: a.grid,
        sample_radius: a.sample_radius,
        seed: a.seed,
    };
    let r = check_forcing_inequality(&inst, a.samples, &cfg)?;
    let mut out = Outcome::new(&inst.name, a.seed, to_value(a));
    ctx.emit(&mut out, "forcing", ReportDocument::new(Report::Forcing(r)))?;
    Ok(out)
}

fn cmd_dichotomy(ctx: &Ctx, a: &DichotomyArgs) -> anyhow::Result<Outcome> {
    let inst = catalog_get(&a.instance)?;
    let cfg = a
        .solver
        .resolve(preferred_config(&inst, SolverConfig::default().max_iters))?;
    let mut params = DichotomyParams {
        seed: a.seed,
        ..DichotomyParams::default()
    };
    if let Some(t) = a.t_adversarial {
        params.t_adversarial = t;
    }
    if let Some(t) = a.t_battery {
        params.t_battery = t;
    }
    let r = duality_dichotomy_report(&inst, &cfg, &params)?;
    let failed = r.verdict == DichotomyVerdict::Contradiction;
    let mut out = Outcome::new(
        &inst.name,
        a.seed,
        json!({ "args": to_value(a), "solver": to_value(&cfg), "params": to_value(&params) }),
    );
    ctx.emit(
        &mut out,
        "dichotomy",
        ReportDocument::new(Report::Dichotomy(r)),
    )?;
    out.assert_failed = a.assert && failed;
    if out.assert_failed {
        eprintln!(
            "assertion failed: metadata of `{}` contradicts the empirical dichotomy",
            inst.name
        );
    }
    Ok(out)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Catalog { .. } => "catalog",
        Command::Run(_) => "run",
        Command::Sequence(_) => "sequence",
        Command::Score(_) => "score",
        Command::DualSweep(_) => "dual-sweep",
        Command::Diagnose(_) => "diagnose",
        Command::OracleC(_) => "oracle-c",
        Command::Forcing(_) => "forcing",
        Command::Dichotomy(_) => "dichotomy",
        Command::Replay(_) => "replay",
    }
}

/// Runs one output-producing command and writes its manifest.
fn execute(ctx: &Ctx, command: &Command, argv: &[String]) -> anyhow::Result<bool> {
    let start = Instant::now();
    let outcome = match command {
        Command::Run(a) => cmd_run(ctx, a)?,
        Command::Sequence(a) => cmd_sequence(ctx, a)?,
        Command::Score(a) => cmd_score(ctx, a)?,
        Command::DualSweep(a) => cmd_dual_sweep(ctx, a)?,
        Command::Diagnose(a) => cmd_diagnose(ctx, a)?,
        Command::OracleC(a) => cmd_oracle_c(ctx, a)?,
        Command::Forcing(a) => cmd_forcing(ctx, a)?,
        Command::Dichotomy(a) => cmd_dichotomy(ctx, a)?,
        Command::Catalog { .. } | Command::Replay(_) => unreachable!("handled by caller"),
    };
    let mut manifest = RunManifest::new(
        command_name(command),
        &outcome.instance,
        &outcome.config,
        outcome.seed,
    )?;
    manifest.outputs = outcome.outputs;
    manifest.wall_time_ms = start.elapsed().as_millis() as u64;
    manifest.argv = argv.to_vec();
    ctx.ensure_dir()?;
    manifest.write(&ctx.out.join("manifest.json"))?;
    Ok(!outcome.assert_failed)
}

fn cmd_replay(ctx: &Ctx, a: &ReplayArgs) -> anyhow::Result<bool> {
    let manifest = RunManifest::load(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    if manifest.tool_version != core::TOOL_VERSION {
        return Err(Error::VersionMismatch {
            found: manifest.tool_version,
            expected: core::TOOL_VERSION.into(),
        }
        .into());
    }
    let original_dir = a.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let same_dir = match (fs::canonicalize(&original_dir), fs::canonicalize(&ctx.out)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same_dir {
        return Err(Error::Config(
            "replay needs an --out directory different from the original run".into(),
        )
        .into());
    }
    let cli = Cli::try_parse_from(
        std::iter::once("bilevel".to_string()).chain(manifest.argv.iter().cloned()),
    )
    .map_err(|e| Error::Config(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Catalog { .. } | Command::Replay(_)) {
        return Err(Error::Config("manifest does not record a replayable command".into()).into());
    }
    let inner = Ctx {
        out: ctx.out.clone(),
        format: cli.format,
    };
    execute(&inner, &cli.command, &manifest.argv)?;

    let mut identical = true;
    let mut lines = vec![];
    for name in &manifest.outputs {
        let a_bytes = fs::read(original_dir.join(name)).map_err(Error::from)?;
        let b_bytes = fs::read(ctx.out.join(name)).map_err(Error::from)?;
        let same = a_bytes == b_bytes;
        identical &= same;
        lines.push(json!({ "file": name, "identical": same }));
    }
    eprintln!(
        "{}",
        serde_json::to_string_pretty(&json!({ "replay": lines, "identical": identical }))?
    );
    Ok(identical)
}

/// Context messages followed by the root cause, skipping causes already
/// quoted by the message before them.
fn error_chain(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = vec![];
    for cause in err.chain() {
        let msg = cause.to_string();
        if !parts.last().is_some_and(|p| p.contains(&msg)) {
            parts.push(msg);
        }
    }
    parts.join(": ")
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => EXIT_CONFIG,
        Some(_) => EXIT_NUMERIC,
        None => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let ctx = Ctx {
        out: cli.out.clone(),
        format: cli.format,
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match &cli.command {
        Command::Catalog { action } => cmd_catalog(action, cli.format).map(|_| true),
        Command::Replay(a) => cmd_replay(&ctx, a),
        other => execute(&ctx, other, &argv),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERT),
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
