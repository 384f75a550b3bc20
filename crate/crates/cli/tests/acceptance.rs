//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bilevel_core::{
    adversarial_case2, c_oracle, catalog_all, catalog_get, default_schedule, fit_error_bound,
    probe_ray, sample_feasible, score_trace, sweep_dual, DichotomyReport, DichotomyVerdict,
    DualMode, DualSweepResult, ExtReal, GuaranteeTrace, Point, ScoreParams, SolverConfig,
    TraceRecord, CATALOG_NAMES, SIDE_GAP, SIDE_STRONG,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const EXACT_TOL: f64 = 1e-12;

const C1_BUDGET: Duration = Duration::from_secs(1);
const C1_TAIL: f64 = 0.1;

const C2_BUDGET: Duration = Duration::from_secs(30);
const C2_GAP_MIN: f64 = 0.95;
const C2_NUMERIC_ITERS: u64 = 100_000;
const C2_NUMERIC_Q1_MAX: f64 = -0.9;

const C3_BUDGET: Duration = Duration::from_secs(120);
const C3_PREMISE_TOL: f64 = 1e-2;
const C3_CONCLUSION_TOL: f64 = 2e-2;
const C3_GAP_MARGIN: f64 = 0.9;
const C3_BATTERY_MIN: usize = 5;

const C4_BUDGET: Duration = Duration::from_secs(1);
const C4_T: u64 = 100;

const C5_BUDGET: Duration = Duration::from_secs(5);
const C5_SAMPLES: usize = 500;
const C5_IDENTITY_TOL: f64 = 1e-12;
const C5_R_RANGE: (f64, f64) = (1.99, 2.01);
const C5_TAU_RANGE: (f64, f64) = (0.99, 1.01);
const C5_T: u64 = 10_000;

const C6_BUDGET: Duration = Duration::from_secs(10);
const C6_Q_TOL: f64 = 1e-3;
const C6_DSTAR_TOL: f64 = 1e-2;

const C7_BUDGET: Duration = Duration::from_secs(30);
const C7_C10: f64 = 0.5;
const C7_C10_TOL: f64 = 0.01;
const C7_SAMPLES: usize = 50;

const C8_BUDGET: Duration = Duration::from_secs(5);
const C8_RADIUS: f64 = 1e4;
const C8_DIRS: usize = 64;

const C9_BUDGET: Duration = Duration::from_secs(60);
const C9_PAIRS: usize = 1000;
const C9_CONVEXITY_TOL: f64 = 1e-9;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

struct Cli {
    dir: PathBuf,
}

impl Cli {
    fn run(&self, args: &[&str]) -> Result<(Option<i32>, String), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_bilevel"))
            .current_dir(&self.dir)
            .env_remove("BILEVEL_OUT_DIR")
            .args(args)
            .output()
            .map_err(|e| format!("spawn: {e}"))?;
        Ok((
            out.status.code(),
            String::from_utf8_lossy(&out.stdout).into_owned(),
        ))
    }

    fn ok_json(&self, args: &[&str]) -> Result<Value, String> {
        let (code, stdout) = self.run(args)?;
        ensure(
            code == Some(0),
            format!("`{}` exited with {code:?}", args.join(" ")),
        )?;
        serde_json::from_str(&stdout)
            .map_err(|e| format!("`{}`: bad JSON on stdout: {e}", args.join(" ")))
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }
}

fn num(v: &Value) -> Result<f64, String> {
    v.as_f64()
        .ok_or_else(|| format!("expected a number, got {v}"))
}

fn criterion1(cli: &Cli) -> Check {
    cli.ok_json(&[
        "--out",
        "c1",
        "sequence",
        "--generator",
        "example1",
        "--T",
        "10000",
    ])?;
    let score = cli.ok_json(&[
        "--out",
        "c1s",
        "score",
        "--trace",
        "c1/trace.jsonl",
        "--tail",
        "0.1",
    ])?;
    let s = &score["report"]["score"];
    ensure(
        s["satisfies_6"] == true && s["satisfies_7"] == false,
        format!("score {s}"),
    )?;
    let trace =
        GuaranteeTrace::load_jsonl(&cli.path("c1/trace.jsonl")).map_err(|e| e.to_string())?;
    let tail = trace.tail(C1_TAIL);
    let f_err = tail.iter().map(|r| (r.f + 1.0).abs()).fold(0.0, f64::max);
    let g_err = tail
        .iter()
        .map(|r| (r.g - 1.0 / r.t as f64).abs())
        .fold(0.0, f64::max);
    ensure(
        f_err <= EXACT_TOL && g_err <= EXACT_TOL,
        format!("tail errors f {f_err:e}, g {g_err:e}"),
    )?;
    Ok(format!(
        "satisfies_6=true satisfies_7=false; tail |f+1| <= {f_err:e}, |g-1/t| <= {g_err:e}"
    ))
}

fn criterion2(cli: &Cli) -> Check {
    let v = cli.ok_json(&[
        "--out",
        "c2a",
        "dual-sweep",
        "--instance",
        "counterexample1",
        "--lambdas",
        "1,10,100,1000",
        "--mode",
        "analytic",
    ])?;
    let r = &v["report"];
    let qs: Vec<f64> = r["q_estimates"]
        .as_array()
        .ok_or("no q_estimates")?
        .iter()
        .map(num)
        .collect::<Result<_, _>>()?;
    ensure(
        qs.iter().all(|q| (q + 1.0).abs() <= EXACT_TOL),
        format!("q = {qs:?}"),
    )?;
    ensure(
        v["verdict"] == "gap_detected",
        format!("verdict {}", v["verdict"]),
    )?;
    let gap = num(&r["gap_lower_bound"])?;
    ensure(gap >= C2_GAP_MIN, format!("gap lower bound {gap}"))?;
    let iters = C2_NUMERIC_ITERS.to_string();
    let v = cli.ok_json(&[
        "--out",
        "c2n",
        "dual-sweep",
        "--instance",
        "counterexample1",
        "--lambdas",
        "1",
        "--mode",
        "numeric",
        "--max-iters",
        &iters,
    ])?;
    let q1 = num(&v["report"]["q_estimates"][0])?;
    ensure(q1 <= C2_NUMERIC_Q1_MAX, format!("numeric q(1) = {q1}"))?;
    Ok(format!(
        "analytic q = -1 on 4 lambdas, gap_detected, gap >= {gap}; numeric q(1) = {q1:.6}"
    ))
}

fn criterion3(cli: &Cli) -> Check {
    let mut notes = vec![];
    for name in CATALOG_NAMES {
        let out = format!("c3_{name}");
        let v = cli.ok_json(&["--out", &out, "dichotomy", "--instance", name, "--assert"])?;
        let r: DichotomyReport =
            serde_json::from_value(v["report"].clone()).map_err(|e| e.to_string())?;
        ensure(
            r.params.premise_tol == C3_PREMISE_TOL && r.params.conclusion_tol == C3_CONCLUSION_TOL,
            "tolerances",
        )?;
        ensure(
            r.verdict == DichotomyVerdict::Consistent,
            format!("{name}: {:?}", r.verdict),
        )?;
        match name {
            "counterexample1" | "infinite_gap" => {
                ensure(r.side == SIDE_GAP, format!("{name}: side {}", r.side))?;
                let t = &r.traces[0];
                ensure(
                    t.premise.satisfies_6 && !t.conclusion.satisfies_7,
                    format!("{name}: scores"),
                )?;
                if name == "counterexample1" {
                    let f_star = catalog_get(name).map_err(|e| e.to_string())?.meta.f_star;
                    let margin = f_star - t.min_tail_f;
                    ensure(margin >= C3_GAP_MARGIN, format!("margin {margin}"))?;
                    notes.push(format!("{name} gap side, margin {margin}"));
                } else {
                    ensure(t.divergent, "infinite_gap tail f not divergent")?;
                    notes.push(format!(
                        "{name} gap side, divergent (min tail f {:.3})",
                        t.min_tail_f
                    ));
                }
            }
            _ => {
                ensure(r.side == SIDE_STRONG, format!("{name}: side {}", r.side))?;
                ensure(
                    r.battery_size >= C3_BATTERY_MIN,
                    format!("{name}: battery {}", r.battery_size),
                )?;
                let battery = r.traces.iter().filter(|t| t.in_battery);
                ensure(
                    battery.clone().all(|t| t.conclusion.satisfies_7),
                    format!("{name}: battery trace fails 7"),
                )?;
                ensure(
                    battery.count() == r.battery_size,
                    format!("{name}: battery count"),
                )?;
                notes.push(format!("{name} strong side, battery {}", r.battery_size));
            }
        }
    }
    Ok(notes.join("; "))
}

fn criterion4() -> Check {
    let inst = catalog_get("infinite_gap").map_err(|e| e.to_string())?;
    let z = inst.meta.divergent_z.as_ref().ok_or("no divergent_z")?;
    let tr = adversarial_case2(&inst, C4_T).map_err(|e| e.to_string())?;
    for (t, r) in (1..=C4_T).zip(&tr.records) {
        let tf = t as f64;
        let zt = z.at(t);
        let lhs = inst.f.eval(&zt) + tf * (inst.g.eval(&zt) - inst.meta.g_star);
        ensure(lhs <= -tf, format!("t={t}: f(z)+t(g(z)-g*) = {lhs}"))?;
        ensure(
            r.g - inst.meta.g_star <= 1.0 / tf.sqrt(),
            format!("t={t}: g gap {}", r.g),
        )?;
        if t >= 4 {
            ensure(r.f <= -tf.sqrt(), format!("t={t}: f = {}", r.f))?;
        }
    }
    Ok(format!(
        "all three inequalities hold for t = 1..{C4_T}; f(x_100) = {}",
        tr.records[99].f
    ))
}

fn criterion5(cli: &Cli) -> Check {
    let c2 = catalog_get("counterexample2").map_err(|e| e.to_string())?;
    let dist = c2.meta.dist_xg.as_ref().ok_or("no dist_xg")?;
    let worst = sample_feasible(&c2, C5_SAMPLES, 1.0, 5)
        .iter()
        .map(|x| (dist.at(x) - c2.g.eval(x).sqrt()).abs())
        .fold(0.0, f64::max);
    ensure(
        worst <= C5_IDENTITY_TOL,
        format!("|dist - sqrt(g)| up to {worst:e}"),
    )?;
    let fit = fit_error_bound(&c2, C5_SAMPLES, 1.0, 5).map_err(|e| e.to_string())?;
    ensure(
        (C5_R_RANGE.0..=C5_R_RANGE.1).contains(&fit.r)
            && (C5_TAU_RANGE.0..=C5_TAU_RANGE.1).contains(&fit.tau),
        format!("fit {fit:?}"),
    )?;
    let t = C5_T.to_string();
    cli.ok_json(&[
        "--out",
        "c5",
        "sequence",
        "--generator",
        "example2",
        "--T",
        &t,
    ])?;
    let score = cli.ok_json(&["--out", "c5s", "score", "--trace", "c5/trace.jsonl"])?;
    let s = &score["report"]["score"];
    ensure(
        s["satisfies_7"] == true && s["satisfies_8"] == false,
        format!("score {s}"),
    )?;
    let trace =
        GuaranteeTrace::load_jsonl(&cli.path("c5/trace.jsonl")).map_err(|e| e.to_string())?;
    ensure(
        trace.records.iter().all(|r| r.dist_xstar == Some(1.0)),
        "dist_Xstar not identically 1",
    )?;
    let d = cli.ok_json(&[
        "--out",
        "c5d",
        "diagnose",
        "--instance",
        "counterexample2",
        "--trace",
        "c5/trace.jsonl",
        "--wellposedness",
    ])?;
    let wp = &d["report"]["sections"][0]["verdict"];
    ensure(wp == "refutation_witness", format!("wellposedness {wp}"))?;
    Ok(format!(
        "|dist - sqrt g| <= {worst:e}; r = {:.6}, tau = {:.6}; satisfies_7=true satisfies_8=false; refutation_witness",
        fit.r, fit.tau
    ))
}

fn criterion6(cli: &Cli) -> Check {
    let v = cli.ok_json(&[
        "--out",
        "c6",
        "dual-sweep",
        "--instance",
        "minnorm_ls",
        "--lambdas",
        "1,10,100,1000",
        "--mode",
        "numeric",
        "--step-rule",
        "fixed_smooth",
    ])?;
    let r: DualSweepResult =
        serde_json::from_value(v["report"].clone()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (l, q) in r.lambdas.iter().zip(&r.q_estimates).take(3) {
        let q = q.finite().ok_or("non-finite q")?;
        worst = worst.max((q - l / (2.0 * (1.0 + l))).abs());
    }
    ensure(worst <= C6_Q_TOL, format!("q error {worst:e}"))?;
    ensure(
        r.q_isotonic.windows(2).all(|w| w[0] <= w[1]),
        "isotonized sequence decreases",
    )?;
    let d = r.d_star_estimate.finite().ok_or("d* not finite")?;
    ensure((d - 0.5).abs() <= C6_DSTAR_TOL, format!("d* estimate {d}"))?;
    Ok(format!(
        "max |q - l/(2(1+l))| = {worst:e} on 1,10,100; d* estimate {d:.6} at 1e3"
    ))
}

fn criterion7(cli: &Cli) -> Check {
    for inst in catalog_all() {
        let r = c_oracle(&inst, 0.0, 0.0, None, 5.0, 41).map_err(|e| e.to_string())?;
        ensure(
            r.c_estimate == ExtReal::Finite(0.0),
            format!("{}: c(0,0) = {:?}", inst.name, r.c_estimate),
        )?;
    }
    let v = cli.ok_json(&[
        "--out",
        "c7",
        "oracle-c",
        "--instance",
        "minnorm_ls",
        "--alpha",
        "1",
        "--beta",
        "0",
        "--delta",
        "1e-3",
        "--radius",
        "5",
        "--grid",
        "201",
    ])?;
    let c = num(&v["report"]["c_estimate"])?;
    ensure((c - C7_C10).abs() <= C7_C10_TOL, format!("c(1,0) = {c}"))?;
    let n = C7_SAMPLES.to_string();
    let mut counts = vec![];
    for name in ["minnorm_ls", "counterexample2"] {
        let out = format!("c7_{name}");
        let v = cli.ok_json(&[
            "--out",
            &out,
            "forcing",
            "--instance",
            name,
            "--samples",
            &n,
        ])?;
        let passed = v["report"]["passed"].as_u64().unwrap_or(0) as usize;
        ensure(
            passed == C7_SAMPLES,
            format!("{name}: {passed}/{C7_SAMPLES}"),
        )?;
        counts.push(format!("{name} {passed}/{C7_SAMPLES}"));
    }
    Ok(format!(
        "c(0,0) = 0 on all instances; minnorm c(1,0) = {c}; forcing {}",
        counts.join(", ")
    ))
}

fn criterion8(cli: &Cli) -> Check {
    let (radius, dirs) = (C8_RADIUS.to_string(), C8_DIRS.to_string());
    let mut notes = vec![];
    let mut verified = 0;
    for (name, expect) in [
        ("counterexample1", "refuted_with_witness"),
        ("counterexample2", "refuted_with_witness"),
        ("minnorm_ls", "no_witness_found"),
    ] {
        let out = format!("c8_{name}");
        let v = cli.ok_json(&[
            "--out",
            &out,
            "diagnose",
            "--instance",
            name,
            "--compactness",
            "--radius",
            &radius,
            "--dirs",
            &dirs,
        ])?;
        let sec = &v["report"]["sections"][0];
        ensure(
            sec["verdict"] == expect,
            format!("{name}: {}", sec["verdict"]),
        )?;
        if let Some(dir) = sec["witness_direction"].as_array() {
            let inst = catalog_get(name).map_err(|e| e.to_string())?;
            let d = Point::new(dir.iter().map(num).collect::<Result<_, _>>()?);
            let origin: Point =
                serde_json::from_value(sec["origin"].clone()).map_err(|e| e.to_string())?;
            let vals = probe_ray(&inst, &origin, &d, C8_RADIUS);
            ensure(
                vals.len() == 100 && vals.iter().all(|&h| h <= 1.0),
                format!("{name}: ray fails to re-verify"),
            )?;
        }
        notes.push(format!("{name} {expect}"));
        verified += usize::from(sec["witness_direction"].is_array());
    }
    ensure(verified == 2, format!("{verified} witnesses re-verified"))?;
    Ok(format!(
        "{}; {verified} witness rays re-verified",
        notes.join(", ")
    ))
}

fn criterion9(cli: &Cli) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for inst in catalog_all() {
        for _ in 0..C9_PAIRS {
            let pts = sample_feasible(&inst, 2, rng.random_range(0.1..50.0), rng.random());
            let theta: f64 = rng.random_range(0.0..=1.0);
            let (x, y) = (&pts[0], &pts[1]);
            let z = x.blend(theta, y);
            for func in [&inst.f, &inst.g] {
                let (fx, fy, fz) = (func.eval(x), func.eval(y), func.eval(&z));
                let scale = 1.0 + fx.abs().max(fy.abs()).max(fz.abs());
                ensure(
                    fz <= theta * fx + (1.0 - theta) * fy + C9_CONVEXITY_TOL * scale,
                    "convexity",
                )?;
                let lin = fx + func.subgradient(x).dot(&y.sub(x));
                ensure(
                    fy >= lin - C9_CONVEXITY_TOL * scale.max(1.0 + lin.abs()),
                    "subgradient inequality",
                )?;
            }
        }
        let n = inst.dim();
        for _ in 0..C9_PAIRS {
            let x = Point::new((0..n).map(|_| rng.random_range(-1e3..1e3)).collect());
            let y = Point::new((0..n).map(|_| rng.random_range(-1e3..1e3)).collect());
            let (px, py) = (inst.set.project(&x), inst.set.project(&y));
            ensure(inst.set.project(&px) == px, "projection not idempotent")?;
            ensure(
                px.dist(&py) <= x.dist(&y) * (1.0 + EXACT_TOL),
                "projection expands",
            )?;
        }
        if let Some(q) = &inst.meta.dual_value {
            let mut ls: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..1e4)).collect();
            ls.sort_by(f64::total_cmp);
            ensure(
                ls.windows(2).all(|w| q.at(w[0]) <= q.at(w[1])),
                "analytic q not monotone",
            )?;
        }
    }
    let ls = catalog_get("minnorm_ls").map_err(|e| e.to_string())?;
    let sweep = sweep_dual(
        &ls,
        &default_schedule(),
        &SolverConfig::diminishing(500, 1.0),
        DualMode::Numeric,
        0.05,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        sweep.q_isotonic.windows(2).all(|w| w[0] <= w[1]),
        "numeric isotonized q not monotone",
    )?;

    for _ in 0..C9_PAIRS {
        let n = rng.random_range(5..60);
        let recs = (1..=n)
            .map(|t| {
                let (f, g): (f64, f64) =
                    (rng.random_range(-0.05..0.05), rng.random_range(0.0..0.05));
                TraceRecord {
                    t,
                    x: Point::from([0.0]),
                    f,
                    g,
                    r_f: f,
                    r_g: g,
                    dist_xg: None,
                    dist_xstar: None,
                }
            })
            .collect();
        let tr = GuaranteeTrace::new("synthetic", "random", recs).map_err(|e| e.to_string())?;
        let tol = rng.random_range(1e-3..0.05);
        let v = score_trace(
            &tr,
            &ScoreParams::new(rng.random_range(0.05..1.0), tol, tol, tol)
                .map_err(|e| e.to_string())?,
        );
        ensure(!v.satisfies_7 || v.satisfies_6, "7 without 6")?;
    }

    for (name, alpha, beta) in [
        ("minnorm_ls", 1.0, 0.0),
        ("counterexample1", 0.5, 0.2),
        ("counterexample2", 0.7, 0.1),
    ] {
        let inst = catalog_get(name).map_err(|e| e.to_string())?;
        let c =
            |r: f64, g: usize| c_oracle(&inst, alpha, beta, Some(0.2), r, g).map(|o| o.c_estimate);
        let base = c(2.0, 11).map_err(|e| e.to_string())?;
        let finer = c(2.0, 21).map_err(|e| e.to_string())?;
        let wider = c(4.0, 21).map_err(|e| e.to_string())?;
        ensure(
            finer <= base && wider <= base,
            format!("{name}: c_oracle grew under enlargement"),
        )?;
    }

    cli.ok_json(&[
        "--out",
        "c9a",
        "run",
        "--instance",
        "counterexample2",
        "--outer",
        "2000",
    ])?;
    cli.ok_json(&[
        "--out",
        "c9b",
        "sequence",
        "--generator",
        "adv1",
        "--instance",
        "minnorm_ls",
        "--T",
        "200",
    ])?;
    for run in ["c9a", "c9b"] {
        let replay = format!("{run}_replay");
        let manifest = format!("{run}/manifest.json");
        let (code, _) = cli.run(&["--out", &replay, "replay", &manifest])?;
        ensure(code == Some(0), format!("replay of {run} exited {code:?}"))?;
        let a =
            std::fs::read(cli.path(&format!("{run}/trace.jsonl"))).map_err(|e| e.to_string())?;
        let b =
            std::fs::read(cli.path(&format!("{replay}/trace.jsonl"))).map_err(|e| e.to_string())?;
        ensure(a == b, format!("{run}: replayed trace differs"))?;
    }
    Ok(format!(
        "{C9_PAIRS} convexity/subgradient pairs and {C9_PAIRS} projection pairs per instance, q monotone, 7 => 6, c_oracle monotone, replays identical"
    ))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("tempdir");
    let cli = Cli {
        dir: tmp.path().to_path_buf(),
    };
    type Criterion<'a> = (u32, &'a str, Duration, Box<dyn Fn() -> Check + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            1,
            "example1 sequence reproduction",
            C1_BUDGET,
            Box::new(|| criterion1(&cli)),
        ),
        (
            2,
            "duality gap on counterexample1",
            C2_BUDGET,
            Box::new(|| criterion2(&cli)),
        ),
        (
            3,
            "strong duality dichotomy harness",
            C3_BUDGET,
            Box::new(|| criterion3(&cli)),
        ),
        (
            4,
            "d* = -inf construction on infinite_gap",
            C4_BUDGET,
            Box::new(criterion4),
        ),
        (
            5,
            "example2 sequence, error bound, ill-posedness",
            C5_BUDGET,
            Box::new(|| criterion5(&cli)),
        ),
        (
            6,
            "min-norm least squares dual curve",
            C6_BUDGET,
            Box::new(|| criterion6(&cli)),
        ),
        (
            7,
            "forcing function oracle",
            C7_BUDGET,
            Box::new(|| criterion7(&cli)),
        ),
        (
            8,
            "compactness probes",
            C8_BUDGET,
            Box::new(|| criterion8(&cli)),
        ),
        (
            9,
            "property suites",
            C9_BUDGET,
            Box::new(|| criterion9(&cli)),
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in &criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|d| {
            if elapsed <= *budget {
                Ok(d)
            } else {
                Err(format!("{d}; over budget"))
            }
        });
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d.as_str()),
            Err(e) => ("FAIL", e.as_str()),
        };
        failed += usize::from(result.is_err());
        println!(
            "criterion {id} [{tag}] {name} ({:.2} s, budget {} s): {detail}",
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
