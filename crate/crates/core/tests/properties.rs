use bilevel_core::*;
use proptest::prelude::*;

fn instance_strategy() -> impl Strategy<Value = ProblemInstance> {
    prop::sample::select(CATALOG_NAMES.to_vec()).prop_map(|n| catalog_get(n).unwrap())
}

fn rel_tol(vals: &[f64]) -> f64 {
    1e-9 * (1.0 + vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn convexity_and_subgradient_inequality(
        inst in instance_strategy(),
        seed in any::<u64>(),
        radius in 0.1..50.0f64,
        theta in 0.0..=1.0f64,
    ) {
        let pts = sample_feasible(&inst, 2, radius, seed);
        let (x, y) = (&pts[0], &pts[1]);
        let z = x.blend(theta, y);
        for func in [&inst.f, &inst.g] {
            let (fx, fy, fz) = (func.eval(x), func.eval(y), func.eval(&z));
            let chord = theta * fx + (1.0 - theta) * fy;
            prop_assert!(fz <= chord + rel_tol(&[fx, fy, fz]), "{}: {fz} > {chord}", func.label());
            let lin = fx + func.subgradient(x).dot(&y.sub(x));
            prop_assert!(fy >= lin - rel_tol(&[fx, fy, lin]), "{}: {fy} < {lin}", func.label());
        }
    }
}

proptest! {
    #[test]
    fn projection_idempotent_and_nonexpansive(
        inst in instance_strategy(),
        a in prop::collection::vec(-1e3..1e3f64, 3),
        b in prop::collection::vec(-1e3..1e3f64, 3),
    ) {
        let n = inst.dim();
        let (x, y) = (Point::new(a[..n].to_vec()), Point::new(b[..n].to_vec()));
        let (px, py) = (inst.set.project(&x), inst.set.project(&y));
        prop_assert_eq!(inst.set.project(&px), px.clone());
        prop_assert!(inst.set.contains(&px, MEMBERSHIP_TOL));
        prop_assert!(px.dist(&py) <= x.dist(&y) * (1.0 + 1e-12));
    }

    #[test]
    fn analytic_dual_is_monotone(inst in instance_strategy(), l1 in 0.0..1e4f64, dl in 0.0..1e4f64) {
        if let Some(q) = &inst.meta.dual_value {
            prop_assert!(q.at(l1) <= q.at(l1 + dl));
        }
    }

    #[test]
    fn isotonize_is_nondecreasing_upper_envelope(v in prop::collection::vec(-10.0..10.0f64, 1..30)) {
        let vals: Vec<ExtReal> = v.iter().map(|&x| ExtReal::Finite(x)).collect();
        let iso = isotonize(&vals);
        prop_assert!(iso.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(iso.iter().zip(&vals).all(|(a, b)| a >= b));
        prop_assert_eq!(isotonize(&iso), iso.clone());
    }

    #[test]
    fn score_implication_and_tolerance_monotonicity(
        fs in prop::collection::vec(-0.05..0.05f64, 5..60),
        gs in prop::collection::vec(0.0..0.05f64, 5..60),
        tail in 0.05..1.0f64,
        tol in 1e-3..0.05f64,
        grow in 1.0..10.0f64,
    ) {
        let n = fs.len().min(gs.len());
        let recs = (0..n)
            .map(|i| TraceRecord {
                t: i as u64 + 1,
                x: Point::from([0.0]),
                f: fs[i],
                g: gs[i],
                r_f: fs[i],
                r_g: gs[i],
                dist_xg: None,
                dist_xstar: Some(gs[i]),
            })
            .collect();
        let tr = GuaranteeTrace::new("synthetic", "random", recs).unwrap();
        let tight = score_trace(&tr, &ScoreParams::new(tail, tol, tol, tol).unwrap());
        let loose = score_trace(&tr, &ScoreParams::new(tail, tol * grow, tol * grow, tol * grow).unwrap());
        prop_assert!(!tight.satisfies_7 || tight.satisfies_6);
        prop_assert!(!loose.satisfies_7 || loose.satisfies_6);
        prop_assert!(!tight.satisfies_6 || loose.satisfies_6);
        prop_assert!(!tight.satisfies_7 || loose.satisfies_7);
        prop_assert!(!tight.satisfies_8.unwrap() || loose.satisfies_8.unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // refining the spacing (G -> 2G - 1) or doubling the radius with the
    // spacing held fixed (R, G -> 2R, 2G - 1) only adds grid points
    #[test]
    fn c_oracle_monotone_under_enlargement(
        name in prop::sample::select(vec!["counterexample1", "minnorm_ls", "infinite_gap", "counterexample2"]),
        alpha in 0.0..2.0f64,
        beta in 0.0..1.0f64,
        radius in 0.5..4.0f64,
        half in 3usize..8,
    ) {
        let inst = catalog_get(name).unwrap();
        let g = 2 * half + 1;
        let delta = Some(0.3);
        let base = c_oracle(&inst, alpha, beta, delta, radius, g).unwrap();
        let finer = c_oracle(&inst, alpha, beta, delta, radius, 2 * g - 1).unwrap();
        let wider = c_oracle(&inst, alpha, beta, delta, 2.0 * radius, 2 * g - 1).unwrap();
        prop_assert!(finer.c_estimate <= base.c_estimate, "{finer:?} vs {base:?}");
        prop_assert!(wider.c_estimate <= base.c_estimate, "{wider:?} vs {base:?}");
    }

    #[test]
    fn condition1_verdict_stable_under_subsampling(
        gen in 0usize..3,
        t_max in 200u64..3000,
        tol in 1e-3..0.1f64,
    ) {
        let (inst, trace) = match gen {
            0 => (catalog_get("counterexample1").unwrap(), example1_sequence(t_max).unwrap()),
            1 => (catalog_get("counterexample2").unwrap(), example2_sequence(t_max).unwrap()),
            _ => {
                let ls = catalog_get("minnorm_ls").unwrap();
                let tr = approach_sequence(&ls, &Point::from([3.0, -2.0]), t_max).unwrap();
                (ls, tr)
            }
        };
        let verdicts: Vec<_> = [1, 2, 5]
            .iter()
            .map(|&s| check_condition1(&inst, &trace.subsample(s), tol, 0.1).unwrap().verdict)
            .collect();
        prop_assert!(verdicts.iter().all(|v| *v == verdicts[0]), "{verdicts:?}");
    }

    #[test]
    fn compactness_witnesses_reverify(
        name in prop::sample::select(CATALOG_NAMES.to_vec()),
        seed in any::<u64>(),
        radius in 10.0..1e5f64,
    ) {
        let inst = catalog_get(name).unwrap();
        let p = probe_compactness(&inst, 16, radius, seed).unwrap();
        if let Some(d) = &p.witness_direction {
            let vals = probe_ray(&inst, &p.origin, d, radius);
            prop_assert_eq!(vals.len(), 100);
            prop_assert!(vals.iter().all(|&h| h <= 1.0));
            prop_assert!(inst.set.contains(&p.origin.axpy(radius, d), MEMBERSHIP_TOL));
        }
        prop_assert_eq!(p.verdict == CompactnessVerdict::RefutedWithWitness, inst.meta.xstar_compact == Some(false));
    }

    #[test]
    fn seeded_runs_are_deterministic(seed in any::<u64>(), t_max in 2u64..300) {
        let ls = catalog_get("minnorm_ls").unwrap();
        assert_eq!(sample_feasible(&ls, 8, 2.0, seed), sample_feasible(&ls, 8, 2.0, seed));
        let cfg = SolverConfig { seed, ..SolverConfig::smooth(200) };
        let sched = RegularizationSchedule::new(1.0, 0.5).unwrap();
        let a = iterative_regularization(&ls, &sched, t_max, &cfg, None).unwrap();
        let b = iterative_regularization(&ls, &sched, t_max, &cfg, None).unwrap();
        prop_assert_eq!(a.to_jsonl_string(), b.to_jsonl_string());
        let c2 = catalog_get("counterexample2").unwrap();
        let p1 = probe_compactness(&c2, 8, 100.0, seed).unwrap();
        let p2 = probe_compactness(&c2, 8, 100.0, seed).unwrap();
        prop_assert_eq!(p1, p2);
    }
}

#[test]
fn numeric_sweep_isotonized_is_monotone() {
    let ls = catalog_get("minnorm_ls").unwrap();
    let r = sweep_dual(
        &ls,
        &[0.5, 1.0, 2.0, 5.0, 10.0],
        &SolverConfig::diminishing(2000, 1.0),
        DualMode::Numeric,
        0.05,
    )
    .unwrap();
    assert!(r.q_isotonic.windows(2).all(|w| w[0] <= w[1]));
    assert!(r.q_isotonic.iter().zip(&r.q_estimates).all(|(a, b)| a >= b));
}

#[test]
fn jsonl_roundtrip_is_bit_exact() {
    let inst = catalog_get("infinite_gap").unwrap();
    let tr = adversarial_case2(&inst, 500).unwrap();
    let text = tr.to_jsonl_string();
    let back = GuaranteeTrace::read_jsonl(text.as_bytes(), "infinite_gap", "adv2").unwrap();
    assert_eq!(back.records, tr.records);
    assert_eq!(back.to_jsonl_string(), text);
}
