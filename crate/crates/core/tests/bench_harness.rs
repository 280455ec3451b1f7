mod common;

use common::{dist, dot};
use fpqsm::bench::{emit, read_rows, render, run_experiment, run_experiment_detailed, Budget, ExperimentSpec, Format};
use fpqsm::problems::{Case, CobbDouglasInstance};
use fpqsm::solver::{Algorithm, StepSchedule};

fn small(case: Case, budget: Budget) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(case, 5, 4, budget, 11);
    spec.samples = 3;
    spec
}

/// `f(x) = -a0 Π x_j^a_j / (⟨c, x⟩ + c0)` on the open orthant, 0 elsewhere.
fn value_ref(inst: &CobbDouglasInstance, x: &[f64]) -> f64 {
    if x.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    let prod: f64 = x.iter().zip(&inst.a).map(|(v, a)| v.powf(*a)).product();
    -inst.a0 * prod / (dot(&inst.c, x) + inst.c0)
}

/// `(x + (1/m) Σ (P_lo x + P_hi x)/2) / 2`, projections written out by hand;
/// the gcfs operator additionally clips the average to the orthant.
fn operator_ref(inst: &CobbDouglasInstance, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut avg = vec![0.0; n];
    for con in &inst.constraints {
        let bb = dot(&con.b, &con.b);
        let s = dot(&con.b, x);
        let lo_shift = if s < con.lower { (con.lower - s) / bb } else { 0.0 };
        let hi_shift = if s > con.upper { (con.upper - s) / bb } else { 0.0 };
        for j in 0..n {
            let plo = x[j] + lo_shift * con.b[j];
            let phi = x[j] + hi_shift * con.b[j];
            avg[j] += (plo + phi) / 2.0 / inst.m as f64;
        }
    }
    if inst.case == Case::Gcfs {
        // (x + max(0, Σ_i (1/2m) P_i x)) / 2
        return x.iter().zip(&avg).map(|(a, b)| (a + b.max(0.0)) / 2.0).collect();
    }
    x.iter().zip(&avg).map(|(a, b)| (a + b) / 2.0).collect()
}

#[test]
fn same_spec_gives_identical_bytes() {
    let spec = small(Case::Bounded, Budget::MaxIter(300));
    let a = render(&run_experiment(&spec).unwrap(), Format::Csv).unwrap();
    let b = render(&run_experiment(&spec).unwrap(), Format::Csv).unwrap();
    assert_eq!(a, b);
    let j1 = render(&run_experiment(&spec).unwrap(), Format::Json).unwrap();
    let j2 = render(&run_experiment(&spec).unwrap(), Format::Json).unwrap();
    assert_eq!(j1, j2);
}

#[test]
fn rows_cover_algorithms_and_rules_in_order() {
    let spec = small(Case::Unbounded, Budget::MaxIter(50));
    let rows = run_experiment(&spec).unwrap();
    assert_eq!(rows.len(), 12);
    for (i, row) in rows.iter().enumerate() {
        let alg = if i < 6 { Algorithm::Fpqsm } else { Algorithm::Qsm };
        assert_eq!(row.algorithm, alg);
        assert_eq!(row.step, StepSchedule::standard_six()[i % 6].label());
        assert_eq!(row.aborted, 0);
    }
}

#[test]
fn gcfs_runs_only_the_fixed_point_method() {
    let spec = small(Case::Gcfs, Budget::MaxIter(50));
    let rows = run_experiment(&spec).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.algorithm == Algorithm::Fpqsm));
}

#[test]
fn metrics_match_reference_formulas() {
    for case in [Case::Unbounded, Case::Bounded, Case::Gcfs] {
        let spec = small(case, Budget::MaxIter(200));
        let inst = spec.instance().unwrap();
        for out in run_experiment_detailed(&spec).unwrap() {
            let s = out.records.len() as f64;
            let vf: f64 = out.records.iter().map(|r| value_ref(&inst, &r.best_point)).sum::<f64>() / s;
            let vd: f64 = out.records.iter().map(|r| dist(&r.best_point, &operator_ref(&inst, &r.best_point))).sum::<f64>() / s;
            let k: f64 = out.records.iter().map(|r| r.iterations as f64).sum::<f64>() / s;
            assert!((out.row.v_func - vf).abs() <= 1e-12 * (1.0 + vf.abs()), "{case}: {} vs {vf}", out.row.v_func);
            assert!((out.row.v_dist - vd).abs() <= 1e-10 * (1.0 + vd), "{case}: {} vs {vd}", out.row.v_dist);
            assert_eq!(out.row.k_avg, k);
        }
    }
}

#[test]
fn zero_iteration_budget_reports_zero_k() {
    let spec = small(Case::Bounded, Budget::MaxIter(0));
    let rows = run_experiment(&spec).unwrap();
    assert!(rows.iter().all(|r| r.k_avg == 0.0 && r.aborted == 0));
}

#[test]
fn emit_and_read_round_trip() {
    let spec = small(Case::Bounded, Budget::MaxIter(100));
    let rows = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [(Format::Csv, "rows.csv"), (Format::Json, "rows.json")] {
        let path = dir.path().join(name);
        emit(&rows, format, &path).unwrap();
        assert_eq!(read_rows(&path, format).unwrap(), rows);
    }
    let text = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "algorithm,step,k,V_func,V_dist,aborted");
}

#[test]
fn spec_json_round_trip_and_rejections() {
    let mut spec = small(Case::Bounded, Budget::Seconds(0.5));
    spec.instance = Some(spec.instance().unwrap());
    let back = ExperimentSpec::from_json(&spec.to_json().unwrap()).unwrap();
    assert_eq!(back, spec);

    let minimal = r#"{"case":"bounded","n":3,"m":2,"budget":{"max_iter":10}}"#;
    let parsed = ExperimentSpec::from_json(minimal).unwrap();
    assert_eq!(parsed.steps.len(), 6);
    assert_eq!(parsed.samples, fpqsm::bench::DEFAULT_SAMPLES);

    for bad in [
        r#"{"case":"bounded","n":3,"m":2,"budget":{"max_iter":10},"extra":1}"#,
        r#"{"case":"bounded","n":0,"m":2,"budget":{"max_iter":10}}"#,
        r#"{"case":"bounded","n":3,"m":2,"budget":{"max_iter":10},"samples":0}"#,
        r#"{"case":"bounded","n":3,"m":2,"budget":{"seconds":-1.0}}"#,
        r#"{"case":"weird","n":3,"m":2,"budget":{"max_iter":10}}"#,
    ] {
        assert!(ExperimentSpec::from_json(bad).is_err(), "{bad}");
    }
}

#[test]
fn timed_runs_respect_the_shared_budget() {
    let mut spec = ExperimentSpec::new(Case::Bounded, 10, 10, Budget::Seconds(0.05), 3);
    spec.samples = 2;
    spec.steps = vec![StepSchedule::Constant(1e-2)];
    for out in run_experiment_detailed(&spec).unwrap() {
        for r in &out.records {
            assert!(r.wall_time >= 0.05 && r.wall_time <= 0.05 * 1.05 + 0.01, "{:?}: {}", out.row.algorithm, r.wall_time);
        }
    }
}
