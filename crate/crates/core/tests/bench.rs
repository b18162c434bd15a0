mod common;

use common::*;
use faer::Mat;
use stgrb_core::assembly::{HyperSettings, Lifting};
use stgrb_core::bench::{
    build_offline, field_errors, format_metrics_csv, relative_error, run_campaign, run_windowed, solve_windows, validate_invariants, FieldTolerances,
    Method,
};
use stgrb_core::fom::{generate_operators, InitialState};
use stgrb_core::solvers::{reconstruct_space_time, NewtonConfig, StGrbSolver};

/// `sqrt(eᵀ X^st e / rᵀ X^st r)` with the block-diagonal space-time matrix
/// assembled densely.
fn dense_st_error(a: &Mat<f64>, b: &Mat<f64>, x: &stgrb_core::linalg::CsrMatrix) -> f64 {
    let (n, nt) = (b.nrows(), b.ncols());
    let xd = x.to_dense();
    let big = Mat::from_fn(n * nt, n * nt, |i, j| if i / n == j / n { xd[(i % n, j % n)] } else { 0.0 });
    let stack = |m: &Mat<f64>| Mat::from_fn(n * nt, 1, |i, _| m[(i % n, i / n)]);
    let e = stack(&(a - b));
    let r = stack(b);
    let q = |v: &Mat<f64>| (v.transpose() * &big * v)[(0, 0)];
    (q(&e) / q(&r)).sqrt()
}

#[test]
fn space_time_error_matches_dense_norm() {
    let pipe = PipelineSpec::small(1e-2).build();
    let reference = &pipe.train.trajectories[0];
    let w = stgrb_core::solvers::project_trajectory(&pipe.model, &pipe.ops, reference, false).unwrap();
    let rec = reconstruct_space_time(&pipe.model, &w, 0.0, None, None).unwrap();
    assert!(pipe.ops.n_u() * reference.u.ncols() <= 5000);
    let e = field_errors(&rec, reference, &pipe.ops).unwrap();
    for (got, a, b, x) in [
        (e.u.unwrap(), &rec.u, &reference.u, &pipe.ops.norm_u),
        (e.p.unwrap(), &rec.p, &reference.p, &pipe.ops.norm_p),
        (e.d.unwrap(), &rec.d, &reference.d, &pipe.ops.norm_d),
    ] {
        let oracle = dense_st_error(a, b, x);
        assert!((got - oracle).abs() <= 1e-12 * oracle.max(1e-300), "{got:e} vs {oracle:e}");
    }
    let twice = Mat::from_fn(reference.u.nrows(), reference.u.ncols(), |i, j| 2.0 * reference.u[(i, j)]);
    let one = relative_error(twice.as_ref(), reference.u.as_ref(), Some(&pipe.ops.norm_u)).unwrap().unwrap();
    assert!((one - 1.0).abs() < 1e-14);
}

#[test]
fn offline_only_campaign_reports_sizes_without_errors() {
    let ops = generate_operators(&small_config(21)).unwrap();
    let mut cfg = small_campaign(1e-3);
    cfg.n_test = 0;
    let table = run_campaign(&ops, &cfg).unwrap();
    assert_eq!(table.len(), 2);
    for r in &table {
        assert!(r.n_u_space > 0 && r.n_p_space > 0);
        assert!(r.offline_time > 0.0 && r.snapshot_time > 0.0);
        assert_eq!(r.tests, 0);
        assert!(r.err_u.is_none() && r.err_p.is_none() && r.online_time.is_none() && r.speedup.is_none());
    }
    assert_eq!(table[1].n_u_time, cfg.n_steps);
    assert!(table[0].reduction_factor > table[1].reduction_factor);
}

#[test]
fn tight_tolerances_reproduce_training_solutions() {
    let ops = generate_operators(&small_config(21)).unwrap();
    let mut cfg = small_campaign(1e-12);
    cfg.n_train = 4;
    cfg.n_test = 4;
    cfg.test_seed = cfg.train_seed;
    cfg.ranks = vec![HyperSettings {
        include_supremizers: true,
        ..Default::default()
    }];
    cfg.newton = NewtonConfig {
        tol: 1e-13,
        max_iters: 30,
        ..Default::default()
    };
    for r in run_campaign(&ops, &cfg).unwrap() {
        assert_eq!(r.failures, 0);
        assert!(r.err_u.unwrap() <= 1e-8, "{}: E_u {:e}", r.method.name(), r.err_u.unwrap());
        assert!(r.err_p.unwrap() <= 1e-8, "{}: E_p {:e}", r.method.name(), r.err_p.unwrap());
    }
}

#[test]
fn campaigns_are_deterministic_and_normalized_errors_are_exact() {
    let ops = generate_operators(&small_config(21)).unwrap();
    let mut cfg = small_campaign(1e-3);
    cfg.tolerances = vec![FieldTolerances::uniform(1e-2), FieldTolerances::tight_multipliers(1e-3)];
    let a = run_campaign(&ops, &cfg).unwrap();
    let b = run_campaign(&ops, &cfg).unwrap();
    assert_eq!(a.len(), 4);
    for (x, y) in a.iter().zip(&b) {
        assert!(x.same_numbers(y));
        assert_eq!(x.err_u_rel_eps, Some(x.err_u.unwrap() / x.eps_u));
        assert_eq!(x.err_p_rel_eps, Some(x.err_p.unwrap() / x.eps_p));
        let rf = match x.method {
            Method::StGrb => x.fom_dofs as f64 / x.rom_dofs as f64,
            Method::Srb => x.fom_dofs as f64 / ((x.n_u_space + x.n_p_space + x.n_lambda_space) * cfg.n_steps) as f64,
        };
        assert_eq!(x.reduction_factor, rf);
        assert!(x.err_u.unwrap() >= 0.0 && x.err_p.unwrap() >= 0.0 && x.err_d.unwrap() >= 0.0);
    }
    let strip = |t: &[stgrb_core::bench::MetricsRecord]| {
        let t: Vec<_> = t
            .iter()
            .map(|r| stgrb_core::bench::MetricsRecord {
                snapshot_time: 0.0,
                offline_time: 0.0,
                fom_time: None,
                online_time: None,
                speedup: None,
                ..r.clone()
            })
            .collect();
        format_metrics_csv(&t).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn single_window_equals_plain_lifted_solve() {
    let ops = generate_operators(&small_config(21)).unwrap();
    let mut cfg = small_campaign(1e-3);
    cfg.lifting = true;
    let grid = cfg.grid();
    let train = stgrb_core::fom::generate_snapshots(
        &ops,
        &cfg.scheme(),
        &grid,
        &cfg.waveform,
        &cfg.train_params().unwrap(),
        &InitialState::zero(&ops, 2),
        &cfg.fom_newton,
        cfg.exec,
    )
    .unwrap();
    let off = build_offline(&ops, &train, &cfg.tolerances[0], &cfg.ranks[0], &cfg).unwrap();
    let p = default_param();
    let ic = InitialState::from_trajectory_end(&train.trajectories[1], 2);
    let run = solve_windows(&ops, &off.model, &cfg, &p, &ic, 1, std::slice::from_ref(&off.store)).unwrap();
    let lifting = Lifting::new(&ops, &off.model, &ic).unwrap();
    let guess = off.store.predict(&p).unwrap();
    let sol = StGrbSolver::new(&off.model, cfg.newton).unwrap().solve(&p, &cfg.waveform, 0.0, Some(&lifting), Some(&guess)).unwrap();
    let direct = reconstruct_space_time(&off.model, &sol.w, 0.0, Some(&ic), None).unwrap();
    assert_eq!(run.windows[0].u, direct.u);
    assert_eq!(run.windows[0].p, direct.p);
    assert_eq!(run.windows[0].d, direct.d);
    assert_eq!(run.windows[0].initial, ic);
    assert!(run.handoff_exact);
}

#[test]
fn windowed_run_hands_off_exactly() {
    let ops = generate_operators(&small_config(21)).unwrap();
    let mut cfg = small_campaign(1e-3);
    cfg.n_train = 6;
    cfg.n_test = 2;
    let report = run_windowed(&ops, &cfg, 2, false).unwrap();
    assert!(report.handoff_exact);
    assert_eq!(report.per_cycle.len(), 2);
    assert!(report.global.u.unwrap() < 0.5);
    let mut bad = cfg.clone();
    bad.waveform = stgrb_core::fom::Waveform::Periodic { period: 0.3 };
    assert!(run_windowed(&ops, &bad, 2, false).is_err());
}

#[test]
fn invariant_suite_passes_on_a_synthetic_instance() {
    let ops = generate_operators(&small_config(21)).unwrap();
    let checks = validate_invariants(&ops, &small_campaign(1e-3)).unwrap();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert!(checks.len() >= 10);
}
