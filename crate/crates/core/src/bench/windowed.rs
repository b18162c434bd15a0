//! Long horizons as consecutive space-time windows. Each window is solved
//! with a lifting built from the previous window's reconstructed end state.

use super::campaign::{build_model, CampaignConfig, FieldTolerances};
use super::metrics::{average_errors, field_errors, FieldErrors};
use crate::assembly::{HyperSettings, Lifting, ReducedModel};
use crate::bases::build_bases;
use crate::error::{Error, Result};
use crate::fom::{generate_snapshots, FomOperators, InitialState, ParameterSample, SnapshotSet, TimeGrid, Trajectory, Waveform};
use crate::linalg::col_vec;
use crate::par;
use crate::solvers::{project_trajectory, reconstruct_space_time, StGrbSolver, WarmStartStore};
use faer::Mat;
use std::time::{Duration, Instant};

/// Consecutive column blocks of `traj`, each carrying the end state of the
/// previous block as its initial state.
pub fn split_windows(traj: &Trajectory, steps: usize, order: usize) -> Result<Vec<Trajectory>> {
    let n = traj.u.ncols();
    if steps == 0 || n % steps != 0 {
        return Err(Error::Dimension(format!("{n} steps do not split into windows of {steps}")));
    }
    let cut = |m: &Mat<f64>, c: usize| m.subcols(c * steps, steps).to_owned();
    let mut out: Vec<Trajectory> = Vec::with_capacity(n / steps);
    for c in 0..n / steps {
        let initial = match out.last() {
            Some(prev) => InitialState::from_trajectory_end(prev, order),
            None => traj.initial.clone(),
        };
        out.push(Trajectory {
            grid: TimeGrid::new(traj.grid.t0 + c as f64 * (steps as f64 * traj.grid.dt), traj.grid.dt, steps)?,
            initial,
            u: cut(&traj.u, c),
            p: cut(&traj.p, c),
            lambda: cut(&traj.lambda, c),
            d: cut(&traj.d, c),
            iterations: traj.iterations.get(c * steps..(c + 1) * steps).map(<[usize]>::to_vec).unwrap_or_default(),
            wall_time: Duration::ZERO,
        });
    }
    Ok(out)
}

/// Column-wise concatenation of consecutive windows.
pub fn join_windows(parts: &[Trajectory]) -> Result<Trajectory> {
    let first = parts.first().ok_or_else(|| Error::Missing("windows to join".into()))?;
    let steps: usize = parts.iter().map(|t| t.u.ncols()).sum();
    let cat = |f: &dyn Fn(&Trajectory) -> &Mat<f64>| -> Mat<f64> {
        let rows = f(first).nrows();
        let mut m = Mat::zeros(rows, steps);
        let mut off = 0;
        for t in parts {
            let b = f(t);
            m.as_mut().subcols_mut(off, b.ncols()).copy_from(b);
            off += b.ncols();
        }
        m
    };
    Ok(Trajectory {
        grid: TimeGrid::new(first.grid.t0, first.grid.dt, steps)?,
        initial: first.initial.clone(),
        u: cat(&|t| &t.u),
        p: cat(&|t| &t.p),
        lambda: cat(&|t| &t.lambda),
        d: cat(&|t| &t.d),
        iterations: parts.iter().flat_map(|t| t.iterations.iter().copied()).collect(),
        wall_time: parts.iter().map(|t| t.wall_time).sum(),
    })
}

/// Rounds the frequency entry so the inflow repeats with the window.
pub fn periodic_params(mut params: Vec<ParameterSample>) -> Vec<ParameterSample> {
    for p in &mut params {
        if let Some(f) = p.flow.first_mut() {
            *f = f.round().max(1.0);
        }
    }
    params
}

/// Result of chaining windows for one parameter.
#[derive(Debug, Clone)]
pub struct WindowedRun {
    pub windows: Vec<Trajectory>,
    pub iterations: Vec<usize>,
    /// Whether every handed-off initial state equals the previous window's
    /// final columns bit for bit.
    pub handoff_exact: bool,
    pub wall_time: Duration,
}

/// Solves `cycles` consecutive windows starting from `initial`. `stores`
/// provides a warm start per window (the last one is reused past its end).
pub fn solve_windows(
    ops: &FomOperators,
    model: &ReducedModel,
    cfg: &CampaignConfig,
    param: &ParameterSample,
    initial: &InitialState,
    cycles: usize,
    stores: &[WarmStartStore],
) -> Result<WindowedRun> {
    let start = Instant::now();
    let solver = StGrbSolver::new(model, cfg.newton)?;
    let window = model.n_steps() as f64 * cfg.dt;
    let order = cfg.order;
    let mut ic = initial.clone();
    let mut run = WindowedRun {
        windows: Vec::with_capacity(cycles),
        iterations: Vec::with_capacity(cycles),
        handoff_exact: true,
        wall_time: Duration::ZERO,
    };
    for c in 0..cycles {
        let t0 = c as f64 * window;
        let lifting = Lifting::new(ops, model, &ic)?;
        let guess = stores.get(c).or(stores.last()).map(|s| s.predict(param)).transpose()?;
        let sol = solver.solve(param, &cfg.waveform, t0, Some(&lifting), guess.as_deref())?;
        let traj = reconstruct_space_time(model, &sol.w, t0, Some(&ic), None)?;
        let next = InitialState::from_trajectory_end(&traj, order);
        let n = traj.u.ncols();
        run.handoff_exact &= traj.initial == ic;
        run.handoff_exact &= (0..order.min(n)).all(|s| next.u[s] == col_vec(traj.u.as_ref(), n - 1 - s) && next.d[s] == col_vec(traj.d.as_ref(), n - 1 - s))
            && next.p == col_vec(traj.p.as_ref(), n - 1)
            && next.lambda == col_vec(traj.lambda.as_ref(), n - 1);
        run.iterations.push(sol.report.iterations);
        run.windows.push(traj);
        ic = next;
    }
    run.wall_time = start.elapsed();
    Ok(run)
}

#[derive(Debug, Clone)]
pub struct WindowedReport {
    /// Test-averaged errors of each window against the matching FOM segment.
    pub per_cycle: Vec<FieldErrors>,
    pub mean_iterations: Vec<f64>,
    /// Errors of the concatenated windows over the whole horizon.
    pub global: FieldErrors,
    /// One space-time window over the whole horizon, when requested.
    pub single_window: Option<FieldErrors>,
    pub handoff_exact: bool,
    pub online_time: f64,
}

fn window_waveform(cfg: &CampaignConfig) -> Result<()> {
    let window = cfg.n_steps as f64 * cfg.dt;
    match cfg.waveform {
        Waveform::Periodic { period } if ((window / period) - cfg.windows.periods as f64).abs() < 1e-9 * cfg.windows.periods as f64 => Ok(()),
        Waveform::Periodic { .. } => Err(Error::Infeasible("window length must span the configured number of waveform periods".into())),
        _ => Err(Error::Infeasible("windowed runs need a periodic waveform".into())),
    }
}

/// Windowed ST-GRB over `cycles` windows of `cfg.n_steps` steps, compared
/// with a single FOM run over the whole horizon. Bases come from every window
/// of the training runs with the lifting subtracted.
pub fn run_windowed(ops: &FomOperators, cfg: &CampaignConfig, cycles: usize, compare_single: bool) -> Result<WindowedReport> {
    cfg.validate()?;
    window_waveform(cfg)?;
    if cycles == 0 {
        return Err(Error::Infeasible("at least one cycle is required".into()));
    }
    let tol: FieldTolerances = cfg.tolerances[0];
    let hyper: HyperSettings = cfg.ranks[0];
    let scheme = cfg.scheme();
    let steps = cfg.n_steps;
    let horizon = TimeGrid::new(0.0, cfg.dt, steps * cycles)?;
    let zero = InitialState::zero(ops, cfg.order);
    let fom = |params: &[ParameterSample]| generate_snapshots(ops, &scheme, &horizon, &cfg.waveform, params, &zero, &cfg.fom_newton, cfg.exec);

    let train = fom(&periodic_params(cfg.train_params()?))?;
    let windows: Vec<Vec<Trajectory>> = train.trajectories.iter().map(|t| split_windows(t, steps, cfg.order)).collect::<Result<_>>()?;
    let mut windowed_train = SnapshotSet {
        params: Vec::new(),
        trajectories: Vec::new(),
    };
    for (p, ws) in train.params.iter().zip(&windows) {
        for w in ws {
            windowed_train.params.push(p.clone());
            windowed_train.trajectories.push(w.clone());
        }
    }
    let opts = tol.basis_options(cfg.supremizers, cfg.stabilizers, true, cfg.randomized);
    let model = build_model(ops, build_bases(ops, &windowed_train, &opts)?, &hyper, cfg)?;
    let stores: Vec<WarmStartStore> = (0..cycles)
        .map(|c| {
            let coords = par::map_slice(cfg.exec, &windows, |ws| project_trajectory(&model, ops, &ws[c], true)).into_iter().collect::<Result<Vec<_>>>()?;
            WarmStartStore::new(cfg.param_box(), &train.params, coords, model.size(), cfg.warm_start, cfg.weighting)
        })
        .collect::<Result<_>>()?;

    let tests = periodic_params(cfg.test_params()?);
    let refs = fom(&tests)?;
    let runs = par::map_slice(cfg.exec, &tests, |p| solve_windows(ops, &model, cfg, p, &zero, cycles, &stores))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut per_cycle = Vec::with_capacity(cycles);
    let mut mean_iterations = Vec::with_capacity(cycles);
    let ref_windows: Vec<Vec<Trajectory>> = refs.trajectories.iter().map(|t| split_windows(t, steps, cfg.order)).collect::<Result<_>>()?;
    for c in 0..cycles {
        let errs = runs.iter().zip(&ref_windows).map(|(r, f)| field_errors(&r.windows[c], &f[c], ops)).collect::<Result<Vec<_>>>()?;
        per_cycle.push(average_errors(&errs));
        mean_iterations.push(runs.iter().map(|r| r.iterations[c] as f64).sum::<f64>() / runs.len().max(1) as f64);
    }
    let global_errs = runs
        .iter()
        .zip(&refs.trajectories)
        .map(|(r, f)| field_errors(&join_windows(&r.windows)?, f, ops))
        .collect::<Result<Vec<_>>>()?;

    let single_window = if compare_single {
        let mut single_cfg = cfg.clone();
        single_cfg.n_steps = steps * cycles;
        let opts = tol.basis_options(cfg.supremizers, cfg.stabilizers, true, cfg.randomized);
        let m = build_model(ops, build_bases(ops, &train, &opts)?, &hyper, &single_cfg)?;
        let coords = par::map_slice(cfg.exec, &train.trajectories, |t| project_trajectory(&m, ops, t, true)).into_iter().collect::<Result<Vec<_>>>()?;
        let store = WarmStartStore::new(cfg.param_box(), &train.params, coords, m.size(), cfg.warm_start, cfg.weighting)?;
        let errs = par::map_slice(cfg.exec, &tests, |p| solve_windows(ops, &m, &single_cfg, p, &zero, 1, std::slice::from_ref(&store)))
            .into_iter()
            .zip(&refs.trajectories)
            .map(|(r, f)| field_errors(&r?.windows[0], f, ops))
            .collect::<Result<Vec<_>>>()?;
        Some(average_errors(&errs))
    } else {
        None
    };

    Ok(WindowedReport {
        per_cycle,
        mean_iterations,
        global: average_errors(&global_errs),
        single_window,
        handoff_exact: runs.iter().all(|r| r.handoff_exact),
        online_time: runs.iter().map(|r| r.wall_time.as_secs_f64()).sum::<f64>() / runs.len().max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::MembraneParams;

    fn traj(steps: usize) -> Trajectory {
        Trajectory {
            grid: TimeGrid::new(0.0, 0.1, steps).unwrap(),
            initial: InitialState {
                u: vec![vec![-1.0, -2.0]; 2],
                d: vec![vec![0.0, 0.0]; 2],
                p: vec![0.5],
                lambda: vec![0.25],
            },
            u: Mat::from_fn(2, steps, |i, j| (i * 100 + j) as f64),
            p: Mat::from_fn(1, steps, |_, j| j as f64),
            lambda: Mat::from_fn(1, steps, |_, j| -(j as f64)),
            d: Mat::from_fn(2, steps, |i, j| (i + j) as f64 * 0.5),
            iterations: (0..steps).collect(),
            wall_time: Duration::ZERO,
        }
    }

    #[test]
    fn split_then_join_is_identity_and_hands_off_end_states() {
        let t = traj(6);
        let parts = split_windows(&t, 3, 2).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1].initial.u[0], vec![2.0, 102.0]);
        assert_eq!(parts[1].initial.u[1], vec![1.0, 101.0]);
        assert_eq!(parts[1].initial.p, vec![2.0]);
        assert!((parts[1].grid.time(0) - t.grid.time(3)).abs() < 1e-15);
        let back = join_windows(&parts).unwrap();
        assert_eq!(back.u, t.u);
        assert_eq!(back.d, t.d);
        assert_eq!(back.lambda, t.lambda);
        assert_eq!(back.initial, t.initial);
        assert!(split_windows(&t, 4, 2).is_err());
    }

    #[test]
    fn frequencies_are_rounded_to_integers() {
        let p = ParameterSample {
            flow: vec![4.6, 0.2, 0.5],
            membrane: MembraneParams::from_slice(&[0.1, 1.0, 1e6, 0.3]).unwrap(),
        };
        let q = periodic_params(vec![p]);
        assert_eq!(q[0].flow, vec![5.0, 0.2, 0.5]);
    }
}
