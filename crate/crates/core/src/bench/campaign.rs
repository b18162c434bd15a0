use super::metrics::{average_errors, field_errors, full_spatial_dofs, FieldErrors};
use super::report::{Method, MetricsRecord};
use crate::assembly::{HyperSettings, ReducedModel};
use crate::bases::{build_bases, BasisOptions, PodOptions, RandomizedSvd, ReducedBasisSet};
use crate::error::{Error, Result};
use crate::fom::{
    generate_snapshots, sample_parameters, BdfScheme, FomOperators, InitialState, NewtonSettings, ParamBox, ParameterSample, SnapshotSet,
    TimeGrid, Trajectory, Waveform,
};
use crate::par::{self, Execution};
use crate::solvers::{
    project_trajectory, reconstruct_space_time, NewtonConfig, NniWeighting, ReducedHistory, SrbSolver, StGrbSolver, WarmStartStore,
    WarmStartStrategy,
};
use std::time::{Duration, Instant};

/// POD tolerances per field. Multipliers get separate spatial and temporal values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldTolerances {
    pub u: f64,
    pub p: f64,
    pub lambda_space: f64,
    pub lambda_time: f64,
}

impl FieldTolerances {
    pub fn uniform(eps: f64) -> Self {
        Self {
            u: eps,
            p: eps,
            lambda_space: eps,
            lambda_time: eps,
        }
    }

    /// Multiplier spatial tolerance two orders of magnitude below the rest.
    pub fn tight_multipliers(eps: f64) -> Self {
        Self {
            lambda_space: eps * 1e-2,
            ..Self::uniform(eps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for e in [self.u, self.p, self.lambda_space, self.lambda_time] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidTolerance(e));
            }
        }
        Ok(())
    }

    /// Every stage runs at its tolerance divided by `√2`, so the space-time
    /// projection error of the training set stays within `ε` for velocity and
    /// pressure and within the larger of the two multiplier tolerances.
    pub fn basis_options(&self, supremizers: bool, stabilizers: bool, lifting: bool, randomized: Option<RandomizedSvd>) -> BasisOptions {
        let half = |e: f64| PodOptions::tolerance(e * std::f64::consts::FRAC_1_SQRT_2);
        BasisOptions {
            velocity_space: half(self.u),
            velocity_time: half(self.u),
            pressure_space: half(self.p),
            pressure_time: half(self.p),
            multiplier_space: half(self.lambda_space),
            multiplier_time: half(self.lambda_time),
            supremizers,
            stabilizers,
            lifting,
        }
        .with_randomized(randomized)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSettings {
    /// Waveform periods covered by one window.
    pub periods: usize,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub order: usize,
    pub dt: f64,
    /// Steps per window (the whole horizon for a single-window campaign).
    pub n_steps: usize,
    pub waveform: Waveform,
    pub flow_box: ParamBox,
    pub membrane_box: ParamBox,
    pub n_train: usize,
    pub n_test: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub tolerances: Vec<FieldTolerances>,
    pub ranks: Vec<HyperSettings>,
    pub randomized: Option<RandomizedSvd>,
    pub supremizers: bool,
    pub stabilizers: bool,
    pub lifting: bool,
    pub methods: Vec<Method>,
    pub newton: NewtonConfig,
    pub fom_newton: NewtonSettings,
    pub warm_start: WarmStartStrategy,
    pub weighting: NniWeighting,
    pub windows: WindowSettings,
    /// Timing repetitions per online solve; the median is reported.
    pub repeats: usize,
    pub exec: Execution,
}

impl Default for CampaignConfig {
    /// BDF2 over one unit period in 200 steps, PODI warm starts and a
    /// five-point tolerance sweep from 1e-2 to 1e-4.
    fn default() -> Self {
        let dt = 5e-3;
        let n_steps = 200;
        Self {
            order: 2,
            dt,
            n_steps,
            waveform: Waveform::Periodic { period: dt * n_steps as f64 },
            flow_box: ParamBox::new(vec![4.0, 0.1, 0.2], vec![8.0, 0.3, 0.8]).expect("valid box"),
            membrane_box: ParamBox::new(vec![0.05, 1.08, 2e6, 0.35], vec![0.15, 1.80, 6e6, 0.5]).expect("valid box"),
            n_train: 50,
            n_test: 10,
            train_seed: 1,
            test_seed: 2,
            tolerances: [1e-2, 5e-3, 1e-3, 5e-4, 1e-4].into_iter().map(FieldTolerances::tight_multipliers).collect(),
            ranks: vec![HyperSettings {
                n_c: None,
                n_cj: Some(0),
                include_supremizers: false,
            }],
            randomized: None,
            supremizers: true,
            stabilizers: true,
            lifting: false,
            methods: vec![Method::StGrb, Method::Srb],
            newton: NewtonConfig::default(),
            fom_newton: NewtonSettings::default(),
            warm_start: WarmStartStrategy::Podi,
            weighting: NniWeighting::Proportional,
            windows: WindowSettings { periods: 1, cycles: 1 },
            repeats: 3,
            exec: Execution::Parallel,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        BdfScheme::new(self.order)?;
        TimeGrid::new(0.0, self.dt, self.n_steps)?;
        if self.n_train == 0 {
            return Err(Error::Infeasible("at least one training parameter is required".into()));
        }
        if self.membrane_box.dim() != 4 || self.flow_box.dim() == 0 {
            return Err(Error::Dimension("membrane box needs 4 entries and the flow box at least one".into()));
        }
        if self.tolerances.is_empty() || self.ranks.is_empty() || self.methods.is_empty() {
            return Err(Error::Infeasible("tolerance grid, rank list and method list must be non-empty".into()));
        }
        for t in &self.tolerances {
            t.validate()?;
        }
        if self.windows.periods == 0 || self.windows.cycles == 0 {
            return Err(Error::Infeasible("windows need at least one period and one cycle".into()));
        }
        self.newton.validate()
    }

    pub fn scheme(&self) -> BdfScheme {
        BdfScheme::new(self.order).expect("validated order")
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(0.0, self.dt, self.n_steps).expect("validated grid")
    }

    pub fn param_box(&self) -> ParamBox {
        self.flow_box.concat(&self.membrane_box)
    }

    pub fn train_params(&self) -> Result<Vec<ParameterSample>> {
        sample_parameters(&self.flow_box, &self.membrane_box, self.n_train, self.train_seed)
    }

    pub fn test_params(&self) -> Result<Vec<ParameterSample>> {
        sample_parameters(&self.flow_box, &self.membrane_box, self.n_test, self.test_seed)
    }

    pub fn basis_options(&self, tol: &FieldTolerances) -> BasisOptions {
        tol.basis_options(self.supremizers, self.stabilizers, self.lifting, self.randomized)
    }

    /// Key-value echo of every setting, for report headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let mut out = vec![
            ("bdf_order".into(), self.order.to_string()),
            ("dt".into(), format!("{:e}", self.dt)),
            ("n_steps".into(), self.n_steps.to_string()),
            ("waveform".into(), format!("{:?}", self.waveform)),
            ("flow_lower".into(), list(&self.flow_box.lower)),
            ("flow_upper".into(), list(&self.flow_box.upper)),
            ("membrane_lower".into(), list(&self.membrane_box.lower)),
            ("membrane_upper".into(), list(&self.membrane_box.upper)),
            ("n_train".into(), self.n_train.to_string()),
            ("n_test".into(), self.n_test.to_string()),
            ("train_seed".into(), self.train_seed.to_string()),
            ("test_seed".into(), self.test_seed.to_string()),
        ];
        for (k, t) in self.tolerances.iter().enumerate() {
            out.push((format!("tolerances[{k}]"), format!("u={:e} p={:e} ls={:e} lt={:e}", t.u, t.p, t.lambda_space, t.lambda_time)));
        }
        for (k, h) in self.ranks.iter().enumerate() {
            out.push((format!("ranks[{k}]"), format!("{h:?}")));
        }
        out.extend([
            ("randomized".into(), format!("{:?}", self.randomized)),
            ("supremizers".into(), self.supremizers.to_string()),
            ("stabilizers".into(), self.stabilizers.to_string()),
            ("lifting".into(), self.lifting.to_string()),
            ("methods".into(), self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(" ")),
            ("newton".into(), format!("{:?}", self.newton)),
            ("fom_newton".into(), format!("{:?}", self.fom_newton)),
            ("warm_start".into(), self.warm_start.name()),
            ("nni_weighting".into(), format!("{:?}", self.weighting)),
            ("windows".into(), format!("{:?}", self.windows)),
            ("repeats".into(), self.repeats.to_string()),
        ]);
        out
    }
}

/// Reduced model plus warm-start store, with their construction times.
pub struct OfflineProducts {
    pub model: ReducedModel,
    pub store: WarmStartStore,
    pub basis_time: Duration,
    pub model_time: Duration,
}

/// Reduced coordinates of every training trajectory, for warm starts.
pub fn training_coordinates(ops: &FomOperators, model: &ReducedModel, train: &SnapshotSet, exec: Execution) -> Result<Vec<Vec<f64>>> {
    par::map_slice(exec, &train.trajectories, |t| project_trajectory(model, ops, t, model.bases.lifted))
        .into_iter()
        .collect()
}

pub fn build_store(ops: &FomOperators, model: &ReducedModel, train: &SnapshotSet, cfg: &CampaignConfig) -> Result<WarmStartStore> {
    let coords = if cfg.warm_start == WarmStartStrategy::Zero {
        vec![vec![0.0; model.size()]; train.len()]
    } else {
        training_coordinates(ops, model, train, cfg.exec)?
    };
    WarmStartStore::new(cfg.param_box(), &train.params, coords, model.size(), cfg.warm_start, cfg.weighting)
}

pub fn build_model(ops: &FomOperators, bases: ReducedBasisSet, hyper: &HyperSettings, cfg: &CampaignConfig) -> Result<ReducedModel> {
    ReducedModel::build(ops, bases, &cfg.scheme(), cfg.dt, hyper, cfg.exec)
}

/// Bases, model and warm-start store from a training set.
pub fn build_offline(
    ops: &FomOperators,
    train: &SnapshotSet,
    tol: &FieldTolerances,
    hyper: &HyperSettings,
    cfg: &CampaignConfig,
) -> Result<OfflineProducts> {
    let t = Instant::now();
    let bases = build_bases(ops, train, &cfg.basis_options(tol))?;
    let basis_time = t.elapsed();
    let t = Instant::now();
    let model = build_model(ops, bases, hyper, cfg)?;
    let store = build_store(ops, &model, train, cfg)?;
    Ok(OfflineProducts {
        model,
        store,
        basis_time,
        model_time: t.elapsed(),
    })
}

/// Reduced solution mapped back to full order.
#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    pub trajectory: Trajectory,
    /// Reduced coordinates (space-time for ST-GRB, stacked per-step for SRB-TFO).
    pub coords: Vec<f64>,
    pub mean_iterations: f64,
    pub converged: bool,
    /// Solve time without reconstruction.
    pub wall_time: Duration,
}

/// Online solve from a zero initial state, warm-started for ST-GRB.
pub fn solve_online(
    model: &ReducedModel,
    store: Option<&WarmStartStore>,
    method: Method,
    param: &ParameterSample,
    cfg: &CampaignConfig,
) -> Result<OnlineOutcome> {
    match method {
        Method::StGrb => {
            let t = Instant::now();
            let guess = store.map(|s| s.predict(param)).transpose()?;
            let sol = StGrbSolver::new(model, cfg.newton)?.solve(param, &cfg.waveform, 0.0, None, guess.as_deref())?;
            let wall_time = t.elapsed();
            Ok(OnlineOutcome {
                trajectory: reconstruct_space_time(model, &sol.w, 0.0, None, None)?,
                coords: sol.w,
                mean_iterations: sol.report.iterations as f64,
                converged: sol.report.converged,
                wall_time,
            })
        }
        Method::Srb => {
            let t = Instant::now();
            let grid = model.grid(0.0);
            let sol = SrbSolver::new(&model.space, cfg.newton)?.solve(param, &cfg.waveform, &grid, &ReducedHistory::zero(&model.space))?;
            let wall_time = t.elapsed();
            let mut coords: Vec<f64> = sol.u.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).collect();
            for m in &sol.constraints {
                coords.extend(m.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()));
            }
            Ok(OnlineOutcome {
                trajectory: sol.reconstruct(&model.space, None),
                coords,
                mean_iterations: sol.mean_iterations(),
                converged: sol.converged,
                wall_time,
            })
        }
    }
}

/// Median wall time of `repeats` serial runs of `f`.
pub fn median_time<F: FnMut() -> Result<Duration>>(repeats: usize, mut f: F) -> Result<Duration> {
    let mut times = (0..repeats.max(1)).map(|_| f()).collect::<Result<Vec<_>>>()?;
    times.sort();
    Ok(times[times.len() / 2])
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Full-order references for the test parameters and their timings.
pub struct References {
    pub params: Vec<ParameterSample>,
    pub trajectories: Vec<Trajectory>,
    pub times: Vec<f64>,
}

pub fn fom_references(ops: &FomOperators, cfg: &CampaignConfig) -> Result<References> {
    let params = cfg.test_params()?;
    let scheme = cfg.scheme();
    let grid = cfg.grid();
    let init = InitialState::zero(ops, cfg.order);
    let set = generate_snapshots(ops, &scheme, &grid, &cfg.waveform, &params, &init, &cfg.fom_newton, cfg.exec)?;
    let mut times = Vec::with_capacity(params.len());
    for p in &params {
        let d = if cfg.repeats == 0 {
            Duration::ZERO
        } else {
            median_time(cfg.repeats, || {
                let t = Instant::now();
                crate::fom::solve_transient(ops, &scheme, &grid, &cfg.waveform, p, &init, &cfg.fom_newton)?;
                Ok(t.elapsed())
            })?
        };
        times.push(secs(d));
    }
    if cfg.repeats == 0 {
        times = set.trajectories.iter().map(|t| secs(t.wall_time)).collect();
    }
    Ok(References {
        params,
        trajectories: set.trajectories,
        times,
    })
}

/// Offline sweep then test solves for every method, tolerance set and rank
/// pair. Returns one row per combination.
pub fn run_campaign(ops: &FomOperators, cfg: &CampaignConfig) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    let scheme = cfg.scheme();
    let grid = cfg.grid();
    let t = Instant::now();
    let train = generate_snapshots(
        ops,
        &scheme,
        &grid,
        &cfg.waveform,
        &cfg.train_params()?,
        &InitialState::zero(ops, cfg.order),
        &cfg.fom_newton,
        cfg.exec,
    )?;
    let snapshot_time = secs(t.elapsed());
    let refs = if cfg.n_test > 0 { Some(fom_references(ops, cfg)?) } else { None };
    let mut table = Vec::new();
    for tol in &cfg.tolerances {
        let t = Instant::now();
        let bases = build_bases(ops, &train, &cfg.basis_options(tol))?;
        let basis_time = t.elapsed();
        for hyper in &cfg.ranks {
            let t = Instant::now();
            let model = build_model(ops, bases.clone(), hyper, cfg)?;
            let store = if cfg.methods.contains(&Method::StGrb) {
                Some(build_store(ops, &model, &train, cfg)?)
            } else {
                None
            };
            let offline_time = secs(basis_time + t.elapsed());
            for &method in &cfg.methods {
                let mut row = base_record(ops, &model, method, tol, snapshot_time, offline_time);
                if let Some(refs) = &refs {
                    fill_online(&mut row, ops, &model, store.as_ref(), method, refs, cfg)?;
                }
                table.push(row);
            }
        }
    }
    Ok(table)
}

fn base_record(ops: &FomOperators, model: &ReducedModel, method: Method, tol: &FieldTolerances, snapshot_time: f64, offline_time: f64) -> MetricsRecord {
    let b = &model.bases;
    let nt = model.n_steps();
    let st = method == Method::StGrb;
    let time_size = |n: usize| if st { n } else { nt };
    let lambda = &b.constraints[1..];
    let n_space: usize = b.velocity.n_space() + b.constraints.iter().map(|c| c.n_space()).sum::<usize>();
    let fom_dofs = full_spatial_dofs(ops) * nt;
    let rom_dofs = if st { model.size() } else { n_space * nt };
    MetricsRecord {
        method,
        eps_u: tol.u,
        eps_p: tol.p,
        eps_lambda_space: tol.lambda_space,
        eps_lambda_time: tol.lambda_time,
        n_c: model.space.convective.n_c,
        n_cj: model.space.convective.n_cj,
        n_u_space: b.velocity.n_space(),
        n_u_time: time_size(b.velocity.n_time()),
        n_p_space: b.constraints[0].n_space(),
        n_p_time: time_size(b.constraints[0].n_time()),
        n_lambda_space: lambda.iter().map(|c| c.n_space()).sum(),
        n_lambda_time: lambda.iter().map(|c| time_size(c.n_time())).sum(),
        fom_dofs,
        rom_dofs,
        reduction_factor: fom_dofs as f64 / rom_dofs as f64,
        tests: 0,
        failures: 0,
        err_u: None,
        err_p: None,
        err_d: None,
        err_u_rel_eps: None,
        err_p_rel_eps: None,
        mean_iterations: None,
        snapshot_time,
        offline_time,
        fom_time: None,
        online_time: None,
        speedup: None,
    }
}

fn fill_online(
    row: &mut MetricsRecord,
    ops: &FomOperators,
    model: &ReducedModel,
    store: Option<&WarmStartStore>,
    method: Method,
    refs: &References,
    cfg: &CampaignConfig,
) -> Result<()> {
    let outcomes = par::map_slice(cfg.exec, &refs.params, |p| solve_online(model, store, method, p, cfg));
    let mut errors: Vec<FieldErrors> = Vec::new();
    let mut iters = Vec::new();
    let mut rom_times = Vec::new();
    let mut fom_times = Vec::new();
    for (k, out) in outcomes.into_iter().enumerate() {
        let out = match out {
            Ok(o) => o,
            Err(e) if e.is_numerical() => {
                log::warn!("{} test {k} failed: {e}", method.name());
                row.failures += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if !out.converged {
            row.failures += 1;
        }
        errors.push(field_errors(&out.trajectory, &refs.trajectories[k], ops)?);
        iters.push(out.mean_iterations);
        let d = if cfg.repeats == 0 {
            out.wall_time
        } else {
            median_time(cfg.repeats, || Ok(solve_online(model, store, method, &refs.params[k], cfg)?.wall_time))?
        };
        rom_times.push(secs(d));
        fom_times.push(refs.times[k]);
    }
    let avg = average_errors(&errors);
    row.tests = refs.params.len();
    row.err_u = avg.u;
    row.err_p = avg.p;
    row.err_d = avg.d;
    row.err_u_rel_eps = avg.u.map(|e| e / row.eps_u);
    row.err_p_rel_eps = avg.p.map(|e| e / row.eps_p);
    row.mean_iterations = mean(&iters);
    row.fom_time = mean(&fom_times);
    row.online_time = mean(&rom_times);
    row.speedup = match (row.fom_time, row.online_time) {
        (Some(f), Some(r)) if r > 0.0 => Some(f / r),
        _ => None,
    };
    Ok(())
}
