//! One function per subcommand. Every stage writes under the output
//! directory: `operators/`, `snapshots/{train,test}/`, `model/`, `online/`
//! and `bench/`.

use crate::config::{CliConfig, ConfigError, Source};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;
use stgrb_core::bench::{self, CampaignConfig, Method};
use stgrb_core::fom::{generate_operators, generate_snapshots, FomOperators, InitialState, SnapshotSet};
use stgrb_core::io;
use stgrb_core::par::Execution;
use stgrb_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0} invariant check(s) failed")]
    Checks(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Checks(_) => 3,
            CliError::Core(e) => match e {
                Error::Io(_) | Error::Format { .. } => 4,
                Error::InvalidTolerance(_)
                | Error::Infeasible(_)
                | Error::UnsupportedOrder(_)
                | Error::DegeneratePoisson(_)
                | Error::RankOutOfRange { .. } => 2,
                _ => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Validated configuration plus the paths derived from it.
pub struct Context {
    pub config: CliConfig,
    pub campaign: CampaignConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn new(config: CliConfig, exec: Execution) -> CliResult<Self> {
        let mut campaign = config.validate()?;
        campaign.exec = exec;
        let out = config.output.directory.clone();
        Ok(Self { config, campaign, out })
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Operators from a previous `generate` run, otherwise built from the
    /// configuration.
    fn operators(&self) -> CliResult<FomOperators> {
        let dir = self.dir("operators");
        if dir.join("operators.txt").is_file() {
            return Ok(io::load_operators(&dir)?);
        }
        Ok(match (self.config.fom.source, &self.config.fom.path) {
            (Source::Ingest, Some(p)) => io::load_operators(p)?,
            _ => generate_operators(&self.config.synth())?,
        })
    }

    fn snapshots(&self, which: &str) -> CliResult<SnapshotSet> {
        let dir = self.dir("snapshots").join(which);
        if !dir.join("snapshots.txt").is_file() {
            return Err(Error::Missing(format!("{which} snapshots (run `fom` first)")).into());
        }
        Ok(io::load_snapshots(&dir)?)
    }
}

pub fn generate(ctx: &Context) -> CliResult<()> {
    let ops = match (ctx.config.fom.source, &ctx.config.fom.path) {
        (Source::Ingest, Some(p)) => io::load_operators(p)?,
        _ => generate_operators(&ctx.config.synth())?,
    };
    ops.check_shapes()?;
    let dir = ctx.dir("operators");
    io::save_operators(&dir, &ops)?;
    println!(
        "operators: n_u={} n_p={} n_lambda={} -> {}",
        ops.n_u(),
        ops.n_p(),
        ops.n_lambda(),
        dir.display()
    );
    Ok(())
}

pub fn fom(ctx: &Context) -> CliResult<()> {
    let ops = ctx.operators()?;
    let cfg = &ctx.campaign;
    let zero = InitialState::zero(&ops, cfg.order);
    for (name, params) in [("train", cfg.train_params()?), ("test", cfg.test_params()?)] {
        if params.is_empty() {
            continue;
        }
        let mut set = generate_snapshots(&ops, &cfg.scheme(), &cfg.grid(), &cfg.waveform, &params, &zero, &cfg.fom_newton, cfg.exec)?;
        let total: Duration = set.trajectories.iter().map(|t| t.wall_time).sum();
        log::info!("{name}: {} solves in {:.3}s", set.len(), total.as_secs_f64());
        // Wall times would make reruns differ byte for byte.
        for t in &mut set.trajectories {
            t.wall_time = Duration::ZERO;
        }
        let dir = ctx.dir("snapshots").join(name);
        io::save_snapshots(&dir, &set)?;
        println!("{name}: {} trajectories -> {}", set.len(), dir.display());
    }
    Ok(())
}

pub fn offline(ctx: &Context) -> CliResult<()> {
    let ops = ctx.operators()?;
    let train = ctx.snapshots("train")?;
    let cfg = &ctx.campaign;
    let off = bench::build_offline(&ops, &train, &cfg.tolerances[0], &cfg.ranks[0], cfg)?;
    let dir = ctx.dir("model");
    io::save_model(&dir, &off.model)?;
    io::save_warm_start(&dir.join("warmstart"), &off.store)?;
    let b = &off.model.bases;
    println!(
        "reduced model: size {} (velocity {}x{}, pressure {}x{}), bases {:.3}s, operators {:.3}s -> {}",
        off.model.size(),
        b.velocity.spatial.ncols(),
        b.velocity.temporal.ncols(),
        b.constraints[0].spatial.ncols(),
        b.constraints[0].temporal.ncols(),
        off.basis_time.as_secs_f64(),
        off.model_time.as_secs_f64(),
        dir.display()
    );
    Ok(())
}

pub fn online(ctx: &Context) -> CliResult<()> {
    let dir = ctx.dir("model");
    let model = io::load_model(&dir)?;
    let store = match io::load_warm_start(&dir.join("warmstart")) {
        Ok(s) => Some(s),
        Err(Error::Missing(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let ops = ctx.operators()?;
    let cfg = &ctx.campaign;
    let params = cfg.test_params()?;
    let reference = ctx.snapshots("test").ok().filter(|s| s.params == params);
    let out = ctx.dir("online");
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    let mut summary = String::from("test,iterations,converged,wall_time,err_u,err_p,err_d\n");
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.5e}")).unwrap_or_default();
    for (k, p) in params.iter().enumerate() {
        let r = bench::solve_online(&model, store.as_ref(), Method::StGrb, p, cfg)?;
        let errs = match &reference {
            Some(set) => Some(bench::field_errors(&r.trajectory, &set.trajectories[k], &ops)?),
            None => None,
        };
        let e = errs.map(|e| e.as_array()).unwrap_or([None; 3]);
        let _ = writeln!(
            summary,
            "{k},{},{},{:.5e},{},{},{}",
            r.mean_iterations,
            r.converged,
            r.wall_time.as_secs_f64(),
            cell(e[0]),
            cell(e[1]),
            cell(e[2])
        );
        let times = r.trajectory.grid.times();
        io::write_trajectory_csv(&out.join(format!("u_{k}.csv")), &times, r.trajectory.u.as_ref(), "u")?;
        io::write_trajectory_csv(&out.join(format!("p_{k}.csv")), &times, r.trajectory.p.as_ref(), "p")?;
    }
    std::fs::write(out.join("summary.csv"), summary).map_err(Error::from)?;
    println!("online: {} solves -> {}", params.len(), out.display());
    Ok(())
}

pub fn bench(ctx: &Context) -> CliResult<()> {
    let ops = ctx.operators()?;
    let cfg = &ctx.campaign;
    let dir = ctx.dir("bench");
    let table = bench::run_campaign(&ops, cfg)?;
    bench::emit_report(&dir, &table, &cfg.describe())?;
    print!("{}", bench::format_summary(&table, &[]));
    if cfg.windows.cycles > 1 {
        let report = bench::run_windowed(&ops, cfg, cfg.windows.cycles, true)?;
        write_windowed(&dir, &report)?;
        println!("windowed: {} cycles, handoff exact: {}", cfg.windows.cycles, report.handoff_exact);
    }
    println!("report -> {}", dir.display());
    Ok(())
}

fn write_windowed(dir: &Path, r: &bench::WindowedReport) -> CliResult<()> {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.5e}")).unwrap_or_default();
    let mut s = String::from("window,err_u,err_p,err_d,mean_iterations\n");
    for (c, (e, it)) in r.per_cycle.iter().zip(&r.mean_iterations).enumerate() {
        let _ = writeln!(s, "{c},{},{},{},{it:.5e}", cell(e.u), cell(e.p), cell(e.d));
    }
    let g = &r.global;
    let _ = writeln!(s, "global,{},{},{},", cell(g.u), cell(g.p), cell(g.d));
    if let Some(w) = &r.single_window {
        let _ = writeln!(s, "single,{},{},{},", cell(w.u), cell(w.p), cell(w.d));
    }
    std::fs::write(dir.join("windowed.csv"), s).map_err(Error::from)?;
    Ok(())
}

pub fn validate(ctx: &Context) -> CliResult<()> {
    let ops = ctx.operators()?;
    let checks = bench::validate_invariants(&ops, &ctx.campaign)?;
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed() { "ok  " } else { "FAIL" };
        failed += usize::from(!c.passed());
        println!("{status} {:<58} {:.3e} (tol {:.1e})", c.name, c.value, c.tolerance);
    }
    if failed > 0 {
        return Err(CliError::Checks(failed));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
