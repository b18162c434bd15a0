use super::operators::FomOperators;
use super::params::{BdfScheme, ParameterSample, TimeGrid};
use super::waveform::Waveform;
use crate::error::{Error, Result};
use crate::linalg::{axpy, norm2, sparse_solve, CsrMatrix};
use faer::Mat;
use std::time::{Duration, Instant};

/// State before the first step: velocity and displacement at the `S` previous
/// instants (most recent first), plus pressure and multipliers at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub u: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl InitialState {
    pub fn zero(ops: &FomOperators, order: usize) -> Self {
        Self {
            u: vec![vec![0.0; ops.n_u()]; order],
            d: vec![vec![0.0; ops.n_u()]; order],
            p: vec![0.0; ops.n_p()],
            lambda: vec![0.0; ops.n_lambda()],
        }
    }

    pub fn is_zero(&self) -> bool {
        let z = |v: &Vec<f64>| v.iter().all(|x| *x == 0.0);
        self.u.iter().all(z) && self.d.iter().all(z) && z(&self.p) && z(&self.lambda)
    }

    /// Final state of a trajectory as the history of a continuation run.
    pub fn from_trajectory_end(traj: &Trajectory, order: usize) -> Self {
        let n = traj.u.ncols();
        let col = |m: &Mat<f64>, k: usize| -> Vec<f64> { (0..m.nrows()).map(|i| m[(i, k)]).collect() };
        let pick = |m: &Mat<f64>, back: usize, fallback: &[Vec<f64>]| -> Vec<f64> {
            if back < n {
                col(m, n - 1 - back)
            } else {
                fallback[back - n].clone()
            }
        };
        Self {
            u: (0..order).map(|s| pick(&traj.u, s, &traj.initial.u)).collect(),
            d: (0..order).map(|s| pick(&traj.d, s, &traj.initial.d)).collect(),
            p: col(&traj.p, n - 1),
            lambda: col(&traj.lambda, n - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 20 }
    }
}

/// Full-order trajectory; column `n` of each matrix holds the state at step `n`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub initial: InitialState,
    pub u: Mat<f64>,
    pub p: Mat<f64>,
    pub lambda: Mat<f64>,
    pub d: Mat<f64>,
    pub iterations: Vec<usize>,
    pub wall_time: Duration,
}

/// Parameter-dependent pieces of the per-step system.
struct StepOperators {
    h: CsrMatrix,
    linear: CsrMatrix,
    wall: CsrMatrix,
    bt: CsrMatrix,
    lt: CsrMatrix,
    jac_const: Vec<(usize, usize, f64)>,
    bdt: f64,
}

impl StepOperators {
    fn new(ops: &FomOperators, scheme: &BdfScheme, dt: f64, coeffs: &[f64; 3]) -> Result<Self> {
        let bdt = scheme.beta * dt;
        let h = ops.mass.add_scaled(coeffs[0], &ops.wall_mass)?;
        let wall = ops.wall_operator(coeffs);
        let linear = h.add_scaled(bdt, &ops.viscous_with_resistance())?.add_scaled(bdt * bdt, &wall)?;
        let (nu, np) = (ops.n_u(), ops.n_p());
        let mut jac_const = linear.triplets();
        for (i, j, v) in ops.divergence.triplets() {
            jac_const.push((nu + i, j, bdt * v));
            jac_const.push((j, nu + i, bdt * v));
        }
        for (i, j, v) in ops.multiplier.triplets() {
            jac_const.push((nu + np + i, j, bdt * v));
            jac_const.push((j, nu + np + i, bdt * v));
        }
        Ok(Self {
            h,
            linear,
            wall,
            bt: ops.divergence.transpose(),
            lt: ops.multiplier.transpose(),
            jac_const,
            bdt,
        })
    }
}

/// Monolithic residual of one BDF step at the iterate `x = [u; p; λ]`.
/// `u_hist` and `d_hist` hold the `S` previous states, most recent first.
pub fn step_residual(
    ops: &FomOperators,
    scheme: &BdfScheme,
    dt: f64,
    coeffs: &[f64; 3],
    g: &[f64],
    u_hist: &[&[f64]],
    d_hist: &[&[f64]],
    x: &[f64],
) -> Result<Vec<f64>> {
    let so = StepOperators::new(ops, scheme, dt, coeffs)?;
    let (u_prev, d_prev) = history_sums(scheme, u_hist, d_hist);
    Ok(residual(ops, &so, g, &u_prev, &d_prev, x))
}

fn history_sums(scheme: &BdfScheme, u_hist: &[&[f64]], d_hist: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = u_hist[0].len();
    let mut u = vec![0.0; n];
    let mut d = vec![0.0; n];
    for (s, a) in scheme.alpha.iter().enumerate() {
        axpy(*a, u_hist[s], &mut u);
        axpy(*a, d_hist[s], &mut d);
    }
    (u, d)
}

fn residual(ops: &FomOperators, so: &StepOperators, g: &[f64], u_prev: &[f64], d_prev: &[f64], x: &[f64]) -> Vec<f64> {
    let (nu, np) = (ops.n_u(), ops.n_p());
    let (u, rest) = x.split_at(nu);
    let (p, lam) = rest.split_at(np);
    let mut r = so.linear.mul_vec(u);
    axpy(-1.0, &so.h.mul_vec(u_prev), &mut r);
    let mut forcing = so.bt.mul_vec(p);
    axpy(1.0, &so.lt.mul_vec(lam), &mut forcing);
    axpy(1.0, &ops.convective.eval(u), &mut forcing);
    axpy(1.0, &so.wall.mul_vec(d_prev), &mut forcing);
    axpy(so.bdt, &forcing, &mut r);
    r.extend(ops.divergence.mul_vec(u).into_iter().map(|v| so.bdt * v));
    let lu = ops.multiplier.mul_vec(u);
    r.extend(lu.iter().zip(g).map(|(a, b)| so.bdt * (a - b)));
    r
}

/// Dirichlet data of all boundaries at time `t`.
pub fn dirichlet_data(ops: &FomOperators, waveform: &Waveform, flow: &[f64], t: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(ops.n_lambda());
    for (k, prof) in ops.dirichlet_profiles.iter().enumerate() {
        let a = waveform.eval(t, flow, k);
        g.extend(prof.iter().map(|v| a * v));
    }
    g
}

/// Integrates the coupled problem with Newton's method at every step.
pub fn solve_transient(
    ops: &FomOperators,
    scheme: &BdfScheme,
    grid: &TimeGrid,
    waveform: &Waveform,
    param: &ParameterSample,
    initial: &InitialState,
    newton: &NewtonSettings,
) -> Result<Trajectory> {
    let start = Instant::now();
    ops.check_shapes()?;
    let s_count = scheme.steps();
    if initial.u.len() < s_count || initial.d.len() < s_count {
        return Err(Error::Dimension(format!("BDF{s_count} needs {s_count} initial states")));
    }
    let coeffs = param.membrane.coefficients()?;
    let so = StepOperators::new(ops, scheme, grid.dt, &coeffs)?;
    let (nu, np, nl) = (ops.n_u(), ops.n_p(), ops.n_lambda());
    let ns = nu + np + nl;
    let nt = grid.n_steps;
    let mut traj = Trajectory {
        grid: grid.clone(),
        initial: initial.clone(),
        u: Mat::zeros(nu, nt),
        p: Mat::zeros(np, nt),
        lambda: Mat::zeros(nl, nt),
        d: Mat::zeros(nu, nt),
        iterations: Vec::with_capacity(nt),
        wall_time: Duration::ZERO,
    };
    let mut u_hist: Vec<Vec<f64>> = initial.u[..s_count].to_vec();
    let mut d_hist: Vec<Vec<f64>> = initial.d[..s_count].to_vec();
    let mut x: Vec<f64> = initial.u[0].iter().chain(&initial.p).chain(&initial.lambda).copied().collect();

    for n in 0..nt {
        let g = dirichlet_data(ops, waveform, &param.flow, grid.time(n));
        let uh: Vec<&[f64]> = u_hist.iter().map(|v| v.as_slice()).collect();
        let dh: Vec<&[f64]> = d_hist.iter().map(|v| v.as_slice()).collect();
        let (u_prev, d_prev) = history_sums(scheme, &uh, &dh);
        let mut r = residual(ops, &so, &g, &u_prev, &d_prev, &x);
        let r0 = norm2(&r);
        let mut rn = r0;
        let mut it = 0;
        while rn > newton.tol * r0 && rn > 1e-15 * (1.0 + norm2(&x)) {
            if it == newton.max_iters {
                return Err(Error::NewtonDiverged {
                    step: n,
                    iterations: it,
                    residual: rn / r0,
                });
            }
            let mut trips = so.jac_const.clone();
            ops.convective.jacobian_triplets(&x[..nu], so.bdt, &mut trips);
            let jac = CsrMatrix::from_triplets(ns, ns, &trips)?;
            let delta = sparse_solve(&jac, &r)?;
            axpy(-1.0, &delta, &mut x);
            r = residual(ops, &so, &g, &u_prev, &d_prev, &x);
            rn = norm2(&r);
            it += 1;
            if !rn.is_finite() {
                return Err(Error::NewtonDiverged {
                    step: n,
                    iterations: it,
                    residual: rn,
                });
            }
        }
        let u_new = x[..nu].to_vec();
        let mut d_new = d_prev;
        axpy(so.bdt, &u_new, &mut d_new);
        for i in 0..nu {
            traj.u[(i, n)] = u_new[i];
            traj.d[(i, n)] = d_new[i];
        }
        for i in 0..np {
            traj.p[(i, n)] = x[nu + i];
        }
        for i in 0..nl {
            traj.lambda[(i, n)] = x[nu + np + i];
        }
        traj.iterations.push(it);
        u_hist.rotate_right(1);
        u_hist[0] = u_new;
        d_hist.rotate_right(1);
        d_hist[0] = d_new;
    }
    traj.wall_time = start.elapsed();
    Ok(traj)
}
