//! Sequential-in-time reduced baseline: BDF time marching of the
//! space-projected system with per-step Newton.

use super::{JacobianMode, NewtonConfig};
use crate::assembly::SpaceModel;
use crate::error::{Error, Result};
use crate::fom::{FomOperators, InitialState, ParameterSample, TimeGrid, Trajectory, Waveform};
use crate::linalg::{axpy, col_vec, mat_tr_vec, mat_vec, norm2, weighted_gram, Cholesky, CsrMatrix, DenseLu};
use faer::{Mat, MatRef, Scale};
use std::time::{Duration, Instant};

/// Reduced states before the first step, most recent first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedHistory {
    pub u: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    /// Initial guess for each constraint field.
    pub constraints: Vec<Vec<f64>>,
}

/// Coordinates of the best approximation of `v` in `span(Φ)` in the `x` norm.
fn coordinates(phi: MatRef<'_, f64>, x: Option<&CsrMatrix>, v: &[f64]) -> Result<Vec<f64>> {
    let gram = weighted_gram(phi, phi, x);
    let b = match x {
        Some(x) => mat_tr_vec(phi, &x.mul_vec(v)),
        None => mat_tr_vec(phi, v),
    };
    let sol = Cholesky::new(gram.as_ref())?.solve(crate::linalg::vec_to_col(&b).as_ref());
    Ok(col_vec(sol.as_ref(), 0))
}

impl ReducedHistory {
    pub fn zero(space: &SpaceModel) -> Self {
        let s = space.scheme.steps();
        Self {
            u: vec![vec![0.0; space.n_u()]; s],
            d: vec![vec![0.0; space.n_u()]; s],
            constraints: space.constraint_sizes().into_iter().map(|n| vec![0.0; n]).collect(),
        }
    }

    /// Projects full-order initial states onto the spatial bases in their norms.
    pub fn project(ops: &FomOperators, space: &SpaceModel, initial: &InitialState) -> Result<Self> {
        let s = space.scheme.steps();
        if initial.u.len() < s || initial.d.len() < s {
            return Err(Error::Dimension(format!("BDF{s} needs {s} initial states")));
        }
        let phi = space.velocity_basis.as_ref();
        let xu = Some(&ops.norm_u);
        let mut constraints = vec![coordinates(space.constraint_bases[0].as_ref(), Some(&ops.norm_p), &initial.p)?];
        for k in 0..ops.n_boundaries() {
            let r = ops.block_range(k);
            constraints.push(coordinates(space.constraint_bases[k + 1].as_ref(), None, &initial.lambda[r])?);
        }
        Ok(Self {
            u: initial.u[..s].iter().map(|u| coordinates(phi, xu, u)).collect::<Result<_>>()?,
            d: initial.d[..s].iter().map(|d| coordinates(phi, xu, d)).collect::<Result<_>>()?,
            constraints,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrbSolution {
    pub grid: TimeGrid,
    pub history: ReducedHistory,
    /// Reduced velocity per step (`n_u × N_t`).
    pub u: Mat<f64>,
    pub d: Mat<f64>,
    pub constraints: Vec<Mat<f64>>,
    pub iterations: Vec<usize>,
    /// True when every step met the tolerance.
    pub converged: bool,
    pub wall_time: Duration,
}

impl SrbSolution {
    pub fn mean_iterations(&self) -> f64 {
        self.iterations.iter().sum::<usize>() as f64 / self.iterations.len().max(1) as f64
    }

    /// Full-order fields; `velocity_rows` restricts velocity and displacement
    /// to a subset of DOFs.
    pub fn reconstruct(&self, space: &SpaceModel, velocity_rows: Option<&[usize]>) -> Trajectory {
        let phi = match velocity_rows {
            Some(rows) => Mat::from_fn(rows.len(), space.n_u(), |i, j| space.velocity_basis[(rows[i], j)]),
            None => space.velocity_basis.clone(),
        };
        let lambda_rows: usize = space.constraint_bases[1..].iter().map(|b| b.nrows()).sum();
        let nt = self.grid.n_steps;
        let mut lambda = Mat::zeros(lambda_rows, nt);
        let mut lambda0 = Vec::with_capacity(lambda_rows);
        let mut off = 0;
        for (b, x) in space.constraint_bases[1..].iter().zip(&self.constraints[1..]) {
            lambda.as_mut().subrows_mut(off, b.nrows()).copy_from(b * x);
            off += b.nrows();
        }
        for (b, x) in space.constraint_bases[1..].iter().zip(&self.history.constraints[1..]) {
            lambda0.extend(mat_vec(b.as_ref(), x));
        }
        let pb = &space.constraint_bases[0];
        Trajectory {
            grid: self.grid.clone(),
            initial: InitialState {
                u: self.history.u.iter().map(|v| mat_vec(phi.as_ref(), v)).collect(),
                d: self.history.d.iter().map(|v| mat_vec(phi.as_ref(), v)).collect(),
                p: mat_vec(pb.as_ref(), &self.history.constraints[0]),
                lambda: lambda0,
            },
            u: &phi * &self.u,
            d: &phi * &self.d,
            p: pb * &self.constraints[0],
            lambda,
            iterations: self.iterations.clone(),
            wall_time: self.wall_time,
        }
    }
}

struct StepSystem {
    h: Mat<f64>,
    lin: Mat<f64>,
    wall: Mat<f64>,
    jac_const: Mat<f64>,
    offsets: Vec<usize>,
    bdt: f64,
}

impl StepSystem {
    fn new(space: &SpaceModel, coeffs: &[f64; 3]) -> Self {
        let op = &space.operators;
        let bdt = space.bdt();
        let h = &op.mass + &op.wall_mass * Scale(coeffs[0]);
        let wall = op.wall_operator(coeffs);
        let lin = &h + &op.viscous * Scale(bdt) + &wall * Scale(bdt * bdt);
        let nu = space.n_u();
        let mut offsets = vec![nu];
        for n in space.constraint_sizes() {
            offsets.push(offsets.last().unwrap() + n);
        }
        let n = *offsets.last().unwrap();
        let mut jac_const = Mat::zeros(n, n);
        jac_const.as_mut().submatrix_mut(0, 0, nu, nu).copy_from(&lin);
        for (f, g) in op.constraints.iter().enumerate() {
            let (o, nf) = (offsets[f], g.nrows());
            jac_const.as_mut().submatrix_mut(o, 0, nf, nu).copy_from(g * Scale(bdt));
            jac_const.as_mut().submatrix_mut(0, o, nu, nf).copy_from(g.transpose() * Scale(bdt));
        }
        Self {
            h,
            lin,
            wall,
            jac_const,
            offsets,
            bdt,
        }
    }

    fn size(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn residual(&self, space: &SpaceModel, rhs: &[Vec<f64>], u_prev: &[f64], d_prev: &[f64], x: &[f64]) -> Vec<f64> {
        let nu = self.offsets[0];
        let u = &x[..nu];
        let mut r = mat_vec(self.lin.as_ref(), u);
        axpy(-1.0, &mat_vec(self.h.as_ref(), u_prev), &mut r);
        let mut forcing = space.convective.eval(u);
        axpy(1.0, &mat_vec(self.wall.as_ref(), d_prev), &mut forcing);
        for (f, g) in space.operators.constraints.iter().enumerate() {
            let xf = &x[self.offsets[f]..self.offsets[f + 1]];
            axpy(1.0, &mat_tr_vec(g.as_ref(), xf), &mut forcing);
        }
        axpy(self.bdt, &forcing, &mut r);
        for (g, b) in space.operators.constraints.iter().zip(rhs) {
            let gu = mat_vec(g.as_ref(), u);
            r.extend(gu.iter().zip(b).map(|(a, b)| self.bdt * (a - b)));
        }
        r
    }
}

pub struct SrbSolver<'m> {
    space: &'m SpaceModel,
    pub newton: NewtonConfig,
}

impl<'m> SrbSolver<'m> {
    pub fn new(space: &'m SpaceModel, newton: NewtonConfig) -> Result<Self> {
        newton.validate()?;
        Ok(Self { space, newton })
    }

    pub fn solve(&self, param: &ParameterSample, waveform: &Waveform, grid: &TimeGrid, history: &ReducedHistory) -> Result<SrbSolution> {
        let start = Instant::now();
        let space = self.space;
        let s_count = space.scheme.steps();
        if history.u.len() < s_count || history.d.len() < s_count {
            return Err(Error::Dimension(format!("BDF{s_count} needs {s_count} reduced initial states")));
        }
        let coeffs = param.membrane.coefficients()?;
        let sys = StepSystem::new(space, &coeffs);
        let quasi = match self.newton.mode {
            JacobianMode::Quasi => Some(DenseLu::new(sys.jac_const.as_ref())?),
            JacobianMode::Full => None,
        };
        let nu = space.n_u();
        let nt = grid.n_steps;
        let mut sol = SrbSolution {
            grid: grid.clone(),
            history: history.clone(),
            u: Mat::zeros(nu, nt),
            d: Mat::zeros(nu, nt),
            constraints: space.constraint_sizes().into_iter().map(|n| Mat::zeros(n, nt)).collect(),
            iterations: Vec::with_capacity(nt),
            converged: true,
            wall_time: Duration::ZERO,
        };
        let mut u_hist = history.u[..s_count].to_vec();
        let mut d_hist = history.d[..s_count].to_vec();
        let mut x: Vec<f64> = history.u[0].iter().chain(history.constraints.iter().flatten()).copied().collect();
        if x.len() != sys.size() {
            return Err(Error::Dimension("reduced history does not match the spatial bases".into()));
        }
        let mut rhs: Vec<Vec<f64>> = space.constraint_sizes().into_iter().map(|n| vec![0.0; n]).collect();
        for n in 0..nt {
            let t = grid.time(n);
            for (k, prof) in space.operators.rhs_profiles.iter().enumerate() {
                let a = waveform.eval(t, &param.flow, k);
                for (dst, p) in rhs[k + 1].iter_mut().zip(prof) {
                    *dst = a * p;
                }
            }
            let mut u_prev = vec![0.0; nu];
            let mut d_prev = vec![0.0; nu];
            for (s, a) in space.scheme.alpha.iter().enumerate() {
                axpy(*a, &u_hist[s], &mut u_prev);
                axpy(*a, &d_hist[s], &mut d_prev);
            }
            let mut r = sys.residual(space, &rhs, &u_prev, &d_prev, &x);
            let r0 = norm2(&r);
            let mut rn = r0;
            let mut it = 0;
            while r0 > 0.0 && !self.newton.satisfied(rn, r0, norm2(&x)) {
                if it == self.newton.max_iters {
                    sol.converged = false;
                    log::warn!("reduced step {n}: Newton stopped at relative residual {:.3e}", rn / r0);
                    break;
                }
                let delta = match &quasi {
                    Some(lu) => lu.solve_vec(&r)?,
                    None => {
                        let mut j = sys.jac_const.clone();
                        let jc = space.convective.jacobian(&x[..nu]);
                        let mut block = j.as_mut().submatrix_mut(0, 0, nu, nu);
                        block += &jc * Scale(sys.bdt);
                        DenseLu::new(j.as_ref())?.solve_vec(&r)?
                    }
                };
                axpy(-1.0, &delta, &mut x);
                r = sys.residual(space, &rhs, &u_prev, &d_prev, &x);
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
            axpy(sys.bdt, &u_new, &mut d_new);
            for i in 0..nu {
                sol.u[(i, n)] = u_new[i];
                sol.d[(i, n)] = d_new[i];
            }
            for (f, m) in sol.constraints.iter_mut().enumerate() {
                for (i, v) in x[sys.offsets[f]..sys.offsets[f + 1]].iter().enumerate() {
                    m[(i, n)] = *v;
                }
            }
            sol.iterations.push(it);
            u_hist.rotate_right(1);
            u_hist[0] = u_new;
            d_hist.rotate_right(1);
            d_hist[0] = d_new;
        }
        sol.wall_time = start.elapsed();
        Ok(sol)
    }
}
