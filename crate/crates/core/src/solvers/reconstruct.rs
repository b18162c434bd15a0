use crate::assembly::{history_response, ReducedModel};
use crate::error::{Error, Result};
use crate::fom::{FomOperators, InitialState, Trajectory};
use faer::Mat;
use std::time::Duration;

fn coefficient_block(model: &ReducedModel, w: &[f64], field: usize) -> Mat<f64> {
    let (ns, nt) = model.layout.shape(field);
    let off = model.layout.offset(field);
    Mat::from_fn(ns, nt, |i, j| w[off + i * nt + j])
}

fn add_outer(m: &mut Mat<f64>, space: &[f64], time: &[f64]) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] += space[i] * time[j];
        }
    }
}

/// Full-order trajectory from space-time coordinates. With `initial` set the
/// coordinates are read as offsets from the lifted state; `velocity_rows`
/// restricts velocity and displacement to a subset of DOFs.
pub fn reconstruct_space_time(
    model: &ReducedModel,
    w: &[f64],
    t0: f64,
    initial: Option<&InitialState>,
    velocity_rows: Option<&[usize]>,
) -> Result<Trajectory> {
    if w.len() != model.size() {
        return Err(Error::Dimension(format!("{} coordinates for a model of size {}", w.len(), model.size())));
    }
    let bases = &model.bases;
    let nt = model.n_steps();
    let s_count = model.space.scheme.steps();
    let phi_full = &bases.velocity.spatial;
    let rows: Vec<usize> = match velocity_rows {
        Some(r) => r.to_vec(),
        None => (0..phi_full.nrows()).collect(),
    };
    let phi = Mat::from_fn(rows.len(), phi_full.ncols(), |i, j| phi_full[(rows[i], j)]);
    let pick = |v: &[f64]| -> Vec<f64> { rows.iter().map(|&i| v[i]).collect() };

    let uc = coefficient_block(model, w, 0);
    let mut u = &phi * &uc * bases.velocity.temporal.transpose();
    let mut d = &phi * &uc * model.time.primitive.transpose();
    let mut fields: Vec<Mat<f64>> = (1..model.layout.n_fields())
        .map(|f| {
            let b = &bases.constraints[f - 1];
            b.expand(coefficient_block(model, w, f).as_ref())
        })
        .collect();
    let n_p = fields[0].nrows();
    let n_lambda: usize = fields[1..].iter().map(|m| m.nrows()).sum();

    let init = match initial {
        Some(init) => {
            if init.u.len() < s_count || init.d.len() < s_count || init.p.len() != n_p || init.lambda.len() != n_lambda {
                return Err(Error::Dimension("initial state does not match the bases".into()));
            }
            let ones = vec![1.0; nt];
            let u0 = pick(&init.u[0]);
            add_outer(&mut u, &u0, &ones);
            add_outer(&mut d, &u0, &model.time.ramp_signal);
            for (h, dh) in history_response(&model.space.scheme, nt).iter().zip(&init.d) {
                add_outer(&mut d, &pick(dh), h);
            }
            add_outer(&mut fields[0], &init.p, &ones);
            let mut off = 0;
            for m in fields[1..].iter_mut() {
                let r = m.nrows();
                add_outer(m, &init.lambda[off..off + r], &ones);
                off += r;
            }
            InitialState {
                u: init.u[..s_count].iter().map(|v| pick(v)).collect(),
                d: init.d[..s_count].iter().map(|v| pick(v)).collect(),
                p: init.p.clone(),
                lambda: init.lambda.clone(),
            }
        }
        None => InitialState {
            u: vec![vec![0.0; rows.len()]; s_count],
            d: vec![vec![0.0; rows.len()]; s_count],
            p: vec![0.0; n_p],
            lambda: vec![0.0; n_lambda],
        },
    };
    let mut lambda = Mat::zeros(n_lambda, nt);
    let mut off = 0;
    for m in &fields[1..] {
        lambda.as_mut().subrows_mut(off, m.nrows()).copy_from(m);
        off += m.nrows();
    }
    Ok(Trajectory {
        grid: model.grid(t0),
        initial: init,
        u,
        d,
        p: fields.swap_remove(0),
        lambda,
        iterations: Vec::new(),
        wall_time: Duration::ZERO,
    })
}

/// Space-time coordinates of a full-order trajectory: `Φᵀ X (S − s₀ ⊗ 1) Ψ`
/// per field, with the offset `s₀` taken from the trajectory's initial state
/// when `lifted` is set.
pub fn project_trajectory(model: &ReducedModel, ops: &FomOperators, traj: &Trajectory, lifted: bool) -> Result<Vec<f64>> {
    let nt = model.n_steps();
    if traj.u.ncols() != nt {
        return Err(Error::Dimension(format!("trajectory with {} steps for a {nt}-step model", traj.u.ncols())));
    }
    let shift = |m: &Mat<f64>, v: &[f64]| -> Mat<f64> {
        if lifted {
            Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - v[i])
        } else {
            m.clone()
        }
    };
    let mut out = Vec::with_capacity(model.size());
    let mut push = |c: Mat<f64>| {
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                out.push(c[(i, j)]);
            }
        }
    };
    let b = &model.bases;
    push(b.velocity.project(shift(&traj.u, &traj.initial.u[0]).as_ref(), Some(&ops.norm_u)));
    push(b.constraints[0].project(shift(&traj.p, &traj.initial.p).as_ref(), Some(&ops.norm_p)));
    for k in 0..ops.n_boundaries() {
        let r = ops.block_range(k);
        let block = traj.lambda.subrows(r.start, r.len()).to_owned();
        push(b.constraints[k + 1].project(shift(&block, &traj.initial.lambda[r]).as_ref(), None));
    }
    Ok(out)
}
