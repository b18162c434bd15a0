//! File formats: Matrix Market, the sparse tensor text format, `STRB-DENSE`
//! binary arrays, key-value manifests and CSV trajectories, plus directory
//! layouts for operators and snapshot sets.

pub mod dense;
pub mod manifest;
pub mod matrix_market;
pub mod model;
pub mod tensor;

pub use dense::DenseArray;
pub use manifest::Manifest;
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use model::{load_model, load_warm_start, save_model, save_warm_start};
pub use tensor::{read_tensor, write_tensor};

use crate::error::{Error, Result};
use crate::fom::{FomOperators, InitialState, ParameterSample, Resistance, SnapshotSet, TimeGrid, Trajectory};
use faer::{Mat, MatRef};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

const MATRICES: [&str; 10] = [
    "mass",
    "stiffness",
    "divergence",
    "multiplier",
    "wall_mass",
    "wall_stiffness_1",
    "wall_stiffness_2",
    "norm_u",
    "norm_p",
    "norm_d",
];

pub fn save_operators(dir: &Path, ops: &FomOperators) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mats = [
        &ops.mass,
        &ops.stiffness,
        &ops.divergence,
        &ops.multiplier,
        &ops.wall_mass,
        &ops.wall_stiffness[0],
        &ops.wall_stiffness[1],
        &ops.norm_u,
        &ops.norm_p,
        &ops.norm_d,
    ];
    for (name, m) in MATRICES.iter().zip(mats) {
        write_matrix_market(&dir.join(format!("{name}.mtx")), m)?;
    }
    write_tensor(&dir.join("convective.tns"), &ops.convective)?;
    let flux = Mat::from_fn(ops.n_u(), ops.resistances.len(), |i, k| ops.resistances[k].flux[i]);
    DenseArray::from_mat(flux.as_ref()).write(&dir.join("resistance_flux.strb"))?;
    let profiles: Vec<f64> = ops.dirichlet_profiles.iter().flatten().copied().collect();
    DenseArray::from_vec(&profiles).write(&dir.join("dirichlet_profiles.strb"))?;
    let mut m = Manifest::new();
    let values: Vec<f64> = ops.resistances.iter().map(|r| r.value).collect();
    m.set("n_u", ops.n_u())
        .set("n_p", ops.n_p())
        .set_list("multiplier_blocks", &ops.multiplier_blocks)
        .set_list("resistance_values", &values)
        .set("wall_damping", ops.wall_damping)
        .set_list("wall_dofs", &ops.wall_dofs);
    m.write(&dir.join("operators.txt"))
}

pub fn load_operators(dir: &Path) -> Result<FomOperators> {
    let man = Manifest::read(&dir.join("operators.txt"))?;
    let mut mats = Vec::with_capacity(MATRICES.len());
    for name in MATRICES {
        mats.push(read_matrix_market(&dir.join(format!("{name}.mtx")))?);
    }
    let mut it = mats.into_iter();
    let mut next = || it.next().unwrap();
    let (mass, stiffness, divergence, multiplier, wall_mass) = (next(), next(), next(), next(), next());
    let wall_stiffness = [next(), next()];
    let (norm_u, norm_p, norm_d) = (next(), next(), next());
    let values: Vec<f64> = man.get_list("resistance_values")?;
    let flux = DenseArray::read(&dir.join("resistance_flux.strb"))?.to_mat()?;
    if flux.ncols() != values.len() {
        return Err(Error::Dimension("resistance flux columns do not match values".into()));
    }
    let resistances = values
        .iter()
        .enumerate()
        .map(|(k, &value)| Resistance {
            value,
            flux: (0..flux.nrows()).map(|i| flux[(i, k)]).collect(),
        })
        .collect();
    let blocks: Vec<usize> = man.get_list("multiplier_blocks")?;
    let profiles = DenseArray::read(&dir.join("dirichlet_profiles.strb"))?.to_vec()?;
    if profiles.len() != blocks.iter().sum::<usize>() {
        return Err(Error::Dimension("Dirichlet profile length".into()));
    }
    let mut dirichlet_profiles = Vec::new();
    let mut off = 0;
    for &b in &blocks {
        dirichlet_profiles.push(profiles[off..off + b].to_vec());
        off += b;
    }
    let ops = FomOperators {
        mass,
        stiffness,
        divergence,
        multiplier,
        wall_mass,
        wall_stiffness,
        resistances,
        convective: read_tensor(&dir.join("convective.tns"))?,
        norm_u,
        norm_p,
        norm_d,
        wall_dofs: man.get_list("wall_dofs")?,
        multiplier_blocks: blocks,
        dirichlet_profiles,
        wall_damping: man.get("wall_damping")?,
    };
    ops.check_shapes()?;
    let (nu, np) = (man.get::<usize>("n_u")?, man.get::<usize>("n_p")?);
    if nu != ops.n_u() || np != ops.n_p() {
        return Err(Error::Dimension("manifest sizes disagree with the matrices".into()));
    }
    Ok(ops)
}

pub fn save_snapshots(dir: &Path, set: &SnapshotSet) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let first = set.trajectories.first().ok_or_else(|| Error::Missing("snapshots to save".into()))?;
    let grid = &first.grid;
    let order = first.initial.u.len();
    let n_flow = set.params[0].flow.len();
    let mut m = Manifest::new();
    let times: Vec<u128> = set.trajectories.iter().map(|t| t.wall_time.as_nanos()).collect();
    m.set("count", set.len())
        .set("t0", grid.t0)
        .set("dt", grid.dt)
        .set("n_steps", grid.n_steps)
        .set("order", order)
        .set("n_flow", n_flow)
        .set_list("wall_time_ns", &times);
    m.write(&dir.join("snapshots.txt"))?;
    let params = Mat::from_fn(n_flow + 4, set.len(), |i, k| set.params[k].as_vec()[i]);
    DenseArray::from_mat(params.as_ref()).write(&dir.join("params.strb"))?;
    let stack = |f: &dyn Fn(&Trajectory) -> &Mat<f64>| -> Result<DenseArray> {
        let mats: Vec<Mat<f64>> = set.trajectories.iter().map(|t| f(t).clone()).collect();
        DenseArray::from_mats(&mats, mats[0].nrows(), mats[0].ncols())
    };
    stack(&|t| &t.u)?.write(&dir.join("u.strb"))?;
    stack(&|t| &t.p)?.write(&dir.join("p.strb"))?;
    stack(&|t| &t.lambda)?.write(&dir.join("lambda.strb"))?;
    stack(&|t| &t.d)?.write(&dir.join("d.strb"))?;
    let cols = |v: &[Vec<f64>]| Mat::from_fn(v[0].len(), v.len(), |i, j| v[j][i]);
    let init_u: Vec<Mat<f64>> = set.trajectories.iter().map(|t| cols(&t.initial.u)).collect();
    let init_d: Vec<Mat<f64>> = set.trajectories.iter().map(|t| cols(&t.initial.d)).collect();
    let n_u = init_u[0].nrows();
    DenseArray::from_mats(&init_u, n_u, order)?.write(&dir.join("init_u.strb"))?;
    DenseArray::from_mats(&init_d, n_u, order)?.write(&dir.join("init_d.strb"))?;
    let p0: Vec<Vec<f64>> = set.trajectories.iter().map(|t| t.initial.p.clone()).collect();
    let l0: Vec<Vec<f64>> = set.trajectories.iter().map(|t| t.initial.lambda.clone()).collect();
    DenseArray::from_mat(cols(&p0).as_ref()).write(&dir.join("init_p.strb"))?;
    DenseArray::from_mat(cols(&l0).as_ref()).write(&dir.join("init_lambda.strb"))?;
    Ok(())
}

pub fn load_snapshots(dir: &Path) -> Result<SnapshotSet> {
    let m = Manifest::read(&dir.join("snapshots.txt"))?;
    let count: usize = m.get("count")?;
    let grid = TimeGrid::new(m.get("t0")?, m.get("dt")?, m.get("n_steps")?)?;
    let n_flow: usize = m.get("n_flow")?;
    let times: Vec<u64> = m.get_list("wall_time_ns")?;
    let params = DenseArray::read(&dir.join("params.strb"))?.to_mat()?;
    let load = |name: &str| -> Result<Vec<Mat<f64>>> {
        let mats = DenseArray::read(&dir.join(name))?.to_mats()?;
        if mats.len() != count {
            return Err(Error::Dimension(format!("{name} holds {} samples, expected {count}", mats.len())));
        }
        Ok(mats)
    };
    let (u, p, lambda, d) = (load("u.strb")?, load("p.strb")?, load("lambda.strb")?, load("d.strb")?);
    let (iu, id) = (load("init_u.strb")?, load("init_d.strb")?);
    let p0 = DenseArray::read(&dir.join("init_p.strb"))?.to_mat()?;
    let l0 = DenseArray::read(&dir.join("init_lambda.strb"))?.to_mat()?;
    let colv = |a: &Mat<f64>, j: usize| -> Vec<f64> { (0..a.nrows()).map(|i| a[(i, j)]).collect() };
    let mut set = SnapshotSet {
        params: Vec::with_capacity(count),
        trajectories: Vec::with_capacity(count),
    };
    for k in 0..count {
        set.params.push(ParameterSample::from_vec(&colv(&params, k), n_flow)?);
        set.trajectories.push(Trajectory {
            grid: grid.clone(),
            initial: InitialState {
                u: (0..iu[k].ncols()).map(|s| colv(&iu[k], s)).collect(),
                d: (0..id[k].ncols()).map(|s| colv(&id[k], s)).collect(),
                p: colv(&p0, k),
                lambda: colv(&l0, k),
            },
            u: u[k].clone(),
            p: p[k].clone(),
            lambda: lambda[k].clone(),
            d: d[k].clone(),
            iterations: Vec::new(),
            wall_time: Duration::from_nanos(times.get(k).copied().unwrap_or(0)),
        });
    }
    Ok(set)
}

/// CSV with a `t` column followed by one column per DOF.
pub fn format_trajectory_csv(times: &[f64], states: MatRef<'_, f64>, prefix: &str) -> String {
    let mut s = String::from("t");
    for i in 0..states.nrows() {
        let _ = write!(s, ",{prefix}{i}");
    }
    s.push('\n');
    for (n, t) in times.iter().enumerate() {
        let _ = write!(s, "{t:e}");
        for i in 0..states.nrows() {
            let _ = write!(s, ",{:e}", states[(i, n)]);
        }
        s.push('\n');
    }
    s
}

pub fn write_trajectory_csv(path: &Path, times: &[f64], states: MatRef<'_, f64>, prefix: &str) -> Result<()> {
    std::fs::write(path, format_trajectory_csv(times, states, prefix))?;
    Ok(())
}
