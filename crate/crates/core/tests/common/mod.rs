//! Test support: small synthetic instances, random bases and a dense
//! space-time oracle that evaluates the full-order residual step by step.
#![allow(dead_code)]

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stgrb_core::bases::{FieldBasis, ReducedBasisSet};
use stgrb_core::fom::{
    generate_operators, BdfScheme, FomOperators, InitialState, MembraneParams, ParameterSample, SynthConfig, Waveform,
};
use stgrb_core::linalg::{orthonormal_extend, CsrMatrix};

pub fn small_config(seed: u64) -> SynthConfig {
    SynthConfig {
        n_u: 30,
        n_p: 5,
        multiplier_blocks: vec![3, 2],
        seed,
        ..SynthConfig::default()
    }
}

pub fn small_ops(seed: u64) -> FomOperators {
    generate_operators(&small_config(seed)).unwrap()
}

pub fn param(flow: [f64; 3], membrane: [f64; 4]) -> ParameterSample {
    ParameterSample {
        flow: flow.to_vec(),
        membrane: MembraneParams::from_slice(&membrane).unwrap(),
    }
}

pub fn default_param() -> ParameterSample {
    param([5.0, 0.2, 0.5], [0.1, 1.2, 4e6, 0.45])
}

pub fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize, norm: Option<&CsrMatrix>) -> Mat<f64> {
    let cand = Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let (q, added) = orthonormal_extend(Mat::<f64>::zeros(rows, 0).as_ref(), cand.as_ref(), norm, 1e-10);
    assert_eq!(added, cols);
    q
}

/// Random bases with the given spatial sizes (velocity, pressure, one per
/// boundary) and temporal sizes.
pub fn random_bases(ops: &FomOperators, n_t: usize, spatial: &[usize], temporal: &[usize], seed: u64) -> ReducedBasisSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = Vec::new();
    let rows: Vec<usize> = std::iter::once(ops.n_u())
        .chain(std::iter::once(ops.n_p()))
        .chain(ops.multiplier_blocks.iter().copied())
        .collect();
    for (f, &r) in rows.iter().enumerate() {
        let norm = match f {
            0 => Some(&ops.norm_u),
            1 => Some(&ops.norm_p),
            _ => None,
        };
        let s = random_orthonormal(&mut rng, r, spatial[f], norm);
        let t = if temporal[f] == n_t {
            Mat::<f64>::identity(n_t, n_t)
        } else {
            random_orthonormal(&mut rng, n_t, temporal[f], None)
        };
        fields.push(FieldBasis::new(s, t));
    }
    let velocity = fields.remove(0);
    ReducedBasisSet::from_fields(velocity, fields)
}

/// Full-order space-time trajectory, one column per step.
pub struct StState {
    pub u: Mat<f64>,
    pub p: Mat<f64>,
    pub lambda: Mat<f64>,
}

/// Dense full-order space-time residual with explicit history handling.
pub struct Oracle<'a> {
    pub ops: &'a FomOperators,
    pub scheme: BdfScheme,
    pub dt: f64,
    pub n_t: usize,
    pub coeffs: [f64; 3],
    pub flow: Vec<f64>,
    pub waveform: Waveform,
    pub t0: f64,
    pub initial: InitialState,
    pub convection: bool,
}

fn dense_mv(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum()).collect()
}

fn col(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

impl<'a> Oracle<'a> {
    pub fn residual(&self, st: &StState) -> StState {
        let ops = self.ops;
        let (nu, np, nl) = (ops.n_u(), ops.n_p(), ops.n_lambda());
        let bdt = self.scheme.beta * self.dt;
        let m = ops.mass.to_dense();
        let ms = ops.wall_mass.to_dense();
        let h = &m + &ms * faer::Scale(self.coeffs[0]);
        let ar = ops.stiffness.to_dense() + ops.resistance_matrix().to_dense();
        let ks = ops.wall_stiffness[0].to_dense() * faer::Scale(self.coeffs[1])
            + ops.wall_stiffness[1].to_dense() * faer::Scale(self.coeffs[2])
            + &ms * faer::Scale(ops.wall_damping);
        let b = ops.divergence.to_dense();
        let l = ops.multiplier.to_dense();
        let mut out = StState {
            u: Mat::zeros(nu, self.n_t),
            p: Mat::zeros(np, self.n_t),
            lambda: Mat::zeros(nl, self.n_t),
        };
        // Past states: index 0 is the most recent.
        let mut u_hist: Vec<Vec<f64>> = self.initial.u.clone();
        let mut d_hist: Vec<Vec<f64>> = self.initial.d.clone();
        for n in 0..self.n_t {
            let un = col(&st.u, n);
            let mut dn: Vec<f64> = un.iter().map(|v| bdt * v).collect();
            let mut du = un.clone();
            for (s, a) in self.scheme.alpha.iter().enumerate() {
                for i in 0..nu {
                    dn[i] += a * d_hist[s][i];
                    du[i] -= a * u_hist[s][i];
                }
            }
            let mut r = dense_mv(&h, &du);
            let mut force = dense_mv(&ar, &un);
            let bt_p = dense_mv(&b.transpose().to_owned(), &col(&st.p, n));
            let lt_l = dense_mv(&l.transpose().to_owned(), &col(&st.lambda, n));
            let kd = dense_mv(&ks, &dn);
            let c = if self.convection { ops.convective.eval(&un) } else { vec![0.0; nu] };
            for i in 0..nu {
                force[i] += bt_p[i] + lt_l[i] + kd[i] + c[i];
                r[i] += bdt * force[i];
                out.u[(i, n)] = r[i];
            }
            let bu = dense_mv(&b, &un);
            for i in 0..np {
                out.p[(i, n)] = bdt * bu[i];
            }
            let lu = dense_mv(&l, &un);
            let t = self.t0 + (n + 1) as f64 * self.dt;
            let mut g = Vec::new();
            for (k, prof) in ops.dirichlet_profiles.iter().enumerate() {
                let a = self.waveform.eval(t, &self.flow, k);
                g.extend(prof.iter().map(|v| a * v));
            }
            for i in 0..nl {
                out.lambda[(i, n)] = bdt * (lu[i] - g[i]);
            }
            u_hist.rotate_right(1);
            u_hist[0] = un;
            d_hist.rotate_right(1);
            d_hist[0] = dn;
        }
        out
    }
}

/// Maps reduced coefficients (index `ℓ_s n_t + ℓ_t`, fields stacked) to a
/// full-order trajectory, plus an optional constant offset per field.
pub fn expand(bases: &ReducedBasisSet, ops: &FomOperators, w: &[f64], offset: Option<&InitialState>) -> StState {
    let n_t = bases.n_steps();
    let mut off = 0;
    let mut fields = Vec::new();
    for b in std::iter::once(&bases.velocity).chain(&bases.constraints) {
        let (ns, nt) = (b.n_space(), b.n_time());
        let coeff = Mat::from_fn(ns, nt, |i, j| w[off + i * nt + j]);
        off += ns * nt;
        fields.push(&b.spatial * coeff * b.temporal.transpose());
    }
    let mut lambda = Mat::zeros(ops.n_lambda(), n_t);
    for k in 0..ops.n_boundaries() {
        let r = ops.block_range(k);
        for i in 0..r.len() {
            for n in 0..n_t {
                lambda[(r.start + i, n)] = fields[2 + k][(i, n)];
            }
        }
    }
    let mut st = StState {
        u: fields[0].clone(),
        p: fields[1].clone(),
        lambda,
    };
    if let Some(init) = offset {
        for n in 0..n_t {
            for i in 0..ops.n_u() {
                st.u[(i, n)] += init.u[0][i];
            }
            for i in 0..ops.n_p() {
                st.p[(i, n)] += init.p[i];
            }
            for i in 0..ops.n_lambda() {
                st.lambda[(i, n)] += init.lambda[i];
            }
        }
    }
    st
}

/// Galerkin projection `Πᵀ r` of a full-order space-time residual.
pub fn project(bases: &ReducedBasisSet, ops: &FomOperators, r: &StState) -> Vec<f64> {
    let mut out = Vec::new();
    let mut push = |b: &FieldBasis, m: Mat<f64>| {
        let c = b.spatial.transpose() * m * &b.temporal;
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                out.push(c[(i, j)]);
            }
        }
    };
    push(&bases.velocity, r.u.clone());
    push(&bases.constraints[0], r.p.clone());
    for k in 0..ops.n_boundaries() {
        let rr = ops.block_range(k);
        push(&bases.constraints[k + 1], r.lambda.subrows(rr.start, rr.len()).to_owned());
    }
    out
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

pub fn max_rel_mat(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let scale = stgrb_core::linalg::max_abs(b.as_ref()).max(1e-300);
    stgrb_core::linalg::max_abs_diff(a.as_ref(), b.as_ref()) / scale
}

pub fn flow_box() -> stgrb_core::fom::ParamBox {
    stgrb_core::fom::ParamBox::new(vec![1.0, 0.1, 0.3], vec![4.0, 0.5, 0.8]).unwrap()
}

pub fn membrane_box() -> stgrb_core::fom::ParamBox {
    stgrb_core::fom::ParamBox::new(vec![0.05, 1.0, 1e6, 0.3], vec![0.15, 1.2, 8e6, 0.49]).unwrap()
}

/// Snapshots, bases and reduced model of a small synthetic problem.
pub struct Pipeline {
    pub ops: FomOperators,
    pub scheme: BdfScheme,
    pub grid: stgrb_core::fom::TimeGrid,
    pub waveform: Waveform,
    pub train: stgrb_core::fom::SnapshotSet,
    pub model: stgrb_core::assembly::ReducedModel,
}

pub struct PipelineSpec {
    pub synth: SynthConfig,
    pub order: usize,
    pub dt: f64,
    pub n_t: usize,
    pub n_train: usize,
    pub basis: stgrb_core::bases::BasisOptions,
    pub hyper: stgrb_core::assembly::HyperSettings,
}

impl PipelineSpec {
    pub fn small(eps: f64) -> Self {
        Self {
            synth: small_config(21),
            order: 2,
            dt: 0.01,
            n_t: 40,
            n_train: 8,
            basis: stgrb_core::bases::BasisOptions::uniform(eps),
            hyper: Default::default(),
        }
    }

    pub fn build(self) -> Pipeline {
        use stgrb_core::fom::{generate_snapshots, sample_parameters, NewtonSettings, TimeGrid};
        let ops = generate_operators(&self.synth).unwrap();
        let scheme = BdfScheme::new(self.order).unwrap();
        let grid = TimeGrid::new(0.0, self.dt, self.n_t).unwrap();
        let waveform = Waveform::Periodic { period: self.dt * self.n_t as f64 };
        let params = sample_parameters(&flow_box(), &membrane_box(), self.n_train, 7).unwrap();
        let train = generate_snapshots(
            &ops,
            &scheme,
            &grid,
            &waveform,
            &params,
            &InitialState::zero(&ops, self.order),
            &NewtonSettings::default(),
            stgrb_core::par::Execution::Parallel,
        )
        .unwrap();
        let bases = stgrb_core::bases::build_bases(&ops, &train, &self.basis).unwrap();
        let model = stgrb_core::assembly::ReducedModel::build(
            &ops,
            bases,
            &scheme,
            self.dt,
            &self.hyper,
            stgrb_core::par::Execution::Parallel,
        )
        .unwrap();
        Pipeline {
            ops,
            scheme,
            grid,
            waveform,
            train,
            model,
        }
    }
}

/// Relative error `‖a − b‖ / ‖b‖` in the space-time norm induced by `x`.
pub fn st_rel_error(a: &Mat<f64>, b: &Mat<f64>, x: Option<&CsrMatrix>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for n in 0..b.ncols() {
        let e: Vec<f64> = (0..b.nrows()).map(|i| a[(i, n)] - b[(i, n)]).collect();
        let r: Vec<f64> = (0..b.nrows()).map(|i| b[(i, n)]).collect();
        match x {
            Some(x) => {
                num += x.quad_form(&e);
                den += x.quad_form(&r);
            }
            None => {
                num += e.iter().map(|v| v * v).sum::<f64>();
                den += r.iter().map(|v| v * v).sum::<f64>();
            }
        }
    }
    (num / den).sqrt()
}

/// Campaign over the small synthetic instance: BDF2, 40 steps of one period,
/// the test boxes above and serial timing with a single repetition.
pub fn small_campaign(eps: f64) -> stgrb_core::bench::CampaignConfig {
    let dt = 0.01;
    let n_steps = 40;
    stgrb_core::bench::CampaignConfig {
        order: 2,
        dt,
        n_steps,
        waveform: Waveform::Periodic { period: dt * n_steps as f64 },
        flow_box: flow_box(),
        membrane_box: membrane_box(),
        n_train: 8,
        n_test: 3,
        train_seed: 7,
        test_seed: 11,
        tolerances: vec![stgrb_core::bench::FieldTolerances::uniform(eps)],
        ranks: vec![Default::default()],
        repeats: 1,
        ..Default::default()
    }
}
