//! Self-checks run by the `validate` command on a freshly generated instance.

use super::campaign::{build_offline, CampaignConfig, FieldTolerances};
use super::metrics::st_norm_sq;
use crate::assembly::{HyperSettings, Lifting};
use crate::error::Result;
use crate::fom::{generate_snapshots, BdfScheme, FomOperators, InitialState, Trajectory};
use crate::linalg::{max_abs, norm2, weighted_gram};
use crate::solvers::{project_trajectory, reconstruct_space_time, WarmStartStore, WarmStartStrategy};
use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

/// Worst relative defect of `d_n = βΔt u_n + Σ_s α_s d_{n-s}` over all steps.
pub fn kinematic_defect(t: &Trajectory, scheme: &BdfScheme) -> f64 {
    let bdt = scheme.beta * t.grid.dt;
    let scale = max_abs(t.d.as_ref()).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for n in 0..t.d.ncols() {
        for i in 0..t.d.nrows() {
            let mut rhs = bdt * t.u[(i, n)];
            for (s, a) in scheme.alpha.iter().enumerate() {
                rhs += a * if n > s { t.d[(i, n - s - 1)] } else { t.initial.d[s - n][i] };
            }
            worst = worst.max((t.d[(i, n)] - rhs).abs() / scale);
        }
    }
    worst
}

fn orthonormality(basis: MatRef<'_, f64>, x: Option<&crate::linalg::CsrMatrix>) -> f64 {
    let g = weighted_gram(basis, basis, x);
    let eye = Mat::<f64>::identity(g.nrows(), g.ncols());
    max_abs((g - eye).as_ref())
}

/// Runs the invariant suite with the first tolerance set of `cfg` on its
/// training parameters.
pub fn validate_invariants(ops: &FomOperators, cfg: &CampaignConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train_seed);
    let mut random = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };

    ops.check_shapes()?;
    let mass_scale = ops.mass.max_abs().max(f64::MIN_POSITIVE);
    checks.push(Check {
        name: "mass symmetry",
        value: ops.mass.asymmetry() / mass_scale,
        tolerance: 1e-12,
    });
    checks.push(Check {
        name: "convective energy neutrality",
        value: ops.convective_energy(&random(ops.n_u())),
        tolerance: 1e-12,
    });

    let scheme = cfg.scheme();
    let train = generate_snapshots(
        ops,
        &scheme,
        &cfg.grid(),
        &cfg.waveform,
        &cfg.train_params()?,
        &InitialState::zero(ops, cfg.order),
        &cfg.fom_newton,
        cfg.exec,
    )?;
    checks.push(Check {
        name: "full-order kinematic coupling",
        value: train.trajectories.iter().map(|t| kinematic_defect(t, &scheme)).fold(0.0, f64::max),
        tolerance: 1e-12,
    });

    let tol: FieldTolerances = cfg.tolerances[0];
    let mut podi_cfg = cfg.clone();
    podi_cfg.warm_start = WarmStartStrategy::Podi;
    podi_cfg.lifting = false;
    // The derivative identities hold for the untruncated convective expansion.
    let hyper = HyperSettings {
        n_c: None,
        n_cj: None,
        include_supremizers: true,
    };
    let off = build_offline(ops, &train, &tol, &hyper, &podi_cfg)?;
    let model = &off.model;
    let b = &model.bases;

    let pod_modes = b.velocity.spatial.subcols(0, b.velocity_pod_modes);
    checks.push(Check {
        name: "velocity spatial orthonormality",
        value: orthonormality(pod_modes, Some(&ops.norm_u)),
        tolerance: 1e-10,
    });
    checks.push(Check {
        name: "pressure spatial orthonormality",
        value: orthonormality(b.constraints[0].spatial.as_ref(), Some(&ops.norm_p)),
        tolerance: 1e-10,
    });
    checks.push(Check {
        name: "temporal orthonormality",
        value: std::iter::once(&b.velocity).chain(&b.constraints).map(|f| orthonormality(f.temporal.as_ref(), None)).fold(0.0, f64::max),
        tolerance: 1e-10,
    });

    // Training projection error, aggregated over the training set.
    let mut err = [0.0; 3];
    let mut den = [0.0; 3];
    for t in &train.trajectories {
        let w = project_trajectory(model, ops, t, false)?;
        let r = reconstruct_space_time(model, &w, 0.0, None, None)?;
        for (k, (a, f, x)) in [(&r.u, &t.u, Some(&ops.norm_u)), (&r.p, &t.p, Some(&ops.norm_p)), (&r.lambda, &t.lambda, None)].into_iter().enumerate() {
            err[k] += st_norm_sq((a - f).as_ref(), x);
            den[k] += st_norm_sq(f.as_ref(), x);
        }
    }
    checks.push(Check {
        name: "velocity projection error within tolerance",
        value: (err[0] / den[0].max(f64::MIN_POSITIVE)).sqrt(),
        tolerance: tol.u,
    });
    checks.push(Check {
        name: "pressure projection error within tolerance",
        value: (err[1] / den[1].max(f64::MIN_POSITIVE)).sqrt(),
        tolerance: tol.p,
    });
    checks.push(Check {
        name: "multiplier projection error within tolerance",
        value: (err[2] / den[2].max(f64::MIN_POSITIVE)).sqrt(),
        tolerance: tol.lambda_space.max(tol.lambda_time),
    });

    // Reduced Jacobian against central differences along a random direction.
    let coeffs = train.params[0].membrane.coefficients()?;
    let f = model.assemble_rhs(&train.params[0].flow, &cfg.waveform, 0.0);
    let w = random(model.size());
    let v = random(model.size());
    let h = 1e-6;
    let shifted = |s: f64| -> Vec<f64> { w.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
    let rp = model.residual(&coeffs, &f, &shifted(h), None);
    let rm = model.residual(&coeffs, &f, &shifted(-h), None);
    let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let jv = crate::linalg::mat_vec(model.residual_jacobian(&coeffs, &w, None).as_ref(), &v);
    let diff: Vec<f64> = jv.iter().zip(&fd).map(|(a, b)| a - b).collect();
    checks.push(Check {
        name: "reduced Jacobian against finite differences",
        value: norm2(&diff) / norm2(&jv).max(f64::MIN_POSITIVE),
        tolerance: 1e-5,
    });

    // Quadratic homogeneity: Ĵ_c(û) û = 2 ĉ(û).
    let nu = model.velocity_size();
    let c = model.convective_residual(&w[..nu], None);
    let mut jc = Mat::zeros(model.size(), model.size());
    model.add_convective_jacobian(&w[..nu], None, jc.as_mut(), 1.0);
    let ju = crate::linalg::mat_vec(jc.as_ref().submatrix(0, 0, nu, nu), &w[..nu]);
    let euler: Vec<f64> = ju.iter().zip(&c).map(|(a, b)| a - 2.0 * b).collect();
    checks.push(Check {
        name: "convective Euler identity",
        value: norm2(&euler) / (2.0 * norm2(&c)).max(f64::MIN_POSITIVE),
        tolerance: 1e-10,
    });

    let store: &WarmStartStore = &off.store;
    let mut podi: f64 = 0.0;
    for (p, t) in train.params.iter().zip(&train.trajectories) {
        let exact = project_trajectory(model, ops, t, false)?;
        let got = store.predict(p)?;
        let diff: Vec<f64> = got.iter().zip(&exact).map(|(a, b)| a - b).collect();
        podi = podi.max(norm2(&diff) / norm2(&exact).max(f64::MIN_POSITIVE));
    }
    checks.push(Check {
        name: "interpolated warm start reproduces training coordinates",
        value: podi,
        tolerance: 1e-9,
    });

    // Lifted reconstruction from a nonzero state keeps the initial data and
    // the kinematic relation.
    let ic = InitialState::from_trajectory_end(&train.trajectories[0], cfg.order);
    Lifting::new(ops, model, &ic)?;
    let lifted = reconstruct_space_time(model, &random(model.size()), cfg.grid().end(), Some(&ic), None)?;
    checks.push(Check {
        name: "lifted reconstruction keeps the initial state",
        value: if lifted.initial == ic { 0.0 } else { 1.0 },
        tolerance: 0.0,
    });
    checks.push(Check {
        name: "lifted reconstruction kinematic coupling",
        value: kinematic_defect(&lifted, &scheme),
        tolerance: 1e-12,
    });
    Ok(checks)
}
