//! Nonzero initial conditions. The space-time unknowns are written as
//! `u = u₀ ⊗ 1 + Π û` with displacement `d = Σ_s d_{1-s} ⊗ h_s + u₀ ⊗ t + Π_d û`,
//! where `h_s` is the free response of the displacement recursion to its
//! `s`-th history slot and `t` the response to a unit velocity. For a
//! constant history the `h_s` sum to one. The known part moves to the
//! right-hand side, projected exactly through spatial products with the
//! full-order operators and temporal sums of the basis functions.

use super::model::ReducedModel;
use crate::error::{Error, Result};
use crate::fom::{FomOperators, InitialState};
use crate::linalg::{axpy, mat_tr_vec, CsrMatrix};
use faer::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    pub initial: InitialState,
    /// `X_u`-projection coordinates of `u₀`.
    pub velocity_coords: Vec<f64>,
    mass_hist: Vec<Vec<f64>>,
    wall_mass_hist: Vec<Vec<f64>>,
    viscous_u0: Vec<f64>,
    constraint_forces: Vec<f64>,
    constraint_rows: Vec<Vec<f64>>,
    wall_d: Vec<[Vec<f64>; 3]>,
    wall_u0: [Vec<f64>; 3],
    /// `Ψᵀ h_s` for each history slot.
    history_modes: Vec<Vec<f64>>,
}

/// Free responses `h_s` of `y_n = Σ_s α_s y_{n-s}` to a unit value in history
/// slot `s` (the state `s - 1` steps before the first step), over `n_t` steps.
pub fn history_response(scheme: &crate::fom::BdfScheme, n_t: usize) -> Vec<Vec<f64>> {
    let order = scheme.alpha.len();
    (0..order)
        .map(|slot| {
            // y[j] with j = 0..order for the history (most recent last).
            let mut y = vec![0.0; order + n_t];
            y[order - 1 - slot] = 1.0;
            for n in order..order + n_t {
                y[n] = scheme.alpha.iter().enumerate().map(|(s, a)| a * y[n - 1 - s]).sum();
            }
            y.split_off(order)
        })
        .collect()
}

fn proj(phi: &Mat<f64>, op: &CsrMatrix, v: &[f64]) -> Vec<f64> {
    mat_tr_vec(phi.as_ref(), &op.mul_vec(v))
}

impl Lifting {
    pub fn new(ops: &FomOperators, model: &ReducedModel, initial: &InitialState) -> Result<Self> {
        let s = model.space.scheme.steps();
        if initial.u.len() < s || initial.d.len() < s {
            return Err(Error::Dimension(format!("lifting needs {s} initial states")));
        }
        let phi = &model.space.velocity_basis;
        let u0 = &initial.u[0];
        let mut forces = ops.divergence.tr_mul_vec(&initial.p);
        axpy(1.0, &ops.multiplier.tr_mul_vec(&initial.lambda), &mut forces);
        let cops = ops.constraint_operators();
        let wall = |v: &[f64]| {
            [
                proj(phi, &ops.wall_stiffness[0], v),
                proj(phi, &ops.wall_stiffness[1], v),
                proj(phi, &ops.wall_mass, v),
            ]
        };
        Ok(Self {
            initial: initial.clone(),
            velocity_coords: proj(phi, &ops.norm_u, u0),
            mass_hist: initial.u[..s].iter().map(|u| proj(phi, &ops.mass, u)).collect(),
            wall_mass_hist: initial.u[..s].iter().map(|u| proj(phi, &ops.wall_mass, u)).collect(),
            viscous_u0: proj(phi, &ops.viscous_with_resistance(), u0),
            constraint_forces: mat_tr_vec(phi.as_ref(), &forces),
            constraint_rows: cops
                .iter()
                .zip(&model.space.constraint_bases)
                .map(|(g, b)| mat_tr_vec(b.as_ref(), &g.mul_vec(u0)))
                .collect(),
            wall_d: initial.d[..s].iter().map(|d| wall(d)).collect(),
            wall_u0: wall(u0),
            history_modes: history_response(&model.space.scheme, model.n_steps())
                .iter()
                .map(|h| mat_tr_vec(model.bases.velocity.temporal.as_ref(), h))
                .collect(),
        })
    }

    /// History contribution `F̂₀` of the first `S` steps.
    pub fn history_rhs(&self, model: &ReducedModel, coeffs: &[f64; 3]) -> Vec<f64> {
        let (ns, nt) = model.layout.shape(0);
        let psi = &model.bases.velocity.temporal;
        let alpha = &model.space.scheme.alpha;
        let mut f = vec![0.0; model.size()];
        for n in 0..alpha.len().min(psi.nrows()) {
            // Σ_{s > n} α_s H u_{state at n - s}
            let mut spatial = vec![0.0; ns];
            for s in (n + 1)..=alpha.len() {
                let j = s - n - 1;
                axpy(alpha[s - 1], &self.mass_hist[j], &mut spatial);
                axpy(alpha[s - 1] * coeffs[0], &self.wall_mass_hist[j], &mut spatial);
            }
            for ls in 0..ns {
                for lt in 0..nt {
                    f[ls * nt + lt] += spatial[ls] * psi[(n, lt)];
                }
            }
        }
        f
    }

    /// Contribution `F̂₀,L` of the lifted state through the linear operator.
    pub fn lift_rhs(&self, model: &ReducedModel, coeffs: &[f64; 3]) -> Vec<f64> {
        let (ns, nt) = model.layout.shape(0);
        let t = &model.time;
        let bdt = model.bdt();
        let alpha = &model.space.scheme.alpha;
        let cs = model.space.operators.wall_damping;
        let mut f = vec![0.0; model.size()];
        let mass_t: Vec<f64> = (0..nt)
            .map(|lt| t.ones[lt] - alpha.iter().zip(&t.shifted_ones).map(|(a, o)| a * o[lt]).sum::<f64>())
            .collect();
        let wall_combo = |w: &[Vec<f64>; 3], i: usize| coeffs[1] * w[0][i] + coeffs[2] * w[1][i] + cs * w[2][i];
        for ls in 0..ns {
            let h = self.mass_hist[0][ls] + coeffs[0] * self.wall_mass_hist[0][ls];
            let steady = bdt * (self.viscous_u0[ls] + self.constraint_forces[ls]);
            let ramp = bdt * wall_combo(&self.wall_u0, ls);
            let hist: Vec<f64> = self.wall_d.iter().map(|w| bdt * wall_combo(w, ls)).collect();
            for lt in 0..nt {
                let free: f64 = hist.iter().zip(&self.history_modes).map(|(c, m)| c * m[lt]).sum();
                f[ls * nt + lt] = -(h * mass_t[lt] + steady * t.ones[lt] + ramp * t.ramp[lt] + free);
            }
        }
        for (c, rows) in self.constraint_rows.iter().enumerate() {
            let field = c + 1;
            let (fs, ft) = model.layout.shape(field);
            for is in 0..fs {
                for it in 0..ft {
                    f[model.layout.index(field, is, it)] = -bdt * rows[is] * t.constraint_ones[c][it];
                }
            }
        }
        f
    }

    /// `F̂₀ + F̂₀,L`.
    pub fn rhs(&self, model: &ReducedModel, coeffs: &[f64; 3]) -> Vec<f64> {
        let mut f = self.history_rhs(model, coeffs);
        axpy(1.0, &self.lift_rhs(model, coeffs), &mut f);
        f
    }
}
