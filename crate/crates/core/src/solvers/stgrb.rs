use super::{JacobianMode, NewtonConfig, SolveReport};
use crate::assembly::{Lifting, ReducedModel};
use crate::error::{Error, Result};
use crate::fom::{ParameterSample, Waveform};
use crate::linalg::{axpy, norm2, DenseLu};
use std::sync::{Arc, Mutex};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct StSolution {
    /// Reduced coordinates `[û, p̂, λ̂]`.
    pub w: Vec<f64>,
    pub report: SolveReport,
}

/// Newton solver on the space-time reduced system. The model is shared
/// read-only; the only mutable state is the cache of factorized linear
/// operators used by the quasi-Newton path.
pub struct StGrbSolver<'m> {
    model: &'m ReducedModel,
    pub newton: NewtonConfig,
    cache: Mutex<Vec<([f64; 3], Arc<DenseLu>)>>,
}

const CACHE_SLOTS: usize = 4;

impl<'m> StGrbSolver<'m> {
    pub fn new(model: &'m ReducedModel, newton: NewtonConfig) -> Result<Self> {
        newton.validate()?;
        Ok(Self {
            model,
            newton,
            cache: Mutex::new(Vec::new()),
        })
    }

    pub fn model(&self) -> &ReducedModel {
        self.model
    }

    /// Factorization of the linear operator at `coeffs`, computed on first use.
    pub fn factorized_lhs(&self, coeffs: &[f64; 3]) -> Result<Arc<DenseLu>> {
        let mut cache = self.cache.lock().expect("factorization cache poisoned");
        if let Some((_, lu)) = cache.iter().find(|(c, _)| c == coeffs) {
            return Ok(lu.clone());
        }
        let lu = Arc::new(DenseLu::new(self.model.assemble_lhs(coeffs).as_ref())?);
        if cache.len() == CACHE_SLOTS {
            cache.remove(0);
        }
        cache.push((*coeffs, lu.clone()));
        Ok(lu)
    }

    /// Right-hand side for a parameter: Dirichlet forcing plus lifting terms.
    pub fn rhs(&self, param: &ParameterSample, waveform: &Waveform, t0: f64, lifting: Option<&Lifting>) -> Result<Vec<f64>> {
        let coeffs = param.membrane.coefficients()?;
        let mut f = self.model.assemble_rhs(&param.flow, waveform, t0);
        if let Some(l) = lifting {
            axpy(1.0, &l.rhs(self.model, &coeffs), &mut f);
        }
        Ok(f)
    }

    /// Solves for `param`, starting from `guess` (zero when absent).
    /// Convergence is relative to the residual of the zero state, so a warm
    /// start does not tighten the target.
    pub fn solve(
        &self,
        param: &ParameterSample,
        waveform: &Waveform,
        t0: f64,
        lifting: Option<&Lifting>,
        guess: Option<&[f64]>,
    ) -> Result<StSolution> {
        let start = Instant::now();
        let model = self.model;
        let n = model.size();
        let coeffs = param.membrane.coefficients()?;
        let f = self.rhs(param, waveform, t0, lifting)?;
        let ic = lifting.map(|l| l.velocity_coords.as_slice());
        let mut w = match guess {
            Some(g) if g.len() != n => return Err(Error::Dimension(format!("initial guess of length {} for {n} unknowns", g.len()))),
            Some(g) => g.to_vec(),
            None => vec![0.0; n],
        };
        let mut r = model.residual(&coeffs, &f, &w, ic);
        let first = norm2(&r);
        let r0 = match guess {
            Some(_) => norm2(&model.residual(&coeffs, &f, &vec![0.0; n], ic)),
            None => first,
        };
        let mut residuals = vec![first];
        let mut iterations = 0;
        let mut converged = first == 0.0 || self.newton.satisfied(first, r0, norm2(&w));
        while !converged && iterations < self.newton.max_iters {
            // Newton update w ← w − J⁻¹ r with J = −(A + E Ĵ_c).
            let delta = match self.newton.mode {
                JacobianMode::Quasi => self.factorized_lhs(&coeffs)?.solve_vec(&r)?,
                JacobianMode::Full => {
                    let mut j = model.assemble_lhs(&coeffs);
                    model.add_convective_jacobian(&w[..model.velocity_size()], ic, j.as_mut(), 1.0);
                    DenseLu::new(j.as_ref())?.solve_vec(&r)?
                }
            };
            axpy(1.0, &delta, &mut w);
            r = model.residual(&coeffs, &f, &w, ic);
            let rn = norm2(&r);
            residuals.push(rn);
            iterations += 1;
            if !rn.is_finite() {
                break;
            }
            converged = self.newton.satisfied(rn, r0, norm2(&w));
        }
        if !converged {
            log::warn!(
                "space-time Newton stopped after {iterations} iterations at relative residual {:.3e}",
                residuals.last().unwrap() / r0
            );
        }
        Ok(StSolution {
            w,
            report: SolveReport {
                iterations,
                converged,
                residuals,
                wall_time: start.elapsed(),
            },
        })
    }
}
